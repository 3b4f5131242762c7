import math

import numpy as np
import pytest

from caselib import build_coupled_network, build_ddim_exp_network, build_diagonal_network, build_dummy_network, \
    case_study_spec, constant_residual, enumerate_fixed_points, exp_activation, exp_constant, poly_activation, \
    poly_constant, reduced_map, verify_case_study
from certify import RegionBox
from config import Family
from errors import HypothesisError
from model import derivative_check, forward, run_loops
from oracle import grid_fixed_points, scan_fixed_points_1d

P2 = 1.4028


class TestConstants:
    def test_poly_constant(self):
        assert poly_constant() == pytest.approx(math.sqrt((15 + math.sqrt(65)) / 8), abs=1e-12)
        assert constant_residual(Family.POLYNOMIAL) <= 1e-12

    def test_exp_constant(self):
        assert -2.2 < exp_constant() < -2.1
        assert constant_residual(Family.EXPONENTIAL) <= 1e-12


class TestActivations:
    def test_poly_at_zero(self):
        assert poly_activation()(0.0) == pytest.approx(1.0)

    def test_poly_shift_identity(self):
        x = np.linspace(-2.0, 2.0, 10000)
        expected = -0.4 * x ** 4 + 1.5 * x ** 2
        assert np.max(np.abs(poly_activation()(x + poly_constant()) - expected)) <= 1e-9

    def test_exp_shift_identity(self):
        x = np.linspace(-1.2, 0.3, 10000)
        expected = np.exp(x ** 3 - 2 * x ** 2) - 1
        assert np.max(np.abs(exp_activation()(x + exp_constant()) - expected)) <= 1e-9

    def test_exp_fixes_origin_after_shift(self):
        assert abs(exp_activation()(exp_constant())) <= 1e-12

    @pytest.mark.parametrize("family", [Family.POLYNOMIAL, Family.EXPONENTIAL])
    def test_derivative_at_shift(self, family):
        g = poly_activation() if family is Family.POLYNOMIAL else exp_activation()
        C = poly_constant() if family is Family.POLYNOMIAL else exp_constant()
        assert derivative_check(g, [C, C + 0.5, C - 0.5]) <= 1e-6


class TestNetworks:
    def test_one_dimensional_coupled_network(self):
        net = build_coupled_network(Family.POLYNOMIAL, 1, 5.0)
        np.testing.assert_array_equal(net.W, [[1.0]])
        np.testing.assert_array_equal(net.b, [poly_constant()])

    def test_off_diagonal_coupling(self):
        net = build_coupled_network(Family.EXPONENTIAL, 2, 10.0)
        assert net.W[0, 1] == 0.01 and net.W[1, 0] == 0.01
        assert net.W[0, 0] == 1.0

    def test_coupling_residue_at_origin(self):
        net = build_coupled_network(Family.POLYNOMIAL, 3, 1000.0)
        assert np.max(np.abs(forward(net, np.zeros(3)))) <= 1.0 / 1000.0

    def test_rejects_small_m(self):
        with pytest.raises(HypothesisError):
            build_coupled_network(Family.POLYNOMIAL, 3, 3.0)

    def test_diagonal_network(self):
        net = build_diagonal_network(Family.EXPONENTIAL, 4)
        np.testing.assert_array_equal(net.W, np.eye(4))

    def test_poly_dummy_network(self):
        net = build_dummy_network(Family.POLYNOMIAL)
        y = forward(net, [0.2, 1.0, 1.0])
        assert y[0] == pytest.approx(reduced_map(Family.POLYNOMIAL)(0.2), abs=1e-12)
        np.testing.assert_allclose(y[1:], [1.0, 1.0])

    def test_poly_dummy_network_converges(self):
        net = build_dummy_network(Family.POLYNOMIAL)
        x = run_loops(net, [1.35, 1.0, 1.0], 100)
        assert abs(x[0] - P2) <= 1e-3
        np.testing.assert_allclose(x[1:], [1.0, 1.0])

    def test_exp_dummy_inner_product(self):
        net = build_dummy_network(Family.EXPONENTIAL)
        for x in (-0.9, 0.0, 0.3):
            assert net.preactivation(np.array([x, 1.0, 1.0]))[0] == pytest.approx(x + exp_constant(), abs=1e-14)

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_ddim_exp_inner_product(self, d):
        net = build_ddim_exp_network(d)
        for x in (-0.9, 0.0, 0.25):
            z = net.preactivation(np.concatenate([[x], np.ones(d - 1)]))
            assert z[0] == pytest.approx(x + exp_constant(), abs=1e-14)

    def test_ddim_exp_fixes_origin(self):
        net = build_ddim_exp_network(5)
        assert abs(forward(net, [0.0, 1.0, 1.0, 1.0, 1.0])[0]) <= 1e-12

    def test_ddim_exp_two_dimensional(self):
        net = build_ddim_exp_network(2)
        np.testing.assert_allclose(net.W[0], [1.0, exp_constant()], atol=1e-15)

    def test_ddim_exp_rejects_one_dimension(self):
        with pytest.raises(HypothesisError):
            build_ddim_exp_network(1)


class TestReducedMap:
    def test_poly_fixed_points(self):
        records = scan_fixed_points_1d(reduced_map(Family.POLYNOMIAL).fn, RegionBox.interval(-2.0, 2.0), 10001)
        attracting = [float(r.location[0]) for r in records if r.attracting]
        assert len(attracting) == 2
        assert abs(attracting[0]) <= 1e-9
        assert abs(attracting[1] - P2) <= 1e-3

    def test_exp_fixed_points(self):
        records = scan_fixed_points_1d(reduced_map(Family.EXPONENTIAL).fn, RegionBox.interval(-1.5, 0.5), 10001)
        attracting = [float(r.location[0]) for r in records if r.attracting]
        assert len(attracting) == 2
        assert abs(attracting[0] + 0.9104) <= 1e-3
        assert abs(attracting[1]) <= 1e-9

    def test_poly_image_of_upper_region(self):
        x = np.linspace(1.302, 1.502, 20001)
        image = reduced_map(Family.POLYNOMIAL)(x)
        assert image.min() >= 1.34 and image.max() <= 1.41

    def test_region_metadata(self):
        regions = reduced_map(Family.EXPONENTIAL).regions
        assert (regions[0].lower, regions[0].upper, regions[0].stated_K) == (-0.1, 0.1, 0.5)
        assert (regions[1].lower, regions[1].upper, regions[1].stated_K) == (-1.010, -0.810, 0.85)


class TestEnumeration:
    def test_two_dimensional_poly(self):
        spec = case_study_spec(Family.POLYNOMIAL, 2, 1000.0)
        points = enumerate_fixed_points(spec)
        assert len(points) == 4
        expected = [(0.0, 0.0), (P2, 0.0), (0.0, P2), (P2, P2)]
        for p, target in zip(points, expected):
            np.testing.assert_allclose(p, target, atol=2e-3)

    def test_one_dimensional(self):
        spec = case_study_spec(Family.POLYNOMIAL, 1, 1000.0)
        points = enumerate_fixed_points(spec)
        assert len(points) == 2
        np.testing.assert_allclose(np.concatenate(points), spec.per_coordinate_fixed_points, atol=1e-9)

    @pytest.mark.parametrize("family", [Family.POLYNOMIAL, Family.EXPONENTIAL])
    def test_candidates_are_fixed_points(self, family):
        spec = case_study_spec(family, 3, 1000.0)
        net = spec.network()
        for p in enumerate_fixed_points(spec):
            assert np.max(np.abs(forward(net, p) - p)) <= 1.0 / spec.m + 1e-8
            np.testing.assert_allclose(forward(net, p), p, atol=1e-9)

    def test_three_dimensional_matches_grid_search(self):
        spec = case_study_spec(Family.POLYNOMIAL, 3, 1e4)
        points = enumerate_fixed_points(spec)
        assert len(points) == 8
        records = grid_fixed_points(spec.network(), RegionBox.cube(-0.5, 1.6, 3), 60, 0.05)
        assert len(records) == 8
        for p in points:
            assert min(np.max(np.abs(r.location - p)) for r in records) <= 1e-2

    @pytest.mark.parametrize("d", [2, 3])
    def test_basin_separation(self, d):
        spec = case_study_spec(Family.POLYNOMIAL, d, 1000.0)
        net = spec.network()
        for p in enumerate_fixed_points(spec):
            back = run_loops(net, p + 0.05, 500)
            assert np.max(np.abs(back - p)) <= 1e-6

    def test_guard_on_dimension(self):
        spec = case_study_spec(Family.POLYNOMIAL, 21, 1000.0)
        with pytest.raises(HypothesisError):
            enumerate_fixed_points(spec)

    def test_spec_rejects_small_m(self):
        with pytest.raises(HypothesisError):
            case_study_spec(Family.EXPONENTIAL, 4, 4.0)


class TestCaseStudyGuarantee:
    @pytest.mark.parametrize("family", [Family.POLYNOMIAL, Family.EXPONENTIAL])
    def test_both_forms_hold(self, family):
        report = verify_case_study(case_study_spec(family, 2, 1000.0), seed=3, steps=200)
        assert len(report.candidates) == 4
        assert report.ok
        for check in report.candidates:
            assert check.K < 0.95
            assert check.final_error <= 20.0 / 1000.0
