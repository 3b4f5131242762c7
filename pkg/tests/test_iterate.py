import numpy as np
import pytest

from caselib import reduced_map
from certify import RegionBox, certify_contraction_scalar
from config import Family
from errors import CertificateError, DivergenceError, InsufficientDataError
from iterate import banach_ledger, geometric_rate_estimate, iterate_to_fixed_point, reference_fixed_point
from model import IterationTrace

REGIONS = [(Family.POLYNOMIAL, 0), (Family.POLYNOMIAL, 1), (Family.EXPONENTIAL, 0), (Family.EXPONENTIAL, 1)]


class TestIterateToFixedPoint:
    def test_poly_converges_to_origin(self):
        trace = iterate_to_fixed_point(reduced_map(Family.POLYNOMIAL).fn, 0.25, tol=1e-12)
        assert trace.converged
        assert abs(trace.final[0]) <= 1e-10
        assert len(trace.residuals) == len(trace.iterates) - 1

    def test_stops_at_max_iter(self):
        trace = iterate_to_fixed_point(lambda x: x + 1e-3, [0.0], tol=1e-12, max_iter=7)
        assert not trace.converged
        assert trace.T == 7

    def test_divergence(self):
        with pytest.raises(DivergenceError):
            iterate_to_fixed_point(lambda x: 10.0 * x, [1.0], max_iter=100)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            iterate_to_fixed_point(lambda x: x, [0.0], tol=0.0)
        with pytest.raises(ValueError):
            iterate_to_fixed_point(lambda x: x, [0.0], max_iter=0)


class TestBanachLedger:
    @pytest.mark.parametrize("family,index", REGIONS)
    def test_no_violations_from_random_starts(self, family, index):
        reduced = reduced_map(family)
        region = reduced.regions[index]
        cert = certify_contraction_scalar(reduced.fn, region.box, 10001)
        p = reference_fixed_point(reduced.fn, region.approx_fixed_point)
        rng = np.random.default_rng(42 + index)
        for x0 in rng.uniform(region.lower, region.upper, size=25):
            trace = iterate_to_fixed_point(reduced.fn, x0, tol=1e-12)
            assert trace.converged
            ledger = banach_ledger(trace, cert.k_hat, p, p_source="iteration", certificate=cert)
            assert ledger.violations == []

    def test_certificate_bounds_recorded(self):
        reduced = reduced_map(Family.POLYNOMIAL)
        cert = certify_contraction_scalar(reduced.fn, RegionBox.interval(-0.3, 0.3), 10001)
        trace = iterate_to_fixed_point(reduced.fn, 0.25, tol=1e-12)
        ledger = banach_ledger(trace, cert.k_hat, [0.0], certificate=cert)
        first = ledger.records[0]
        assert first.region_bound == pytest.approx(cert.k_hat * cert.c * 0.6)
        assert first.stated_bound == pytest.approx(cert.k_hat * 0.6)
        assert ledger.ok

    def test_flags_violation(self):
        trace = IterationTrace.from_iterates([[1.0], [0.9], [0.81]], converged=True)
        ledger = banach_ledger(trace, 0.5, [0.0])
        assert (1, 'onestep') in ledger.violations
        assert not ledger.ok

    def test_rejects_non_contraction(self):
        trace = IterationTrace.from_iterates([[1.0], [0.5]], converged=True)
        with pytest.raises(CertificateError):
            banach_ledger(trace, 1.0, [0.0])

    def test_p_source_is_recorded(self):
        trace = iterate_to_fixed_point(reduced_map(Family.POLYNOMIAL).fn, 0.2, tol=1e-12)
        assert banach_ledger(trace, 0.9, [0.0], p_source="oracle").to_dict()['p_source'] == "oracle"


class TestGeometricRate:
    def test_rate_near_upper_fixed_point(self):
        trace = iterate_to_fixed_point(reduced_map(Family.POLYNOMIAL).fn, 1.45, tol=1e-12)
        assert geometric_rate_estimate(trace) <= 0.93

    def test_constant_map_has_zero_rate(self):
        trace = iterate_to_fixed_point(lambda x: np.full_like(x, 0.5), [3.0])
        assert trace.T == 2
        assert geometric_rate_estimate(trace) == 0.0

    def test_requires_convergence(self):
        trace = iterate_to_fixed_point(lambda x: x + 1e-3, [0.0], max_iter=20)
        with pytest.raises(InsufficientDataError):
            geometric_rate_estimate(trace)


class TestCertifiedRegions:
    @pytest.mark.parametrize("family,index", REGIONS)
    def test_random_starts_share_one_fixed_point(self, family, index):
        reduced = reduced_map(family)
        region = reduced.regions[index]
        rng = np.random.default_rng(7 + index)
        finals = np.array([iterate_to_fixed_point(reduced.fn, x0, tol=1e-12).final[0]
                           for x0 in rng.uniform(region.lower, region.upper, size=25)])
        assert finals.max() - finals.min() <= 1e-8

    @pytest.mark.parametrize("family,index", REGIONS)
    def test_residuals_shrink_by_k_hat(self, family, index):
        reduced = reduced_map(family)
        region = reduced.regions[index]
        cert = certify_contraction_scalar(reduced.fn, region.box, 10001)
        rng = np.random.default_rng(11 + index)
        for x0 in rng.uniform(region.lower, region.upper, size=25):
            r = iterate_to_fixed_point(reduced.fn, x0, tol=1e-12).residuals
            assert np.all(r[1:] <= cert.k_hat * r[:-1] + 1e-12)

    @pytest.mark.parametrize("family,index", REGIONS)
    def test_traces_stay_inside_region(self, family, index):
        reduced = reduced_map(family)
        region = reduced.regions[index]
        rng = np.random.default_rng(23 + index)
        for x0 in rng.uniform(region.lower, region.upper, size=25):
            trace = iterate_to_fixed_point(reduced.fn, x0, tol=1e-12)
            assert all(region.box.contains(x) for x in trace.iterates)


class TestLedgerShape:
    def test_one_record_per_step(self):
        reduced = reduced_map(Family.EXPONENTIAL)
        trace = iterate_to_fixed_point(reduced.fn, -0.95, tol=1e-12)
        p = reference_fixed_point(reduced.fn, -0.9104)
        ledger = banach_ledger(trace, 0.85, p)
        assert len(ledger.records) == trace.T
        assert [r.t for r in ledger.records] == list(range(1, trace.T + 1))

    def test_identity_map_with_false_constant(self):
        trace = IterationTrace.from_iterates([[1.0]] * 6, converged=True)
        ledger = banach_ledger(trace, 0.5, [0.0])
        assert not ledger.ok
        assert [t for t, name in ledger.violations if name == 'onestep'] == [1, 2, 3, 4, 5]

    def test_trace_is_read_only(self):
        trace = iterate_to_fixed_point(reduced_map(Family.POLYNOMIAL).fn, 0.2)
        with pytest.raises(ValueError):
            trace.iterates[0, 0] = 1.0
        with pytest.raises(AttributeError):
            trace.converged = False


class TestGeometricRateNearOrigin:
    def test_exp_superlinear_rate(self):
        trace = iterate_to_fixed_point(reduced_map(Family.EXPONENTIAL).fn, -0.05, tol=1e-12)
        assert trace.T >= 5
        assert geometric_rate_estimate(trace) <= 0.5
