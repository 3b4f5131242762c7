import json

import numpy as np
import pytest

from caselib import build_coupled_network
from config import Experiment, ExperimentConfig, Family
from figures import reproduce_fig1, reproduce_fig2, reproduce_fig3
from iterate import reference_fixed_point
from robust import NoiseModel, perturbed_iterate


def config_for(tmp_path, experiment, **kwargs):
    return ExperimentConfig(experiment=experiment, output_dir=tmp_path, **kwargs)


class TestFig1:
    def test_reduced_map_panels(self, tmp_path):
        result = reproduce_fig1(config_for(tmp_path, Experiment.FIG1))
        assert result.ok
        data = json.loads((tmp_path / 'fig1.json').read_text())['data']
        poly = [fp['location'][0] for fp in data['poly']['fixed_points']]
        expo = [fp['location'][0] for fp in data['exp']['fixed_points']]
        assert any(abs(x - 1.4028) <= 1e-3 for x in poly)
        assert any(abs(x + 0.9104) <= 1e-3 for x in expo)
        assert abs(data['poly']['cobweb_finals']['0.25']) <= 1e-8
        for name in ('fig1_curves.csv', 'fig1_paths.csv', 'fig1.svg'):
            assert (tmp_path / name).exists()


class TestFig2:
    def test_slices_mark_both_fixed_values(self, tmp_path):
        result = reproduce_fig2(config_for(tmp_path, Experiment.FIG2))
        assert result.ok
        for key in ('dimension_1', 'dimension_2'):
            fixed = [float(r.location[0]) for r in result.data[key]['fixed_points']]
            assert any(abs(x) <= 1e-3 for x in fixed)
            assert any(abs(x - 1.4028) <= 1e-3 for x in fixed)
        assert (tmp_path / 'fig2.svg').exists()

    def test_weak_coupling_matches_reduced_map(self, tmp_path):
        result = reproduce_fig2(config_for(tmp_path, Experiment.FIG2, m=1e6))
        for key in ('dimension_1', 'dimension_2'):
            assert result.data[key]['max_deviation_from_reduced'] <= 1e-6


class TestFig3:
    def test_final_iterates_within_bound(self, tmp_path):
        result = reproduce_fig3(config_for(tmp_path, Experiment.FIG3, seed=42))
        for m, run in result.data['runs'].items():
            assert run['final_error'] <= 20.0 / float(m)
            assert run['cumulative_violations'] == 0
        assert result.ok == all(run['onestep_violations'] == 0 for run in result.data['runs'].values())

    def test_onestep_violation_fails_the_run(self, tmp_path):
        result = reproduce_fig3(config_for(tmp_path, Experiment.FIG3, seed=0))
        runs = result.data['runs']
        assert runs['5']['onestep_violations'] == 1
        assert not runs['5']['ok']
        assert runs['15']['ok'] and runs['100']['ok']
        assert not result.ok
        assert not json.loads((tmp_path / 'fig3.json').read_text())['ok']

    def test_csv_is_deterministic(self, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        reproduce_fig3(config_for(first, Experiment.FIG3, seed=42))
        reproduce_fig3(config_for(second, Experiment.FIG3, seed=42))
        assert (first / 'fig3.csv').read_bytes() == (second / 'fig3.csv').read_bytes()

    def test_less_noise_ends_closer(self):
        net = build_coupled_network(Family.POLYNOMIAL, 2, 1000.0)
        x0 = np.array([1.48, 1.33])
        p = reference_fixed_point(net, x0)
        medians = []
        for m in (5.0, 15.0, 100.0):
            errors = [np.max(np.abs(perturbed_iterate(net, x0, NoiseModel(m, seed), 200).final - p))
                      for seed in range(50)]
            medians.append(float(np.median(errors)))
        assert medians[0] >= medians[1] >= medians[2]

    def test_zero_noise_runs_coincide(self):
        net = build_coupled_network(Family.POLYNOMIAL, 2, 1000.0)
        runs = [perturbed_iterate(net, [1.48, 1.33], NoiseModel(np.inf, seed), 50).iterates for seed in (5, 15, 100)]
        np.testing.assert_array_equal(runs[0], runs[1])
        np.testing.assert_array_equal(runs[1], runs[2])


@pytest.mark.parametrize("experiment", [Experiment.FIG1, Experiment.FIG2, Experiment.FIG3])
def test_output_names_are_deterministic(tmp_path, experiment):
    config = config_for(tmp_path, experiment)
    assert config.output_path('', 'svg') == tmp_path / f"{experiment.value}.svg"
