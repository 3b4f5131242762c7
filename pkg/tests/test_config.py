import pytest

from config import GRID_GUARD, Experiment, ExperimentConfig, Family, default_grid


@pytest.mark.parametrize("text, family", [
    ('poly', Family.POLYNOMIAL),
    ('Polynomial', Family.POLYNOMIAL),
    (' exp ', Family.EXPONENTIAL),
    (Family.EXPONENTIAL, Family.EXPONENTIAL),
])
def test_family_parse(text, family):
    assert Family.parse(text) is family


def test_family_parse_rejects_unknown():
    with pytest.raises(ValueError):
        Family.parse('tanh')


def test_default_grid_respects_guard():
    assert default_grid(1) == 10001
    for d in range(4, 9):
        assert default_grid(d) ** d <= GRID_GUARD


def test_output_path(tmp_path):
    config = ExperimentConfig(experiment=Experiment.FIG1, output_dir=tmp_path / 'nested')
    assert config.output_path('curves', 'csv') == tmp_path / 'nested' / 'fig1_curves.csv'
    assert (tmp_path / 'nested').is_dir()
