from pathlib import Path

import pytest

from core.errors import ScenarioError
from core.scenario import Scenario, loadScenario, loadScenarioDict

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

GALLERY = """\
name: t
chain:
  family: gallery
  params:
    name: lazy_permutation
analyses:
  - kind: uniform
"""


def write(tmp_path, text, name="s.yaml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_minimal_scenario_loads(tmp_path):
    sc = loadScenario(write(tmp_path, GALLERY))
    assert sc.chain.family == "gallery"
    assert sc.analyses[0].n_max == 40
    assert sc.analysisIds() == ["01-uniform"]


def test_unknown_key_reports_its_line(tmp_path):
    text = GALLERY.replace("    name: lazy_permutation\n", "    name: lazy_permutation\n    colour: red\n")
    with pytest.raises(ScenarioError) as exc:
        loadScenario(write(tmp_path, text))
    assert exc.value.line == 6
    assert "colour" in str(exc.value)


def test_unknown_key_in_analysis(tmp_path):
    text = GALLERY + "    colour: red\n"
    with pytest.raises(ScenarioError) as exc:
        loadScenario(write(tmp_path, text))
    assert exc.value.line == 8


def test_yaml_syntax_error_has_position(tmp_path):
    with pytest.raises(ScenarioError) as exc:
        loadScenario(write(tmp_path, "chain: [gallery\nanalyses: 1\n"))
    assert exc.value.line is not None
    assert "YAML syntax error" in str(exc.value)


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        loadScenario(tmp_path / "absent.yaml")


@pytest.mark.parametrize("data", [
    # no analyses
    {"chain": {"family": "gallery", "params": {"name": "lazy_permutation"}}, "analyses": []},
    # inline matrices need a space
    {"chain": {"family": "homogeneous", "params": {"matrix": [[1.0, 0.0], [0.0, 1.0]]}},
     "analyses": [{"kind": "uniform"}]},
    # built-in families bring their own space
    {"space": {"kind": "Simplex", "dimension": 3},
     "chain": {"family": "gallery", "params": {"name": "lazy_permutation"}}, "analyses": [{"kind": "uniform"}]},
    # matrix shape must match the space
    {"space": {"kind": "Simplex", "dimension": 3},
     "chain": {"family": "homogeneous", "params": {"matrix": [[1.0, 0.0], [0.0, 1.0]]}},
     "analyses": [{"kind": "uniform"}]},
    # grid sweep only on the grid family
    {"chain": {"family": "gallery", "params": {"name": "lazy_permutation"}}, "analyses": [{"kind": "grid_sweep"}]},
    {"chain": {"family": "gallery", "params": {"name": "lazy_permutation"}},
     "analyses": [{"kind": "uniform", "id": "a"}, {"kind": "weak", "id": "a"}]},
    {"chain": {"family": "grid_multiplication"}, "analyses": [{"kind": "decay_bound", "alpha": 0.0}]},
    {"chain": {"family": "gallery", "params": {"name": "no_such_chain"}}, "analyses": [{"kind": "uniform"}]},
    {"space": {"kind": "GridFunction", "grid": [0.0, 0.5, 0.9]},
     "chain": {"family": "homogeneous", "params": {"matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}},
     "analyses": [{"kind": "uniform"}]},
])
def test_invalid_scenarios(data):
    with pytest.raises(ScenarioError):
        loadScenarioDict(data)


def test_top_level_must_be_mapping():
    with pytest.raises(ScenarioError):
        loadScenarioDict([1, 2, 3])


def test_echo_reloads_to_the_same_scenario():
    sc = loadScenario(SCENARIOS / "kernel-lorentz.yaml")
    again = loadScenarioDict(sc.echo())
    assert again.echo() == sc.echo()


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_scenarios_load(path):
    sc = loadScenario(path)
    assert isinstance(sc, Scenario)
    assert len(sc.analyses) >= 1


def test_tolerances_feed_thresholds():
    data = {
        "chain": {"family": "gallery", "params": {"name": "lazy_permutation"}},
        "analyses": [{"kind": "uniform"}],
        "tolerances": {"pass_threshold": 1e-6, "d2_burn_in": 2},
    }
    th = loadScenarioDict(data).tolerances.thresholds()
    assert th.passThreshold == 1e-6 and th.d2BurnIn == 2
