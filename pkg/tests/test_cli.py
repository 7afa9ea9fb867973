import json
from dataclasses import replace

import pytest
from click.testing import CliRunner

from apps.cli.obsb import cli
from core import dobrushin
from core import engine as engine_mod
from core.errors import NumericError

SMALL = """\
name: small
seed: 7
chain:
  family: gallery
  params:
    name: random_stochastic
analyses:
  - id: uni
    kind: uniform
    n_max: 20
  - id: dd
    kind: delta
    n: 1
"""


@pytest.fixture
def runner():
    return CliRunner()


def test_gallery_lines(runner):
    res = runner.invoke(cli, ["gallery"])
    assert res.exit_code == 0
    assert "permutation_cycle | uniform: fail" in res.output
    assert "kernel_lorentz | l_weak: pass" in res.output


def test_run_writes_report(runner, tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL, encoding="utf-8")
    out = tmp_path / "out"
    res = runner.invoke(cli, ["run", str(path), "--out-dir", str(out), "--budget", "50"])
    assert res.exit_code == 0, res.output
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["runtime"]["budget"] == 50
    assert [a["id"] for a in report["analyses"]] == ["uni", "dd"]
    assert (out / "uni.csv").exists()


def test_malformed_scenario_exits_2_without_output(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(SMALL.replace("    n: 1\n", "    n: 1\n    colour: red\n"), encoding="utf-8")
    out = tmp_path / "out"
    res = runner.invoke(cli, ["run", str(path), "--out-dir", str(out)])
    assert res.exit_code == 2
    assert not out.exists()


def test_numeric_error_exits_3_with_analysis_id(runner, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise NumericError("solver stalled")

    monkeypatch.setattr(engine_mod, "delta", broken)
    path = tmp_path / "small.yaml"
    path.write_text(SMALL, encoding="utf-8")
    res = runner.invoke(cli, ["run", str(path), "--out-dir", str(tmp_path / "out")])
    assert res.exit_code == 3
    assert "dd" in res.output


def test_properties_clean_run(runner):
    res = runner.invoke(cli, ["properties", "--trials", "3", "--seed", "5"])
    assert res.exit_code == 0, res.output


def test_properties_rejects_zero_trials(runner):
    res = runner.invoke(cli, ["properties", "--trials", "0"])
    assert res.exit_code == 2


def test_properties_catch_a_missing_half_factor(runner, monkeypatch):
    original = dobrushin._exactPairs

    def withoutHalf(*args, **kwargs):
        d = original(*args, **kwargs)
        return replace(d, value=2.0 * d.value)

    monkeypatch.setattr(dobrushin, "_exactPairs", withoutHalf)
    res = runner.invoke(cli, ["properties", "--trials", "2", "--suite", "dobrushin"])
    assert res.exit_code == 1
    assert "violation suite=dobrushin seed=" in res.output
    assert "property=battery:nullspace_agreement" in res.output
