import json
from dataclasses import replace

import pytest

from core import dobrushin, settings
from core.errors import InputError
from core.properties import SUITES, runPropertySuites


def test_suites_pass_on_small_runs():
    report = runPropertySuites(seed=11, trials=5)
    assert report["ok"], report["suites"]
    assert set(report["suites"]) == set(SUITES)
    assert all(s["checked"] == 5 for s in report["suites"].values())


def test_single_suite_and_progress():
    seen = []
    report = runPropertySuites(seed=3, trials=4, suites=["obsb"], progress=lambda name, t: seen.append((name, t)))
    assert list(report["suites"]) == ["obsb"]
    assert seen[-1] == ("obsb", 4)


def test_bad_arguments():
    with pytest.raises(InputError):
        runPropertySuites(trials=0)
    with pytest.raises(InputError):
        runPropertySuites(trials=1, suites=["nonsense"])


def test_violations_are_logged(monkeypatch, runLogs):
    monkeypatch.setattr(settings, "LOG_ENABLED", True)

    original = dobrushin.delta
    monkeypatch.setattr(dobrushin, "delta", lambda *a, **k: replace(original(*a, **k), value=2.0))
    report = runPropertySuites(seed=1, trials=2, suites=["dobrushin"])
    assert not report["ok"]
    v = report["suites"]["dobrushin"]["violations"][0]
    assert v["suite"] == "dobrushin" and v["trial_seed"] in (1, 2)
    logged = [json.loads(line) for f in runLogs.glob("*.jsonl") for line in f.read_text(encoding="utf-8").splitlines()]
    assert any(e.get("kind") == "property_violation" for e in logged)
