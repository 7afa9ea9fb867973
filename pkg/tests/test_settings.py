from core.settings import ENV_PREFIX, envBool, envChoice, envFloat, envInt, envRaw, envStr


def test_helpers_read_the_prefixed_variable(monkeypatch):
    assert ENV_PREFIX == "OBSB_"
    monkeypatch.setenv("OBSB_LOG_ENABLED", " Off ")
    monkeypatch.setenv("LOG_ENABLED", "1")
    assert envBool("LOG_ENABLED", True) is False
    monkeypatch.setenv("OBSB_CONE_TOL", "1e-7")
    assert envFloat("CONE_TOL", 1e-9) == 1e-7
    monkeypatch.setenv("OBSB_SEED", "42")
    assert envInt("SEED", 1) == 42


def test_unset_and_unparsable_values_keep_the_default(monkeypatch):
    monkeypatch.delenv("OBSB_SEED", raising=False)
    assert envInt("SEED", 7) == 7
    monkeypatch.setenv("OBSB_SEED", "seven")
    assert envInt("SEED", 7) == 7
    monkeypatch.setenv("OBSB_LOG_ENABLED", "maybe")
    assert envBool("LOG_ENABLED", True) is True
    monkeypatch.setenv("OBSB_NORM_METHOD", "simplex")
    assert envChoice("NORM_METHOD", "auto", ["auto", "lp"]) == "auto"
    monkeypatch.setenv("OBSB_NORM_METHOD", "LP")
    assert envChoice("NORM_METHOD", "auto", ["auto", "lp"]) == "lp"
    monkeypatch.setenv("OBSB_OUT_DIR", "   ")
    assert envRaw("OUT_DIR") is None


def test_bare_fallback_is_opt_in(monkeypatch):
    monkeypatch.delenv("OBSB_LOG_RUNS", raising=False)
    monkeypatch.setenv("LOG_RUNS", "/tmp/runs")
    assert envStr("LOG_RUNS", "./logs/runs", bare=True) == "/tmp/runs"
    assert envStr("LOG_RUNS", "./logs/runs") == "./logs/runs"
    monkeypatch.setenv("OBSB_LOG_RUNS", "/tmp/obsb")
    assert envStr("LOG_RUNS", "./logs/runs", bare=True) == "/tmp/obsb"
