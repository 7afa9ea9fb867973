import os
from typing import Optional

from dotenv import load_dotenv

try:
    load_dotenv()
except Exception:
    pass

ENV_PREFIX = "OBSB_"

_TRUE = frozenset({"1", "true", "yes", "on"})
_FALSE = frozenset({"0", "false", "no", "off"})


def envRaw(key: str, bare: bool = False) -> Optional[str]:
    """
    Stripped value of `OBSB_<key>`; with `bare`, plain `<key>` is read when the
    prefixed name is unset. Empty values count as unset.
    """
    names = [ENV_PREFIX + key] + ([key] if bare else [])
    for name in names:
        raw = os.getenv(name)
        if raw is not None and raw.strip():
            return raw.strip()
    return None


def envBool(key: str, default: bool) -> bool:
    """1/0, true/false, yes/no, on/off; anything else keeps `default`."""
    raw = (envRaw(key) or "").lower()
    if raw in _TRUE:
        return True
    if raw in _FALSE:
        return False
    return default


def envFloat(key: str, default: float) -> float:
    """Read a float; unparsable values fall back to `default`."""
    raw = envRaw(key)
    try:
        return default if raw is None else float(raw)
    except ValueError:
        return default


def envInt(key: str, default: int) -> int:
    """Read an int; unparsable values fall back to `default`."""
    raw = envRaw(key)
    try:
        return default if raw is None else int(raw)
    except ValueError:
        return default


def envChoice(key: str, default: str, allowed: list[str]) -> str:
    """Read a string restricted to `allowed`; anything else falls back to `default`."""
    raw = (envRaw(key) or "").lower()
    return raw if raw in allowed else default


def envStr(key: str, default: str, bare: bool = False) -> str:
    raw = envRaw(key, bare)
    return default if raw is None else raw


# ---- Numerical tolerances -----------------------------------------------------

CONE_TOL: float = envFloat("CONE_TOL", 1e-9)
SOLVER_TOL: float = envFloat("SOLVER_TOL", 1e-9)
ACCEPT_SLACK: float = envFloat("ACCEPT_SLACK", 1e-7)

# How minimal decompositions are computed: closed forms, LP, or the convex solver
NORM_METHODS: list[str] = ["auto", "lp", "convex"]
NORM_METHOD: str = envChoice("NORM_METHOD", "auto", NORM_METHODS)

# ---- Extreme points and Dobrushin search -------------------------------------

EXTREME_POINT_CAP: int = envInt("EXTREME_POINT_CAP", 2 ** 20)
DELTA_VERTEX_LIMIT: int = envInt("DELTA_VERTEX_LIMIT", 512)
MARKOV_VERTEX_LIMIT: int = envInt("MARKOV_VERTEX_LIMIT", 4096)
DELTA_BUDGET: int = envInt("DELTA_BUDGET", 2000)
ASCENT_RESTARTS: int = envInt("ASCENT_RESTARTS", 50)
NULLSPACE_SAMPLES: int = envInt("NULLSPACE_SAMPLES", 400)

# ---- Verdict thresholds -------------------------------------------------------

PASS_THRESHOLD: float = envFloat("PASS_THRESHOLD", 1e-4)
STALL_THRESHOLD: float = envFloat("STALL_THRESHOLD", 1e-2)
D2_THRESHOLD: float = envFloat("D2_THRESHOLD", 1e-6)
D2_BURN_IN: int = envInt("D2_BURN_IN", 5)
LIMIT_AGREEMENT: float = envFloat("LIMIT_AGREEMENT", 1e-4)
CONTRACTION_SLACK: float = envFloat("CONTRACTION_SLACK", 1e-6)

# Default probes: pseudo-random base points plus extreme points up to a cap
PROBE_COUNT: int = envInt("PROBE_COUNT", 8)
PROBE_EXTREME_CAP: int = envInt("PROBE_EXTREME_CAP", 32)

# ---- Discretization -----------------------------------------------------------

QUADRATURE_RULES: list[str] = ["midpoint", "gauss"]
QUADRATURE_SIZE: int = envInt("QUADRATURE_SIZE", 64)
QUADRATURE_RULE: str = envChoice("QUADRATURE_RULE", "midpoint", QUADRATURE_RULES)

SEED: int = envInt("SEED", 12345)

# ---- Output and logs ----------------------------------------------------------

# The run logger writes one JSONL file per process here
LOG_RUNS: str = envStr("LOG_RUNS", "./logs/runs", bare=True)
LOG_ENABLED: bool = envBool("LOG_ENABLED", True)

# Default folder for report bundles when the CLI gets no --out-dir
OUT_DIR: str = envStr("OUT_DIR", "./data/out")


__all__ = [
    "CONE_TOL",
    "SOLVER_TOL",
    "ACCEPT_SLACK",
    "NORM_METHODS",
    "NORM_METHOD",
    "EXTREME_POINT_CAP",
    "DELTA_VERTEX_LIMIT",
    "MARKOV_VERTEX_LIMIT",
    "DELTA_BUDGET",
    "ASCENT_RESTARTS",
    "NULLSPACE_SAMPLES",
    "PASS_THRESHOLD",
    "STALL_THRESHOLD",
    "D2_THRESHOLD",
    "D2_BURN_IN",
    "LIMIT_AGREEMENT",
    "CONTRACTION_SLACK",
    "PROBE_COUNT",
    "PROBE_EXTREME_CAP",
    "QUADRATURE_RULES",
    "QUADRATURE_SIZE",
    "QUADRATURE_RULE",
    "SEED",
    "LOG_RUNS",
    "LOG_ENABLED",
    "OUT_DIR",
    "envBool",
    "envFloat",
    "envInt",
    "envChoice",
    "envStr",
    "envRaw",
    "ENV_PREFIX",
]
