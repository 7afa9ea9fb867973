"""
Randomized invariant suites behind `obsb properties`.

Every trial draws its inputs from `np.random.default_rng(seed + trial)`, so
a violation is reproduced by rerunning with the echoed seed and trials=1.
"""

from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import dobrushin, settings
from .errors import InputError
from .obsb import (
    SpaceDescriptor,
    baseContains,
    baseNorm,
    coneSlackRows,
    gridSpace,
    jordanDecompose,
    lorentzSpace,
    sampleBase,
    sequenceSpace,
    simplexSpace,
    splitBaseDifference,
)
from .operators import NdmcSpec, MarkovOperator, composite, isMarkov, operatorNorm, perturb
from .run_logger import logEvent

SUITES = ["obsb", "operators", "dobrushin"]
PERTURB_EPS = (0.1, 0.5, 1.0)
SLACK = 1e-9


def randomSpace(rng: np.random.Generator) -> SpaceDescriptor:
    kind = rng.integers(0, 4)
    if kind == 0:
        return simplexSpace(int(rng.integers(2, 9)))
    if kind == 1:
        return lorentzSpace(float(rng.choice([1.5, 2.0, 3.0])), dimension=int(rng.integers(3, 7)))
    if kind == 2:
        return gridSpace(int(rng.integers(3, 9)))
    return sequenceSpace(float(rng.choice([1.0, 2.0])), int(rng.integers(3, 7)))


def randomStochastic(rng: np.random.Generator, d: int, label: str = "T") -> MarkovOperator:
    """Column-stochastic matrix with Dirichlet(1) columns on the Simplex space."""
    return MarkovOperator(simplexSpace(d), rng.dirichlet(np.ones(d), size=d).T, label)


# ---------- suites ----------
# Each suite checks one trial and returns the names of the violated properties with details.


def obsbTrial(rng: np.random.Generator) -> list[dict[str, Any]]:
    space = randomSpace(rng)
    out = []
    x, y = sampleBase(space, 2, rng)
    u, v = splitBaseDifference(space, x, y)
    nrm = baseNorm(space, x - y)
    gap = float(np.max(np.abs((x - y) - nrm / 2.0 * (u.coords - v.coords))))
    if gap > 1e-7 or not (baseContains(space, u, 1e-7) and baseContains(space, v, 1e-7)):
        out.append({"property": "split_reconstructs", "space": space.describe(), "gap": gap})

    z = rng.standard_normal(space.dimension)
    dec = jordanDecompose(space, z)
    scale = 1.0 + float(np.max(np.abs(z)))
    worst = float(np.max(coneSlackRows(space, np.vstack([dec.pos.coords, dec.neg.coords]))))
    rebuilt = float(np.max(np.abs(dec.pos.coords - dec.neg.coords - z)))
    if worst > SLACK * scale or rebuilt > 1e-9 * scale:
        out.append({"property": "parts_in_cone", "space": space.describe(), "slack": worst, "gap": rebuilt})

    a, b = rng.standard_normal((2, space.dimension))
    lhs, rhs = baseNorm(space, a + b), baseNorm(space, a) + baseNorm(space, b)
    if lhs > rhs + SLACK * (1.0 + rhs):
        out.append({"property": "triangle", "space": space.describe(), "lhs": lhs, "rhs": rhs})
    return out


def operatorsTrial(rng: np.random.Generator) -> list[dict[str, Any]]:
    d = int(rng.integers(2, 7))
    ops = [randomStochastic(rng, d, f"T{i}") for i in range(3)]
    out = []
    for op in ops:
        cert = isMarkov(op)
        if not cert.passed:
            out.append({"property": "stochastic_is_markov", "dimension": d, "violation": cert.worstViolation})

    spec = NdmcSpec.fromList(ops, label="trial")
    whole = composite(spec, 0, 3).matrix
    split = composite(spec, 1, 3).matrix @ composite(spec, 0, 1).matrix
    gap = float(np.max(np.abs(whole - split)))
    if gap > 1e-12:
        out.append({"property": "chain_law", "dimension": d, "gap": gap})

    T = ops[0]
    phi = sampleBase(T.space, 1, rng)[0]
    eps = float(rng.choice(PERTURB_EPS))
    Te = perturb(T, phi, eps)
    # module attribute: a patched delta is picked up here too
    dv = dobrushin.delta(Te).value
    dist = operatorNorm(T - Te).value
    if dv > 1.0 - eps / 2.0 + SLACK or dist >= eps:
        out.append({"property": "perturbation", "dimension": d, "eps": eps, "delta": dv, "distance": dist})
    return out


def dobrushinTrial(rng: np.random.Generator, seed: int) -> list[dict[str, Any]]:
    d = int(rng.integers(2, 9))
    T = randomStochastic(rng, d, "T")
    S = randomStochastic(rng, d, "S")
    res = dobrushin.coefficientBattery(T, S, seed=seed)
    failed = [c for c in res["checks"] if not c["ok"] and not c["advisory"]]
    return [{"property": f"battery:{c['name']}", "dimension": d, "lhs": c["lhs"], "rhs": c["rhs"]} for c in failed]


def runPropertySuites(seed: int = settings.SEED, trials: int = 100, suites: Optional[Sequence[str]] = None,
                      progress: Optional[Callable[[str, int], None]] = None) -> dict[str, Any]:
    """
    Run `trials` seeded trials of each suite.

    Returns:
        {"ok": bool, "seed": int, "trials": int,
         "suites": {name: {"checked": int, "violations": [ {trial_seed, property, ...}, ... ]}}}

    Raises:
        InputError: trials < 1 or an unknown suite name.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    names = list(suites) if suites else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InputError(f"Invalid suites {unknown}. Allowed: {SUITES}")

    report: dict[str, Any] = {"ok": True, "seed": seed, "trials": trials, "suites": {}}
    for name in names:
        violations = []
        for t in range(trials):
            trialSeed = seed + t
            rng = np.random.default_rng(trialSeed)
            if name == "obsb":
                found = obsbTrial(rng)
            elif name == "operators":
                found = operatorsTrial(rng)
            else:
                found = dobrushinTrial(rng, trialSeed)
            for v in found:
                entry = {"suite": name, "trial_seed": trialSeed, **v}
                violations.append(entry)
                logEvent("property_violation", entry)
            if progress:
                progress(name, t + 1)
        report["suites"][name] = {"checked": trials, "violations": violations}
        report["ok"] = report["ok"] and not violations
    return report


__all__ = ["SUITES", "runPropertySuites", "randomSpace", "randomStochastic"]
