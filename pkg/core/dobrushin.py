"""
Dobrushin ergodicity coefficient.

δ(A) = sup_{x ∈ N} ‖Ax‖/‖x‖ over N = {f = 0}. Every x ∈ N is (‖x‖/2)(u − v)
with u, v ∈ K, so δ(A) = ½ sup_{u,v ∈ K} ‖Au − Av‖. The map u ↦ ‖Au − Av‖
is convex, hence the sup is attained at extreme points of K: on polyhedral
spaces with a complete vertex list the pair maximum is exact. This holds for
any linear A, Markov or not (T − S, T_y − T_z, ...).
"""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import settings
from .errors import InputError, PreconditionError
from .obsb import (
    SpaceDescriptor,
    Vector,
    baseExtremePoints,
    baseNormRows,
    functionalWeights,
    sampleBase,
    sampleNull,
    tailNormRows,
    closedFormParts,
)
from .operators import MarkovOperator, compose, matrixPower, operatorNorm, rankOne
from .run_logger import logEvent


@dataclass(frozen=True, eq=False)
class DeltaResult:
    value: float
    mode: str                       # exact | lower_bound
    witnesses: tuple[Vector, Vector]
    budgetUsed: int

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def toDict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "mode": self.mode,
            "witnesses": [self.witnesses[0].tolist(), self.witnesses[1].tolist()],
            "budget_used": self.budgetUsed,
        }


def _pairValue(space: SpaceDescriptor, M: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    return 0.5 * float(baseNormRows(space, M @ (u - v))[0])


def _neighbors(space: SpaceDescriptor, point: np.ndarray) -> np.ndarray:
    """All one-move neighbors of a vertex: another unit vector, or one grid node flipped between −1 and 3."""
    d = space.dimension
    if space.kind == "Simplex":
        cur = int(np.argmax(point))
        return np.eye(d)[[j for j in range(d) if j != cur]]
    U = np.tile(point, (d - 1, 1))
    idx = np.arange(d - 1)
    U[idx, idx] = np.where(point[:-1] > 1.0, -1.0, 3.0)
    return U


def _onSphere(space: SpaceDescriptor, tail: np.ndarray) -> np.ndarray:
    n = float(tailNormRows(space, tail)[0])
    return tail / n if n > 0 else tail


def _localAscent(space: SpaceDescriptor, M: np.ndarray, u: np.ndarray, v: np.ndarray,
                 rng: np.random.Generator, budget: int) -> tuple[float, np.ndarray, np.ndarray, int]:
    """
    Improve ½‖M(u − v)‖ from a pair of extreme points.

    Polyhedral bases: best-improvement exchange over vertex neighbors, u then v.
    Sphere bases: random perturbation on the unit sphere with a shrinking step.
    """
    val = _pairValue(space, M, u, v)
    used = 0
    if space.dimension == 1:
        return val, u, v, used

    if space.kind in ("Simplex", "GridFunction"):
        improved = True
        while improved and used < budget:
            improved = False
            for side in (0, 1):
                a, b = (u, v) if side == 0 else (v, u)
                cand = _neighbors(space, a)
                vals = 0.5 * baseNormRows(space, (cand - b) @ M.T)
                used += cand.shape[0]
                j = int(np.argmax(vals))
                if vals[j] > val + 1e-15:
                    val = float(vals[j])
                    if side == 0:
                        u = cand[j]
                    else:
                        v = cand[j]
                    improved = True
                if used >= budget:
                    break
        return val, u, v, used

    sigma = 0.5
    while used < budget:
        side = used % 2
        a = u if side == 0 else v
        trial = a.copy()
        trial[1:] = _onSphere(space, a[1:] + sigma * rng.standard_normal(space.dimension - 1))
        tv = _pairValue(space, M, trial, v) if side == 0 else _pairValue(space, M, u, trial)
        used += 1
        if tv > val:
            val = tv
            if side == 0:
                u = trial
            else:
                v = trial
        else:
            sigma = max(sigma * 0.9, 1e-4)
    return val, u, v, used


def _exactPairs(T: MarkovOperator, points: np.ndarray) -> DeltaResult:
    space = T.space
    images = points @ T.matrix.T
    m = points.shape[0]
    best, bi, bj = 0.0, 0, 0
    for i in range(m - 1):
        norms = baseNormRows(space, images[i] - images[i + 1:])
        j = int(np.argmax(norms))
        if norms[j] > best:
            best, bi, bj = float(norms[j]), i, i + 1 + j
    return DeltaResult(best / 2.0, "exact", (Vector(space, points[bi]), Vector(space, points[bj])), m * (m - 1) // 2)


def delta(T: MarkovOperator, budget: int = settings.DELTA_BUDGET, seed: int = settings.SEED,
          vertexLimit: int = settings.DELTA_VERTEX_LIMIT, restarts: int = settings.ASCENT_RESTARTS) -> DeltaResult:
    """
    Dobrushin coefficient ½ max ‖Tu − Tv‖ over base pairs.

    Exact over all vertex pairs when the space is polyhedral and its vertex
    list (capped at `vertexLimit`) is complete. Otherwise a lower bound: half
    the budget goes to random extreme-point pairs, the rest to local ascent
    from the best `restarts` of them. Ties keep the first maximizer in seed order.
    """
    if budget < 1:
        raise InputError("budget must be >= 1")
    space = T.space
    pts = baseExtremePoints(space, max(vertexLimit, 2), seed=seed)
    if pts.complete and space.polyhedral:
        return _exactPairs(T, pts.points)

    rng = np.random.default_rng(seed)
    P = pts.points
    m = P.shape[0]
    nPairs = max(1, budget // 2)
    i = rng.integers(0, m, size=nPairs)
    j = rng.integers(0, m, size=nPairs)
    images = P @ T.matrix.T
    vals = 0.5 * baseNormRows(space, images[i] - images[j])
    used = nPairs

    order = np.argsort(-vals, kind="stable")
    k0 = int(order[0])
    best, bu, bv = float(vals[k0]), P[i[k0]], P[j[k0]]
    starts = order[:max(1, min(restarts, nPairs))]
    share = max(0, (budget - used) // len(starts))
    for s in starts:
        if share == 0:
            break
        val, u, v, spent = _localAscent(space, T.matrix, P[i[s]].copy(), P[j[s]].copy(), rng, share)
        used += spent
        if val > best:
            best, bu, bv = val, u, v
    return DeltaResult(best, "lower_bound", (Vector(space, bu), Vector(space, bv)), used)


def _roundToVertex(space: SpaceDescriptor, M: np.ndarray, a: np.ndarray, b: np.ndarray, side: int) -> np.ndarray:
    """
    Move base point `a` to an extreme point without lowering ½‖M(a − b)‖ (or ½‖M(b − a)‖).

    Convexity along any chord through `a` means one endpoint is at least as good.
    """
    def score(U: np.ndarray) -> np.ndarray:
        diff = (U - b) if side == 0 else (b - U)
        return baseNormRows(space, diff @ M.T)

    d = space.dimension
    if space.kind == "Simplex":
        support = np.flatnonzero(a > 1e-12)
        cand = np.eye(d)[support]
        return cand[int(np.argmax(score(cand)))]
    if space.kind == "GridFunction":
        out = a.copy()
        out[-1] = 1.0
        for i in range(d - 1):
            lo, hi = out.copy(), out.copy()
            lo[i], hi[i] = -1.0, 3.0
            s = score(np.vstack([lo, hi]))
            out = lo if s[0] >= s[1] else hi
        return out
    if d == 1:
        return a
    tail = a[1:]
    n = float(tailNormRows(space, tail)[0])
    if n == 0:
        tail = np.ones(d - 1)
        n = float(tailNormRows(space, tail)[0])
    hat = tail / n
    cand = np.vstack([np.concatenate(([1.0], hat)), np.concatenate(([1.0], -hat))])
    return cand[int(np.argmax(score(cand)))]


def deltaViaNullspace(T: MarkovOperator, samples: int = settings.NULLSPACE_SAMPLES, seed: int = settings.SEED,
                      refine: bool = True, restarts: int = settings.ASCENT_RESTARTS) -> float:
    """
    Lower bound of sup_{x ∈ N} ‖Tx‖/‖x‖ from random null-space directions.

    With `refine`, the best `restarts` samples are split into base pairs,
    rounded to extreme points and improved by local ascent.
    """
    if samples < 1:
        raise InputError("samples must be >= 1")
    space = T.space
    M = T.matrix
    rng = np.random.default_rng(seed)
    X = sampleNull(space, samples, rng)
    denom = baseNormRows(space, X)
    keep = denom > 1e-12
    X, denom = X[keep], denom[keep]
    if X.shape[0] == 0:
        return 0.0
    ratios = baseNormRows(space, X @ M.T) / denom
    best = float(np.max(ratios))
    if not refine:
        return best

    fw = functionalWeights(space)
    for s in np.argsort(-ratios, kind="stable")[:max(1, restarts)]:
        pos, neg = closedFormParts(space, X[s])
        u, v = pos / float(fw @ pos), neg / float(fw @ neg)
        u = _roundToVertex(space, M, u, v, 0)
        v = _roundToVertex(space, M, v, u, 1)
        val, _, _, _ = _localAscent(space, M, u, v, rng, 50 * space.dimension)
        best = max(best, val)
    return best


# ---------- property battery ----------


def _check(checks: list[dict], name: str, ok: bool, lhs: float, rhs: float, exact: bool) -> None:
    entry = {"name": name, "ok": bool(ok), "lhs": float(lhs), "rhs": float(rhs), "advisory": not exact}
    checks.append(entry)
    if not exact and not ok:
        logEvent("battery_advisory", entry)


def defaultNullMap(space: SpaceDescriptor, seed: int = settings.SEED) -> MarkovOperator:
    """H = T_y − T_z for two pseudo-random base points; f∘H = 0."""
    rng = np.random.default_rng(seed)
    y, z = sampleBase(space, 2, rng)
    return rankOne(space, y, "T_y") - rankOne(space, z, "T_z")


def coefficientBattery(T: MarkovOperator, S: MarkovOperator, H: Optional[MarkovOperator] = None,
                       budget: int = settings.DELTA_BUDGET, seed: int = settings.SEED,
                       slack: float = 1e-9) -> dict[str, Any]:
    """
    Check the basic properties of δ on a pair of Markov operators.

    Returns:
        {"ok": bool, "exact": bool, "deltas": {...}, "checks": [ {name, ok, lhs, rhs, advisory}, ... ]}

        Checks: bounds, continuity, submultiplicative, null_map_contraction,
        nullspace_agreement, rank_one_zero_delta. A check is advisory (logged,
        not counted in "ok") when any δ it relies on is only a lower bound.

    Raises:
        PreconditionError: H does not satisfy f∘H = 0.
    """
    T._check(S)
    space = T.space
    H = H if H is not None else defaultNullMap(space, seed)
    T._check(H)
    fw = functionalWeights(space)
    leak = float(np.max(np.abs(fw @ H.matrix)))
    if leak > 1e-9:
        raise PreconditionError(f"H must satisfy f∘H = 0 (max |f(H e_i)| = {leak:.3g})")

    checks: list[dict] = []
    dT = delta(T, budget, seed)
    dS = delta(S, budget, seed)
    dTS = delta(compose(T, S), budget, seed)
    dDiff = delta(T - S, budget, seed)
    nDiff = operatorNorm(T - S)
    nH = operatorNorm(H)
    nTH = operatorNorm(compose(T, H))
    normsExact = nDiff.mode == "exact" and nH.mode == "exact"

    for name, d in (("T", dT), ("S", dS)):
        _check(checks, f"bounds[{name}]", -slack <= d.value <= 1.0 + slack, d.value, 1.0, d.exact)

    lhs = abs(dT.value - dS.value)
    _check(checks, "continuity[lower]", lhs <= dDiff.value + slack, lhs, dDiff.value,
           dT.exact and dS.exact and dDiff.exact)
    _check(checks, "continuity[upper]", dDiff.value <= nDiff.value + slack, dDiff.value, nDiff.value,
           dDiff.exact and normsExact)

    prod = dT.value * dS.value
    _check(checks, "submultiplicative", dTS.value <= prod + slack, dTS.value, prod,
           dT.exact and dS.exact and dTS.exact)

    rhs = dT.value * nH.value
    _check(checks, "null_map_contraction", nTH.value <= rhs + slack, nTH.value, rhs,
           dT.exact and normsExact and nTH.mode == "exact")

    viaN = deltaViaNullspace(T, seed=seed)
    _check(checks, "nullspace_agreement", abs(viaN - dT.value) <= 1e-6, viaN, dT.value, dT.exact)

    for name, X, d in (("T", T, dT), ("S", S, dS)):
        if d.value <= 1e-12:
            u = baseExtremePoints(space, 2, seed=seed).points[0]
            target = rankOne(space, X.matrix @ u)
            gap = float(np.max(np.abs(X.matrix - target.matrix)))
            _check(checks, f"rank_one_zero_delta[{name}]", gap <= 1e-9, gap, 1e-9, d.exact)

    exactChecks = [c for c in checks if not c["advisory"]]
    return {
        "ok": all(c["ok"] for c in exactChecks),
        "exact": len(exactChecks) == len(checks),
        "deltas": {"T": dT.toDict(), "S": dS.toDict(), "TS": dTS.toDict(), "T-S": dDiff.toDict()},
        "checks": checks,
    }


# ---------- openness of the uniformly ergodic set ----------


def perturbationRadius(T: MarkovOperator, n: int, budget: int = settings.DELTA_BUDGET, seed: int = settings.SEED) -> float:
    """β/n with β = (1 − δ(Tⁿ))/2: every Markov H with ‖H − T‖ below it keeps δ(Hⁿ) < 1."""
    if n < 1:
        raise InputError("n must be >= 1")
    a = delta(matrixPower(T, n), budget, seed).value
    if a >= 1.0:
        raise PreconditionError(f"δ(T^{n}) = {a:.6g} is not below 1")
    return (1.0 - a) / 2.0 / n


def opennessCheck(T: MarkovOperator, H: MarkovOperator, n: int, budget: int = settings.DELTA_BUDGET,
                  seed: int = settings.SEED) -> dict[str, Any]:
    """Compare δ(Hⁿ) with δ(Tⁿ) for a Markov H near T; |δ(Hⁿ) − δ(Tⁿ)| ≤ n‖H − T‖ must hold."""
    T._check(H)
    radius = perturbationRadius(T, n, budget, seed)
    dist = operatorNorm(H - T).value
    dT = delta(matrixPower(T, n), budget, seed).value
    dH = delta(matrixPower(H, n), budget, seed).value
    boundHolds = abs(dH - dT) <= n * dist + 1e-9
    inside = dist < radius
    return {
        "n": n,
        "radius": radius,
        "distance": dist,
        "inside": inside,
        "delta_T_n": dT,
        "delta_H_n": dH,
        "bound_holds": boundHolds,
        "ok": boundHolds and (not inside or dH < 1.0),
    }


__all__ = [
    "DeltaResult",
    "delta",
    "deltaViaNullspace",
    "coefficientBattery",
    "defaultNullMap",
    "perturbationRadius",
    "opennessCheck",
]
