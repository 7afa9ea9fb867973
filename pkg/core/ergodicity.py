"""
Ergodicity analyses for homogeneous and nonhomogeneous chains.

Traces are finite-horizon evidence: a "pass" means the quantity fell below
the pass threshold by the horizon, a "fail" means it stayed above the stall
threshold over the last half of the horizon, anything else is
"inconclusive". Horizons `nMax` are absolute indices: traces run over
n = k+1..nMax.

Doeblin slack. For a target w and an image P x, the smallest φ ∈ X₊ with
P x + φ ≥ w is the positive part of the minimal decomposition of w − P x,
and f(pos(y)) = (‖y‖ + f(y))/2. That value is convex in x, so on polyhedral
bases the sup over K is attained at extreme points.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, TypeVar, Union

import numpy as np

from . import settings
from .dobrushin import delta
from .errors import InputError, PreconditionError
from .obsb import (
    SpaceDescriptor,
    Vector,
    baseCenter,
    baseContains,
    baseExtremePoints,
    baseNormRows,
    coneSlackRows,
    coordsOf,
    functionalWeights,
    sampleBase,
)
from .operators import MarkovOperator, NdmcSpec, composite, operatorNorm, trajectory
from .run_logger import logEvent

T_ = TypeVar("T_")
R_ = TypeVar("R_")


@dataclass(frozen=True)
class VerdictThresholds:
    passThreshold: float = settings.PASS_THRESHOLD
    stallThreshold: float = settings.STALL_THRESHOLD
    d2Threshold: float = settings.D2_THRESHOLD
    d2BurnIn: int = settings.D2_BURN_IN
    limitAgreement: float = settings.LIMIT_AGREEMENT
    contractionSlack: float = settings.CONTRACTION_SLACK


DEFAULT_THRESHOLDS = VerdictThresholds()


def mapOrdered(fn: Callable[[T_], R_], items: Sequence[T_], parallel: bool = False) -> list[R_]:
    """map() that keeps input order; threads when `parallel` and there is more than one item."""
    if not parallel or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(8, len(items))) as pool:
        return list(pool.map(fn, items))


def classifyTrace(values: Sequence[float], thresholds: VerdictThresholds = DEFAULT_THRESHOLDS) -> str:
    if len(values) == 0:
        return "inconclusive"
    if values[-1] <= thresholds.passThreshold:
        return "pass"
    tail = values[len(values) // 2:]
    if min(tail) > thresholds.stallThreshold:
        return "fail"
    return "inconclusive"


def combineVerdicts(verdicts: Sequence[str]) -> str:
    if not verdicts:
        return "inconclusive"
    if any(v == "fail" for v in verdicts):
        return "fail"
    if all(v == "pass" for v in verdicts):
        return "pass"
    return "inconclusive"


def fitDecayRate(ns: Sequence[float], values: Sequence[float], floor: float = 1e-13) -> Optional[tuple[float, float]]:
    """Least-squares fit of log v = log C − α n over the values above `floor`; None with fewer than two."""
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    mask = vals > floor
    if mask.sum() < 2:
        return None
    slope, intercept = np.polyfit(ns[mask], np.log(vals[mask]), 1)
    return float(np.exp(intercept)), float(-slope)


# ---------- probes ----------


def defaultProbes(space: SpaceDescriptor, count: int = settings.PROBE_COUNT,
                  extremeCap: int = settings.PROBE_EXTREME_CAP, seed: int = settings.SEED) -> list[Vector]:
    """`count` pseudo-random base points followed by extreme points of K (at most `extremeCap`)."""
    rng = np.random.default_rng(seed)
    rows = [sampleBase(space, count, rng)] if count > 0 else []
    if extremeCap > 0:
        rows.append(baseExtremePoints(space, max(extremeCap, 2), seed=seed).points[:extremeCap])
    X = np.vstack(rows)
    return [Vector(space, r) for r in X]


def probeCoords(space: SpaceDescriptor, probes: Sequence[Union[Vector, np.ndarray]],
                tol: Optional[float] = None) -> np.ndarray:
    """Stack probes as rows, rejecting anything outside K."""
    tol = settings.CONE_TOL if tol is None else tol
    if len(probes) == 0:
        raise InputError("at least one probe is required")
    X = np.vstack([coordsOf(space, p) for p in probes])
    for i, row in enumerate(X):
        if not baseContains(space, row, tol):
            raise InputError(f"probe {i} is not in the base K")
    return X


def probePairs(count: int) -> list[tuple[int, int]]:
    """Neighbouring probes plus first/last: a cycle through all probes."""
    pairs = [(i, i + 1) for i in range(count - 1)]
    if count > 2:
        pairs.append((0, count - 1))
    return pairs


def coversExtremePoints(space: SpaceDescriptor, X: np.ndarray) -> bool:
    """True when the probe rows include the complete vertex set of a polyhedral base."""
    if not space.polyhedral:
        return False
    pts = baseExtremePoints(space, max(X.shape[0], 2))
    if not pts.complete:
        return False
    for v in pts.points:
        if not np.any(np.all(np.abs(X - v) <= 1e-12, axis=1)):
            return False
    return True


def slackResidualRows(space: SpaceDescriptor, target: np.ndarray, images: np.ndarray) -> np.ndarray:
    """‖φ‖ for the minimal φ ∈ X₊ with image + φ ≥ target, one value per row of `images`."""
    Y = target[None, :] - images
    fw = functionalWeights(space)
    return np.maximum(0.0, (baseNormRows(space, Y) + Y @ fw) / 2.0)


# ---------- fixed point ----------


def fixedPoint(T: MarkovOperator, rankTol: float = 1e-10, maxIter: int = 100000, tol: float = 1e-13) -> Vector:
    """
    y₀ ∈ K with T y₀ = y₀.

    Direct solve of (T − I) y = 0, f(y) = 1 by least squares; when that system
    is rank-deficient beyond `rankTol`, Cesàro-averaged power iteration from
    the base center.
    """
    space = T.space
    d = space.dimension
    fw = functionalWeights(space)
    A = np.vstack([T.matrix - np.eye(d), fw[None, :]])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    if np.linalg.matrix_rank(A, tol=rankTol) == d:
        y, *_ = np.linalg.lstsq(A, b, rcond=None)
        return Vector(space, y)

    logEvent("solver", {"route": "fixed_point", "fallback": "power_iteration", "label": T.label})
    x = baseCenter(space)
    avg = x.copy()
    for it in range(1, maxIter + 1):
        x = T.matrix @ x
        avg += (x - avg) / (it + 1)
        if it % 16 == 0 and float(baseNormRows(space, T.matrix @ avg - avg)[0]) <= tol:
            break
    return Vector(space, avg / float(fw @ avg))


# ---------- reports ----------


@dataclass
class ErgodicityReport:
    """
    Verdicts and traces for one chain.

    deltaTrace rows: (k, n, δ(T^{k,n}), mode).
    pairTraces rows: (k, index, n, value); `index` is a probe pair for
    L-weak traces and a single probe for L-strong distance-to-limit traces.
    """

    chainId: str
    verdicts: dict[str, str] = field(default_factory=dict)
    deltaTrace: list[tuple[int, int, float, str]] = field(default_factory=list)
    pairTraces: list[tuple[int, int, int, float]] = field(default_factory=list)
    fittedRate: Optional[tuple[float, float]] = None
    boundChecks: list[dict[str, Any]] = field(default_factory=list)
    gammaTrace: list[tuple[int, float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    def merge(self, other: "ErgodicityReport") -> "ErgodicityReport":
        return ErgodicityReport(
            chainId=self.chainId,
            verdicts={**self.verdicts, **other.verdicts},
            deltaTrace=self.deltaTrace + other.deltaTrace,
            pairTraces=self.pairTraces + other.pairTraces,
            fittedRate=self.fittedRate or other.fittedRate,
            boundChecks=self.boundChecks + other.boundChecks,
            gammaTrace=self.gammaTrace + other.gammaTrace,
            flags=sorted(set(self.flags) | set(other.flags)),
            details={**self.details, **other.details},
        )

    def toDict(self) -> dict[str, Any]:
        return {
            "chain_id": self.chainId,
            "verdicts": dict(self.verdicts),
            "delta_trace": [list(r) for r in self.deltaTrace],
            "pair_traces": [list(r) for r in self.pairTraces],
            "fitted_rate": None if self.fittedRate is None else {"C": self.fittedRate[0], "alpha": self.fittedRate[1]},
            "bound_checks": list(self.boundChecks),
            "gamma_trace": [list(r) for r in self.gammaTrace],
            "flags": list(self.flags),
            "details": dict(self.details),
        }

    def csvRows(self, series: str) -> list[tuple[int, int, float, str, str]]:
        """Rows (k, n, value, mode, series) for the trace CSV."""
        rows = [(k, n, v, mode, f"{series}:delta") for k, n, v, mode in self.deltaTrace]
        rows += [(k, n, v, "pair", f"{series}:{idx}") for k, idx, n, v in self.pairTraces]
        return rows


@dataclass
class DoeblinCertificate:
    """
    (z_k, λ_k, n_k) with the slack norms found on the probes.

    For D/D1 the certificate passes when every residual is at most λ_k/4;
    for D2 when the residuals vanish along n (see `doeblinCheck`).
    """

    condition: str
    k: int
    z: Optional[Vector]
    lambdaK: float
    nK: Optional[int]
    residuals: list[tuple[int, float]]
    passed: bool
    mode: str = "sampled"
    residualTrace: list[tuple[int, float]] = field(default_factory=list)

    @property
    def muK(self) -> float:
        return 1.0 - self.lambdaK / 2.0

    def toDict(self) -> dict[str, Any]:
        return {
            "condition": self.condition,
            "k": self.k,
            "z": None if self.z is None else self.z.tolist(),
            "lambda": self.lambdaK,
            "n_k": self.nK,
            "mu": self.muK,
            "residuals": [list(r) for r in self.residuals],
            "pass": self.passed,
            "mode": self.mode,
            "residual_trace": [list(r) for r in self.residualTrace],
        }


# ---------- uniform / weak ----------


def uniformErgodicity(T: MarkovOperator, nMax: int, budget: int = settings.DELTA_BUDGET, seed: int = settings.SEED,
                      thresholds: VerdictThresholds = DEFAULT_THRESHOLDS, chainId: str = "") -> ErgodicityReport:
    """
    Uniform ergodicity of {Tⁿ}.

    Finds the smallest n₀ ≤ nMax with δ(T^{n₀}) < 1 − 1e-6, the fixed point y₀
    and checks ‖Tⁿ − T_{y₀}‖ ≤ 2·ρ^{⌊n/n₀⌋} with ρ = δ(T^{n₀}) for n ≤ nMax.
    A (C, α) fit of the norm trace is reported; pass needs α > 0 unless the
    trace is exactly zero from some n on (rank-one operators).
    """
    if nMax < 2:
        raise InputError("nMax must be >= 2")
    report = ErgodicityReport(chainId or T.label)
    Tn = np.eye(T.space.dimension)
    powers = []
    n0, rho = None, None
    for n in range(1, nMax + 1):
        Tn = T.matrix @ Tn
        powers.append(Tn)
        d = delta(MarkovOperator(T.space, Tn, f"{T.label}^{n}"), budget, seed)
        report.deltaTrace.append((0, n, d.value, d.mode))
        if n0 is None and d.value < 1.0 - 1e-6:
            n0, rho = n, d.value
    if n0 is None:
        report.verdicts["uniform"] = "fail"
        report.details["uniform"] = {"n0": None, "reason": "δ(Tⁿ) ≥ 1 − 1e-6 for every n ≤ nMax"}
        return report

    y0 = fixedPoint(T)
    # f(y0) = 1 by construction; T_{y0} x = f(x) y0
    Ty0 = np.outer(y0.coords, functionalWeights(T.space))
    ns, norms = [], []
    allHold = True
    for n, Tn in enumerate(powers, start=1):
        value = operatorNorm(MarkovOperator(T.space, Tn - Ty0)).value
        bound = 2.0 * rho ** (n // n0)
        holds = value <= bound + 1e-9
        allHold = allHold and holds
        report.boundChecks.append({"kind": "uniform_power_bound", "n": n, "norm": value, "bound": bound, "holds": holds})
        ns.append(n)
        norms.append(value)

    fit = fitDecayRate(ns, norms)
    report.fittedRate = fit
    verdict = classifyTrace(norms, thresholds)
    zeroTail = norms[-1] <= 1e-13
    if not allHold:
        verdict = "fail"
        report.flags.append("bound_violation")
    elif verdict == "pass" and not zeroTail and (fit is None or fit[1] <= 0):
        verdict = "inconclusive"
    report.verdicts["uniform"] = verdict
    report.details["uniform"] = {
        "n0": n0,
        "rho": rho,
        "y0": y0.tolist(),
        "alpha": None if fit is None else fit[1],
        "bound_holds": allHold,
        "delta_mode": report.deltaTrace[n0 - 1][3],
    }
    return report


def doeblinSchedule(spec: NdmcSpec, k: int, nMax: int, probes: Sequence[Vector]) -> list["DoeblinCertificate"]:
    """Chained searches ℓ₀ = k, ℓ_{j+1} = n_{ℓ_j} until a search fails or passes nMax."""
    certs = []
    ell = k
    while ell < nMax:
        cert = doeblinSearch(spec, ell, nMax, probes)
        if not cert.passed:
            break
        certs.append(cert)
        ell = cert.nK
    return certs


def doeblinProductBound(spec: NdmcSpec, k: int, nMax: int, probes: Sequence[Vector],
                        deltas: dict[int, tuple[float, str]]) -> list[dict[str, Any]]:
    """
    δ(T^{k,ℓ_J}) ≤ Π_j μ_{ℓ_j} along the search schedule.

    Asserted when the probes cover every vertex of a polyhedral base (the
    certificates then hold for all of K); advisory otherwise.
    """
    certs = doeblinSchedule(spec, k, nMax, probes)
    rows = []
    bound = 1.0
    for cert in certs:
        bound *= cert.muK
        n = cert.nK
        if n not in deltas:
            continue
        value, mode = deltas[n]
        certified = cert.mode == "exact"
        rows.append({
            "kind": "doeblin_product", "k": k, "n": n, "delta": value, "bound": bound,
            "holds": value <= bound + 1e-9, "advisory": not (certified and mode == "exact"),
        })
    return rows


def weakErgodicity(spec: NdmcSpec, ks: Sequence[int], nMax: int, budget: int = settings.DELTA_BUDGET,
                   seed: int = settings.SEED, thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                   parallel: bool = False, productBound: bool = True) -> ErgodicityReport:
    """δ(T^{k,n}) traces per k; pass when every trace falls below the pass threshold with a positive decay rate."""
    ks = list(ks)
    if not ks:
        raise InputError("ks must not be empty")
    for k in ks:
        if nMax <= k:
            raise InputError(f"nMax={nMax} must exceed k={k}")
    probes = defaultProbes(spec.space, seed=seed) if productBound else []

    def one(k: int):
        rows = []
        for n, M in trajectory(spec, k, nMax):
            d = delta(MarkovOperator(spec.space, M), budget, seed)
            rows.append((k, n, d.value, d.mode))
        values = [r[2] for r in rows]
        verdict = classifyTrace(values, thresholds)
        fit = fitDecayRate([r[1] for r in rows], values)
        if verdict == "pass" and values[-1] > 1e-13 and (fit is None or fit[1] <= 0):
            verdict = "inconclusive"
        checks = []
        if productBound:
            checks = doeblinProductBound(spec, k, nMax, probes, {r[1]: (r[2], r[3]) for r in rows})
        return rows, verdict, fit, checks

    report = ErgodicityReport(spec.label)
    perK = {}
    for k, (rows, verdict, fit, checks) in zip(ks, mapOrdered(one, ks, parallel)):
        report.deltaTrace.extend(rows)
        report.boundChecks.extend(checks)
        perK[str(k)] = verdict
        if report.fittedRate is None:
            report.fittedRate = fit
    verdict = combineVerdicts(list(perK.values()))
    if any(not c["holds"] and not c["advisory"] for c in report.boundChecks):
        report.flags.append("bound_violation")
    report.verdicts["weak"] = verdict
    report.details["weak"] = {"per_k": perK, "n_max": nMax}
    return report


# ---------- L-weak / L-strong ----------


def lWeakErgodicity(spec: NdmcSpec, ks: Sequence[int], pairs: Optional[Sequence[tuple[Vector, Vector]]], nMax: int,
                    thresholds: VerdictThresholds = DEFAULT_THRESHOLDS, parallel: bool = False,
                    seed: int = settings.SEED) -> ErgodicityReport:
    """‖T^{k,n}x − T^{k,n}y‖ per (k, pair); verdict semantics as the weak analysis, without the sup."""
    if pairs is None:
        probes = defaultProbes(spec.space, seed=seed)
        pairs = [(probes[i], probes[j]) for i, j in probePairs(len(probes))]
    if not pairs:
        raise InputError("at least one probe pair is required")
    X = probeCoords(spec.space, [p[0] for p in pairs])
    Y = probeCoords(spec.space, [p[1] for p in pairs])
    D = X - Y
    ks = list(ks)

    def one(k: int):
        if nMax <= k:
            raise InputError(f"nMax={nMax} must exceed k={k}")
        rows = []
        traces = [[] for _ in range(D.shape[0])]
        for n, M in trajectory(spec, k, nMax):
            vals = baseNormRows(spec.space, D @ M.T)
            for idx, v in enumerate(vals):
                rows.append((k, idx, n, float(v)))
                traces[idx].append(float(v))
        return rows, [classifyTrace(t, thresholds) for t in traces]

    report = ErgodicityReport(spec.label)
    perK = {}
    for k, (rows, verdicts) in zip(ks, mapOrdered(one, ks, parallel)):
        report.pairTraces.extend(rows)
        perK[str(k)] = combineVerdicts(verdicts)
    report.verdicts["l_weak"] = combineVerdicts(list(perK.values()))
    report.details["l_weak"] = {"per_k": perK, "pairs": len(pairs), "n_max": nMax}
    return report


def lStrongErgodicity(spec: NdmcSpec, ks: Sequence[int], probes: Optional[Sequence[Vector]], nMax: int,
                      thresholds: VerdictThresholds = DEFAULT_THRESHOLDS, window: Optional[int] = None,
                      parallel: bool = False, seed: int = settings.SEED) -> ErgodicityReport:
    """
    Estimate the limit of T^{k,n}u for every probe u and start k.

    Limits are averages of the last `window` states (default a quarter of the
    horizon). Pass needs every trajectory to settle within the agreement
    tolerance of its limit and all limits (across probes and k) to agree;
    settled but disagreeing limits fail; unsettled trajectories are inconclusive.
    """
    space = spec.space
    if probes is None:
        probes = defaultProbes(space, seed=seed)
    X = probeCoords(space, probes)
    ks = list(ks)
    if not ks:
        raise InputError("ks must not be empty")

    def one(k: int):
        if nMax <= k:
            raise InputError(f"nMax={nMax} must exceed k={k}")
        w = window or max(2, (nMax - k) // 4)
        states = [X @ M.T for _, M in trajectory(spec, k, nMax)]
        tail = np.stack(states[-w:])
        limits = tail.mean(axis=0)
        settle = baseNormRows(space, states[-1] - limits)
        rows = []
        for j, S in enumerate(states):
            dist = baseNormRows(space, S - limits)
            rows.extend((k, idx, k + 1 + j, float(v)) for idx, v in enumerate(dist))
        return limits, float(np.max(settle)), rows

    results = mapOrdered(one, ks, parallel)
    limitsByK = [r[0] for r in results]
    settled = all(r[1] <= thresholds.limitAgreement for r in results)
    m = len(ks)
    disagreement = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            diff = limitsByK[a][:, None, :] - limitsByK[b][None, :, :]
            disagreement[a, b] = float(np.max(baseNormRows(space, diff.reshape(-1, space.dimension))))
    agree = float(disagreement.max()) <= thresholds.limitAgreement

    if settled and agree:
        verdict = "pass"
    elif settled:
        verdict = "fail"
    else:
        verdict = "inconclusive"

    report = ErgodicityReport(spec.label)
    for r in results:
        report.pairTraces.extend(r[2])
    report.verdicts["l_strong"] = verdict
    if "discretization-sensitive" in spec.flags:
        report.flags.append("discretization-sensitive")
    overall = np.mean(np.vstack(limitsByK), axis=0)
    report.details["l_strong"] = {
        "limit": overall.tolist(),
        "limits_by_k": {str(k): L.mean(axis=0).tolist() for k, L in zip(ks, limitsByK)},
        "settle_residual": {str(k): r[1] for k, r in zip(ks, results)},
        "disagreement": disagreement.tolist(),
        "n_max": nMax,
    }
    return report


# ---------- Doeblin conditions ----------


def doeblinCheck(spec: NdmcSpec, condition: str, k: int, z: Union[Vector, np.ndarray], lam: float,
                 probes: Sequence[Union[Vector, np.ndarray]], nK: Optional[int] = None, horizon: Optional[int] = None,
                 thresholds: VerdictThresholds = DEFAULT_THRESHOLDS) -> DoeblinCertificate:
    """
    Check T^{k,n_k}x + φ_x ≥ λ z for every probe with the minimal slack φ_x.

    D / D1: one absolute index n_k > k; pass iff every ‖φ_x‖ ≤ λ/4 (+1e-9).
    D2: n runs k..horizon (T^{k,k} = I); pass iff the last residual is at most
    the D2 threshold and every probe's residual sequence is non-increasing
    after the burn-in.

    Raises:
        PreconditionError: z ∉ K or λ ∉ (0, 2].
        InputError: missing/invalid n_k or horizon, probes outside K, unknown condition.
    """
    space = spec.space
    if condition not in ("D", "D1", "D2"):
        raise InputError(f"Invalid condition '{condition}'. Allowed: ['D', 'D1', 'D2']")
    za = coordsOf(space, z)
    if not baseContains(space, za):
        raise PreconditionError("z must lie in the base K")
    if not (0.0 < lam <= 2.0):
        raise PreconditionError(f"lambda must lie in (0, 2], got {lam}")
    X = probeCoords(space, probes)
    target = lam * za
    mode = "exact" if coversExtremePoints(space, X) else "sampled"

    if condition in ("D", "D1"):
        if nK is None or nK <= k:
            raise InputError(f"n_k must be an absolute index > k={k}")
        P = composite(spec, k, nK).matrix
        res = slackResidualRows(space, target, X @ P.T)
        passed = bool(np.all(res <= lam / 4.0 + 1e-9))
        return DoeblinCertificate(condition, k, Vector(space, za), lam, nK,
                                  [(i, float(r)) for i, r in enumerate(res)], passed, mode)

    if horizon is None or horizon <= k:
        raise InputError(f"D2 needs a horizon > k={k}")
    perProbe = [slackResidualRows(space, target, X)]
    for _, M in trajectory(spec, k, horizon):
        perProbe.append(slackResidualRows(space, target, X @ M.T))
    R = np.vstack(perProbe)                          # rows n = k..horizon
    trace = [(k + j, float(R[j].max())) for j in range(R.shape[0])]
    burn = min(thresholds.d2BurnIn, R.shape[0] - 1)
    monotone = bool(np.all(np.diff(R[burn:], axis=0) <= 1e-12))
    last = float(R[-1].max())
    passed = monotone and last <= thresholds.d2Threshold
    return DoeblinCertificate("D2", k, Vector(space, za), lam, None,
                              [(i, float(r)) for i, r in enumerate(R[-1])], passed, mode, trace)


def doeblinSearch(spec: NdmcSpec, k: int, horizon: int, probes: Sequence[Union[Vector, np.ndarray]]) -> DoeblinCertificate:
    """
    Look for n_k ≤ horizon with ‖(T^{k,n_k}x − T^{k,n_k}y₀)₋‖ ≤ 1/4 on every probe.

    y₀ is the first probe; on success the certificate is λ = 1, z = T^{k,n_k}y₀
    (condition D). On failure `passed` is False and `residualTrace` holds the
    largest residual for every n scanned.
    """
    space = spec.space
    X = probeCoords(space, probes)
    mode = "exact" if coversExtremePoints(space, X) else "sampled"
    trace = []
    for n, M in trajectory(spec, k, horizon):
        imgs = X @ M.T
        # f(diff) = 0, so the negative part has norm ‖diff‖/2
        res = np.maximum(0.0, baseNormRows(space, imgs - imgs[0]) / 2.0)
        worst = float(res.max())
        trace.append((n, worst))
        if worst <= 0.25 + 1e-12:
            z = imgs[0] / float(functionalWeights(space) @ imgs[0])
            return DoeblinCertificate("D", k, Vector(space, z), 1.0, n,
                                      [(i, float(r)) for i, r in enumerate(res)], True, mode, trace)
    return DoeblinCertificate("D", k, None, 1.0, None, [], False, mode, trace)


# ---------- implication chain, decay envelope, vanishing slack ----------


def lStrongImpliesD2(spec: NdmcSpec, probes: Optional[Sequence[Vector]], horizon: int, k: Optional[int] = None,
                     lStrong: Optional[ErgodicityReport] = None,
                     thresholds: VerdictThresholds = DEFAULT_THRESHOLDS) -> dict[str, Any]:
    """
    D2 certificate from an L-strong limit: z = y₀, λ = 1, φⁿ_x = (T^{k,n}x − y₀)₋.

    Inconclusive when the chain does not pass the L-strong analysis at this horizon.
    """
    space = spec.space
    k = spec.startIndex if k is None else k
    if probes is None:
        probes = defaultProbes(space)
    rep = lStrong or lStrongErgodicity(spec, [k], probes, horizon, thresholds)
    verdict = rep.verdicts.get("l_strong", "inconclusive")
    if verdict != "pass":
        return {"verdict": "inconclusive", "l_strong": verdict, "certificate": None, "dominated": None}
    y0 = np.asarray(rep.details["l_strong"]["limit"], dtype=float)
    y0 = y0 / float(functionalWeights(space) @ y0)
    if coneSlackRows(space, y0)[0] > 1e-7:
        return {"verdict": "inconclusive", "l_strong": verdict, "certificate": None, "dominated": None,
                "reason": "limit estimate is outside K"}
    # tiny negative slack from averaging is pushed back into the cone
    y0 = _nudgeIntoBase(space, y0)
    cert = doeblinCheck(spec, "D2", k, y0, 1.0, probes, horizon=horizon, thresholds=thresholds)

    X = probeCoords(space, probes)
    dominated = True
    for n, M in trajectory(spec, k, horizon):
        imgs = X @ M.T
        res = slackResidualRows(space, y0, imgs)
        dist = baseNormRows(space, imgs - y0)
        dominated = dominated and bool(np.all(res <= dist + 1e-12))
    return {
        "verdict": "pass" if cert.passed else "fail",
        "l_strong": verdict,
        "certificate": cert.toDict(),
        "dominated": dominated,
    }


def _nudgeIntoBase(space: SpaceDescriptor, y: np.ndarray) -> np.ndarray:
    if baseContains(space, y):
        return y
    c = baseCenter(space)
    for t in (1e-12, 1e-10, 1e-8, 1e-6):
        cand = (1.0 - t) * y + t * c
        if baseContains(space, cand):
            return cand
    return y


def implicationConsistency(spec: NdmcSpec, horizon: int, ks: Optional[Sequence[int]] = None,
                           probes: Optional[Sequence[Vector]] = None,
                           thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                           seed: int = settings.SEED) -> dict[str, Any]:
    """
    Cross-check the chain L-strong ⇒ D2 ⇒ D1 ⇒ contraction ⇒ L-weak on probes.

    Per k: the L-strong limit gives a D2 candidate (z = y₀, λ = 1); a passing D2
    must yield a D1 index (first n with residuals ≤ 1/4). A Doeblin search over
    all probes gives (n_k, μ_k); γ_k is the largest ‖T^{k,n_k}(x − y)‖/‖x − y‖
    over every probe pair. Half the pairwise image distance must stay within
    μ_k, and so must γ_k when the probes cover every extreme point of K.
    Across k: contraction on every k must not come with a failing L-weak trace.
    Violations are reported and logged, never suppressed.
    """
    space = spec.space
    ks = list(ks) if ks else [spec.startIndex]
    if probes is None:
        probes = defaultProbes(space, seed=seed)
    X = probeCoords(space, probes)
    pairs = [(i, j) for i, j in probePairs(len(probes)) if np.any(X[i] != X[j])]
    violations: list[dict[str, Any]] = []
    stages: dict[str, dict[str, Any]] = {}
    gammaTrace: list[tuple[int, float]] = []

    def violate(k: int, rule: str, detail: dict[str, Any]) -> None:
        entry = {"k": k, "rule": rule, **detail}
        violations.append(entry)
        logEvent("implication_violation", {"chain": spec.label, **entry})

    for k in ks:
        st: dict[str, Any] = {}
        ls = lStrongErgodicity(spec, [k], probes, horizon, thresholds)
        st["l_strong"] = ls.verdicts["l_strong"]
        d2 = lStrongImpliesD2(spec, probes, horizon, k, ls, thresholds)
        st["d2"] = d2["verdict"]
        if st["l_strong"] == "pass" and d2["verdict"] != "pass":
            violate(k, "l_strong => D2", {"d2": d2["verdict"]})

        if d2["verdict"] == "pass":
            cert = d2["certificate"]
            first = next((n for n, r in cert["residual_trace"] if r <= cert["lambda"] / 4.0 and n > k), None)
            d1 = None
            if first is not None:
                d1 = doeblinCheck(spec, "D1", k, np.asarray(cert["z"]), cert["lambda"], probes, nK=first)
            st["d1_from_d2"] = None if d1 is None else {"n_k": first, "pass": d1.passed}
            if d1 is None or not d1.passed:
                violate(k, "D2 => D1", {"n_k": first})

        # one certificate over every probe; γ is then measured on all probe pairs
        cert = doeblinSearch(spec, k, horizon, probes)
        st["d1"] = "pass" if cert.passed else "fail"
        st["n_k"], st["mu"], st["gamma"] = cert.nK, cert.muK, None
        if cert.passed:
            imgs = X @ composite(spec, k, cert.nK).matrix.T
            gamma, spread = 0.0, 0.0
            for i in range(len(X) - 1):
                num = baseNormRows(space, imgs[i + 1:] - imgs[i])
                den = baseNormRows(space, X[i + 1:] - X[i])
                live = den > 1e-14
                if np.any(live):
                    gamma = max(gamma, float(np.max(num[live] / den[live])))
                spread = max(spread, float(np.max(num)) / 2.0)
            st["gamma"] = gamma
            gammaTrace.append((k, gamma))
            limit = cert.muK + thresholds.contractionSlack
            # ratio ≤ δ ≤ μ needs D1 on all of K; on sampled probes only the pairwise spread is bounded
            bad = spread > limit or (cert.mode == "exact" and gamma > limit)
            if bad:
                violate(k, "D1 => contraction", {"gamma": gamma, "spread": spread, "mu": cert.muK,
                                                 "n_k": cert.nK, "mode": cert.mode})
            st["contraction"] = "fail" if bad else "pass"
        else:
            st["contraction"] = "fail"

        lw = lWeakErgodicity(spec, [k], [(probes[i], probes[j]) for i, j in pairs], horizon, thresholds)
        st["l_weak"] = lw.verdicts["l_weak"]
        stages[str(k)] = st

    if ks and all(stages[str(k)]["contraction"] == "pass" for k in ks):
        for k in ks:
            if stages[str(k)]["l_weak"] == "fail":
                violate(k, "contraction => L-weak", {"l_weak": "fail"})

    return {
        "ok": not violations,
        "stages": stages,
        "gamma_trace": [list(r) for r in gammaTrace],
        "violations": violations,
        "horizon": horizon,
    }


def decayBoundCheck(spec: NdmcSpec, k: int, alpha: float, probes: Optional[Sequence[Vector]], nMax: int,
                    spacing: Optional[int] = None, seed: int = settings.SEED) -> dict[str, Any]:
    """
    Smallest C with ‖T^{k,n}x − T^{k,n}y‖ ≤ C(1 − α/2)^{(n−k)/N}‖x − y‖ on the probe pairs.

    N is `spacing` when given, else the largest gap of the Doeblin search
    schedule from k (1 when no certificate is found). C = 0 when every trace
    vanishes after k.
    """
    if not (0.0 < alpha <= 2.0):
        raise PreconditionError(f"alpha must lie in (0, 2], got {alpha}")
    space = spec.space
    if probes is None:
        probes = defaultProbes(space, seed=seed)
    X = probeCoords(space, probes)
    pairs = [(i, j) for i, j in probePairs(len(probes)) if np.any(X[i] != X[j])]
    if not pairs:
        raise InputError("decay check needs two distinct probes")

    schedule = []
    if spacing is None:
        schedule = doeblinSchedule(spec, k, nMax, probes)
        gaps, ell = [], k
        for cert in schedule:
            gaps.append(cert.nK - ell)
            ell = cert.nK
        spacing = max(gaps) if gaps else 1
    if spacing < 1:
        raise InputError("spacing must be >= 1")

    D = np.vstack([X[i] - X[j] for i, j in pairs])
    base = baseNormRows(space, D)
    rate = 1.0 - alpha / 2.0
    ratios = []
    rows = []
    for n, M in trajectory(spec, k, nMax):
        r = baseNormRows(space, D @ M.T) / base
        env = rate ** ((n - k) / spacing)
        ratios.append(r / env if env > 0 else np.where(r > 0, np.inf, 0.0))
        rows.append((n, float(r.max()), env))
    R = np.vstack(ratios)
    C = float(R.max()) if np.any(R > 0) else 0.0
    perPair = [float(c) for c in R.max(axis=0)]
    envelope = [(k, n, C * env, "envelope") for n, _, env in rows]
    return {
        "ok": bool(np.isfinite(C)),
        "C": C,
        "alpha": alpha,
        "spacing": spacing,
        "rate": rate,
        "per_pair_C": perPair,
        "median_ratio": float(np.median(R)) if C > 0 else 0.0,
        "trace": [[k, n, v, "pair_max"] for n, v, _ in rows] + [list(e) for e in envelope],
        "schedule": [c.nK for c in schedule],
    }


__all__ = [
    "VerdictThresholds",
    "DEFAULT_THRESHOLDS",
    "ErgodicityReport",
    "DoeblinCertificate",
    "mapOrdered",
    "classifyTrace",
    "combineVerdicts",
    "fitDecayRate",
    "defaultProbes",
    "probeCoords",
    "probePairs",
    "coversExtremePoints",
    "slackResidualRows",
    "fixedPoint",
    "uniformErgodicity",
    "weakErgodicity",
    "doeblinSchedule",
    "doeblinProductBound",
    "lWeakErgodicity",
    "lStrongErgodicity",
    "doeblinCheck",
    "doeblinSearch",
    "lStrongImpliesD2",
    "implicationConsistency",
    "decayBoundCheck",
]
