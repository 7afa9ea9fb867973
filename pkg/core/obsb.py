"""
Ordered Banach spaces with a base, in canonical coordinates.

A space is described by a `SpaceDescriptor` (cone family + parameters).
Every kind fixes the cone X₊, the strictly positive functional f and the
base K = {x ∈ X₊ : f(x) = 1}:

    Simplex         X₊ = nonnegative orthant              f = Σ x_i
    LorentzLp       X₊ = {(α, x) : ‖x‖_{p,w} ≤ α}          f = α
    GridFunction    X₊ = {x : |x_i − x_last| ≤ 2 x_last}   f = x_last
    SequenceLpCone  X₊ = {x : x₀ ≥ ‖x_{1:}‖_p}             f = x₀

The base norm of x is the smallest f(pos) + f(neg) over x = pos − neg with
pos, neg ∈ X₊. Every kind has a closed form for that minimum (used by
`method="auto"`); the LP and convex-program routes are kept as reference
solvers and are cross-checked against the closed forms in the test-suite.
"""

from dataclasses import dataclass
from typing import Any, Iterator, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from scipy.optimize import linprog

from . import settings
from .errors import DegenerateInputError, InputError, NumericError, PreconditionError, SpaceMismatchError
from .run_logger import logEvent

SpaceKind = Literal["Simplex", "LorentzLp", "GridFunction", "SequenceLpCone"]
POLYHEDRAL_KINDS = ("Simplex", "GridFunction")


class SpaceDescriptor(BaseModel):
    """Which OBSB vectors live in. Immutable and hashable."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SpaceKind
    dimension: int
    p: Optional[float] = None
    grid: Optional[tuple[float, ...]] = None
    quadrature_weights: Optional[tuple[float, ...]] = None

    @model_validator(mode="after")
    def checkKind(self) -> "SpaceDescriptor":
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind in ("LorentzLp", "SequenceLpCone"):
            if self.p is None or not np.isfinite(self.p) or self.p < 1:
                raise ValueError(f"{self.kind} needs a finite p >= 1")
        elif self.p is not None:
            raise ValueError(f"p is not used by {self.kind}")
        if self.kind == "GridFunction":
            if self.grid is None or len(self.grid) != self.dimension:
                raise ValueError("GridFunction needs a grid with one node per coordinate")
            nodes = np.asarray(self.grid, dtype=float)
            if np.any(nodes < 0) or nodes[-1] != 1.0:
                raise ValueError("grid nodes must lie in [0,1] and end exactly at 1")
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("grid must be strictly increasing")
        elif self.grid is not None:
            raise ValueError(f"grid is not used by {self.kind}")
        if self.quadrature_weights is not None:
            if self.kind != "LorentzLp":
                raise ValueError("quadrature weights only apply to LorentzLp")
            w = np.asarray(self.quadrature_weights, dtype=float)
            if len(w) != self.dimension - 1:
                raise ValueError("LorentzLp needs one quadrature weight per function coordinate")
            if np.any(w < 0):
                raise ValueError("quadrature weights must be nonnegative")
            if abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError("quadrature weights must sum to 1 (length of [0,1])")
        return self

    @property
    def polyhedral(self) -> bool:
        return self.kind in POLYHEDRAL_KINDS or (self.kind in ("LorentzLp", "SequenceLpCone") and self.p == 1)

    def describe(self) -> str:
        extra = f", p={self.p:g}" if self.p is not None else ""
        quad = ", quadrature" if self.quadrature_weights is not None else ""
        return f"{self.kind}(dim={self.dimension}{extra}{quad})"


def makeSpace(**fields: Any) -> SpaceDescriptor:
    """Build a SpaceDescriptor, turning validation failures into InputError."""
    try:
        return SpaceDescriptor(**fields)
    except ValidationError as e:
        raise InputError(f"Invalid space: {e.errors()[0].get('msg', str(e))}") from e


def simplexSpace(dimension: int) -> SpaceDescriptor:
    return makeSpace(kind="Simplex", dimension=dimension)


def gridSpace(nodes: Union[int, Sequence[float]]) -> SpaceDescriptor:
    """GridFunction space on `nodes` (an explicit node list, or a count of uniform nodes on [0,1])."""
    if isinstance(nodes, (int, np.integer)):
        if nodes < 1:
            raise InputError("grid size must be >= 1")
        grid = tuple(float(t) for t in np.linspace(0.0, 1.0, int(nodes))) if nodes > 1 else (1.0,)
    else:
        grid = tuple(float(t) for t in nodes)
    return makeSpace(kind="GridFunction", dimension=len(grid), grid=grid)


def lorentzSpace(p: float, weights: Optional[Sequence[float]] = None, dimension: Optional[int] = None) -> SpaceDescriptor:
    """ℝ ⊕ L_p space; with `weights` the function part is a quadrature discretization of L_p[0,1]."""
    if weights is not None:
        w = tuple(float(v) for v in weights)
        return makeSpace(kind="LorentzLp", dimension=1 + len(w), p=float(p), quadrature_weights=w)
    if dimension is None:
        raise InputError("lorentzSpace needs either quadrature weights or a dimension")
    return makeSpace(kind="LorentzLp", dimension=dimension, p=float(p))


def sequenceSpace(p: float, dimension: int) -> SpaceDescriptor:
    return makeSpace(kind="SequenceLpCone", dimension=dimension, p=float(p))


# ---------- vectors and decompositions ----------


@dataclass(frozen=True, eq=False)
class Vector:
    """Coordinates of one element of `space`. Arithmetic only within one space."""

    space: SpaceDescriptor
    coords: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float).reshape(-1)
        if arr.shape[0] != self.space.dimension:
            raise InputError(f"Vector has {arr.shape[0]} coordinates, space {self.space.describe()} needs {self.space.dimension}")
        if not np.all(np.isfinite(arr)):
            raise InputError("Vector coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def _other(self, other: "Vector") -> np.ndarray:
        if not isinstance(other, Vector):
            return NotImplemented
        if other.space != self.space:
            raise SpaceMismatchError(f"Cannot combine {self.space.describe()} with {other.space.describe()}")
        return other.coords

    def __add__(self, other: "Vector") -> "Vector":
        return Vector(self.space, self.coords + self._other(other))

    def __sub__(self, other: "Vector") -> "Vector":
        return Vector(self.space, self.coords - self._other(other))

    def __neg__(self) -> "Vector":
        return Vector(self.space, -self.coords)

    def __mul__(self, scalar: float) -> "Vector":
        return Vector(self.space, self.coords * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Vector":
        return Vector(self.space, self.coords / float(scalar))

    def allclose(self, other: "Vector", atol: float = 1e-9) -> bool:
        return bool(np.allclose(self.coords, self._other(other), rtol=0.0, atol=atol))

    def tolist(self) -> list[float]:
        return self.coords.tolist()


def vector(space: SpaceDescriptor, coords: Any) -> Vector:
    return Vector(space, np.asarray(coords, dtype=float))


def zeros(space: SpaceDescriptor) -> Vector:
    return Vector(space, np.zeros(space.dimension))


@dataclass(frozen=True, eq=False)
class ConeDecomposition:
    pos: Vector
    neg: Vector
    norm: float
    method: str = "auto"


def coordsOf(space: SpaceDescriptor, x: Union[Vector, np.ndarray, Sequence[float]]) -> np.ndarray:
    """Coordinates of `x` checked against `space` (dimension and, for Vectors, identity of space)."""
    if isinstance(x, Vector):
        if x.space != space:
            raise SpaceMismatchError(f"Vector lives in {x.space.describe()}, expected {space.describe()}")
        return x.coords
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != space.dimension:
        raise InputError(f"Expected {space.dimension} coordinates for {space.describe()}, got {arr.shape[0]}")
    return arr


def functionalWeights(space: SpaceDescriptor) -> np.ndarray:
    """Row vector φ with f(x) = φ·x."""
    d = space.dimension
    if space.kind == "Simplex":
        return np.ones(d)
    w = np.zeros(d)
    if space.kind == "GridFunction":
        w[-1] = 1.0
    else:
        w[0] = 1.0
    return w


def functional(space: SpaceDescriptor, x: Union[Vector, np.ndarray]) -> float:
    arr = coordsOf(space, x)
    if space.kind == "Simplex":
        return float(arr.sum())
    if space.kind == "GridFunction":
        return float(arr[-1])
    return float(arr[0])


def tailWeights(space: SpaceDescriptor) -> np.ndarray:
    if space.quadrature_weights is not None:
        return np.asarray(space.quadrature_weights, dtype=float)
    return np.ones(space.dimension - 1)


def tailNormRows(space: SpaceDescriptor, tails: np.ndarray) -> np.ndarray:
    """Weighted p-norms of the rows of `tails` (the function part of Lorentz/Sequence vectors)."""
    tails = np.atleast_2d(tails)
    if tails.shape[1] == 0:
        return np.zeros(tails.shape[0])
    w = tailWeights(space)
    p = float(space.p)
    a = np.abs(tails)
    if p == 1.0:
        return a @ w
    if p == 2.0:
        return np.sqrt((a * a) @ w)
    # scale by the row max so large p does not overflow
    m = a.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.power(np.power(a / safe[:, None], p) @ w, 1.0 / p)


def coneSlackRows(space: SpaceDescriptor, X: np.ndarray) -> np.ndarray:
    """Violation of the cone inequalities per row; <= 0 means inside X₊."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if space.kind == "Simplex":
        return np.max(-X, axis=1)
    if space.kind == "GridFunction":
        last = X[:, -1]
        if X.shape[1] == 1:
            return -last
        return np.maximum(np.max(np.abs(X[:, :-1] - last[:, None]), axis=1) - 2.0 * last, -last)
    return np.maximum(tailNormRows(space, X[:, 1:]) - X[:, 0], -X[:, 0])


def coneContains(space: SpaceDescriptor, x: Union[Vector, np.ndarray], tol: Optional[float] = None) -> bool:
    tol = settings.CONE_TOL if tol is None else tol
    if tol < 0:
        raise InputError("tol must be >= 0")
    return bool(coneSlackRows(space, coordsOf(space, x))[0] <= tol)


def baseContains(space: SpaceDescriptor, x: Union[Vector, np.ndarray], tol: Optional[float] = None) -> bool:
    """x ∈ K: in the cone (within tol) with f(x) = 1 within 1e-9."""
    return coneContains(space, x, tol) and abs(functional(space, x) - 1.0) <= 1e-9


def baseNormRows(space: SpaceDescriptor, X: np.ndarray) -> np.ndarray:
    """Closed-form base norms of every row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if space.kind == "Simplex":
        return np.abs(X).sum(axis=1)
    if space.kind == "GridFunction":
        last = np.abs(X[:, -1])
        if X.shape[1] == 1:
            return last
        spread = np.max(np.abs(X[:, :-1] - X[:, -1:]), axis=1) / 2.0
        return np.maximum(last, spread)
    return np.maximum(np.abs(X[:, 0]), tailNormRows(space, X[:, 1:]))


# ---------- minimal decomposition ----------


def closedFormParts(space: SpaceDescriptor, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if space.kind == "Simplex":
        return np.maximum(x, 0.0), np.maximum(-x, 0.0)

    if space.kind == "GridFunction":
        last = x[-1]
        norm = float(baseNormRows(space, x)[0])
        s = (norm + last) / 2.0
        t = (norm - last) / 2.0
        neg = np.empty_like(x)
        # neg_i is the lowest value keeping both parts inside the box [−s, 3s] × [−t, 3t]
        neg[:-1] = np.maximum(-t, -s - x[:-1])
        neg[-1] = t
        pos = x + neg
        pos[-1] = s
        return pos, neg

    alpha = x[0]
    tail = x[1:]
    r = float(tailNormRows(space, tail)[0]) if tail.size else 0.0
    if r <= abs(alpha):
        if alpha >= 0:
            return x.copy(), np.zeros_like(x)
        return np.zeros_like(x), -x
    beta = (r + alpha) / 2.0
    gamma = (r - alpha) / 2.0
    pos = np.concatenate(([beta], tail * (beta / r)))
    neg = np.concatenate(([gamma], -tail * (gamma / r)))
    return pos, neg


def _coneRowsLp(space: SpaceDescriptor, d: int, nAux: int, auxOffset: int) -> np.ndarray:
    """Inequalities G·[y, aux] ≤ 0 describing y ∈ X₊ for the polyhedral kinds."""
    nv = d + 2 * nAux
    rows: list[np.ndarray] = []
    if space.kind == "Simplex":
        for i in range(d):
            r = np.zeros(nv)
            r[i] = -1.0
            rows.append(r)
    elif space.kind == "GridFunction":
        L = d - 1
        for i in range(L):
            r = np.zeros(nv)
            r[i], r[L] = 1.0, -3.0
            rows.append(r)
            r = np.zeros(nv)
            r[i], r[L] = -1.0, -1.0
            rows.append(r)
        r = np.zeros(nv)
        r[L] = -1.0
        rows.append(r)
    else:
        w = tailWeights(space)
        for i in range(d - 1):
            r = np.zeros(nv)
            r[1 + i], r[auxOffset + i] = 1.0, -1.0
            rows.append(r)
            r = np.zeros(nv)
            r[1 + i], r[auxOffset + i] = -1.0, -1.0
            rows.append(r)
        r = np.zeros(nv)
        r[auxOffset:auxOffset + d - 1] = w
        r[0] = -1.0
        rows.append(r)
    return np.array(rows)


def lpOptions() -> dict[str, float]:
    """HiGHS feasibility tolerances from `SOLVER_TOL`."""
    return {"primal_feasibility_tolerance": settings.SOLVER_TOL, "dual_feasibility_tolerance": settings.SOLVER_TOL}


def convexOptions() -> dict[str, Any]:
    """Clarabel gap and feasibility tolerances from `SOLVER_TOL`."""
    tol = settings.SOLVER_TOL
    return {"solver": "CLARABEL", "tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol}


def _decomposeLp(space: SpaceDescriptor, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Minimize f(pos) subject to pos ∈ X₊ and pos − x ∈ X₊ with HiGHS.

    Only pos is a decision variable; neg is recovered as pos − x so the
    reconstruction is exact. Lorentz/Sequence cones at p = 1 get auxiliary
    absolute-value variables, one set for pos and one for neg.
    """
    d = space.dimension
    nAux = d - 1 if space.kind in ("LorentzLp", "SequenceLpCone") else 0
    nv = d + 2 * nAux
    fw = functionalWeights(space)

    gPos = _coneRowsLp(space, d, nAux, d)
    gNeg = _coneRowsLp(space, d, nAux, d + nAux)
    # neg = pos − x: G·[pos − x, aux'] ≤ 0  ⇔  G·[pos, aux'] ≤ G_pos·x
    shift = np.zeros(nv)
    shift[:d] = x
    bNeg = gNeg @ shift

    A_ub = np.vstack([gPos, gNeg])
    b_ub = np.concatenate([np.zeros(gPos.shape[0]), bNeg])
    c = np.concatenate([fw, np.zeros(2 * nAux)])
    bounds = [(None, None)] * d + [(0, None)] * (2 * nAux)

    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
        options=lpOptions(),
    )
    if res.status != 0 or res.x is None:
        logEvent("solver", {"route": "lp", "status": int(res.status), "message": str(res.message), "space": space.describe()})
        raise NumericError(f"LP decomposition failed: {res.message}", detail={"status": int(res.status)})
    pos = np.array(res.x[:d])
    return pos, pos - x


def _coneConstraintsCvx(space: SpaceDescriptor, v: Any) -> list:
    import cvxpy as cp

    if space.kind == "Simplex":
        return [v >= 0]
    if space.kind == "GridFunction":
        if space.dimension == 1:
            return [v[0] >= 0]
        return [cp.abs(v[:-1] - v[-1]) <= 2 * v[-1], v[-1] >= 0]
    if space.dimension == 1:
        return [v[0] >= 0]
    scale = np.power(tailWeights(space), 1.0 / float(space.p))
    tail = cp.multiply(scale, v[1:])
    if space.p == 2.0:
        return [cp.SOC(v[0], tail)]
    return [cp.pnorm(tail, float(space.p)) <= v[0]]


def _decomposeConvex(space: SpaceDescriptor, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    import cvxpy as cp

    d = space.dimension
    fw = functionalWeights(space)
    pos = cp.Variable(d)
    neg = cp.Variable(d)
    constraints = [pos - neg == x] + _coneConstraintsCvx(space, pos) + _coneConstraintsCvx(space, neg)
    prob = cp.Problem(cp.Minimize(fw @ pos + fw @ neg), constraints)
    try:
        prob.solve(**convexOptions())
    except cp.error.SolverError as e:
        logEvent("solver", {"route": "convex", "error": str(e)[:200], "space": space.describe()})
        raise NumericError(f"Convex decomposition failed: {e}") from e
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or pos.value is None:
        logEvent("solver", {"route": "convex", "status": str(prob.status), "space": space.describe()})
        raise NumericError(f"Convex decomposition failed with status {prob.status}", detail={"status": str(prob.status)})
    p = np.array(pos.value, dtype=float)
    return p, p - x


def resolveMethod(space: SpaceDescriptor, method: Optional[str]) -> str:
    method = (method or settings.NORM_METHOD).lower()
    if method not in settings.NORM_METHODS:
        raise InputError(f"Invalid method '{method}'. Allowed: {settings.NORM_METHODS}")
    if method == "lp" and not space.polyhedral:
        logEvent("solver", {"route": "lp", "fallback": "convex", "space": space.describe()})
        return "convex"
    return method


def jordanDecompose(space: SpaceDescriptor, x: Union[Vector, np.ndarray], method: Optional[str] = None) -> ConeDecomposition:
    """
    Minimal decomposition x = pos − neg with pos, neg ∈ X₊ and
    f(pos) + f(neg) equal to the base norm of x.

    Args:
        space: the OBSB.
        x: vector or raw coordinates.
        method: "auto" (closed forms), "lp" (HiGHS) or "convex" (cvxpy);
            defaults to OBSB_NORM_METHOD.

    Raises:
        NumericError: the LP/convex solver failed or returned parts outside X₊.
    """
    arr = coordsOf(space, x)
    route = resolveMethod(space, method)
    if not np.any(arr):
        z = zeros(space)
        return ConeDecomposition(z, z, 0.0, route)

    if route == "auto":
        pos, neg = closedFormParts(space, arr)
    elif route == "lp":
        pos, neg = _decomposeLp(space, arr)
    else:
        pos, neg = _decomposeConvex(space, arr)

    scale = 1.0 + float(np.max(np.abs(arr)))
    worst = float(max(coneSlackRows(space, pos)[0], coneSlackRows(space, neg)[0]))
    if route != "auto" and worst > settings.ACCEPT_SLACK * scale:
        raise NumericError("Solver returned parts outside the cone", residual=worst, detail={"route": route})
    fw = functionalWeights(space)
    norm = float(fw @ pos + fw @ neg)
    return ConeDecomposition(Vector(space, pos), Vector(space, neg), norm, route)


def baseNorm(space: SpaceDescriptor, x: Union[Vector, np.ndarray], method: Optional[str] = None) -> float:
    return jordanDecompose(space, x, method).norm


def splitBaseDifference(space: SpaceDescriptor, x: Union[Vector, np.ndarray], y: Union[Vector, np.ndarray],
                        method: Optional[str] = None) -> tuple[Vector, Vector]:
    """
    Base points u, v with x − y = (‖x − y‖/2)(u − v).

    Requires f(x) = f(y); built by normalizing the two parts of the minimal
    decomposition of x − y.
    """
    xa, ya = coordsOf(space, x), coordsOf(space, y)
    fx, fy = functional(space, xa), functional(space, ya)
    if abs(fx - fy) > 1e-9:
        raise PreconditionError(f"Split needs f(x) = f(y); got {fx!r} and {fy!r}")
    diff = xa - ya
    if not np.any(diff):
        raise DegenerateInputError("Split of x − y is undefined for x = y")
    dec = jordanDecompose(space, diff, method)
    fw = functionalWeights(space)
    fp, fn = float(fw @ dec.pos.coords), float(fw @ dec.neg.coords)
    if fp <= 0 or fn <= 0:
        raise DegenerateInputError("Difference is too small to split")
    return dec.pos / fp, dec.neg / fn


# ---------- extreme points, samplers, quadrature ----------


@dataclass(frozen=True, eq=False)
class ExtremePointSet:
    """Extreme points of K as rows of `points`; `complete` when none are missing."""

    space: SpaceDescriptor
    points: np.ndarray
    complete: bool

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self) -> Iterator[Vector]:
        for row in self.points:
            yield Vector(self.space, row)

    @property
    def mode(self) -> str:
        return "exact" if self.complete else "sampled"


def _gridVertices(d: int, rows: np.ndarray) -> np.ndarray:
    """Vertices selected by integer codes: bit i picks 3 (set) or −1 (clear) for node i."""
    bits = (rows[:, None] >> np.arange(d - 1, dtype=np.int64)[None, :]) & 1
    out = np.ones((rows.shape[0], d))
    out[:, :-1] = -1.0 + 4.0 * bits
    return out


def _sphereTails(space: SpaceDescriptor, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, space.dimension - 1))
    norms = tailNormRows(space, g)
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def baseExtremePoints(space: SpaceDescriptor, maxCount: int, seed: int = settings.SEED,
                      cap: int = settings.EXTREME_POINT_CAP) -> ExtremePointSet:
    if maxCount < 2:
        raise InputError("maxCount must be >= 2")
    d = space.dimension
    rng = np.random.default_rng(seed)

    if space.kind == "Simplex":
        if d <= maxCount:
            return ExtremePointSet(space, np.eye(d), True)
        idx = np.sort(rng.choice(d, size=maxCount, replace=False))
        return ExtremePointSet(space, np.eye(d)[idx], False)

    if space.kind == "GridFunction":
        if d == 1:
            return ExtremePointSet(space, np.ones((1, 1)), True)
        total = 2 ** (d - 1) if d - 1 < 62 else None
        if total is not None and total <= min(maxCount, cap):
            return ExtremePointSet(space, _gridVertices(d, np.arange(total, dtype=np.int64)), True)
        bits = rng.integers(0, 2, size=(maxCount, d - 1))
        pts = np.ones((maxCount, d))
        pts[:, :-1] = -1.0 + 4.0 * bits
        pts = np.unique(pts, axis=0)
        return ExtremePointSet(space, pts, False)

    if d == 1:
        return ExtremePointSet(space, np.ones((1, 1)), True)
    pts = np.ones((maxCount, d))
    pts[:, 1:] = _sphereTails(space, maxCount, rng)
    w = tailWeights(space)
    if space.p == 1 and np.all(w > 0) and 2 * (d - 1) <= maxCount:
        # weighted ℓ1 ball: the ±e_i/w_i are all of its vertices
        tails = np.vstack([np.diag(1.0 / w), -np.diag(1.0 / w)])
        pts = np.hstack([np.ones((tails.shape[0], 1)), tails])
        return ExtremePointSet(space, pts, True)
    return ExtremePointSet(space, pts, False)


def sampleBase(space: SpaceDescriptor, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` pseudo-random points of K as rows."""
    d = space.dimension
    if space.kind == "Simplex":
        return rng.dirichlet(np.ones(d), size=count)
    if space.kind == "GridFunction":
        out = np.ones((count, d))
        out[:, :-1] = rng.uniform(-1.0, 3.0, size=(count, d - 1))
        return out
    out = np.ones((count, d))
    if d > 1:
        radius = rng.uniform(0.0, 1.0, size=count)
        out[:, 1:] = _sphereTails(space, count, rng) * radius[:, None]
    return out


def baseCenter(space: SpaceDescriptor) -> np.ndarray:
    """A fixed interior-ish point of K."""
    if space.kind == "Simplex":
        return np.full(space.dimension, 1.0 / space.dimension)
    if space.kind == "GridFunction":
        return np.ones(space.dimension)
    c = np.zeros(space.dimension)
    c[0] = 1.0
    return c


def sampleNull(space: SpaceDescriptor, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random nonzero rows with f(x) = 0."""
    g = rng.standard_normal((count, space.dimension))
    fw = functionalWeights(space)
    return g - np.outer(g @ fw, baseCenter(space))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    name: str
    nodes: np.ndarray
    weights: np.ndarray


def midpointRule(n: int) -> QuadratureRule:
    if n < 1:
        raise InputError("quadrature size must be >= 1")
    nodes = (np.arange(n) + 0.5) / n
    return QuadratureRule("midpoint", nodes, np.full(n, 1.0 / n))


def gaussRule(n: int) -> QuadratureRule:
    """Gauss–Legendre nodes and weights mapped from [−1,1] to [0,1]."""
    if n < 1:
        raise InputError("quadrature size must be >= 1")
    x, w = np.polynomial.legendre.leggauss(n)
    weights = w / 2.0
    # renormalize so the weights sum to 1 to the last bit
    weights = weights / weights.sum()
    return QuadratureRule("gauss", (x + 1.0) / 2.0, weights)


def quadratureRule(name: str, n: int) -> QuadratureRule:
    if name == "midpoint":
        return midpointRule(n)
    if name == "gauss":
        return gaussRule(n)
    raise InputError(f"Invalid quadrature rule '{name}'. Allowed: {settings.QUADRATURE_RULES}")


def gridNormEquivalence(space: SpaceDescriptor, samples: int = 2000, seed: int = settings.SEED) -> dict[str, Any]:
    """
    Empirical constants c1, c2 with c1·max|x_i| ≤ ‖x‖ ≤ c2·max|x_i| on a GridFunction space.

    The closed form gives 1/3 ≤ ‖x‖/max|x_i| ≤ 1; the sampled extremes are logged per dimension.
    """
    if space.kind != "GridFunction":
        raise InputError("gridNormEquivalence needs a GridFunction space")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, space.dimension))
    # mix in the two shapes that attain the bounds
    X[0] = 0.0
    X[0, -1] = 1.0
    if space.dimension > 1:
        X[1] = 0.0
        X[1, 0], X[1, -1] = 3.0, 1.0
    ratios = baseNormRows(space, X) / np.max(np.abs(X), axis=1)
    out = {"dimension": space.dimension, "c1": float(ratios.min()), "c2": float(ratios.max()), "samples": samples}
    logEvent("grid_norm_equivalence", out)
    return out


__all__ = [
    "SpaceKind",
    "SpaceDescriptor",
    "Vector",
    "ConeDecomposition",
    "ExtremePointSet",
    "QuadratureRule",
    "makeSpace",
    "simplexSpace",
    "gridSpace",
    "lorentzSpace",
    "sequenceSpace",
    "vector",
    "zeros",
    "coordsOf",
    "functional",
    "functionalWeights",
    "coneContains",
    "baseContains",
    "coneSlackRows",
    "baseNormRows",
    "closedFormParts",
    "lpOptions",
    "convexOptions",
    "jordanDecompose",
    "baseNorm",
    "splitBaseDifference",
    "baseExtremePoints",
    "sampleBase",
    "sampleNull",
    "baseCenter",
    "midpointRule",
    "gaussRule",
    "quadratureRule",
    "gridNormEquivalence",
]
