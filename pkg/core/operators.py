"""
Linear operators on an OBSB and nonhomogeneous chains built from them.

Composite convention: composite(k, n) = T_{n−1} ⋯ T_k (n − k factors),
composite(k, k) = I. With it composite(k, n) = composite(m, n)·composite(k, m)
for k ≤ m ≤ n, and composite(k, k + N + 1) of the multiplication chain
carries the exponent Σ_{j=k}^{k+N} j.
"""

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Sequence, Union

import numpy as np

from . import settings
from .errors import InputError, PreconditionError, SpaceMismatchError
from .obsb import (
    SpaceDescriptor,
    Vector,
    baseContains,
    baseExtremePoints,
    baseNormRows,
    coneSlackRows,
    coordsOf,
    functionalWeights,
)


@dataclass(frozen=True, eq=False)
class MarkovOperator:
    """
    Linear map on `space` in canonical coordinates.

    Differences of Markov operators (T − S, T_y − T_z) use the same type;
    `isMarkov` says whether a given instance maps K into K.
    """

    space: SpaceDescriptor
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        d = self.space.dimension
        if m.shape != (d, d):
            raise InputError(f"Operator matrix must be {d}x{d}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InputError("Operator matrix must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "MarkovOperator") -> None:
        if other.space != self.space:
            raise SpaceMismatchError(f"Operators live in {self.space.describe()} and {other.space.describe()}")

    def __sub__(self, other: "MarkovOperator") -> "MarkovOperator":
        self._check(other)
        return MarkovOperator(self.space, self.matrix - other.matrix, f"({self.label} - {other.label})")

    def __add__(self, other: "MarkovOperator") -> "MarkovOperator":
        self._check(other)
        return MarkovOperator(self.space, self.matrix + other.matrix, f"({self.label} + {other.label})")

    def __mul__(self, scalar: float) -> "MarkovOperator":
        return MarkovOperator(self.space, self.matrix * float(scalar), f"{float(scalar):g}*{self.label}")

    __rmul__ = __mul__

    def __matmul__(self, other: "MarkovOperator") -> "MarkovOperator":
        return compose(self, other)

    def toDict(self) -> dict[str, Any]:
        return {"label": self.label, "space": self.space.model_dump(mode="json"), "matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class MarkovCertificate:
    mode: str                 # exact | sampled
    passed: bool
    worstViolation: float
    functionalViolation: float
    coneViolation: float
    checkedPoints: int

    def toDict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "pass": self.passed,
            "worst_violation": self.worstViolation,
            "functional_violation": self.functionalViolation,
            "cone_violation": self.coneViolation,
            "checked_points": self.checkedPoints,
        }


@dataclass(frozen=True)
class OperatorNorm:
    value: float
    mode: str                 # exact | sampled


def fromMatrix(space: SpaceDescriptor, matrix: Any, label: str = "") -> MarkovOperator:
    return MarkovOperator(space, np.asarray(matrix, dtype=float), label)


def identity(space: SpaceDescriptor, label: str = "I") -> MarkovOperator:
    return MarkovOperator(space, np.eye(space.dimension), label)


def apply(T: MarkovOperator, x: Union[Vector, np.ndarray]) -> Vector:
    return Vector(T.space, T.matrix @ coordsOf(T.space, x))


def compose(T: MarkovOperator, S: MarkovOperator) -> MarkovOperator:
    """T∘S (S acts first)."""
    T._check(S)
    return MarkovOperator(T.space, T.matrix @ S.matrix, f"{T.label}{S.label}")


def isMarkov(T: MarkovOperator, tol: Optional[float] = None,
             maxCount: int = settings.MARKOV_VERTEX_LIMIT, seed: int = settings.SEED) -> MarkovCertificate:
    """
    Check T*f = f on the canonical basis and T(K) ⊂ X₊ on the extreme points of K.

    The certificate is exact when the extreme-point list is complete (polyhedral
    spaces of moderate size), sampled otherwise.
    """
    tol = settings.CONE_TOL if tol is None else tol
    fw = functionalWeights(T.space)
    fViol = float(np.max(np.abs(fw @ T.matrix - fw)))
    pts = baseExtremePoints(T.space, max(maxCount, 2), seed=seed)
    images = pts.points @ T.matrix.T
    cViol = float(max(0.0, np.max(coneSlackRows(T.space, images))))
    worst = max(fViol, cViol)
    return MarkovCertificate(pts.mode, worst <= tol, worst, fViol, cViol, len(pts))


def rankOne(space: SpaceDescriptor, y: Union[Vector, np.ndarray], label: str = "T_y") -> MarkovOperator:
    """T_y(x) = f(x)·y."""
    ya = coordsOf(space, y)
    if not baseContains(space, ya):
        raise PreconditionError("rankOne needs y in the base K")
    return MarkovOperator(space, np.outer(ya, functionalWeights(space)), label)


def perturb(T: MarkovOperator, phi: Union[Vector, np.ndarray], eps: float) -> MarkovOperator:
    """(1 − ε/2)·T + (ε/2)·T_φ, a uniformly ergodic operator within ε of T."""
    if not (0.0 < eps < 2.0):
        raise PreconditionError(f"eps must lie in (0, 2), got {eps}")
    Tphi = rankOne(T.space, phi)
    m = (1.0 - eps / 2.0) * T.matrix + (eps / 2.0) * Tphi.matrix
    return MarkovOperator(T.space, m, f"{T.label}^({eps:g})")


def convexCombination(T: MarkovOperator, S: MarkovOperator, weight: float) -> MarkovOperator:
    if not (0.0 <= weight <= 1.0):
        raise InputError("weight must lie in [0, 1]")
    T._check(S)
    return MarkovOperator(T.space, weight * T.matrix + (1.0 - weight) * S.matrix, f"mix({T.label},{S.label})")


def operatorNorm(A: MarkovOperator, maxCount: int = settings.DELTA_VERTEX_LIMIT, seed: int = settings.SEED) -> OperatorNorm:
    """Induced base-norm operator norm: the unit ball is conv(K ∪ −K), so sup over extreme points of K."""
    pts = baseExtremePoints(A.space, max(maxCount, 2), seed=seed)
    images = pts.points @ A.matrix.T
    value = float(np.max(baseNormRows(A.space, images)))
    return OperatorNorm(value, "exact" if pts.complete else "sampled")


def matrixPower(T: MarkovOperator, n: int) -> MarkovOperator:
    if n < 0:
        raise InputError("power must be >= 0")
    return MarkovOperator(T.space, np.linalg.matrix_power(T.matrix, n), f"{T.label}^{n}")


# ---------- nonhomogeneous chains ----------


StepRule = Callable[[int], MarkovOperator]


@dataclass(eq=False)
class NdmcSpec:
    """
    A nonhomogeneous chain given by its one-step operators k ↦ T_k (k ≥ startIndex).

    Steps are cached; the cache is the only mutable state and is guarded by a lock,
    so specs can be shared between threads.
    """

    space: SpaceDescriptor
    stepRule: StepRule
    label: str = "chain"
    family: str = "custom"
    startIndex: int = 0
    flags: tuple[str, ...] = ()
    params: dict[str, Any] = field(default_factory=dict)
    _cache: dict[int, MarkovOperator] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @classmethod
    def homogeneous(cls, T: MarkovOperator, label: Optional[str] = None, family: str = "homogeneous") -> "NdmcSpec":
        return cls(T.space, lambda k: T, label or T.label or "T", family=family, flags=("homogeneous",))

    @classmethod
    def fromList(cls, ops: Sequence[MarkovOperator], cycling: str = "cycle", label: str = "list",
                 startIndex: int = 0) -> "NdmcSpec":
        """Explicit operators T_start, T_start+1, ...; past the end either cycle or hold the last one."""
        if not ops:
            raise InputError("fromList needs at least one operator")
        if cycling not in ("cycle", "hold"):
            raise InputError(f"Invalid cycling '{cycling}'. Allowed: ['cycle', 'hold']")
        space = ops[0].space
        for op in ops[1:]:
            ops[0]._check(op)
        ops = list(ops)

        def rule(k: int) -> MarkovOperator:
            j = k - startIndex
            return ops[j % len(ops)] if cycling == "cycle" else ops[min(j, len(ops) - 1)]

        return cls(space, rule, label, family="list", startIndex=startIndex)

    def step(self, k: int) -> MarkovOperator:
        if k < self.startIndex:
            raise InputError(f"Chain '{self.label}' starts at k={self.startIndex}, got k={k}")
        with self._lock:
            cached = self._cache.get(k)
        if cached is not None:
            return cached
        op = self.stepRule(k)
        if op.space != self.space:
            raise SpaceMismatchError(f"Step {k} of '{self.label}' lives in {op.space.describe()}")
        with self._lock:
            self._cache.setdefault(k, op)
        return op

    def isHomogeneous(self) -> bool:
        return "homogeneous" in self.flags

    def validate(self, ks: Sequence[int], tol: Optional[float] = None) -> dict[int, MarkovCertificate]:
        """isMarkov for each listed step."""
        return {k: isMarkov(self.step(k), tol) for k in ks}


def composite(spec: NdmcSpec, k: int, n: int) -> MarkovOperator:
    """T^{k,n} = T_{n−1} ⋯ T_k; identity for k = n."""
    if k > n:
        raise PreconditionError(f"composite needs k <= n, got k={k}, n={n}")
    m = np.eye(spec.space.dimension)
    for j in range(k, n):
        m = spec.step(j).matrix @ m
    return MarkovOperator(spec.space, m, f"T^{{{k},{n}}}")


def trajectory(spec: NdmcSpec, k: int, nMax: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (n, matrix of T^{k,n}) for n = k+1..nMax, one multiplication per step."""
    m = np.eye(spec.space.dimension)
    for n in range(k + 1, nMax + 1):
        m = spec.step(n - 1).matrix @ m
        yield n, m


__all__ = [
    "MarkovOperator",
    "MarkovCertificate",
    "OperatorNorm",
    "NdmcSpec",
    "fromMatrix",
    "identity",
    "apply",
    "compose",
    "isMarkov",
    "rankOne",
    "perturb",
    "convexCombination",
    "operatorNorm",
    "matrixPower",
    "composite",
    "trajectory",
]
