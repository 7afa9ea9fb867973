"""
Multiplication chain (T_k x)(t) = t^k x(t) on the GridFunction space.

On a fixed grid the chain is diagonal, so composite(k, k + N + 1) is the
diagonal of t^M with M = Σ_{j=k}^{k+N} j = (2k + N)(N + 1)/2.
"""

from typing import Any, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core import settings
from core.errors import InputError, PreconditionError
from core.obsb import SpaceDescriptor, Vector, baseContains, baseNormRows, coordsOf, gridSpace
from core.operators import MarkovOperator, NdmcSpec, trajectory
from core.run_logger import logEvent

from .config import GRID_CONSTANT_C, GRID_SIZE


class GridChainParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid_size: int = Field(GRID_SIZE, ge=2)
    start_index: int = Field(1, ge=1)
    constant_c: float = Field(GRID_CONSTANT_C, gt=0.0, lt=0.5)


def gridParams(**fields: Any) -> GridChainParams:
    try:
        return GridChainParams(**fields)
    except ValidationError as e:
        raise InputError(f"Invalid grid chain params: {e.errors()[0].get('msg', str(e))}") from e


def gridExponent(k: int, N: int) -> int:
    """Exponent carried by composite(k, k + N + 1)."""
    if k < 0 or N < 0:
        raise InputError("k and N must be >= 0")
    return (2 * k + N) * (N + 1) // 2


def buildGridChain(params: GridChainParams) -> NdmcSpec:
    space = gridSpace(params.grid_size)
    t = np.asarray(space.grid, dtype=float)

    def rule(k: int) -> MarkovOperator:
        return MarkovOperator(space, np.diag(t ** k), f"T_{k}")

    return NdmcSpec(
        space,
        rule,
        label=f"grid_multiplication[{params.grid_size}]",
        family="grid_multiplication",
        startIndex=params.start_index,
        flags=("discretization-sensitive",),
        params=params.model_dump(),
    )


def gridDoeblinTarget(space: SpaceDescriptor) -> Vector:
    """z = 𝟙 ∈ K; with λ = c, λz is the constant element c."""
    return Vector(space, np.ones(space.dimension))


def checkGridDoeblin(params: GridChainParams, k: int, N: int, x: Union[Vector, np.ndarray],
                     y: Union[Vector, np.ndarray]) -> bool:
    """
    max_t |t^M x(t) − 1| ≤ 2(1 − c) and the same for y, with M = gridExponent(k, N).

    Equivalent to composite(k, k + N + 1)x − c·𝟙 ∈ X₊: the D1 certificate with
    λ = 1, z = c and zero slack.
    """
    space = gridSpace(params.grid_size)
    if k < params.start_index:
        raise InputError(f"k must be >= start_index={params.start_index}")
    xa, ya = coordsOf(space, x), coordsOf(space, y)
    for name, v in (("x", xa), ("y", ya)):
        if not baseContains(space, v):
            raise PreconditionError(f"{name} must lie in the base K")
    tM = np.asarray(space.grid, dtype=float) ** gridExponent(k, N)
    bound = 2.0 * (1.0 - params.constant_c)
    return bool(np.max(np.abs(tM * xa - 1.0)) <= bound and np.max(np.abs(tM * ya - 1.0)) <= bound)


def findDoeblinHorizon(params: GridChainParams, k: int, x: Union[Vector, np.ndarray], y: Union[Vector, np.ndarray],
                       maxN: int = 1000) -> Optional[int]:
    """Smallest N ≤ maxN passing checkGridDoeblin, or None."""
    for N in range(maxN + 1):
        if checkGridDoeblin(params, k, N, x, y):
            return N
    return None


def _extremePair(space: SpaceDescriptor) -> tuple[np.ndarray, np.ndarray]:
    hi = np.full(space.dimension, 3.0)
    lo = np.full(space.dimension, -1.0)
    hi[-1] = lo[-1] = 1.0
    return hi, lo


def gridConvergenceSweep(sizes: Sequence[int], k: int = 1, horizon: int = 400,
                         threshold: float = settings.PASS_THRESHOLD,
                         constant_c: float = GRID_CONSTANT_C) -> dict[str, Any]:
    """
    Convergence horizon per grid size for the pair of opposite vertices (3, …, 3, 1) and (−1, …, −1, 1).

    The horizon is the first n with ‖T^{k,n}(x − y)‖ ≤ threshold (None if not
    reached by `horizon`). It grows with the number of nodes since the node
    nearest to 1 decays slowest; `monotone` reports whether that holds.
    """
    if not sizes:
        raise InputError("sizes must not be empty")
    rows = []
    for size in sizes:
        spec = buildGridChain(gridParams(grid_size=int(size), start_index=k, constant_c=constant_c))
        hi, lo = _extremePair(spec.space)
        diff = hi - lo
        reached = None
        last = float(baseNormRows(spec.space, diff)[0])
        for n, M in trajectory(spec, k, horizon):
            last = float(baseNormRows(spec.space, M @ diff)[0])
            if last <= threshold:
                reached = n
                break
        rows.append({"grid_size": int(size), "horizon": reached, "last_norm": last})
    found = [r["horizon"] for r in rows]
    monotone = all(h is not None for h in found) and all(a <= b for a, b in zip(found, found[1:]))
    out = {"k": k, "threshold": threshold, "rows": rows, "monotone": monotone}
    logEvent("grid_sweep", {"k": k, "horizons": found, "monotone": monotone})
    return out


__all__ = [
    "GridChainParams",
    "gridParams",
    "gridExponent",
    "buildGridChain",
    "gridDoeblinTarget",
    "checkGridDoeblin",
    "findDoeblinHorizon",
    "gridConvergenceSweep",
]
