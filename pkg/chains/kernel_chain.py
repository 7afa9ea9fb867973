"""
Kernel chain on ℝ ⊕ L_p[0,1], discretized by a quadrature rule.

    T_k(α, x) = (α, α g_k + ∫ H_k(s, ·) x(s) ds),
    H_k(s, t) = a_k t^{k/2} s^{k/2},   g_k(t) = b_k t^k.

In coordinates (α, x(t_1), …, x(t_m)) the operator matrix is
M[0,0] = 1, M[1+i, 0] = g_k(t_i), M[1+i, 1+j] = H_k(s_j, t_i)·w_j.

Validity is checked on the discrete quadrature values, so a built chain is
Markov on the discretized cone, not only approximately:

    Σ_i w_i (Σ_j w_j |H_k(s_j, t_i)|^q)^{p/q} ≤ 2^{−p}      (kernel part)
    Σ_i w_i |g_k(t_i)|^p ≤ 2^{−p}                           (‖g_k‖_p ≤ ½)

Both together give T_k x ≥ ½·(1, 2g_k) for every x ∈ K with zero slack.
"""

from typing import Any, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core import settings
from core.errors import ChainConstructionError, InputError
from core.obsb import QuadratureRule, SpaceDescriptor, Vector, lorentzSpace, quadratureRule
from core.operators import MarkovOperator, NdmcSpec
from core.run_logger import logEvent

from .config import KERNEL_CHECK_UNTIL, KERNEL_P, KERNEL_TOLERANCE


class CoefficientRule(BaseModel):
    """k ↦ coefficient: the analytic boundary value, a constant, or a table indexed from the chain start."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rule: Literal["boundary", "constant", "table"] = "boundary"
    scale: float = 1.0
    value: Optional[float] = None
    values: Optional[tuple[float, ...]] = None

    @model_validator(mode="after")
    def checkRule(self) -> "CoefficientRule":
        if self.rule == "constant" and self.value is None:
            raise ValueError("constant rule needs 'value'")
        if self.rule == "table" and not self.values:
            raise ValueError("table rule needs a non-empty 'values' list")
        if not np.isfinite(self.scale):
            raise ValueError("scale must be finite")
        return self

    def at(self, k: int, boundary: float, startIndex: int) -> float:
        if self.rule == "boundary":
            base = boundary
        elif self.rule == "constant":
            base = float(self.value)
        else:
            base = float(self.values[min(max(k - startIndex, 0), len(self.values) - 1)])
        return self.scale * base


class KernelChainParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    p: float = Field(KERNEL_P, gt=1.0)
    quadrature_size: int = Field(settings.QUADRATURE_SIZE, ge=1)
    rule: Literal["midpoint", "gauss"] = settings.QUADRATURE_RULE
    a_coeffs: CoefficientRule = CoefficientRule()
    b_coeffs: CoefficientRule = CoefficientRule()
    start_index: int = Field(1, ge=1)
    check_until: int = Field(KERNEL_CHECK_UNTIL, ge=1)
    # one k-independent operator: every step uses the coefficients of this index
    fixed_index: Optional[int] = Field(None, ge=1)
    tolerance: float = Field(KERNEL_TOLERANCE, ge=0.0)

    @model_validator(mode="after")
    def checkP(self) -> "KernelChainParams":
        if not np.isfinite(self.p):
            raise ValueError("p must be finite")
        return self

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)


def kernelParams(**fields: Any) -> KernelChainParams:
    try:
        return KernelChainParams(**fields)
    except ValidationError as e:
        raise InputError(f"Invalid kernel chain params: {e.errors()[0].get('msg', str(e))}") from e


def boundaryA(p: float, k: int) -> float:
    """Largest |a_k| with ∫(∫|H_k|^q ds)^{p/q} dt ≤ 2^{−p}; (k + 1)/2 at p = 2."""
    q = p / (p - 1.0)
    return 0.5 * (q * k / 2.0 + 1.0) ** (1.0 / q) * (p * k / 2.0 + 1.0) ** (1.0 / p)


def boundaryB(p: float, k: int) -> float:
    """Largest |b_k| with ‖b_k t^k‖_p ≤ ½; √(2k + 1)/2 at p = 2."""
    return (p * k + 1.0) ** (1.0 / p) / 2.0


def kernelRule(params: KernelChainParams) -> QuadratureRule:
    return quadratureRule(params.rule, params.quadrature_size)


def kernelSpace(params: KernelChainParams) -> SpaceDescriptor:
    return lorentzSpace(params.p, kernelRule(params).weights)


def coefficients(params: KernelChainParams, k: int) -> tuple[float, float]:
    a = params.a_coeffs.at(k, boundaryA(params.p, k), params.start_index)
    b = params.b_coeffs.at(k, boundaryB(params.p, k), params.start_index)
    return a, b


def kernelTables(params: KernelChainParams, k: int,
                 rule: Optional[QuadratureRule] = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(w, g, H) on the quadrature nodes, with H[i, j] = H_k(s_j, t_i)."""
    rule = rule or kernelRule(params)
    t = rule.nodes
    a, b = coefficients(params, k)
    g = b * t ** k
    half = t ** (k / 2.0)
    H = a * np.outer(half, half)
    return rule.weights, g, H


def kernelMarkovBound(g: np.ndarray, K: np.ndarray, weights: np.ndarray, p: float,
                      tol: float = 0.0) -> dict[str, Any]:
    """
    Quadrature values of the markovianity conditions for T(α, x) = (α, αg + ∫K(s, ·)x(s)ds).

    K[i, j] = K(s_j, t_i). Returns:
        markov_value: Σ_i w_i (|g_i| + (Σ_j w_j |K_ij|^q)^{1/q})^p; ≤ 1 certifies Markov.
        kernel_value: Σ_i w_i (Σ_j w_j |K_ij|^q)^{p/q}; with ‖g‖_p ≤ ½ and this ≤ 2^{−p}
            the split pair holds, which implies markov_value ≤ 1.
    """
    g = np.asarray(g, dtype=float)
    K = np.asarray(K, dtype=float)
    w = np.asarray(weights, dtype=float)
    if K.shape != (g.shape[0], g.shape[0]) or w.shape[0] != g.shape[0]:
        raise InputError("g, K and weights must agree on the number of quadrature nodes")
    if p <= 1:
        raise InputError("p must be > 1")
    q = p / (p - 1.0)
    inner = np.power(np.power(np.abs(K), q) @ w, 1.0 / q)
    markovValue = float(w @ np.power(np.abs(g) + inner, p))
    kernelValue = float(w @ np.power(inner, p))
    gNorm = float(np.power(w @ np.power(np.abs(g), p), 1.0 / p))
    half = 0.5 ** p
    return {
        "markov_value": markovValue,
        "kernel_value": kernelValue,
        "g_norm_p": gNorm,
        "kernel_bound": half,
        "certified": markovValue <= 1.0 + tol,
        "split_certified": gNorm <= 0.5 + tol and kernelValue <= half + tol,
    }


def kernelOperator(space: SpaceDescriptor, g: np.ndarray, K: np.ndarray, label: str = "T") -> MarkovOperator:
    w = np.asarray(space.quadrature_weights, dtype=float)
    m = w.shape[0]
    M = np.zeros((m + 1, m + 1))
    M[0, 0] = 1.0
    M[1:, 0] = g
    M[1:, 1:] = np.asarray(K, dtype=float) * w[None, :]
    return MarkovOperator(space, M, label)


def kernelBoundsTable(params: KernelChainParams, ks: Sequence[int]) -> list[dict[str, Any]]:
    """Coefficients, analytic bounds and quadrature condition values per k."""
    rule = kernelRule(params)
    rows = []
    for k in ks:
        w, g, H = kernelTables(params, k, rule)
        a, b = coefficients(params, k)
        vals = kernelMarkovBound(g, H, w, params.p, params.tolerance)
        rows.append({
            "k": int(k),
            "a": a,
            "b": b,
            "a_bound": boundaryA(params.p, k),
            "b_bound": boundaryB(params.p, k),
            **vals,
        })
    return rows


def violatedIndices(params: KernelChainParams, ks: Sequence[int]) -> list[int]:
    """Indices whose discrete kernel or g condition exceeds 2^{−p} by more than the tolerance."""
    return [r["k"] for r in kernelBoundsTable(params, ks) if not r["split_certified"]]


def kernelDoeblinTarget(params: KernelChainParams, k: int) -> Vector:
    """z_k = (1, 2g_k), in K whenever ‖g_k‖_p ≤ ½."""
    _, g, _ = kernelTables(params, k)
    return Vector(kernelSpace(params), np.concatenate(([1.0], 2.0 * g)))


def buildKernelChain(params: KernelChainParams) -> NdmcSpec:
    """
    Validate k = start_index..check_until (or the fixed index) and build the chain.

    Steps past check_until are validated when first requested.

    Raises:
        ChainConstructionError: some checked index violates the discrete conditions;
            `violated` lists every such k.
    """
    space = kernelSpace(params)
    rule = kernelRule(params)
    if params.fixed_index is not None:
        checked = [params.fixed_index]
    else:
        checked = list(range(params.start_index, max(params.start_index, params.check_until) + 1))
    bad = violatedIndices(params, checked)
    if bad:
        logEvent("chain_rejected", {"family": "kernel_lorentz", "violated": bad, "p": params.p})
        raise ChainConstructionError(f"Kernel coefficients violate the Markov/Doeblin bounds at k = {bad}", bad)
    validated = set(checked)

    def step(k: int) -> MarkovOperator:
        kk = params.fixed_index if params.fixed_index is not None else k
        if kk not in validated:
            late = violatedIndices(params, [kk])
            if late:
                raise ChainConstructionError(f"Kernel coefficients violate the Markov/Doeblin bounds at k = {late}", late)
            validated.add(kk)
        w, g, H = kernelTables(params, kk, rule)
        return kernelOperator(space, g, H, f"T_{kk}")

    return NdmcSpec(
        space,
        step,
        label=f"kernel_lorentz[p={params.p:g}, m={params.quadrature_size}]",
        family="kernel_lorentz",
        startIndex=params.start_index,
        flags=("homogeneous",) if params.fixed_index is not None else (),
        params=params.model_dump(mode="json"),
    )


def tabulatedKernelOperator(p: float, g: Sequence[float], K: Sequence[Sequence[float]],
                            rule: str = "midpoint", tol: float = KERNEL_TOLERANCE) -> MarkovOperator:
    """
    Single operator from user-tabulated g(t_i) and K(s_j, t_i) on the nodes of `rule`.

    Raises:
        ChainConstructionError: the discrete markovianity value exceeds 1.
    """
    ga = np.asarray(g, dtype=float)
    Ka = np.asarray(K, dtype=float)
    quad = quadratureRule(rule, ga.shape[0])
    vals = kernelMarkovBound(ga, Ka, quad.weights, p, tol)
    if not vals["certified"]:
        raise ChainConstructionError(f"Tabulated kernel is not Markov (condition value {vals['markov_value']:.6g} > 1)")
    return kernelOperator(lorentzSpace(p, quad.weights), ga, Ka, "T_tab")


__all__ = [
    "CoefficientRule",
    "KernelChainParams",
    "kernelParams",
    "boundaryA",
    "boundaryB",
    "kernelRule",
    "kernelSpace",
    "coefficients",
    "kernelTables",
    "kernelMarkovBound",
    "kernelOperator",
    "kernelBoundsTable",
    "violatedIndices",
    "kernelDoeblinTarget",
    "buildKernelChain",
    "tabulatedKernelOperator",
]
