import math

import numpy as np
import pytest

from chains.kernel_chain import (
    boundaryA,
    boundaryB,
    buildKernelChain,
    kernelBoundsTable,
    kernelDoeblinTarget,
    kernelMarkovBound,
    kernelParams,
    kernelRule,
    kernelTables,
    tabulatedKernelOperator,
    violatedIndices,
)
from core.dobrushin import delta
from core.errors import ChainConstructionError, InputError
from core.ergodicity import decayBoundCheck, defaultProbes, doeblinCheck, lWeakErgodicity
from core.obsb import baseContains


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_boundary_coefficients_at_p2(k):
    assert boundaryA(2.0, k) == pytest.approx((k + 1) / 2.0)
    assert boundaryB(2.0, k) == pytest.approx(math.sqrt(2 * k + 1) / 2.0)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_gauss_rule_hits_the_bounds_exactly(k):
    params = kernelParams(p=2.0, rule="gauss", quadrature_size=8)
    row = kernelBoundsTable(params, [k])[0]
    assert row["kernel_value"] == pytest.approx(0.25, abs=1e-12)
    assert row["g_norm_p"] == pytest.approx(0.5, abs=1e-12)
    assert row["split_certified"]


def test_midpoint_rule_is_exact_for_first_index():
    params = kernelParams(p=2.0, rule="midpoint", quadrature_size=64)
    rows = kernelBoundsTable(params, [1, 2, 3])
    assert rows[0]["kernel_value"] == pytest.approx(0.25, abs=1e-14)
    # midpoint underestimates integrals of convex powers
    assert all(r["kernel_value"] < 0.25 for r in rows[1:])
    assert all(r["g_norm_p"] < 0.5 for r in rows)
    assert violatedIndices(params, range(1, 51)) == []


def test_midpoint_refinement_converges_quadratically():
    gaps = []
    for m in (16, 32, 64):
        params = kernelParams(p=2.0, rule="midpoint", quadrature_size=m)
        gaps.append(0.25 - kernelBoundsTable(params, [2])[0]["kernel_value"])
    assert gaps[1] <= gaps[0] / 3.0
    assert gaps[2] <= gaps[1] / 3.0


@pytest.mark.parametrize("a_coeffs", [
    {"rule": "boundary", "scale": 1.05},
    {"rule": "constant", "value": 1.1},
])
def test_oversized_coefficients_are_rejected(a_coeffs):
    params = kernelParams(p=2.0, quadrature_size=32, a_coeffs=a_coeffs, check_until=5)
    with pytest.raises(ChainConstructionError) as exc:
        buildKernelChain(params)
    assert 1 in exc.value.violated


def test_late_indices_are_validated_on_demand():
    params = kernelParams(
        p=2.0,
        quadrature_size=32,
        a_coeffs={"rule": "table", "values": [1.0, 1.5, 2.0, 2.5, 10.0]},
        check_until=3,
    )
    spec = buildKernelChain(params)
    spec.step(4)
    with pytest.raises(ChainConstructionError) as exc:
        spec.step(5)
    assert exc.value.violated == [5]


def test_invalid_params():
    with pytest.raises(InputError):
        kernelParams(p=1.0)
    with pytest.raises(InputError):
        kernelParams(a_coeffs={"rule": "constant"})
    with pytest.raises(InputError):
        kernelParams(rule="simpson")


def test_zero_kernel_is_rank_one():
    w = kernelRule(kernelParams(quadrature_size=8)).weights
    vals = kernelMarkovBound(np.zeros(8), np.zeros((8, 8)), w, 2.0)
    assert vals["markov_value"] == 0.0 and vals["certified"]
    T = tabulatedKernelOperator(2.0, np.zeros(8), np.zeros((8, 8)))
    assert delta(T, budget=100).value == pytest.approx(0.0, abs=1e-15)


def test_doubled_kernel_breaks_the_split_bound():
    params = kernelParams(p=2.0, rule="gauss", quadrature_size=8)
    w, g, H = kernelTables(params, 1)
    vals = kernelMarkovBound(np.zeros_like(g), 2.0 * H, w, 2.0)
    assert vals["kernel_value"] == pytest.approx(1.0, abs=1e-12)
    assert not vals["split_certified"]
    with pytest.raises(ChainConstructionError):
        tabulatedKernelOperator(2.0, np.zeros(8), np.full((8, 8), 3.0))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_one_step_doeblin_certificate(k):
    params = kernelParams(p=2.0, rule="midpoint", quadrature_size=64)
    spec = buildKernelChain(params)
    z = kernelDoeblinTarget(params, k)
    assert baseContains(spec.space, z)
    probes = defaultProbes(spec.space, count=50)
    cert = doeblinCheck(spec, "D", k, z, 0.5, probes, nK=k + 1)
    assert cert.passed and cert.mode == "sampled"
    assert max(r for _, r in cert.residuals) <= 1e-12


def test_fixed_index_gives_homogeneous_chain():
    spec = buildKernelChain(kernelParams(quadrature_size=16, fixed_index=2))
    assert "homogeneous" in spec.flags
    np.testing.assert_array_equal(spec.step(1).matrix, spec.step(9).matrix)


def test_decay_bound_is_finite():
    spec = buildKernelChain(kernelParams(quadrature_size=32))
    res = decayBoundCheck(spec, 1, 0.5, None, 100)
    assert res["ok"] and math.isfinite(res["C"])


def test_kernel_chain_is_l_weak_ergodic():
    spec = buildKernelChain(kernelParams(quadrature_size=32))
    rep = lWeakErgodicity(spec, [1, 2, 3], None, 60)
    assert rep.verdicts["l_weak"] == "pass"


def test_decay_envelope_with_three_quarter_base():
    # zero Doeblin slack with λ = ½ makes every step contract by 3/4
    spec = buildKernelChain(kernelParams(quadrature_size=32))
    res = decayBoundCheck(spec, 1, 0.5, None, 60, spacing=1)
    assert res["rate"] == 0.75 and res["spacing"] == 1
    assert 0.0 <= res["C"] <= 1.0 + 1e-9
    pairMax = {n: v for _, n, v, s in res["trace"] if s == "pair_max"}
    for _, n, v, s in res["trace"]:
        if s == "envelope":
            assert pairMax[n] <= v + 1e-12
