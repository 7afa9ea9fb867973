import numpy as np
import pytest

from chains.gallery import matrixGallery
from chains.kernel_chain import tabulatedKernelOperator
from core.dobrushin import (
    coefficientBattery,
    defaultNullMap,
    delta,
    deltaViaNullspace,
    opennessCheck,
    perturbationRadius,
)
from core.errors import InputError, PreconditionError
from core.obsb import baseCenter, gridSpace, lorentzSpace, simplexSpace
from core.operators import MarkovOperator, fromMatrix, identity, perturb, rankOne


def stochastic(rng, d, label="T"):
    return MarkovOperator(simplexSpace(d), rng.dirichlet(np.ones(d), size=d).T, label)


def test_two_state_delta():
    T = fromMatrix(simplexSpace(2), [[0.9, 0.2], [0.1, 0.8]])
    d = delta(T)
    assert d.exact
    assert d.value == pytest.approx(0.7, abs=1e-12)


def test_simplex_delta_is_half_max_column_distance(rng):
    for _ in range(20):
        T = stochastic(rng, int(rng.integers(2, 7)))
        M = T.matrix
        expected = 0.5 * max(np.abs(M[:, i] - M[:, j]).sum() for i in range(M.shape[1]) for j in range(M.shape[1]))
        assert delta(T).value == pytest.approx(expected, abs=1e-12)


def test_permutation_and_rank_one_extremes():
    assert delta(matrixGallery("permutation_cycle")).value == pytest.approx(1.0)
    assert delta(matrixGallery("rank_one_random")).value == pytest.approx(0.0, abs=1e-15)
    assert delta(identity(gridSpace(4))).value == pytest.approx(1.0)


def test_delta_witnesses_attain_value(rng):
    T = stochastic(rng, 4)
    d = delta(T)
    u, v = d.witnesses
    value = 0.5 * np.abs(T.matrix @ (u.coords - v.coords)).sum()
    assert value == pytest.approx(d.value, abs=1e-12)


def test_lorentz_delta_is_a_lower_bound_in_range(rng):
    space = lorentzSpace(2.0, dimension=4)
    T = perturb(identity(space), baseCenter(space), 0.5)
    d = delta(T, budget=400)
    assert d.mode == "lower_bound"
    # (1 − ε/2)·I on the null space
    assert 0.5 <= d.value <= 0.75 + 1e-9


def test_zero_kernel_has_zero_delta():
    T = tabulatedKernelOperator(2.0, np.zeros(8), np.zeros((8, 8)))
    assert delta(T, budget=200).value == pytest.approx(0.0, abs=1e-15)


def test_nullspace_estimate_agrees_with_exact(rng):
    for _ in range(20):
        T = stochastic(rng, int(rng.integers(2, 9)))
        assert deltaViaNullspace(T) == pytest.approx(delta(T).value, abs=1e-6)


def test_budget_must_be_positive(rng):
    with pytest.raises(InputError):
        delta(stochastic(rng, 3), budget=0)


def test_coefficient_battery_on_random_pairs():
    for s in range(500):
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, 9))
        res = coefficientBattery(stochastic(rng, d), stochastic(rng, d, "S"), seed=s)
        assert res["exact"]
        assert res["ok"], [c for c in res["checks"] if not c["ok"]]


def test_battery_checks_rank_one_operators(rng):
    space = simplexSpace(3)
    T = rankOne(space, np.array([0.2, 0.5, 0.3]))
    res = coefficientBattery(T, stochastic(rng, 3, "S"))
    names = [c["name"] for c in res["checks"]]
    assert "rank_one_zero_delta[T]" in names
    assert res["ok"]


def test_battery_rejects_maps_that_leak_the_functional(rng):
    T, S = stochastic(rng, 3), stochastic(rng, 3, "S")
    with pytest.raises(PreconditionError):
        coefficientBattery(T, S, H=identity(T.space))
    H = defaultNullMap(T.space)
    assert np.allclose(np.ones(3) @ H.matrix, 0.0)


def test_openness_radius_and_check():
    T = matrixGallery("lazy_permutation")
    r = perturbationRadius(T, 2)
    assert r == pytest.approx((1.0 - delta(T @ T).value) / 4.0)
    H = perturb(T, baseCenter(T.space), 0.1)
    res = opennessCheck(T, H, 2)
    assert res["ok"] and res["bound_holds"]


def test_radius_needs_contracting_power():
    with pytest.raises(PreconditionError):
        perturbationRadius(matrixGallery("permutation_cycle"), 3)
