import numpy as np
import pytest

from chains.grid_chain import buildGridChain, gridExponent, gridParams
from core.dobrushin import delta
from core.errors import InputError, PreconditionError, SpaceMismatchError
from core.obsb import gridSpace, lorentzSpace, sampleBase, simplexSpace
from core.operators import (
    MarkovOperator,
    NdmcSpec,
    apply,
    compose,
    composite,
    convexCombination,
    fromMatrix,
    identity,
    isMarkov,
    matrixPower,
    operatorNorm,
    perturb,
    rankOne,
    trajectory,
)


def stochastic(rng, d):
    return MarkovOperator(simplexSpace(d), rng.dirichlet(np.ones(d), size=d).T, "T")


def test_stochastic_matrix_is_markov(rng):
    cert = isMarkov(stochastic(rng, 4))
    assert cert.passed and cert.mode == "exact"
    assert cert.worstViolation <= 1e-12


def test_non_markov_matrices_fail():
    space = simplexSpace(2)
    leaky = isMarkov(fromMatrix(space, [[0.5, 0.5], [0.4, 0.5]]))
    assert not leaky.passed and leaky.functionalViolation == pytest.approx(0.1)
    negative = isMarkov(fromMatrix(space, [[1.2, 0.0], [-0.2, 1.0]]))
    assert not negative.passed and negative.coneViolation == pytest.approx(0.2)


def test_operator_shape_is_checked():
    with pytest.raises(InputError):
        fromMatrix(simplexSpace(3), np.eye(2))


def test_rank_one(rng):
    space = simplexSpace(3)
    y = np.array([0.2, 0.3, 0.5])
    Ty = rankOne(space, y)
    x = np.array([1.0, 2.0, -0.5])
    np.testing.assert_allclose(apply(Ty, x).coords, 2.5 * y)
    assert delta(Ty).value == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(PreconditionError):
        rankOne(space, np.array([0.5, 0.6, -0.1]))


def test_compose_and_space_mismatch(rng):
    T, S = stochastic(rng, 3), stochastic(rng, 3)
    np.testing.assert_allclose(compose(T, S).matrix, T.matrix @ S.matrix)
    np.testing.assert_allclose((T @ S).matrix, T.matrix @ S.matrix)
    with pytest.raises(SpaceMismatchError):
        compose(T, identity(gridSpace(3)))


def test_composite_is_half_open_and_satisfies_chain_law(rng):
    ops = [stochastic(rng, 4) for _ in range(5)]
    spec = NdmcSpec.fromList(ops)
    np.testing.assert_array_equal(composite(spec, 2, 2).matrix, np.eye(4))
    np.testing.assert_allclose(composite(spec, 1, 2).matrix, ops[1].matrix)
    for m, k, n in [(0, 2, 5), (1, 3, 4), (0, 0, 3)]:
        np.testing.assert_allclose(
            composite(spec, m, n).matrix,
            composite(spec, k, n).matrix @ composite(spec, m, k).matrix,
            atol=1e-14,
        )
    with pytest.raises(PreconditionError) as err:
        composite(spec, 3, 2)
    assert isinstance(err.value, ValueError) and not isinstance(err.value, InputError)


def test_trajectory_matches_composite(rng):
    spec = NdmcSpec.fromList([stochastic(rng, 3) for _ in range(3)], cycling="hold")
    for n, M in trajectory(spec, 1, 6):
        np.testing.assert_allclose(M, composite(spec, 1, n).matrix, atol=1e-14)


def test_chain_steps_start_at_start_index(rng):
    spec = NdmcSpec.fromList([stochastic(rng, 3)], startIndex=2)
    with pytest.raises(InputError):
        spec.step(1)
    assert spec.step(7) is spec.step(2)
    with pytest.raises(InputError):
        NdmcSpec.fromList([stochastic(rng, 3)], cycling="bounce")


def test_grid_composite_exponent():
    spec = buildGridChain(gridParams(grid_size=9, start_index=1))
    t = np.asarray(spec.space.grid)
    for k in range(1, 11):
        for N in range(0, 11):
            diag = np.diag(composite(spec, k, k + N + 1).matrix)
            np.testing.assert_allclose(diag, t ** gridExponent(k, N), rtol=1e-12, atol=0.0)
    # composite(1, 4) multiplies by t^6
    assert gridExponent(1, 2) == 6


def test_grid_steps_are_markov():
    spec = buildGridChain(gridParams(grid_size=9))
    for k in range(1, 11):
        T = spec.step(k)
        assert T.matrix[-1, -1] == 1.0
        cert = isMarkov(T)
        assert cert.passed and cert.mode == "exact"


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
def test_perturbation_is_uniformly_ergodic_and_close(eps, rng):
    for _ in range(100):
        T = stochastic(rng, int(rng.integers(2, 6)))
        phi = sampleBase(T.space, 1, rng)[0]
        Te = perturb(T, phi, eps)
        d = delta(Te)
        assert d.exact
        assert d.value <= 1.0 - eps / 2.0 + 1e-9
        assert operatorNorm(T - Te).value < eps


def test_perturb_rejects_eps_out_of_range(rng):
    T = stochastic(rng, 3)
    with pytest.raises(PreconditionError):
        perturb(T, np.full(3, 1.0 / 3.0), 2.0)


def test_operator_norm_and_powers(rng):
    T = stochastic(rng, 3)
    assert operatorNorm(T - T).value == 0.0
    # a Markov operator has norm 1
    assert operatorNorm(T).value == pytest.approx(1.0)
    np.testing.assert_allclose(matrixPower(T, 3).matrix, T.matrix @ T.matrix @ T.matrix)
    with pytest.raises(InputError):
        matrixPower(T, -1)


def test_convex_combination_stays_markov(rng):
    T, S = stochastic(rng, 4), stochastic(rng, 4)
    assert isMarkov(convexCombination(T, S, 0.3)).passed
    with pytest.raises(InputError):
        convexCombination(T, S, 1.5)


def test_lorentz_markov_check_is_sampled():
    space = lorentzSpace(2.0, dimension=3)
    cert = isMarkov(identity(space))
    assert cert.passed and cert.mode == "sampled"
