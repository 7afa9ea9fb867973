import dataclasses
import math

import numpy as np
import pytest

from chains.config import GALLERY_NAMES
from chains.gallery import galleryChain, matrixGallery
import core.ergodicity as ergodicity
from core.dobrushin import delta
from core.errors import InputError, PreconditionError
from core.ergodicity import (
    ErgodicityReport,
    classifyTrace,
    combineVerdicts,
    decayBoundCheck,
    defaultProbes,
    doeblinCheck,
    doeblinSearch,
    fitDecayRate,
    fixedPoint,
    implicationConsistency,
    lStrongErgodicity,
    lStrongImpliesD2,
    lWeakErgodicity,
    probeCoords,
    probePairs,
    uniformErgodicity,
    weakErgodicity,
)
from core.obsb import simplexSpace
from core.operators import NdmcSpec, fromMatrix


def twoState():
    return fromMatrix(simplexSpace(2), [[0.9, 0.2], [0.1, 0.8]], "two_state")


def test_uniform_on_two_state_chain():
    rep = uniformErgodicity(twoState(), nMax=40)
    assert rep.verdicts["uniform"] == "pass"
    det = rep.details["uniform"]
    assert det["n0"] == 1 and det["rho"] == pytest.approx(0.7)
    assert det["bound_holds"]
    assert all(c["holds"] for c in rep.boundChecks)
    assert det["alpha"] == pytest.approx(-math.log(0.7), rel=0.05)
    np.testing.assert_allclose(det["y0"], [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)


def test_uniform_fails_on_permutation():
    rep = uniformErgodicity(matrixGallery("permutation_cycle"), nMax=20)
    assert rep.verdicts["uniform"] == "fail"
    assert rep.details["uniform"]["n0"] is None


def test_uniform_on_rank_one_has_zero_tail():
    rep = uniformErgodicity(matrixGallery("rank_one_random"), nMax=10)
    assert rep.verdicts["uniform"] == "pass"


def test_uniform_needs_two_steps():
    with pytest.raises(InputError):
        uniformErgodicity(twoState(), nMax=1)


@pytest.mark.parametrize("name", GALLERY_NAMES)
def test_doeblin_search_agrees_with_weak_ergodicity(name):
    spec = galleryChain(name)
    k = spec.startIndex
    weak = weakErgodicity(spec, [k], nMax=60)
    cert = doeblinSearch(spec, k, 200, defaultProbes(spec.space))
    assert (weak.verdicts["weak"] == "pass") == cert.passed
    assert "bound_violation" not in weak.flags
    if name == "permutation_cycle":
        assert weak.verdicts["weak"] == "fail" and not cert.passed


@pytest.mark.parametrize("name", GALLERY_NAMES)
def test_implication_chain_holds_on_gallery(name):
    res = implicationConsistency(galleryChain(name), horizon=100)
    assert res["ok"], res["violations"]


def test_homogeneous_contraction_has_constant_gamma():
    T = twoState()
    res = implicationConsistency(NdmcSpec.homogeneous(T, "two_state"), horizon=60, ks=[0, 1, 2])
    assert res["ok"], res["violations"]
    stages = res["stages"]
    steps = {stages[str(k)]["n_k"] - k for k in (0, 1, 2)}
    assert len(steps) == 1
    n0 = steps.pop()
    expected = delta(fromMatrix(T.space, np.linalg.matrix_power(T.matrix, n0)))
    assert expected.exact and expected.value == pytest.approx(0.7 ** n0)
    assert len(res["gamma_trace"]) == 3
    for k, gamma in res["gamma_trace"]:
        assert gamma == pytest.approx(expected.value, abs=1e-12)
        assert gamma <= stages[str(k)]["mu"]


def test_contraction_stage_flags_an_overstated_certificate(monkeypatch):
    real = ergodicity.doeblinSearch

    def overstated(spec, k, horizon, probes):
        return dataclasses.replace(real(spec, k, horizon, probes), lambdaK=2.0)

    monkeypatch.setattr(ergodicity, "doeblinSearch", overstated)
    res = implicationConsistency(NdmcSpec.homogeneous(twoState(), "two_state"), horizon=60, ks=[0])
    assert not res["ok"]
    assert "D1 => contraction" in [v["rule"] for v in res["violations"]]
    assert res["stages"]["0"]["contraction"] == "fail"


def test_doeblin_search_certificate_is_exact_on_simplex():
    spec = galleryChain("lazy_permutation")
    cert = doeblinSearch(spec, 0, 50, defaultProbes(spec.space))
    assert cert.passed and cert.mode == "exact"
    assert cert.nK > 0 and cert.lambdaK == 1.0 and cert.muK == 0.5
    assert all(r <= 0.25 + 1e-12 for _, r in cert.residuals)


def test_d2_on_rank_one_chain():
    T = matrixGallery("rank_one_random")
    spec = NdmcSpec.homogeneous(T, "rank_one_random")
    y = T.matrix[:, 0]
    cert = doeblinCheck(spec, "D2", 0, y, 1.0, defaultProbes(spec.space), horizon=20)
    assert cert.passed
    assert cert.residualTrace[-1][1] == pytest.approx(0.0, abs=1e-15)


def test_d2_from_l_strong_limit():
    spec = galleryChain("lazy_permutation")
    out = lStrongImpliesD2(spec, None, 100)
    assert out["verdict"] == "pass" and out["l_strong"] == "pass"
    assert out["dominated"]


def test_doeblin_check_rejects_bad_certificates():
    spec = galleryChain("random_stochastic")
    probes = defaultProbes(spec.space)
    z = np.full(3, 1.0 / 3.0)
    with pytest.raises(PreconditionError):
        doeblinCheck(spec, "D", 0, np.array([1.2, -0.2, 0.0]), 1.0, probes, nK=2)
    with pytest.raises(PreconditionError):
        doeblinCheck(spec, "D", 0, z, 0.0, probes, nK=2)
    with pytest.raises(InputError):
        doeblinCheck(spec, "D3", 0, z, 1.0, probes, nK=2)
    with pytest.raises(InputError):
        doeblinCheck(spec, "D", 1, z, 1.0, probes, nK=1)
    with pytest.raises(InputError):
        doeblinCheck(spec, "D2", 1, z, 1.0, probes)


def test_probes_must_lie_in_base():
    space = simplexSpace(3)
    with pytest.raises(InputError):
        probeCoords(space, [np.array([0.5, 0.6, -0.1])])
    with pytest.raises(InputError):
        probeCoords(space, [])
    assert probePairs(4) == [(0, 1), (1, 2), (2, 3), (0, 3)]


def test_l_weak_verdicts():
    assert lWeakErgodicity(galleryChain("permutation_cycle"), [0], None, 40).verdicts["l_weak"] == "fail"
    assert lWeakErgodicity(galleryChain("lazy_permutation"), [0, 1], None, 60).verdicts["l_weak"] == "pass"


def test_l_strong_verdicts():
    assert lStrongErgodicity(galleryChain("lazy_permutation"), [0, 3], None, 100).verdicts["l_strong"] == "pass"
    assert lStrongErgodicity(galleryChain("permutation_cycle"), [0], None, 100).verdicts["l_strong"] == "inconclusive"


def test_parallel_traces_match_sequential():
    spec = galleryChain("alternating_pair")
    seq = weakErgodicity(spec, [0, 1, 2], nMax=30, parallel=False)
    par = weakErgodicity(spec, [0, 1, 2], nMax=30, parallel=True)
    assert seq.deltaTrace == par.deltaTrace
    assert seq.verdicts == par.verdicts


def test_weak_needs_horizon_past_k():
    with pytest.raises(InputError):
        weakErgodicity(galleryChain("lazy_permutation"), [5], nMax=5)
    with pytest.raises(InputError):
        weakErgodicity(galleryChain("lazy_permutation"), [], nMax=5)


def test_decay_bound_on_lazy_permutation():
    res = decayBoundCheck(galleryChain("lazy_permutation"), 0, 1.0, None, 60)
    assert res["ok"] and math.isfinite(res["C"])
    assert res["spacing"] >= 1
    with pytest.raises(PreconditionError):
        decayBoundCheck(galleryChain("lazy_permutation"), 0, 0.0, None, 60)


def test_fixed_point(rng):
    M = rng.dirichlet(np.ones(4), size=4).T
    T = fromMatrix(simplexSpace(4), M)
    y0 = fixedPoint(T)
    np.testing.assert_allclose(M @ y0.coords, y0.coords, atol=1e-12)
    assert y0.coords.sum() == pytest.approx(1.0)


def test_classify_and_combine():
    assert classifyTrace([1.0, 0.5, 1e-5]) == "pass"
    assert classifyTrace([1.0, 1.0, 1.0, 1.0]) == "fail"
    assert classifyTrace([1.0, 0.005, 0.005, 0.005]) == "inconclusive"
    assert classifyTrace([]) == "inconclusive"
    assert combineVerdicts(["pass", "pass"]) == "pass"
    assert combineVerdicts(["pass", "inconclusive"]) == "inconclusive"
    assert combineVerdicts(["inconclusive", "fail"]) == "fail"
    assert combineVerdicts([]) == "inconclusive"


def test_fit_decay_rate():
    ns = np.arange(1, 30)
    C, alpha = fitDecayRate(ns, 3.0 * np.exp(-0.4 * ns))
    assert C == pytest.approx(3.0) and alpha == pytest.approx(0.4)
    assert fitDecayRate([1, 2], [0.0, 0.0]) is None


def test_report_merge_and_csv_rows():
    a = ErgodicityReport("c", verdicts={"weak": "pass"}, deltaTrace=[(0, 1, 0.5, "exact")], flags=["x"])
    b = ErgodicityReport("c", verdicts={"l_weak": "fail"}, pairTraces=[(0, 2, 1, 0.25)], flags=["x", "y"])
    m = a.merge(b)
    assert m.verdicts == {"weak": "pass", "l_weak": "fail"}
    assert m.flags == ["x", "y"]
    assert m.csvRows("s") == [(0, 1, 0.5, "exact", "s:delta"), (0, 1, 0.25, "pair", "s:2")]
