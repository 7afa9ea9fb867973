import numpy as np
import pytest

from chains.config import EXPECTED_VERDICTS, GALLERY_NAMES
from chains.gallery import galleryChain, galleryLines, galleryTable, matrixGallery
from core.dobrushin import delta
from core.errors import InputError
from core.ergodicity import uniformErgodicity
from core.operators import MarkovOperator, NdmcSpec, isMarkov


def test_unknown_name_and_dimension():
    with pytest.raises(InputError):
        matrixGallery("doubly_stochastic")
    with pytest.raises(InputError):
        matrixGallery("random_stochastic", dimension=1)


def test_instances_are_deterministic_per_seed():
    a = matrixGallery("random_stochastic", 4, seed=3)
    b = matrixGallery("random_stochastic", 4, seed=3)
    c = matrixGallery("random_stochastic", 4, seed=4)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, c.matrix)


@pytest.mark.parametrize("name", [n for n in GALLERY_NAMES if n != "alternating_pair"])
def test_homogeneous_members_are_markov(name):
    T = matrixGallery(name, 4)
    assert isinstance(T, MarkovOperator)
    cert = isMarkov(T)
    assert cert.passed and cert.mode == "exact"


def test_alternating_pair_is_a_chain():
    spec = matrixGallery("alternating_pair")
    assert isinstance(spec, NdmcSpec)
    assert not np.array_equal(spec.step(0).matrix, spec.step(1).matrix)
    np.testing.assert_array_equal(spec.step(0).matrix, spec.step(2).matrix)
    assert galleryChain("alternating_pair").family == "gallery"


def test_random_stochastic_contracts():
    T = matrixGallery("random_stochastic", seed=7)
    assert delta(T).value < 1.0
    assert uniformErgodicity(T, nMax=40).verdicts["uniform"] == "pass"


def test_homogeneous_gallery_chain():
    spec = galleryChain("lazy_permutation")
    assert spec.isHomogeneous() and spec.family == "gallery"


def test_table_and_lines():
    rows = galleryTable()
    assert [r["family"] for r in rows] == list(EXPECTED_VERDICTS)
    assert rows == galleryTable()
    lines = galleryLines()
    assert any(line.startswith("permutation_cycle | uniform: fail") for line in lines)
    assert any(line.startswith("grid_multiplication | l_weak: pass") for line in lines)
    assert all(" | " in line for line in lines)
