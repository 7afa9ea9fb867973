"""Classical column-stochastic instances on the Simplex space, deterministic per seed."""

from typing import Any, Union

import numpy as np

from core import settings
from core.errors import InputError
from core.obsb import simplexSpace
from core.operators import MarkovOperator, NdmcSpec, rankOne

from .config import EXPECTED_VERDICTS, FAMILY_NOTES, GALLERY_DIMENSION, GALLERY_NAMES


def _checkName(name: str) -> None:
    if name not in GALLERY_NAMES:
        raise InputError(f"Invalid gallery name '{name}'. Allowed: {GALLERY_NAMES}")


def matrixGallery(name: str, dimension: int = GALLERY_DIMENSION,
                  seed: int = settings.SEED) -> Union[MarkovOperator, NdmcSpec]:
    """
    One gallery instance: a MarkovOperator for the homogeneous families,
    an NdmcSpec for `alternating_pair`.
    """
    _checkName(name)
    if dimension < 2:
        raise InputError("gallery dimension must be >= 2")
    space = simplexSpace(dimension)
    rng = np.random.default_rng(seed)
    eye = np.eye(dimension)

    if name == "random_stochastic":
        return MarkovOperator(space, rng.dirichlet(np.ones(dimension), size=dimension).T, name)
    if name == "permutation_cycle":
        return MarkovOperator(space, np.roll(eye, 1, axis=0), name)
    if name == "lazy_permutation":
        return MarkovOperator(space, 0.5 * (eye + np.roll(eye, 1, axis=0)), name)
    if name == "rank_one_random":
        return rankOne(space, rng.dirichlet(np.ones(dimension)), name)

    y, z = rng.dirichlet(np.ones(dimension), size=2)
    A = MarkovOperator(space, 0.5 * eye + 0.5 * rankOne(space, y).matrix, "A")
    B = MarkovOperator(space, 0.5 * eye + 0.5 * rankOne(space, z).matrix, "B")
    return NdmcSpec.fromList([A, B], cycling="cycle", label=name)


def galleryChain(name: str, dimension: int = GALLERY_DIMENSION, seed: int = settings.SEED) -> NdmcSpec:
    inst = matrixGallery(name, dimension, seed)
    if isinstance(inst, NdmcSpec):
        inst.family = "gallery"
        return inst
    return NdmcSpec.homogeneous(inst, name, family="gallery")


def galleryTable() -> list[dict[str, Any]]:
    """Rows {family, expected, notes}; order and wording are fixed."""
    rows = []
    for family, verdicts in EXPECTED_VERDICTS.items():
        expected = ", ".join(f"{notion}: {v}" for notion, v in verdicts.items())
        rows.append({"family": family, "expected": expected, "notes": FAMILY_NOTES.get(family, "")})
    return rows


def galleryLines() -> list[str]:
    return [f"{r['family']} | {r['expected']}" for r in galleryTable()]


__all__ = ["matrixGallery", "galleryChain", "galleryTable", "galleryLines"]
