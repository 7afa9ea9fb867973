"""Instance families: the grid multiplication chain, the kernel chain on ℝ ⊕ L_p and the stochastic-matrix gallery."""

from .gallery import galleryChain, galleryLines, galleryTable, matrixGallery
from .grid_chain import GridChainParams, buildGridChain, checkGridDoeblin, gridConvergenceSweep, gridExponent
from .kernel_chain import CoefficientRule, KernelChainParams, buildKernelChain, kernelDoeblinTarget, kernelMarkovBound

__all__ = [
    "matrixGallery",
    "galleryChain",
    "galleryTable",
    "galleryLines",
    "GridChainParams",
    "buildGridChain",
    "checkGridDoeblin",
    "gridConvergenceSweep",
    "gridExponent",
    "CoefficientRule",
    "KernelChainParams",
    "buildKernelChain",
    "kernelDoeblinTarget",
    "kernelMarkovBound",
]
