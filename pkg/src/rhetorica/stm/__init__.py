"""Structural topic model with covariate-dependent prevalence and content."""

from .estep import DocPosterior, doc_objective, e_step, posterior_covariances
from .fit import KSelectionResult, fit, heldout_likelihood, select_k
from .init import SpectralInitError, random_init, spectral_init
from .model import StmConfig, StmModel, softmax_pad

__all__ = [
    "DocPosterior", "KSelectionResult", "SpectralInitError", "StmConfig", "StmModel",
    "doc_objective", "e_step", "fit", "heldout_likelihood", "posterior_covariances",
    "random_init", "select_k", "softmax_pad", "spectral_init",
]
