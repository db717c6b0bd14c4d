"""Regression discontinuity estimation when covariates jump at the cutoff."""

from .bandwidth import BandwidthSet, couple_bandwidths, select_bandwidth_cv
from .data import Dataset
from .estimators import EstimateResult, estimate_fuzzy, estimate_sharp, wll_side_fit
from .kernels import KernelSpec, cv_constant, eval_kernel, kernel_moments
from .weights import Estimand, WeightScheme, build_weights

__version__ = "0.1.0"

__all__ = [
    "BandwidthSet", "Dataset", "Estimand", "EstimateResult", "KernelSpec", "WeightScheme",
    "build_weights", "couple_bandwidths", "cv_constant", "estimate_fuzzy", "estimate_sharp",
    "eval_kernel", "kernel_moments", "select_bandwidth_cv", "wll_side_fit",
]
