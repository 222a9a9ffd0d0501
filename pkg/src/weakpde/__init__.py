"""Weak-form sparse regression for identifying PDEs from noisy gridded data."""

from .assembly import LibraryMatrix, assemble_library, trapezoid_2d
from .domains import IntegrationDomain, sample_domains
from .estimators import SparseWeakRegression, WeakLibrary, WeakPDEIdentifier
from .field import (
    Field2D,
    SpectrumProfile,
    add_gaussian_noise,
    correlation_scales,
    downsample,
    power_spectrum,
    read_field,
    sample_stddev,
    windowed_spectrum,
    write_field,
)
from .ks import SimulationConfig, linear_growth_rate, simulate_ks
from .regression import SparseModel, iterative_elimination, min_singular_vector, normalize_to_term
from .terms import MonomialTerm, WeakTerm, canonical_weak_form, default_ks_library, expand_variable_coefficient
from .weights import WeightSpec, enumerate_weight_set, eval_weight_derivative

__version__ = "0.1.0"

__all__ = [
    "Field2D",
    "IntegrationDomain",
    "LibraryMatrix",
    "MonomialTerm",
    "SimulationConfig",
    "SparseModel",
    "SparseWeakRegression",
    "SpectrumProfile",
    "WeakLibrary",
    "WeakPDEIdentifier",
    "WeakTerm",
    "WeightSpec",
    "add_gaussian_noise",
    "assemble_library",
    "canonical_weak_form",
    "correlation_scales",
    "default_ks_library",
    "downsample",
    "enumerate_weight_set",
    "eval_weight_derivative",
    "expand_variable_coefficient",
    "iterative_elimination",
    "linear_growth_rate",
    "min_singular_vector",
    "normalize_to_term",
    "power_spectrum",
    "read_field",
    "sample_domains",
    "sample_stddev",
    "simulate_ks",
    "trapezoid_2d",
    "windowed_spectrum",
    "write_field",
]
