"""Finite-dimensional experiments on freeness of approximate commutants of Haar unitaries."""

__version__ = "0.1.0"

from .band import BandPattern, band_project, commutant_bound, covering_log_bound, greedy_net
from .concentration import empirical_tail, herbst_bound
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .coupling import CoupledFamily, couple, residual_certificate
from .freeness import (
    ConjugatedBand,
    PolynomialInU,
    RandomRestartSearch,
    WordSpec,
    adversarial_commutant,
    centered_word_moment,
    freeness_error_budget,
    polynomial_word_moment,
)
from .haar import RngStream, SpectralMeasure, esd, in_neighborhood, sample_haar_unitary
from .linalg import (
    NumericalFailure,
    commutator,
    normalized_trace,
    operator_norm,
    two_norm,
    unitary_eigendecomposition,
)
from .polynomial import NCPolynomial, parse_polynomial
from .runner import RunManifest, run, summarize

__all__ = [
    "BandPattern", "band_project", "commutant_bound", "covering_log_bound", "greedy_net",
    "empirical_tail", "herbst_bound",
    "ConfigError", "ExperimentConfig", "load_config", "parse_config",
    "CoupledFamily", "couple", "residual_certificate",
    "ConjugatedBand", "PolynomialInU", "RandomRestartSearch", "WordSpec",
    "adversarial_commutant", "centered_word_moment", "freeness_error_budget", "polynomial_word_moment",
    "RngStream", "SpectralMeasure", "esd", "in_neighborhood", "sample_haar_unitary",
    "NumericalFailure", "commutator", "normalized_trace", "operator_norm", "two_norm",
    "unitary_eigendecomposition",
    "NCPolynomial", "parse_polynomial",
    "RunManifest", "run", "summarize",
]
