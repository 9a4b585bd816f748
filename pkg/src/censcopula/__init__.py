"""Covariate-conditional copula models for right-censored bivariate event times.

Two-stage fitting (parametric Weibull or nonparametric Beran conditional
margins, then local-likelihood calibration of the copula parameter),
cross-validated bandwidth selection, a bootstrap generalized likelihood
ratio test of covariate-constancy, and a Monte Carlo harness.
"""

from ._backend import BACKEND
from .copula import CopulaParam, Family
from .errors import (
    CensCopulaError,
    DataError,
    EmptyNeighborhoodError,
    FitError,
    ParameterError,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CensCopulaError",
    "CopulaParam",
    "DataError",
    "EmptyNeighborhoodError",
    "Family",
    "FitError",
    "ParameterError",
    "__version__",
]
