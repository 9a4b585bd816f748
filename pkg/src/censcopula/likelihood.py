"""Censored copula log-likelihood and the constant-parameter fit.

Each cluster contributes one of four terms depending on its censoring
pattern: log CDF (both censored), log of a partial derivative (one event),
or log density (both events).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import _backend, copula
from .copula import CopulaParam, Family, clamp_unit
from .errors import DataError, FitError

# search bounds for the calibration value; wide enough that theta spans the
# numerically meaningful part of each family's space
_ETA_BOUNDS = {
    Family.CLAYTON: (-30.0, 30.0),
    Family.FRANK: (-150.0, 150.0),
    Family.GUMBEL: (-30.0, 30.0),
}
_ETA_XTOL = 1e-8
_ETA_MAXITER = 500


@dataclass
class PseudoData:
    """Pseudo-observations (U1, U2) with event indicators, as arrays.

    u-values are clamped into the open unit interval on construction.
    """

    u1: np.ndarray
    u2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        self.u1 = np.ascontiguousarray(clamp_unit(np.asarray(self.u1, dtype=np.float64)))
        self.u2 = np.ascontiguousarray(clamp_unit(np.asarray(self.u2, dtype=np.float64)))
        self.d1 = np.ascontiguousarray(np.asarray(self.d1), dtype=np.uint8)
        self.d2 = np.ascontiguousarray(np.asarray(self.d2), dtype=np.uint8)
        n = len(self.u1)
        if not (len(self.u2) == len(self.d1) == len(self.d2) == n):
            raise DataError("pseudo-observation arrays must have equal length")
        if n == 0:
            raise DataError("empty pseudo-observation set")
        for d in (self.d1, self.d2):
            if np.any((d != 0) & (d != 1)):
                raise DataError("event indicators must be 0 or 1")

    def __len__(self):
        return len(self.u1)

    def subset(self, idx):
        return PseudoData(self.u1[idx], self.u2[idx], self.d1[idx], self.d2[idx])


@dataclass
class ConstantFit:
    """Maximum likelihood fit of a covariate-free copula parameter."""

    param: CopulaParam
    eta: float
    loglik: float
    iterations: int
    converged: bool
    tau: float = field(init=False)

    def __post_init__(self):
        self.tau = copula.tau_from_theta(self.param)


def loglik_contrib(p, u1, u2, d1, d2):
    """Single-cluster log-likelihood term for censoring pattern (d1, d2)."""
    u1 = float(clamp_unit(u1))
    u2 = float(clamp_unit(u2))
    if d1 and d2:
        return float(copula.log_pdf(p, u1, u2))
    if d1:
        return float(copula.log_hfunc(p, u1, u2, wrt=1))
    if d2:
        return float(copula.log_hfunc(p, u1, u2, wrt=2))
    return float(copula.log_cdf(p, u1, u2))


def total_loglik(p, data):
    """Sum of contributions over a PseudoData set."""
    if len(data) == 0:
        raise DataError("empty data")
    return _backend.loglik_sum(p.family.code, p.theta, data.u1, data.u2, data.d1, data.d2)


def loglik_terms(family, theta, data):
    """Per-cluster contributions; ``theta`` scalar or one value per cluster."""
    return _backend.loglik_terms(family.code, theta, data.u1, data.u2, data.d1, data.d2)


def _initial_eta(family, data):
    """Start value from the empirical concordance, clamped to the family's range."""
    fallback = 0.1 if family is Family.FRANK else 0.0
    if len(data) < 10:
        return fallback
    tau, _ = stats.kendalltau(data.u1, data.u2)
    if not np.isfinite(tau):
        return fallback
    if family is Family.FRANK:
        tau = min(max(tau, -0.95), 0.95)
        if abs(tau) < 1e-3:
            return fallback
    else:
        if tau < 1e-3:
            return fallback
        tau = min(tau, 0.95)
    return float(copula.eta_from_theta(family, copula.theta_from_tau(family, tau).theta))


def maximize_eta(neg_objective, family, eta0, xatol=_ETA_XTOL):
    """Bounded Brent search shared by the constant and local-init fits."""
    lo, hi = _ETA_BOUNDS[family]
    eta0 = min(max(eta0, lo + 1e-6), hi - 1e-6)
    if not np.isfinite(neg_objective(eta0)):
        for probe in (0.0, 0.5, -0.5, 1.0, -1.0):
            if np.isfinite(neg_objective(probe)):
                eta0 = probe
                break
        else:
            raise FitError("likelihood not finite at any initial bracket")
    res = optimize.minimize_scalar(
        neg_objective,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol, "maxiter": _ETA_MAXITER},
    )
    eta_hat = float(res.x)
    # bounded Brent can park on a flat shoulder; never lose to the start value
    if neg_objective(eta0) < res.fun:
        eta_hat = eta0
    return eta_hat, res


def fit_constant(family, data, init=None):
    """Maximize the censored log-likelihood over the calibration scale.

    One-dimensional bounded Brent search in eta; the inverse link keeps the
    copula parameter inside its space for every family.
    """
    if len(data) == 0:
        raise DataError("empty data")

    def neg(eta):
        theta = float(copula.theta_from_eta(family, eta))
        return -_backend.loglik_sum(family.code, theta, data.u1, data.u2, data.d1, data.d2)

    eta0 = float(init) if init is not None else _initial_eta(family, data)
    eta_hat, res = maximize_eta(neg, family, eta0)
    param = copula.link_inv(family, eta_hat)
    return ConstantFit(
        param=param,
        eta=eta_hat,
        loglik=float(total_loglik(param, data)),
        iterations=int(res.nfev),
        converged=bool(res.success),
    )
