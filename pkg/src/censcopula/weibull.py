"""Parametric conditional margins: Weibull survival with a covariate effect.

Hazard lambda * rho * t^(rho-1) * exp(beta x), so S(t|x) = exp(-lambda t^rho
e^{beta x}).  Censored maximum likelihood runs on (log lambda, log rho, beta)
to keep the positivity constraints implicit.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DataError
from .likelihood import PseudoData

_GTOL = 1e-8
_MAXITER = 200
_HESS_STEP = 1e-5
_SINGULAR_COND = 1e10


@dataclass
class WeibullFit:
    lam: float
    rho: float
    beta: float
    se: tuple
    loglik: float
    converged: bool
    n_events: int

    @property
    def identifiable(self):
        return all(math.isfinite(s) for s in self.se)


def weibull_survival(fit, t, x):
    """S(t | x) = exp(-lambda t^rho e^{beta x}); strictly positive t."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("survival time must be positive")
    val = np.exp(-fit.lam * t**fit.rho * np.exp(fit.beta * np.asarray(x, dtype=float)))
    return float(val) if val.ndim == 0 else val


def weibull_inverse_survival(fit, u, x):
    """Solve S(t | x) = u for t."""
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ValueError("survival level must lie in (0, 1)")
    t = (-np.log(u) / (fit.lam * np.exp(fit.beta * np.asarray(x, dtype=float)))) ** (1.0 / fit.rho)
    return float(t) if t.ndim == 0 else t


def _loglik_and_grad(params, y, d, x, log_y):
    a, b, beta = params
    rho = math.exp(b)
    mu = np.exp(a + rho * log_y + beta * x)  # lambda y^rho e^{beta x}
    events = d.astype(bool)
    ll = np.sum(a + b + (rho - 1.0) * log_y[events] + beta * x[events]) - np.sum(mu)
    n_ev = float(np.count_nonzero(events))
    g_a = n_ev - np.sum(mu)
    g_b = n_ev + rho * np.sum(log_y[events]) - rho * np.sum(mu * log_y)
    g_beta = np.sum(x[events]) - np.sum(mu * x)
    return float(ll), np.array([g_a, g_b, g_beta])


def fit_weibull(y, d, x):
    """Censored Weibull MLE for one margin.

    Returns estimates with delta-method standard errors from the inverse
    observed information; a near-singular information matrix (for example a
    constant covariate) yields infinite standard errors.
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(d)
    x = np.asarray(x, dtype=float)
    if np.any(y <= 0.0):
        raise DataError("times must be strictly positive")
    n_events = int(np.sum(d == 1))
    if n_events == 0:
        raise DataError("no events: the Weibull margin is not estimable")
    log_y = np.log(y)

    def neg(params):
        ll, g = _loglik_and_grad(params, y, d, x, log_y)
        return -ll, -g

    start = np.array([math.log(n_events / float(np.sum(y))), 0.0, 0.0])
    res = optimize.minimize(
        neg, start, jac=True, method="BFGS", options={"gtol": _GTOL, "maxiter": _MAXITER}
    )
    a, b, beta = res.x
    lam, rho = math.exp(a), math.exp(b)
    grad_norm = float(np.max(np.abs(res.jac)))
    converged = bool(res.success) or grad_norm < 1e-5

    # observed information via central differences of the analytic gradient
    hess = np.empty((3, 3))
    for j in range(3):
        step = _HESS_STEP * max(1.0, abs(res.x[j]))
        up = res.x.copy()
        dn = res.x.copy()
        up[j] += step
        dn[j] -= step
        hess[:, j] = (neg(up)[1] - neg(dn)[1]) / (2.0 * step)
    hess = 0.5 * (hess + hess.T)
    se = (math.inf, math.inf, math.inf)
    if np.all(np.isfinite(hess)) and np.linalg.cond(hess) < _SINGULAR_COND:
        cov = np.linalg.inv(hess)
        diag = np.diag(cov)
        if np.all(diag > 0.0):
            # delta method back to (lambda, rho, beta)
            se = (
                lam * math.sqrt(diag[0]),
                rho * math.sqrt(diag[1]),
                math.sqrt(diag[2]),
            )
    return WeibullFit(
        lam=float(lam),
        rho=float(rho),
        beta=float(beta),
        se=se,
        loglik=float(-res.fun),
        converged=converged,
        n_events=n_events,
    )


def fit_margins(data):
    """Fit both members' margins; the two fits are independent."""
    f1 = fit_weibull(data.y1, data.d1, data.x)
    f2 = fit_weibull(data.y2, data.d2, data.x)
    return f1, f2


def pseudo_observations(data, fit1, fit2):
    """Transform observed times through the fitted conditional survival."""
    u1 = weibull_survival(fit1, data.y1, data.x)
    u2 = weibull_survival(fit2, data.y2, data.x)
    return PseudoData(u1, u2, data.d1, data.d2)
