"""Local polynomial (degree 0 or 1) likelihood estimation of the
calibration function, and curve evaluation over a covariate grid.

At a target covariate value x0 the calibration is approximated by
eta_i = beta0 + beta1 (X_i - x0) and the censored copula log-likelihood is
maximized with Epanechnikov weights K_h(X_i - x0).
"""

from dataclasses import dataclass

import numpy as np

from . import _backend, copula
from ._optim import nelder_mead_2d
from .beran import KernelSpec, epanechnikov
from .errors import EmptyNeighborhoodError, FitError
from .likelihood import maximize_eta

_NM_FATOL = 1e-7
_NM_MAXFEV = 1000
_COLD_STEPS = (0.5, 0.25)
_WARM_STEPS = (0.05, 0.02)


@dataclass
class LocalFitConfig:
    family: copula.Family
    kernel: KernelSpec
    grid: np.ndarray
    degree: int = 1
    min_effective_n: int = 5

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise ValueError("degree must be 0 or 1")
        self.grid = np.asarray(self.grid, dtype=float)


@dataclass
class LocalFit:
    beta0: float
    beta1: float
    converged: bool


@dataclass
class CalibrationFit:
    """Pointwise calibration estimates over a covariate grid."""

    grid: np.ndarray
    eta_hat: np.ndarray
    theta_hat: np.ndarray
    tau_hat: np.ndarray
    bandwidth: float
    converged: np.ndarray


class LocalData:
    """Pseudo-observations sorted by covariate, ready for window slicing."""

    def __init__(self, pseudo, x):
        x = np.asarray(x, dtype=float)
        if len(x) != len(pseudo):
            raise ValueError("covariate length mismatch")
        order = np.argsort(x, kind="stable")
        self.order = order
        self.rank = np.empty(len(x), dtype=np.intp)
        self.rank[order] = np.arange(len(x))
        self.x = np.ascontiguousarray(x[order])
        self.u1 = np.ascontiguousarray(pseudo.u1[order])
        self.u2 = np.ascontiguousarray(pseudo.u2[order])
        self.d1 = np.ascontiguousarray(pseudo.d1[order])
        self.d2 = np.ascontiguousarray(pseudo.d2[order])

    def __len__(self):
        return len(self.x)

    def window(self, x0, h):
        lo = int(np.searchsorted(self.x, x0 - h, side="left"))
        hi = int(np.searchsorted(self.x, x0 + h, side="right"))
        return lo, hi

    def position_of(self, original_index):
        """Sorted position of an original-order observation index."""
        return int(self.rank[original_index])


def _window_arrays(ld, x0, cfg, exclude_pos=-1):
    h = cfg.kernel.bandwidth
    lo, hi = ld.window(x0, h)
    dx = ld.x[lo:hi] - x0
    w = epanechnikov(dx / h) / h
    effective = int(np.count_nonzero(w > 0.0))
    rel_exclude = -1
    if exclude_pos >= 0 and lo <= exclude_pos < hi:
        rel_exclude = exclude_pos - lo
        if w[rel_exclude] > 0.0:
            effective -= 1
    if effective < cfg.min_effective_n:
        raise EmptyNeighborhoodError(
            f"{effective} effective observations at x0={x0} with h={h} "
            f"(need {cfg.min_effective_n})"
        )
    return lo, hi, dx, w, rel_exclude


def local_loglik(beta, x0, pseudo, x, cfg):
    """Kernel-weighted log-likelihood of Taylor coefficients ``beta``.

    ``beta`` is (beta0,) for degree 0 or (beta0, beta1) for degree 1.
    """
    ld = pseudo if isinstance(pseudo, LocalData) else LocalData(pseudo, x)
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    beta1 = float(beta[1]) if cfg.degree == 1 and len(beta) > 1 else 0.0
    lo, hi, dx, w, _ = _window_arrays(ld, x0, cfg)
    return _backend.local_objective(
        cfg.family.code, float(beta[0]), beta1,
        ld.u1[lo:hi], ld.u2[lo:hi], ld.d1[lo:hi], ld.d2[lo:hi], dx, w,
    )


def _fit_at_prepared(ld, x0, cfg, init=None, exclude_pos=-1):
    lo, hi, dx, w, rel_ex = _window_arrays(ld, x0, cfg, exclude_pos)
    fam = cfg.family.code
    u1, u2 = ld.u1[lo:hi], ld.u2[lo:hi]
    d1, d2 = ld.d1[lo:hi], ld.d2[lo:hi]

    def neg2(b0, b1):
        return -_backend.local_objective(fam, b0, b1, u1, u2, d1, d2, dx, w, rel_ex)

    if init is None:
        # loose 1-D pass just to land the simplex near the optimum
        eta0, _ = maximize_eta(lambda e: neg2(e, 0.0), cfg.family, 0.0, xatol=1e-3)
        start = (eta0, 0.0)
        steps = _COLD_STEPS
    else:
        start = (float(init[0]), float(init[1]))
        steps = _WARM_STEPS

    if cfg.degree == 0:
        eta_hat, res = maximize_eta(lambda e: neg2(e, 0.0), cfg.family, start[0])
        return LocalFit(beta0=eta_hat, beta1=0.0, converged=bool(res.success))

    b0, b1, _, _, converged = nelder_mead_2d(
        neg2, start[0], start[1], steps[0], steps[1], fatol=_NM_FATOL, maxfev=_NM_MAXFEV
    )
    return LocalFit(beta0=float(b0), beta1=float(b1), converged=bool(converged))


def fit_at(x0, pseudo, x, cfg, init=None):
    """Local maximum likelihood coefficients at a single covariate value."""
    ld = pseudo if isinstance(pseudo, LocalData) else LocalData(pseudo, x)
    return _fit_at_prepared(ld, float(x0), cfg, init=init)


def fit_at_points(points, ld, cfg, exclude_positions=None, init=None):
    """Sweep of local fits, warm-starting each from its neighbour.

    ``points`` are visited in sorted order (results return in input order).
    ``exclude_positions[i]``, when given, drops that sorted-order observation
    from the fit at points[i] (leave-one-out).
    """
    points = np.asarray(points, dtype=float)
    order = np.argsort(points, kind="stable")
    eta = np.full(points.shape, np.nan)
    slope = np.full(points.shape, np.nan)
    ok = np.zeros(points.shape, dtype=bool)
    warm = init
    failures = 0
    for j in order:
        ex = exclude_positions[j] if exclude_positions is not None else -1
        try:
            fit = _fit_at_prepared(ld, float(points[j]), cfg, init=warm, exclude_pos=ex)
        except EmptyNeighborhoodError:
            failures += 1
            warm = None
            continue
        eta[j] = fit.beta0
        slope[j] = fit.beta1
        ok[j] = fit.converged
        warm = (fit.beta0, fit.beta1)
    if failures == len(points):
        raise FitError("every local fit failed: no usable neighborhoods")
    return eta, slope, ok


def fit_curve(pseudo, x, cfg):
    """Calibration curve over cfg.grid with link and tau transforms applied."""
    ld = pseudo if isinstance(pseudo, LocalData) else LocalData(pseudo, x)
    eta, _, ok = fit_at_points(cfg.grid, ld, cfg)
    theta = np.asarray(copula.theta_from_eta(cfg.family, eta), dtype=float)
    theta = np.where(np.isnan(eta), np.nan, theta)
    tau = copula.tau_from_theta_vec(cfg.family, theta)
    return CalibrationFit(
        grid=cfg.grid.copy(),
        eta_hat=eta,
        theta_hat=theta,
        tau_hat=tau,
        bandwidth=cfg.kernel.bandwidth,
        converged=ok,
    )
