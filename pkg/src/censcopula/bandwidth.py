"""Data-driven bandwidth selection.

Leave-one-out cross-validated log-likelihood over copula bandwidth
candidates (parametric margins), the joint criterion over (h1, h2, h_C)
lattices (Beran margins), and the truth-comparison selector used for Beran
bandwidths inside simulations.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import beran, copula, weibull
from .errors import EmptyNeighborhoodError, FitError
from .local_fit import KernelSpec, LocalData, LocalFitConfig, fit_at_points

log = logging.getLogger(__name__)


def default_copula_grid():
    """Six candidates on [0.3, 3], equally spaced on a log scale."""
    return np.geomspace(0.3, 3.0, 6)


def default_margin_grid(span, count=10):
    """Log-equispaced candidates scaled to the covariate span."""
    return np.geomspace(span / 20.0, span, count)


@dataclass
class BandwidthGrid:
    copula_grid: np.ndarray = field(default_factory=default_copula_grid)
    margin_grids: tuple = None  # (candidates for h1, candidates for h2)

    def __post_init__(self):
        self.copula_grid = np.sort(np.asarray(self.copula_grid, dtype=float))
        if np.any(self.copula_grid <= 0.0):
            raise ValueError("bandwidth candidates must be positive")
        if self.margin_grids is not None:
            g1, g2 = self.margin_grids
            self.margin_grids = (
                np.sort(np.asarray(g1, dtype=float)),
                np.sort(np.asarray(g2, dtype=float)),
            )


@dataclass
class BandwidthChoice:
    h_copula: float
    criterion_value: float
    criterion_table: dict
    h_margin1: float = None
    h_margin2: float = None


def loo_terms(pseudo, x, family, h, min_effective_n=5, degree=1):
    """Held-out log-likelihood contributions at bandwidth ``h``.

    For each i the calibration is fit at X_i without observation i, then
    evaluated on observation i.  Raises EmptyNeighborhoodError if a
    leave-one-out neighborhood is too thin.  Returned in observation order.
    """
    from . import _backend

    ld = pseudo if isinstance(pseudo, LocalData) else LocalData(pseudo, x)
    cfg = LocalFitConfig(
        family=family, kernel=KernelSpec(h), grid=np.array([0.0]),
        degree=degree, min_effective_n=min_effective_n,
    )
    points = np.asarray(x, dtype=float)
    try:
        eta, _, _ = fit_at_points(points, ld, cfg, exclude_positions=ld.rank)
    except FitError as exc:
        raise EmptyNeighborhoodError(f"h={h}: {exc}") from exc
    if np.any(np.isnan(eta)):
        raise EmptyNeighborhoodError(
            f"{int(np.count_nonzero(np.isnan(eta)))} leave-one-out fits failed at h={h}"
        )
    theta = np.asarray(copula.theta_from_eta(family, eta), dtype=float)
    terms_sorted = _backend.loglik_terms(
        family.code, theta[ld.order], ld.u1, ld.u2, ld.d1, ld.d2
    )
    return terms_sorted[ld.rank]


def loo_criterion(pseudo, x, family, h, min_effective_n=5, degree=1):
    """Leave-one-out cross-validated log-likelihood B(h)."""
    return float(np.sum(loo_terms(pseudo, x, family, h, min_effective_n, degree)))


def cv_copula(pseudo, x, family, copula_grid, min_effective_n=5, degree=1):
    """Pick the copula bandwidth maximizing the LOO criterion.

    Candidates whose leave-one-out neighborhoods fail get -inf (excluded);
    ties break to the smallest bandwidth.
    """
    table = {}
    best_h, best_val = None, -np.inf
    excluded = 0
    for h in np.sort(np.asarray(copula_grid, dtype=float)):
        try:
            val = loo_criterion(pseudo, x, family, h, min_effective_n, degree)
        except EmptyNeighborhoodError as exc:
            val = -np.inf
            excluded += 1
            log.warning("bandwidth candidate %g excluded: %s", h, exc)
        table[float(h)] = val
        if val > best_val:
            best_h, best_val = float(h), val
    if best_h is None:
        raise EmptyNeighborhoodError("every bandwidth candidate failed")
    if excluded:
        log.warning("%d of %d bandwidth candidates excluded", excluded, len(table))
    return BandwidthChoice(h_copula=best_h, criterion_value=best_val, criterion_table=table)


def cv_parametric(data, margins, family, grid=None, min_effective_n=5, degree=1):
    """Eq.-(5)-style selection with Weibull margins fit once on all data."""
    grid = grid if grid is not None else BandwidthGrid()
    pseudo = weibull.pseudo_observations(data, margins[0], margins[1])
    return cv_copula(pseudo, data.x, family, grid.copula_grid, min_effective_n, degree)


def cv_joint(data, family, grid, min_effective_n=5, degree=1):
    """Joint (h1, h2, h_C) selection with Beran margins.

    Margins are fit once per (h1, h2) on the full data; the leave-one-out
    loop runs over the copula fit only.  Ties break to the lexicographically
    smallest triple.
    """
    if grid.margin_grids is None:
        raise ValueError("cv_joint requires margin bandwidth grids")
    g1, g2 = grid.margin_grids
    table = {}
    best, best_val = None, -np.inf
    for h1 in g1:
        for h2 in g2:
            try:
                margins = beran.fit_beran_margins(data, float(h1), float(h2))
                pseudo = beran.beran_pseudo_observations(data, margins)
            except EmptyNeighborhoodError as exc:
                log.warning("margin cell (%g, %g) excluded: %s", h1, h2, exc)
                for hc in grid.copula_grid:
                    table[(float(h1), float(h2), float(hc))] = -np.inf
                continue
            ld = LocalData(pseudo, data.x)
            for hc in grid.copula_grid:
                try:
                    val = loo_criterion(ld, data.x, family, float(hc), min_effective_n, degree)
                except EmptyNeighborhoodError as exc:
                    val = -np.inf
                    log.warning("cell (%g, %g, %g) excluded: %s", h1, h2, hc, exc)
                table[(float(h1), float(h2), float(hc))] = val
                if val > best_val:
                    best, best_val = (float(h1), float(h2), float(hc)), val
    if best is None:
        raise EmptyNeighborhoodError("every bandwidth cell failed")
    return BandwidthChoice(
        h_copula=best[2],
        h_margin1=best[0],
        h_margin2=best[1],
        criterion_value=best_val,
        criterion_table=table,
    )


def oracle_beran_bandwidth(y, d, x, truth, candidates):
    """Simulation-only selector: minimize the mean squared distance between
    Beran estimates and the true marginal survival over observed points."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    best_h, best_mse = None, np.inf
    for h in np.sort(np.asarray(candidates, dtype=float)):
        spec = beran.KernelSpec(float(h))
        est = np.array(
            [beran.beran_eval(beran.beran_fit(y, d, x, xi, spec), yi) for yi, xi in zip(y, x)]
        )
        mse = float(np.mean((est - truth(y, x)) ** 2))
        if mse < best_mse:
            best_h, best_mse = float(h), mse
    return best_h
