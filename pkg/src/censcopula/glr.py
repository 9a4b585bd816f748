"""Generalized likelihood ratio test of covariate-constancy, with bootstrap
p-values.

The statistic is the gap between the local-linear calibration fit evaluated
at every observed covariate value and the best constant fit, both on the
same pseudo-observations.  Its null distribution is approximated by
regenerating data from the constant fit (copula step), the fitted margins
(inversion step), and Kaplan-Meier estimates of the censoring distribution.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend, beran, copula
from .data import SurvivalData
from .errors import CensCopulaError, EmptyNeighborhoodError, FitError
from .likelihood import fit_constant
from .local_fit import KernelSpec, LocalData, LocalFitConfig, fit_at_points
from .margins import FittedMargins, fit_margins
from .rng import derive_rng

log = logging.getLogger(__name__)

UNIVARIATE = "univariate"
NONUNIVARIATE = "nonunivariate"

# a bootstrap run aborts if more than this fraction of replicates fail
MAX_FAILED_FRACTION = 0.10


@dataclass
class GlrResult:
    lambda_n: float
    boot_stats: np.ndarray
    p_value: float
    B: int
    scheme: str
    bandwidths: object
    theta0: float
    n_failed: int = 0


def _lambda_from_pseudo(pseudo, x, family, h_copula, min_effective_n=5, degree=1):
    """(lambda_n, constant fit) for given pseudo-observations."""
    const = fit_constant(family, pseudo)
    ld = LocalData(pseudo, x)
    cfg = LocalFitConfig(
        family=family, kernel=KernelSpec(h_copula), grid=np.array([0.0]),
        degree=degree, min_effective_n=min_effective_n,
    )
    eta, _, _ = fit_at_points(np.asarray(x, dtype=float), ld, cfg, init=(const.eta, 0.0))
    if np.any(np.isnan(eta)):
        raise EmptyNeighborhoodError(
            f"{int(np.count_nonzero(np.isnan(eta)))} local fits failed in the GLR sweep"
        )
    theta = np.asarray(copula.theta_from_eta(family, eta), dtype=float)
    terms = _backend.loglik_terms(family.code, theta[ld.order], ld.u1, ld.u2, ld.d1, ld.d2)
    lambda_n = float(np.sum(terms) - const.loglik)
    return lambda_n, const


def glr_statistic(data, margins, family, bandwidths, min_effective_n=5, degree=1):
    """Lambda_n at the selected copula bandwidth."""
    pseudo = margins.pseudo(data)
    lam, _ = _lambda_from_pseudo(
        pseudo, data.x, family, bandwidths.h_copula, min_effective_n, degree
    )
    return lam


def _censoring_curves(data, scheme):
    """Kaplan-Meier estimates of the censoring distribution(s)."""
    if scheme == NONUNIVARIATE:
        g1 = beran.km_fit(data.y1, 1 - data.d1)
        g2 = beran.km_fit(data.y2, 1 - data.d2)
        return (g1, g2)
    if scheme == UNIVARIATE:
        y_max = np.maximum(data.y1, data.y2)
        cens = 1 - data.d1 * data.d2
        return (beran.km_fit(y_max, cens),)
    raise ValueError(f"unknown censoring scheme {scheme!r}")


def bootstrap_resample(data, null_param, margins, scheme, rng, cens_curves=None):
    """One bootstrap dataset per Algorithm steps 2.1-2.4.

    Event times come from the null copula and the fitted margins; censoring
    times are regenerated from conditional Kaplan-Meier draws (kept at the
    observed value where the original member was censored).
    """
    n = data.n
    if cens_curves is None:
        cens_curves = _censoring_curves(data, scheme)
    u1, u2 = copula.sample_pairs(null_param, n, rng)
    t1 = np.asarray(margins.inverse_survival(1, u1, data), dtype=float)
    t2 = np.asarray(margins.inverse_survival(2, u2, data), dtype=float)

    if scheme == NONUNIVARIATE:
        g1, g2 = cens_curves
        c1 = np.empty(n)
        c2 = np.empty(n)
        for i in range(n):
            c1[i] = data.y1[i] if data.d1[i] == 0 else beran.km_conditional_sample(g1, data.y1[i], rng)
            c2[i] = data.y2[i] if data.d2[i] == 0 else beran.km_conditional_sample(g2, data.y2[i], rng)
    else:
        (g,) = cens_curves
        y_max = np.maximum(data.y1, data.y2)
        c = np.empty(n)
        for i in range(n):
            if data.d1[i] == 1 and data.d2[i] == 1:
                c[i] = beran.km_conditional_sample(g, y_max[i], rng)
            else:
                c[i] = y_max[i]
        c1 = c2 = c

    y1 = np.minimum(t1, c1)
    y2 = np.minimum(t2, c2)
    d1 = (t1 <= c1).astype(np.uint8)
    d2 = (t2 <= c2).astype(np.uint8)
    return SurvivalData(y1, y2, d1, d2, data.x.copy())


def _one_replicate(args):
    (data, family, scheme, margins, null_param, h_copula, min_eff, degree, seed, b, cens_curves) = args
    rng = derive_rng(seed, b)
    try:
        boot = bootstrap_resample(data, null_param, margins, scheme, rng, cens_curves)
        margins_b = margins.refit(boot)
        pseudo_b = margins_b.pseudo(boot)
        lam_b, _ = _lambda_from_pseudo(pseudo_b, boot.x, family, h_copula, min_eff, degree)
        return b, lam_b, None
    except CensCopulaError as exc:  # replicate-killing numerical failure
        return b, None, f"replicate {b}: {exc}"


def bootstrap_pvalue(
    data,
    family,
    scheme,
    margin_kind,
    B,
    bandwidths,
    seed,
    margins=None,
    min_effective_n=5,
    degree=1,
    workers=1,
):
    """Bootstrap p-value for the constancy test.

    Replicate b draws from the stream (seed, b), so results do not depend
    on worker count.  Failed replicates are dropped; more than 10% failing
    aborts the test.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    if margins is None:
        if margin_kind == "beran":
            margins = fit_margins(data, margin_kind, bandwidths=(bandwidths.h_margin1, bandwidths.h_margin2))
        else:
            margins = fit_margins(data, margin_kind)
    pseudo = margins.pseudo(data)
    lambda_n, const = _lambda_from_pseudo(
        pseudo, data.x, family, bandwidths.h_copula, min_effective_n, degree
    )
    cens_curves = _censoring_curves(data, scheme)
    tasks = [
        (data, family, scheme, margins, const.param, bandwidths.h_copula,
         min_effective_n, degree, seed, b, cens_curves)
        for b in range(1, B + 1)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replicate, tasks, chunksize=max(1, B // (4 * workers))))
    else:
        results = [_one_replicate(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    stats, failures = [], []
    for _, lam_b, err in results:
        if err is None:
            stats.append(lam_b)
        else:
            failures.append(err)
    if failures:
        for msg in failures:
            log.warning("bootstrap %s", msg)
    if len(failures) > MAX_FAILED_FRACTION * B:
        raise FitError(f"{len(failures)} of {B} bootstrap replicates failed")
    stats = np.asarray(stats, dtype=float)
    b_eff = len(stats)
    p_value = float(np.count_nonzero(stats >= lambda_n) / b_eff)
    return GlrResult(
        lambda_n=lambda_n,
        boot_stats=stats,
        p_value=p_value,
        B=b_eff,
        scheme=scheme,
        bandwidths=bandwidths,
        theta0=const.param.theta,
        n_failed=len(failures),
    )
