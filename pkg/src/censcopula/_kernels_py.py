"""Pure-numpy implementations of the hot likelihood kernels.

Used when the compiled extension is unavailable (or forced via
``CENSCOPULA_BACKEND=python``).  Semantics match ``_kernels.pyx``; the
benchmark in ``benchmarks/bench_kernels.py`` compares the two.
"""

import numpy as np

from . import copula
from .copula import Family

_FAMILIES = {f.code: f for f in Family}


def _loglik_values(family, theta, u1, u2, d1, d2):
    """Per-observation censored log-likelihood, four-case combination.

    (0,0): log C;  (1,0): log dC/du1;  (0,1): log dC/du2;  (1,1): log density.
    ``theta`` is a scalar or per-observation array.
    """
    terms = copula._LOG_TERMS[family]
    out = np.empty(np.broadcast(u1, theta).shape, dtype=float)
    d1 = np.asarray(d1, dtype=bool)
    d2 = np.asarray(d2, dtype=bool)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), out.shape)

    cases = (
        (~d1 & ~d2, "C", False),
        (d1 & ~d2, "h", False),
        (~d1 & d2, "h", True),
        (d1 & d2, "c", False),
    )
    for mask, want, swap in cases:
        if np.any(mask):
            a, b = (u2[mask], u1[mask]) if swap else (u1[mask], u2[mask])
            out[mask] = terms(theta[mask], a, b, want)
    return out


def loglik_sum(fam_code, theta, u1, u2, d1, d2, exclude=-1):
    """Sum of censored log-likelihood contributions at constant theta."""
    vals = _loglik_values(_FAMILIES[fam_code], theta, u1, u2, d1, d2)
    if exclude >= 0:
        return float(np.sum(vals) - vals[exclude])
    return float(np.sum(vals))


def loglik_terms(fam_code, theta, u1, u2, d1, d2):
    """Per-observation contributions; ``theta`` may vary per observation."""
    return _loglik_values(_FAMILIES[fam_code], np.asarray(theta, dtype=float), u1, u2, d1, d2)


def local_objective(fam_code, beta0, beta1, u1, u2, d1, d2, dx, w, exclude=-1):
    """Kernel-weighted local log-likelihood at eta_i = beta0 + beta1 * dx_i."""
    family = _FAMILIES[fam_code]
    eta = beta0 + beta1 * np.asarray(dx, dtype=float)
    theta = copula.theta_from_eta(family, eta)
    vals = _loglik_values(family, theta, u1, u2, d1, d2)
    w = np.asarray(w, dtype=float)
    if exclude >= 0:
        total = float(np.dot(w, vals) - w[exclude] * vals[exclude])
    else:
        total = float(np.dot(w, vals))
    return total
