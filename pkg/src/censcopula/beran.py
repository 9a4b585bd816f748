"""Nonparametric conditional margins.

Beran's kernel-weighted product-limit estimator (the conditional
Kaplan-Meier estimator), its generalized inverse, the plain Kaplan-Meier
estimator, and conditional sampling from an estimated censoring
distribution.  ``km_fit`` and ``beran_fit`` share one product-limit core:
with all covariates equal the kernel weights canonicalize to exactly 1.0,
making the Beran curve bitwise equal to plain Kaplan-Meier.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyNeighborhoodError
from .likelihood import PseudoData

# count of generalized-inverse evaluations below the curve's range
# (diagnostic only; such draws are mapped to the largest jump time)
_inverse_clip_count = 0


def inverse_clip_count():
    return _inverse_clip_count


def reset_inverse_clip_count():
    global _inverse_clip_count
    _inverse_clip_count = 0


@dataclass(frozen=True)
class KernelSpec:
    """Epanechnikov kernel with a positive bandwidth (covariate units)."""

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0.0:
            raise ValueError("bandwidth must be positive")


def epanechnikov(u):
    """K(u) = 0.75 (1 - u^2) on [-1, 1], zero outside."""
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def kernel_values(xs, x0, spec):
    """Unnormalized K_h(X_i - x0) = K((X_i - x0)/h)/h."""
    xs = np.asarray(xs, dtype=float)
    return epanechnikov((xs - x0) / spec.bandwidth) / spec.bandwidth


def kernel_weights(xs, x0, spec):
    """Normalized kernel weights; errors when nothing is in range."""
    xs = np.asarray(xs, dtype=float)
    if len(xs) == 0:
        raise DataError("empty covariate list")
    k = kernel_values(xs, x0, spec)
    total = float(np.sum(k))
    if total <= 0.0:
        raise EmptyNeighborhoodError(
            f"no observation within bandwidth {spec.bandwidth} of x0={x0}"
        )
    return k / total


@dataclass
class BeranCurve:
    """Right-continuous survival step function from weighted product limits."""

    jump_times: np.ndarray
    values: np.ndarray
    anchor_x: float
    bandwidth: float
    t_max: float  # largest observation carrying positive weight
    proper: bool = field(default=False)
    _cum_mass: np.ndarray = field(default=None, repr=False)


KmCurve = BeranCurve  # plain Kaplan-Meier is the uniform-weight special case


def _product_limit(y, d, w):
    """Weighted product-limit survival curve.

    Events enter individually; at tied times every event shares the risk
    set {j : Y_j >= Y_i} (censorings tied with an event stay at risk).
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(d)
    w = np.asarray(w, dtype=float)
    order = np.lexsort((1 - d, y))  # time ascending, events before censorings
    ys = y[order]
    ds = d[order]
    ws = w[order]
    suffix = np.cumsum(ws[::-1])[::-1]
    # risk mass for each position: suffix sum from the first index of its tie group
    grp = np.searchsorted(ys, ys, side="left")
    risk = suffix[grp]
    surv = 1.0
    jump_times = []
    values = []
    for i in range(len(ys)):
        if ds[i] != 1 or ws[i] <= 0.0:
            continue
        surv *= 1.0 - ws[i] / risk[i]
        if jump_times and jump_times[-1] == ys[i]:
            values[-1] = surv
        else:
            jump_times.append(ys[i])
            values.append(surv)
    pos = ws > 0.0
    t_max = float(np.max(ys[pos])) if np.any(pos) else float("nan")
    values = np.asarray(values, dtype=float)
    return np.asarray(jump_times, dtype=float), values, t_max


def beran_fit(y, d, x, x0, spec):
    """Conditional Kaplan-Meier estimator at covariate value ``x0``."""
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise DataError("empty data")
    k = kernel_values(x, x0, spec)
    peak = float(np.max(k))
    if peak <= 0.0:
        raise EmptyNeighborhoodError(
            f"no observation within bandwidth {spec.bandwidth} of x0={x0}"
        )
    # canonical scaling: equal covariates give weights of exactly 1.0,
    # which makes the curve bitwise identical to plain Kaplan-Meier
    w = k / peak
    jumps, values, t_max = _product_limit(y, d, w)
    proper = bool(len(values) > 0 and values[-1] == 0.0)
    return BeranCurve(
        jump_times=jumps,
        values=values,
        anchor_x=float(x0),
        bandwidth=spec.bandwidth,
        t_max=t_max,
        proper=proper,
    )


def km_fit(y, events):
    """Plain Kaplan-Meier product-limit estimator for (time, event) data."""
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise DataError("empty data")
    jumps, values, t_max = _product_limit(y, events, np.ones(len(y)))
    proper = bool(len(values) > 0 and values[-1] == 0.0)
    return BeranCurve(
        jump_times=jumps,
        values=values,
        anchor_x=float("nan"),
        bandwidth=float("nan"),
        t_max=t_max,
        proper=proper,
    )


def beran_eval(curve, t):
    """Right-continuous step evaluation; 1 before the first jump."""
    t = np.asarray(t, dtype=float)
    if len(curve.jump_times) == 0:
        out = np.ones(t.shape)
        return float(out) if out.ndim == 0 else out
    idx = np.searchsorted(curve.jump_times, t, side="right")
    padded = np.concatenate([[1.0], curve.values])
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


def beran_eval_left(curve, t):
    """Left limit S(t-): the step value just before a jump at ``t``."""
    t = np.asarray(t, dtype=float)
    if len(curve.jump_times) == 0:
        out = np.ones(t.shape)
        return float(out) if out.ndim == 0 else out
    idx = np.searchsorted(curve.jump_times, t, side="left")
    padded = np.concatenate([[1.0], curve.values])
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


def beran_inverse(curve, u):
    """Generalized inverse inf{t : S(t) <= u}.

    Levels below the curve's minimum map to the largest jump time (bounded
    times are required downstream); occurrences are counted for diagnostics.
    """
    global _inverse_clip_count
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ValueError("survival level must lie in (0, 1)")
    if len(curve.jump_times) == 0:
        _inverse_clip_count += int(u.size)
        out = np.full(u.shape, curve.t_max)
        return float(out[0]) if scalar else out
    # first jump index whose value is <= u
    idx = np.searchsorted(-curve.values, -u, side="left")
    clipped = idx >= len(curve.values)
    _inverse_clip_count += int(np.count_nonzero(clipped))
    idx = np.where(clipped, len(curve.values) - 1, idx)
    out = curve.jump_times[idx]
    return float(out[0]) if scalar else out


def _jump_masses(curve):
    if curve._cum_mass is None:
        prev = np.concatenate([[1.0], curve.values[:-1]])
        curve._cum_mass = np.cumsum(prev - curve.values)
    return curve._cum_mass


def km_conditional_sample(curve, lower, rng):
    """Draw from the estimated distribution conditioned on exceeding ``lower``.

    Residual mass of an improper curve (or an empty conditional support of a
    proper one) yields ``inf``: downstream, no censoring occurs.
    """
    if len(curve.jump_times) == 0:
        return float("inf")
    cum = _jump_masses(curve)
    start = int(np.searchsorted(curve.jump_times, lower, side="right"))
    below = cum[start - 1] if start > 0 else 0.0
    residual = 1.0 - cum[-1] if not curve.proper else 0.0
    total = (cum[-1] - below) + residual
    if total <= 0.0:
        return float("inf")
    v = below + rng.random() * total
    if v >= cum[-1]:
        return float("inf")
    idx = int(np.searchsorted(cum, v, side="right"))
    idx = min(idx, len(curve.jump_times) - 1)
    return float(curve.jump_times[idx])


# ---------------------------------------------------------------------------
# margin-set helpers used by the two-stage pipeline
# ---------------------------------------------------------------------------

@dataclass
class BeranMargins:
    """Per-cluster conditional margin curves for both members."""

    curves1: list
    curves2: list
    h1: float
    h2: float

    def curve(self, k, i):
        return (self.curves1 if k == 1 else self.curves2)[i]


def fit_beran_margins(data, h1, h2):
    spec1, spec2 = KernelSpec(h1), KernelSpec(h2)
    curves1 = [beran_fit(data.y1, data.d1, data.x, xi, spec1) for xi in data.x]
    curves2 = [beran_fit(data.y2, data.d2, data.x, xi, spec2) for xi in data.x]
    return BeranMargins(curves1=curves1, curves2=curves2, h1=h1, h2=h2)


def beran_pseudo_observations(data, margins):
    """Pseudo-observations through the fitted conditional margins.

    Step values are kept a finite-sample margin 1/(2n) away from {0, 1}:
    the estimate reaches exactly zero at the largest event in its own
    neighborhood, and a raw machine-epsilon clamp there hands single
    observations unbounded influence over the copula density likelihood.
    """
    n = data.n
    delta = 1.0 / (2.0 * n)
    u1 = np.array([beran_eval(margins.curves1[i], data.y1[i]) for i in range(n)])
    u2 = np.array([beran_eval(margins.curves2[i], data.y2[i]) for i in range(n)])
    u1 = np.clip(u1, delta, 1.0 - delta)
    u2 = np.clip(u2, delta, 1.0 - delta)
    return PseudoData(u1, u2, data.d1, data.d2)
