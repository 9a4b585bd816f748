"""Uniform interface over the two conditional-margin estimators.

The two-stage pipeline (pseudo-observations, bootstrap inversion, margin
refitting) only needs survival evaluation and inversion per cluster member;
this wraps the Weibull and Beran routes behind one object.
"""

from dataclasses import dataclass

import numpy as np

from . import beran, weibull

WEIBULL = "weibull"
BERAN = "beran"


@dataclass
class FittedMargins:
    kind: str
    weibull_fits: tuple = None  # (member 1, member 2)
    beran_set: beran.BeranMargins = None

    def pseudo(self, data):
        """Pseudo-observations of ``data`` under the fitted margins."""
        if self.kind == WEIBULL:
            return weibull.pseudo_observations(data, *self.weibull_fits)
        return beran.beran_pseudo_observations(data, self.beran_set)

    def inverse_survival(self, k, u, data):
        """Member-k times whose conditional survival equals ``u`` (per cluster)."""
        if self.kind == WEIBULL:
            fit = self.weibull_fits[k - 1]
            return weibull.weibull_inverse_survival(fit, u, data.x)
        curves = self.beran_set.curves1 if k == 1 else self.beran_set.curves2
        return np.array([beran.beran_inverse(curves[i], u[i]) for i in range(len(u))])

    def refit(self, data):
        """Fit the same margin model (same kind, same bandwidths) to new data."""
        if self.kind == WEIBULL:
            return fit_margins(data, WEIBULL)
        return fit_margins(data, BERAN, bandwidths=(self.beran_set.h1, self.beran_set.h2))


def fit_margins(data, kind, bandwidths=None):
    if kind == WEIBULL:
        return FittedMargins(kind=WEIBULL, weibull_fits=weibull.fit_margins(data))
    if kind == BERAN:
        if bandwidths is None:
            raise ValueError("Beran margins need (h1, h2) bandwidths")
        h1, h2 = bandwidths
        return FittedMargins(kind=BERAN, beran_set=beran.fit_beran_margins(data, h1, h2))
    raise ValueError(f"unknown margin kind {kind!r}")
