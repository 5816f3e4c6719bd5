"""Closed-form Bayesian prediction for the scaled Rayleigh model (``mu = 0``).

Under the prior ``pi(sigma) ~ 1/sigma`` the posterior of ``sigma`` is
inverted gamma ``(d, delta/2)``, and ``p_k(U) = delta / (delta + k U^2)`` is
Beta(d, m) a posteriori. Every interval and point predictor below follows
from that pivot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .exceptions import ImproperPosteriorError
from .model import HybridSample, PredictionTarget, delta
from .numerics import (
    RootSpec,
    bracketed_root,
    inverse_incomplete_beta,
    regularized_incomplete_beta,
)

__all__ = [
    "ScaledPosterior",
    "PredictionInterval",
    "PointPredictions",
    "scaled_posterior",
    "p_k",
    "scaled_predictive_pdf",
    "scaled_predictive_survival",
    "scaled_equitailed_pi",
    "scaled_hpd_pi",
    "scaled_point_predictions",
]


@dataclass(frozen=True)
class ScaledPosterior:
    """Inverted-gamma posterior of ``sigma`` with shape ``d`` and scale ``half_delta``."""

    d: int
    half_delta: float

    def pdf(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        a, b = self.d, self.half_delta
        with np.errstate(divide="ignore"):
            logp = a * math.log(b) - special.gammaln(a) - (a + 1) * np.log(sigma) - b / sigma
        out = np.where(sigma > 0, np.exp(logp), 0.0)
        return float(out) if out.ndim == 0 else out

    def mean(self) -> float:
        if self.d <= 1:
            return math.inf
        return self.half_delta / (self.d - 1)


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    level: float
    kind: Literal["equi-tailed", "hpd", "wald"]

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"empty interval ({self.lower}, {self.upper})")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value) -> bool:
        return self.lower < value < self.upper


@dataclass(frozen=True)
class PointPredictions:
    sel: float
    ael: float
    mode: float


def _checked_delta(s: HybridSample) -> float:
    if s.d < 1:
        raise ImproperPosteriorError("no failures observed (d = 0): posterior is improper")
    dlt = delta(s)
    if not dlt > 0:
        raise ImproperPosteriorError("delta(x) must be positive")
    return dlt


def scaled_posterior(s: HybridSample) -> ScaledPosterior:
    return ScaledPosterior(s.d, _checked_delta(s) / 2)


def p_k(y, s: HybridSample, k: int):
    dlt = delta(s)
    y = np.asarray(y, dtype=float)
    out = dlt / (dlt + k * y * y)
    return float(out) if out.ndim == 0 else out


def scaled_predictive_pdf(u, s: HybridSample, t: PredictionTarget):
    dlt = _checked_delta(s)
    d, m, k = s.d, t.m, t.k
    u = np.asarray(u, dtype=float)
    pos = u > 0
    uu = np.where(pos, u, 1.0)
    p = dlt / (dlt + k * uu * uu)
    log_f = (math.log(2) - special.betaln(d, m) - np.log(uu)
             + d * np.log(p) + m * np.log1p(-p))
    out = np.where(pos, np.exp(log_f), 0.0)
    return float(out) if out.ndim == 0 else out


def scaled_predictive_survival(z, s: HybridSample, t: PredictionTarget):
    """``P(U > z | x) = I(d, m, p_k(z))``."""
    _checked_delta(s)
    z = np.asarray(z, dtype=float)
    p = np.where(z > 0, p_k(np.maximum(z, 0.0), s, t.k), 1.0)
    out = special.betainc(s.d, t.m, p)
    return float(out) if out.ndim == 0 else out


def _from_p(p, dlt, k):
    """Invert ``p = delta / (delta + k u^2)`` for ``u > 0``."""
    return math.sqrt((1 - p) * dlt / (k * p))


def scaled_equitailed_pi(s: HybridSample, t: PredictionTarget, alpha: float = 0.05) -> PredictionInterval:
    dlt = _checked_delta(s)
    _check_alpha(alpha)
    # upper alpha/2 quantile of Beta(d, m) gives the lower endpoint
    p_lo = inverse_incomplete_beta(s.d, t.m, 1 - alpha / 2)
    p_hi = inverse_incomplete_beta(s.d, t.m, alpha / 2)
    return PredictionInterval(_from_p(p_lo, dlt, t.k), _from_p(p_hi, dlt, t.k), 1 - alpha, "equi-tailed")


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def _scaled_mode(dlt, d, m, k):
    return math.sqrt((2 * m - 1) * dlt / (k * (2 * d + 1)))


def scaled_hpd_pi(
    s: HybridSample, t: PredictionTarget, alpha: float = 0.05, spec: RootSpec | None = None,
) -> PredictionInterval:
    """Shortest ``1 - alpha`` interval; endpoints share the same predictive density.

    Solved as nested brackets in ``log u``: for each lower endpoint left of
    the mode the density-matching upper endpoint is found by Brent, then the
    lower endpoint is tuned until the enclosed mass is ``1 - alpha``.
    """
    dlt = _checked_delta(s)
    _check_alpha(alpha)
    spec = spec or RootSpec(tolerance=1e-14, relative_tolerance=1e-14)
    d, m, k = s.d, t.m, t.k
    log_mode = math.log(_scaled_mode(dlt, d, m, k))

    def log_density(v):  # up to a constant, in v = log u
        return (2 * m - 1) * v - (d + m) * math.log(dlt + k * math.exp(2 * v))

    peak = log_density(log_mode)

    def upper_for(v1):
        level = log_density(v1)
        hi = log_mode + 1.0
        while log_density(hi) > level:
            hi += 2 * (hi - log_mode)
        return bracketed_root(lambda v: log_density(v) - level, log_mode, hi, spec)

    def survival(v):
        return regularized_incomplete_beta(d, m, dlt / (dlt + k * math.exp(2 * v)))

    def coverage_gap(v1):
        if log_density(v1) >= peak:
            return -(1 - alpha)
        return survival(v1) - survival(upper_for(v1)) - (1 - alpha)

    lo = log_mode - 1.0
    while coverage_gap(lo) < 0:
        lo -= 2 * (log_mode - lo)
    v1 = bracketed_root(coverage_gap, lo, log_mode, spec)
    v2 = upper_for(v1)
    return PredictionInterval(math.exp(v1), math.exp(v2), 1 - alpha, "hpd")


def scaled_point_predictions(s: HybridSample, t: PredictionTarget) -> PointPredictions:
    """Posterior-predictive mean, median and mode."""
    dlt = _checked_delta(s)
    d, m, k = s.d, t.m, t.k
    root = math.sqrt(dlt / k)
    sel = math.exp(special.betaln(d - 0.5, m + 0.5) - special.betaln(d, m)) * root
    med = inverse_incomplete_beta(d, m, 0.5)
    ael = _from_p(med, dlt, k)
    return PointPredictions(sel=sel, ael=ael, mode=_scaled_mode(dlt, d, m, k))
