"""Maximum likelihood under hybrid censoring and Wald plug-in prediction.

With ``sigma`` profiled out (``sigma(mu) = delta*(mu) / (2 d)``) the
log-likelihood of a hybrid-censored Rayleigh sample becomes

    l_p(mu) = sum log(x_i - mu) - d log(delta*(mu) / (2 d)) - d,   mu < x_1,

which tends to ``-inf`` both as ``mu -> x_1`` and as ``mu -> -inf``. The MLE
is its interior maximiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import (
    HybridSample,
    PredictionTarget,
    RayleighParams,
    delta,
    delta_star,
    krecord_pdf,
    rayleigh_cdf,
)
from .numerics import RootSpec, chi_square_upper_quantile, unimodal_maximize
from .scaled import PointPredictions, PredictionInterval

__all__ = [
    "MleFit",
    "profile_sigma",
    "profile_loglik",
    "mle_fit",
    "score_residuals",
    "ks_statistic",
    "wald_pi",
    "wald_predictive_pdf",
    "plugin_point_predictions",
]


@dataclass(frozen=True)
class MleFit:
    """Fitted location and scale.

    ``score_printed`` is the first likelihood equation with the
    ``-x_i^2 / (x_i - mu)`` numerator evaluated at the fit, kept for
    comparison only; ``score`` is the derivative of the log-likelihood
    actually maximised and should be close to zero at an interior fit.
    """

    mu_hat: float
    sigma_hat: float
    converged: bool
    boundary: bool
    loglik: float = math.nan
    score: float = math.nan
    score_printed: float = math.nan

    @property
    def params(self) -> RayleighParams:
        return RayleighParams(self.mu_hat, self.sigma_hat)


def profile_sigma(mu, s: HybridSample):
    """``sigma`` solving the second likelihood equation at fixed ``mu``."""
    if s.d < 1:
        raise ValueError("need at least one observed failure")
    return delta_star(mu, s) / (2 * s.d)


def profile_loglik(mu, s: HybridSample):
    """Log-likelihood at ``(mu, profile_sigma(mu))``; ``-inf`` for ``mu >= x_1``."""
    mu = np.asarray(mu, dtype=float)
    gap = s.x - mu[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(gap).sum(axis=-1)
        out = logs - s.d * np.log(delta_star(mu, s) / (2 * s.d)) - s.d
    out = np.where(mu < s.x1, out, -np.inf)
    return float(out) if out.ndim == 0 else out


def score_residuals(mu: float, sigma: float, s: HybridSample) -> tuple[float, float]:
    """First likelihood equation at ``(mu, sigma)``: (derived form, printed form)."""
    x = s.x
    linear = (np.sum(x - mu) + (s.n - s.d) * (s.t0 - mu)) / sigma
    derived = -np.sum(1.0 / (x - mu)) + linear
    printed = -np.sum(x * x / (x - mu)) + linear
    return float(derived), float(printed)


def mle_fit(s: HybridSample, scaled: bool = False) -> MleFit:
    """Maximum-likelihood estimates from a hybrid-censored sample.

    Parameters
    ----------
    s : HybridSample
    scaled : bool, default False
        Fix ``mu = 0`` and return ``sigma_hat = delta(x) / (2 d)``.

    Notes
    -----
    The two-parameter fit scans the profile log-likelihood on a geometric
    grid of distances below ``x_1`` (from ``1e-9`` to ``10`` sample ranges),
    then refines around the best grid point. ``boundary`` is set when the
    maximiser lies within ``1e-6`` ranges of ``x_1``.
    """
    if scaled:
        if s.d < 1:
            raise ValueError("scaled fit needs d >= 1")
        sigma = delta(s) / (2 * s.d)
        return MleFit(0.0, sigma, True, False, loglik=float(profile_loglik(0.0, s)) if s.x1 > 0 else math.nan)
    if s.d < 2:
        raise ValueError(f"two-parameter fit needs d >= 2, got d = {s.d}")
    x1 = s.x1
    span = max(s.x[-1] - x1, s.t0 - x1)
    if not span > 0:
        raise ValueError("degenerate sample: all observed and censored times coincide")

    gaps = span * np.geomspace(1e-9, 10.0, 241)
    grid = x1 - gaps
    values = profile_loglik(grid, s)
    i = int(np.argmax(values))
    lo = grid[min(i + 1, len(grid) - 1)]
    hi = grid[max(i - 1, 0)]
    interior = 0 < i < len(grid) - 1
    if lo < hi:
        mu, ll = unimodal_maximize(lambda m: profile_loglik(m, s), lo, hi, RootSpec())
    else:  # pragma: no cover - grid has 241 distinct points
        mu, ll = float(grid[i]), float(values[i])
    sigma = float(profile_sigma(mu, s))
    score, printed = score_residuals(mu, sigma, s)
    return MleFit(
        mu_hat=float(mu),
        sigma_hat=sigma,
        converged=bool(interior and np.isfinite(ll)),
        boundary=bool(x1 - mu <= 1e-6 * span),
        loglik=float(ll),
        score=score,
        score_printed=printed,
    )


def ks_statistic(data, p: RayleighParams) -> float:
    """Kolmogorov-Smirnov distance between the data and a Rayleigh law."""
    x = np.sort(np.asarray(data, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("data must be nonempty")
    n = x.size
    cdf = rayleigh_cdf(x, p)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - cdf, cdf - (i - 1) / n)))


def wald_pi(fit: MleFit, t: PredictionTarget, alpha: float = 0.05) -> PredictionInterval:
    """Plug-in interval from ``k (U - mu) ^ 2 / sigma ~ chi-square(2 m)``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    lo_q = chi_square_upper_quantile(2 * t.m, 1 - alpha / 2)
    hi_q = chi_square_upper_quantile(2 * t.m, alpha / 2)
    lower = fit.mu_hat + math.sqrt(fit.sigma_hat * lo_q / t.k)
    upper = fit.mu_hat + math.sqrt(fit.sigma_hat * hi_q / t.k)
    return PredictionInterval(lower, upper, 1 - alpha, "wald")


def wald_predictive_pdf(u, fit: MleFit, t: PredictionTarget):
    """The k-record density with the fitted parameters plugged in."""
    return krecord_pdf(u, fit.params, t)


def plugin_point_predictions(fit: MleFit, t: PredictionTarget) -> PointPredictions:
    """Mean, median and mode of the k-record law at the fitted parameters.

    Uses ``k (U - mu)^2 / (2 sigma) ~ Gamma(m, 1)``.
    """
    root = math.sqrt(2 * fit.sigma_hat / t.k)
    mean = math.exp(special.gammaln(t.m + 0.5) - special.gammaln(t.m))
    median = math.sqrt(special.gammaincinv(t.m, 0.5))
    mode = math.sqrt(t.m - 0.5)
    return PointPredictions(
        sel=fit.mu_hat + root * mean, ael=fit.mu_hat + root * median, mode=fit.mu_hat + root * mode,
    )
