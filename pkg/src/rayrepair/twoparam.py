"""Bayesian prediction under the two-parameter Rayleigh model.

The prior is ``pi(mu, sigma) ~ exp(-tau (mu - xi)^2) / sigma``. Integrating
``sigma`` out analytically leaves one-dimensional integrals over the location
``t = mu`` on ``(-inf, x_1)``, all weighted by

    W(t) = exp(-tau (t - xi)^2) prod_i (x_i - t) / delta*(t)^d,

whose reciprocal integral is the normalising constant ``A_1``. Conditional on
``mu = t`` the predictand behaves like the scaled model shifted by ``t``, so
every predictive quantity is a ``W``-weighted integral of a closed-form
kernel (the ``g`` kernel of :func:`g_kernel`).

:class:`MuPosterior` integrates ``W`` adaptively once per (sample, prior) and
keeps the resulting Gauss-Kronrod panels as a composite rule. Predictive
integrals reuse those nodes; the one panel straddling ``t = u`` (when
``u < x_1``) is re-split at ``u`` so the kink of the integrand sits on a
panel edge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .exceptions import ConvergenceError, ImproperPosteriorError
from .model import HybridSample, PredictionTarget, delta_star
from .numerics import (
    QuadratureSpec,
    RootSpec,
    gauss_kronrod_nodes,
    left_improper_quadrature,
    safeguarded_newton,
    unimodal_maximize,
)
from .scaled import PointPredictions, PredictionInterval

__all__ = [
    "Hyperparams",
    "MuPosterior",
    "PredictiveContext",
    "UnimodalityWarning",
    "g_kernel",
    "normalizing_constant",
    "predictive_pdf",
    "predictive_survival",
    "equitailed_pi",
    "hpd_pi",
    "PredictionResult",
    "predict",
    "point_sel",
    "point_ael",
    "point_mode",
    "sensitivity_curve",
]


class UnimodalityWarning(RuntimeWarning):
    """The predictive density showed more than one local peak on a coarse grid."""


@dataclass(frozen=True)
class Hyperparams:
    """Normal prior on ``mu`` with mean ``xi`` and variance ``1 / (2 tau)``."""

    xi: float = 0.0
    tau: float = 0.5

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau!r}")
        if not math.isfinite(self.xi):
            raise ValueError("xi must be finite")


def _tail_series(p, d, m):
    """``I(d, m, p)`` for integer ``m`` as the finite negative-binomial sum."""
    q = 1.0 - p
    term = p ** d
    acc = term.copy()
    for j in range(1, m):
        term = term * q * ((d + j - 1) / j)
        acc += term
    return acc


class MuPosterior:
    """Marginal posterior of the location ``mu`` for one sample and prior.

    Parameters
    ----------
    sample : HybridSample
        Observed data; needs ``d >= 1`` and some spread in the combined
        observed and censored times.
    hyper : Hyperparams
        Prior mean and precision for ``mu``.
    quad : QuadratureSpec, optional
        Tolerances for the adaptive integral defining ``A_1``.
    """

    def __init__(self, sample: HybridSample, hyper: Hyperparams, quad: QuadratureSpec | None = None):
        if sample.d < 1:
            raise ImproperPosteriorError("no failures observed (d = 0): posterior is improper")
        self.sample = sample
        self.hyper = hyper
        self.quad = quad or QuadratureSpec()
        self.d = sample.d
        self.x1 = sample.x1
        n, d = sample.n, sample.d
        total = sample.x.sum() + (n - d) * sample.t0
        self._centre = total / n
        self._floor = float(delta_star(self._centre, sample))
        if not self._floor > 1e-300:
            raise ImproperPosteriorError("observed and censored times are all equal")
        self.scale = math.sqrt(self._floor / n)

        probe = self.x1 - self.scale * 2.0 ** np.arange(-12.0, 13.0)
        if hyper.xi < self.x1:
            probe = np.append(probe, hyper.xi)
        log_c = float(np.max(self.log_weight(probe)))

        def weight(t):
            return np.exp(self.log_weight(t) - log_c)

        breaks = self.x1 - self.scale * 2.0 ** np.arange(-6.0, 64.0)
        width = 1.0 / math.sqrt(hyper.tau)
        breaks = np.concatenate([breaks, hyper.xi + width * np.arange(-8.0, 9.0)])
        res = left_improper_quadrature(weight, self.x1, hyper.tau, hyper.xi, self.quad, breakpoints=breaks)
        if not res.converged or not res.value > 0:
            raise ConvergenceError(
                f"normalising integral did not converge (value={res.value:.3g}, error={res.error:.3g})"
            )
        self.integral = res
        self.log_norm = log_c + math.log(res.value)
        self.panels = res.panels
        nodes, weights = gauss_kronrod_nodes(self.panels)
        self.nodes = nodes
        self.delta_nodes = self._delta_star(nodes)
        self.weights = weights * np.exp(self.log_weight(nodes) - self.log_norm)

    @property
    def log_a1(self) -> float:
        return -self.log_norm

    @property
    def a1(self) -> float:
        """Normalising constant ``A_1(x)``."""
        return math.exp(-self.log_norm)

    def _delta_star(self, t):
        return self.sample.n * (t - self._centre) ** 2 + self._floor

    def log_weight(self, t):
        """``log W(t)``; ``-inf`` for ``t >= x_1``."""
        t = np.asarray(t, dtype=float)
        gap = self.sample.x - t[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(gap).sum(axis=-1)
            out = (-self.hyper.tau * (t - self.hyper.xi) ** 2 + logs
                   - self.d * np.log(self._delta_star(t)))
        return np.where(t < self.x1, out, -np.inf)

    def density(self, t):
        """Normalised posterior density of ``mu``."""
        return np.exp(self.log_weight(t) - self.log_norm)

    def _split(self, values):
        """Locate values strictly inside a panel that lies below ``x_1``."""
        lo, hi = self.panels[:, 0], self.panels[:, 1]
        idx = np.searchsorted(lo, values, side="right") - 1
        inside = (idx >= 0) & (values < self.x1)
        idx = np.clip(idx, 0, len(lo) - 1)
        inside &= (values > lo[idx]) & (values < hi[idx])
        return idx, inside

    def _piece_weights(self, a, b):
        nodes, w = gauss_kronrod_nodes(np.column_stack([a, b]))
        return nodes, w * np.exp(self.log_weight(nodes) - self.log_norm)

    def mixture(self, points, kernel, above=0.0):
        """``int W(t) K(point - t, delta*(t)) dt / int W`` for each point.

        ``kernel(v, delta)`` is evaluated where ``v = point - t > 0``; nodes
        with ``t >= point`` contribute the constant ``above``. A kernel may
        stack several channels on a leading axis, in which case ``above``
        holds one constant per channel and the result is ``(channels, points)``.
        """
        points = np.atleast_1d(np.asarray(points, dtype=float))
        above = np.asarray(above, dtype=float)
        v = points[:, None, None] - self.nodes[None]
        pos = v > 0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            kv = kernel(np.where(pos, v, 1.0), self.delta_nodes[None])
        vals = np.where(pos, kv, above.reshape(above.shape + (1, 1, 1)))
        out = np.einsum("...zpq,pq->...z", vals, self.weights)

        idx, inside = self._split(points)
        if np.any(inside):
            rows = np.flatnonzero(inside)
            pid = idx[rows]
            z = points[rows]
            out[..., rows] -= np.einsum("...rq,rq->...r", vals[..., rows, pid, :], self.weights[pid])
            t_left, w_left = self._piece_weights(self.panels[pid, 0], z)
            vl = z[:, None] - t_left
            pl = vl > 0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                kl = kernel(np.where(pl, vl, 1.0), self._delta_star(t_left))
            kl = np.where(pl, kl, above.reshape(above.shape + (1, 1)))
            out[..., rows] += np.einsum("...rq,rq->...r", kl, w_left)
            if np.any(above != 0.0):
                _, w_right = self._piece_weights(z, self.panels[pid, 1])
                out[..., rows] += above[..., None] * w_right.sum(axis=1)
        return out

    def expectation(self, func):
        """Posterior expectation of ``func(t, delta*(t))`` over ``mu``."""
        return float(np.sum(self.weights * func(self.nodes, self.delta_nodes)))


@dataclass(frozen=True, eq=False)
class PredictiveContext:
    """A fitted location posterior paired with the repair time to predict."""

    posterior: MuPosterior
    target: PredictionTarget

    @classmethod
    def build(cls, sample, hyper, target, quad=None) -> "PredictiveContext":
        return cls(MuPosterior(sample, hyper, quad), target)

    def with_target(self, target: PredictionTarget) -> "PredictiveContext":
        return PredictiveContext(self.posterior, target)

    @property
    def sample(self) -> HybridSample:
        return self.posterior.sample

    @property
    def hyper(self) -> Hyperparams:
        return self.posterior.hyper

    @property
    def quad(self) -> QuadratureSpec:
        return self.posterior.quad

    @property
    def a1(self) -> float:
        return self.posterior.a1

    @cached_property
    def _log_beta(self) -> float:
        return float(special.betaln(self.posterior.d, self.target.m))

    @cached_property
    def _range(self) -> float:
        x = self.sample.x
        spread = max(x[-1] - x[0], self.sample.t0 - x[0])
        return spread if spread > 0 else self.posterior.scale

    def evaluate(self, z, channels=("survival", "pdf")):
        """Predictive quantities at ``z``, one row per requested channel.

        Channels are ``"survival"`` (``P(U > z | x)``), ``"pdf"`` (``h*``)
        and ``"slope"`` (``dh*/du``). Differentiating under the integral
        sign is legitimate because the kernel vanishes at ``t = u``.
        """
        z = np.asarray(z, dtype=float)
        d, m, k = self.posterior.d, self.target.m, self.target.k
        log_2b = math.log(2) - self._log_beta

        def kernel(v, dlt):
            p = dlt / (dlt + k * v * v)
            rows = []
            if "pdf" in channels or "slope" in channels:
                dens = np.exp(log_2b - np.log(v) + d * np.log(p) + m * np.log1p(-p))
            for name in channels:
                if name == "survival":
                    rows.append(_tail_series(p, d, m))
                elif name == "pdf":
                    rows.append(dens)
                elif name == "slope":
                    rows.append(dens * (2 * m * p - 1 - 2 * d * (1 - p)) / v)
                else:
                    raise ValueError(f"unknown channel {name!r}")
            return np.stack(rows)

        above = [1.0 if name == "survival" else 0.0 for name in channels]
        out = self.posterior.mixture(z.ravel(), kernel, above)
        return out.reshape((len(channels),) + z.shape)

    def survival(self, z):
        return self.evaluate(np.atleast_1d(z), ("survival",))[0]

    def pdf(self, u):
        return self.evaluate(np.atleast_1d(u), ("pdf",))[0]

    def slope(self, u):
        return self.evaluate(np.atleast_1d(u), ("slope",))[0]


def g_kernel(t, u, j: int, ctx: PredictiveContext):
    """The integrand kernel

        k^j exp(-tau (t - xi)^2) (u - t)^(2j) prod_i (x_i - t)
        / [k (u - t)^2 + delta*(t)]^(d + j)

    vectorised over ``t``, with ``0^0 = 1``. Requires ``t < x_1`` and ``u >= t``.
    """
    t = np.asarray(t, dtype=float)
    s, h = ctx.sample, ctx.hyper
    if np.any(t >= s.x1):
        raise ValueError("g kernel requires t < x_1")
    if np.any(u < t):
        raise ValueError("g kernel requires u >= t")
    k, d = ctx.target.k, s.d
    gap = u - t
    log_rest = (j * math.log(k) - h.tau * (t - h.xi) ** 2
                + np.log(s.x - t[..., None]).sum(axis=-1)
                - (d + j) * np.log(k * gap * gap + delta_star(t, s)))
    out = np.power(gap, 2 * j) * np.exp(log_rest)
    return float(out) if out.ndim == 0 else out


def normalizing_constant(sample, hyper, quad=None) -> float:
    """``A_1(x)``: reciprocal of the integral of ``W`` over ``mu < x_1``."""
    return MuPosterior(sample, hyper, quad).a1


def _out(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values.reshape(np.shape(like))


def predictive_pdf(u, ctx: PredictiveContext):
    return _out(ctx.pdf(u), u)


def predictive_survival(z, ctx: PredictiveContext):
    return _out(ctx.survival(z), z)


def _solve_survival(ctx, levels, spec):
    """Quantiles of the predictive law: ``z`` with ``survival(z) = level``.

    The bracket starts at ``x_1 -/+ 5 * range`` and doubles its distance
    from ``x_1`` until every level is enclosed; Newton steps use
    ``dS/dz = -h*``.
    """
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    x1, span = ctx.sample.x1, ctx._range
    lo, hi = x1 - 5 * span, x1 + 5 * span
    for _ in range(60):
        s_lo, s_hi = ctx.survival(np.array([lo, hi]))
        if s_lo > levels.max() and s_hi < levels.min():
            break
        if s_lo <= levels.max():
            lo = x1 - 2 * (x1 - lo)
        if s_hi >= levels.min():
            hi = x1 + 2 * (hi - x1)
    else:
        raise ConvergenceError(f"could not bracket the predictive survival levels {levels}")

    def fdf(z):
        surv, dens = ctx.evaluate(z, ("survival", "pdf"))
        return surv - levels, -dens

    return safeguarded_newton(fdf, np.full(levels.shape, lo), np.full(levels.shape, hi), spec)


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


_ROOT = RootSpec(tolerance=1e-13, relative_tolerance=1e-13)


def equitailed_pi(ctx: PredictiveContext, alpha: float = 0.05, spec: RootSpec | None = None) -> PredictionInterval:
    _check_alpha(alpha)
    lower, upper = _solve_survival(ctx, [1 - alpha / 2, alpha / 2], spec or _ROOT)
    return PredictionInterval(float(lower), float(upper), 1 - alpha, "equi-tailed")


def point_sel(ctx: PredictiveContext) -> float:
    """Posterior-predictive mean."""
    d, m, k = ctx.posterior.d, ctx.target.m, ctx.target.k
    c = math.exp(special.gammaln(m + 0.5) + special.gammaln(d - 0.5)
                 - special.gammaln(m) - special.gammaln(d)) / math.sqrt(k)
    return ctx.posterior.expectation(lambda t, dlt: c * np.sqrt(dlt) + t)


def point_ael(ctx: PredictiveContext, spec: RootSpec | None = None) -> float:
    """Posterior-predictive median."""
    return float(_solve_survival(ctx, 0.5, spec or _ROOT)[0])


def point_mode(ctx: PredictiveContext) -> float:
    """Posterior-predictive mode (the density is taken to be unimodal).

    The bracket grows outward from the predictive mean until the density
    falls on both flanks; the peak is then the root of the analytic slope.
    """
    start = point_sel(ctx)
    step = 0.25 * ctx._range
    lo, hi = start - step, start + step
    for _ in range(60):
        g_lo, g_hi = ctx.slope(np.array([lo, hi]))
        if g_lo > 0 > g_hi:
            break
        if g_lo <= 0:
            lo = start - 2 * (start - lo)
        if g_hi >= 0:
            hi = start + 2 * (hi - start)
    else:
        raise ConvergenceError("could not bracket the predictive mode")
    return unimodal_maximize(
        lambda u: float(ctx.pdf(u)[0]), lo, hi, slope=lambda u: float(ctx.slope(u)[0]),
    )[0]


def _outward(h, start, level, direction, span):
    """First point beyond ``start`` (stepping geometrically) with density <= level."""
    step = span
    z = start
    for _ in range(200):
        if h(z) <= level:
            return z
        z = z + direction * step
        step *= 2
    raise ConvergenceError("density did not fall below the HPD level")


def _check_single_peak(ctx, lo, hi):
    grid = np.linspace(lo, hi, 65)
    vals = ctx.pdf(grid)
    diff = np.diff(vals)
    tol = 1e-9 * vals.max()
    signs = np.sign(np.where(np.abs(diff) > tol, diff, 0.0))
    signs = signs[signs != 0]
    turns = np.count_nonzero((signs[:-1] > 0) & (signs[1:] < 0))
    if turns > 1:
        warnings.warn(
            f"predictive density has {turns} local maxima on a coarse grid; "
            "the HPD interval assumes a single peak", UnimodalityWarning, stacklevel=3,
        )


def _hpd_newton(ctx, alpha, start, mode, spec, max_iter=30):
    """Newton on ``S(w1) - S(w2) = 1 - alpha``, ``log h(w1) = log h(w2)``.

    Started from the equi-tailed endpoints, which are already close. Steps
    are halved to keep ``w1 < mode < w2``. Returns ``None`` if the iteration
    does not settle, leaving the caller to fall back to the level-set method.
    """
    w = np.array(start, dtype=float)
    for _ in range(max_iter):
        surv, dens, dh = ctx.evaluate(w, ("survival", "pdf", "slope"))
        if not np.all(dens > 0):
            return None
        f = np.array([surv[0] - surv[1] - (1 - alpha), math.log(dens[0] / dens[1])])
        if abs(f[0]) <= spec.tolerance and abs(f[1]) <= spec.tolerance:
            return w
        jac = np.array([[-dens[0], dens[1]], [dh[0] / dens[0], -dh[1] / dens[1]]])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        for _ in range(40):
            trial = w + step
            if trial[0] < mode < trial[1]:
                break
            step *= 0.5
        else:
            return None
        w = trial
    return None


def hpd_pi(ctx: PredictiveContext, alpha: float = 0.05, spec: RootSpec | None = None,
           *, equitailed: PredictionInterval | None = None, mode: float | None = None) -> PredictionInterval:
    """Highest-predictive-density interval with coverage ``1 - alpha``.

    The two defining equations (coverage and equal density at the ends) are
    first attacked by a two-dimensional Newton iteration from the
    equi-tailed endpoints. If that fails to settle, the problem is solved on
    the density height instead: for a level ``lam`` the crossing points on
    either side of the mode are found by safeguarded Newton, and ``lam`` is
    tuned so that the predictive mass between them is ``1 - alpha``. The
    equi-tailed endpoints bracket the answer there, since the optimal level
    lies between the densities at those two points.

    ``equitailed`` and ``mode`` may be passed in when already computed.
    """
    _check_alpha(alpha)
    spec = spec or _ROOT
    eq = equitailed or equitailed_pi(ctx, alpha, spec)
    mode = point_mode(ctx) if mode is None else mode

    def h(u):
        return float(ctx.pdf(u)[0])

    h_lo, h_hi = ctx.pdf(np.array([eq.lower, eq.upper]))
    lam_lo, lam_hi = min(h_lo, h_hi), max(h_lo, h_hi)
    span = 0.05 * eq.width
    left = _outward(h, eq.lower, lam_lo, -1.0, span)
    right = _outward(h, eq.upper, lam_lo, 1.0, span)
    _check_single_peak(ctx, left, right)

    w = _hpd_newton(ctx, alpha, [eq.lower, eq.upper], mode, spec)
    if w is not None:
        return PredictionInterval(float(w[0]), float(w[1]), 1 - alpha, "hpd")
    return _hpd_level_set(ctx, alpha, spec, eq, mode, left, right, lam_lo, lam_hi)


def _hpd_level_set(ctx, alpha, spec, eq, mode, left, right, lam_lo, lam_hi):
    guess = np.array([eq.lower, eq.upper])

    def crossings(log_lam):
        def fdf(w):
            dens, slope = ctx.evaluate(w, ("pdf", "slope"))
            with np.errstate(divide="ignore"):
                return np.log(dens) - log_lam, slope / dens

        w = safeguarded_newton(fdf, [left, mode], [mode, right], spec, x0=guess)
        guess[:] = w
        return w

    def coverage(log_lams):
        # gap and its derivative in log(lam); dw/dlog(lam) = h / h'
        gaps, slopes = [], []
        for log_lam in np.ravel(log_lams):
            w = crossings(log_lam)
            surv, dens, dh = ctx.evaluate(w, ("survival", "pdf", "slope"))
            gaps.append(surv[0] - surv[1] - (1 - alpha))
            slopes.append(dens[1] ** 2 / dh[1] - dens[0] ** 2 / dh[0])
        shape = np.shape(log_lams)
        return np.reshape(gaps, shape), np.reshape(slopes, shape)

    if lam_hi - lam_lo <= 1e-15 * lam_hi:
        log_lam = math.log(lam_lo)
    else:
        outer = RootSpec(tolerance=1e-12, relative_tolerance=1e-15)
        log_lam = float(safeguarded_newton(coverage, math.log(lam_lo), math.log(lam_hi), outer)[0])
    w1, w2 = crossings(log_lam)
    return PredictionInterval(float(w1), float(w2), 1 - alpha, "hpd")


@dataclass(frozen=True)
class PredictionResult:
    """Both 100(1 - alpha)% intervals and the three Bayes point predictors."""

    target: PredictionTarget
    equitailed: PredictionInterval
    hpd: PredictionInterval
    points: PointPredictions


def predict(ctx: PredictiveContext, alpha: float = 0.05, spec: RootSpec | None = None) -> PredictionResult:
    """Every interval and point predictor for one target, sharing the solves."""
    _check_alpha(alpha)
    spec = spec or _ROOT
    lower, median, upper = _solve_survival(ctx, [1 - alpha / 2, 0.5, alpha / 2], spec)
    eq = PredictionInterval(float(lower), float(upper), 1 - alpha, "equi-tailed")
    mode = point_mode(ctx)
    hpd = hpd_pi(ctx, alpha, spec, equitailed=eq, mode=mode)
    points = PointPredictions(sel=point_sel(ctx), ael=float(median), mode=mode)
    return PredictionResult(ctx.target, eq, hpd, points)


def sensitivity_curve(sample, target, xi: float = 0.0, l_values=(-2, -1, 0, 1, 2), quad=None):
    """Posterior-predictive mean for ``tau = 0.5 * 10**(-l)`` over ``l_values``."""
    curve = []
    for l in l_values:
        ctx = PredictiveContext.build(sample, Hyperparams(xi, 0.5 * 10.0 ** (-l)), target, quad)
        curve.append((l, point_sel(ctx)))
    return curve
