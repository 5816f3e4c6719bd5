"""Special functions, quadrature and one-dimensional solvers.

The special functions are thin, domain-checked wrappers over
:mod:`scipy.special`. The quadrature is a vectorised adaptive
Gauss-Kronrod (G7/K15) scheme: the integrand is called with whole arrays of
abscissae, and every panel that needs refining in a pass is evaluated in a
single call. The panels of a finished integration are returned so callers can
reuse them as a fixed composite rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special

from .exceptions import ConvergenceError

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "RootSpec",
    "log_gamma",
    "regularized_incomplete_beta",
    "inverse_incomplete_beta",
    "chi_square_upper_quantile",
    "gauss_kronrod_nodes",
    "adaptive_quadrature",
    "left_improper_quadrature",
    "bracketed_root",
    "safeguarded_newton",
    "unimodal_maximize",
]

# Kronrod 15-point abscissae on [0, 1] (the rule is symmetric) and weights;
# the 7-point Gauss rule uses every odd-indexed Kronrod node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[1:7:2] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[9:14:2] = _WG[2::-1]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class RootSpec:
    tolerance: float = 1e-12
    relative_tolerance: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if not (self.tolerance > 0 and self.relative_tolerance > 0):
            raise ValueError("root tolerances must be positive")


@dataclass(frozen=True, eq=False)
class QuadratureResult:
    """Outcome of an adaptive integration.

    ``panels`` is an ``(n, 2)`` array of the final subintervals, sorted.
    """

    value: float
    error: float
    converged: bool
    panels: np.ndarray

    def __float__(self):
        return float(self.value)


def _require_positive_finite(x, name):
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be positive and finite, got {x!r}")
    return x


def log_gamma(x: float) -> float:
    """Natural logarithm of the gamma function for ``x > 0``."""
    x = _require_positive_finite(x, "x")
    return float(special.gammaln(x))


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete beta function ``I(a, b, x)``.

    Accepts scalars or arrays for ``x``.
    """
    _require_positive_finite(a, "a")
    _require_positive_finite(b, "b")
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    out = special.betainc(a, b, x)
    return float(out) if out.ndim == 0 else out


def inverse_incomplete_beta(a, b, p):
    """Inverse of :func:`regularized_incomplete_beta` in its third argument.

    This is the *lower* quantile of Beta(a, b). The upper ``gamma`` quantile
    of the same law is ``inverse_incomplete_beta(a, b, 1 - gamma)``.
    """
    _require_positive_finite(a, "a")
    _require_positive_finite(b, "b")
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    out = special.betaincinv(a, b, p)
    return float(out) if out.ndim == 0 else out


def chi_square_upper_quantile(df: float, gamma: float) -> float:
    """Value ``q`` with ``P(X > q) = gamma`` for ``X`` chi-square(``df``)."""
    if not df >= 1:
        raise ValueError(f"df must be >= 1, got {df!r}")
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma!r}")
    return float(special.chdtri(df, gamma))


def gauss_kronrod_nodes(panels):
    """Kronrod nodes and weights for every panel of an ``(n, 2)`` array.

    Returns ``(nodes, weights)``, both shaped ``(n, 15)``.
    """
    panels = np.asarray(panels, dtype=float).reshape(-1, 2)
    centre = 0.5 * (panels[:, 0] + panels[:, 1])
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    nodes = centre[:, None] + half[:, None] * _NODES[None, :]
    weights = half[:, None] * _KRONROD_W[None, :]
    return nodes, weights


def _evaluate(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


def _gk15(f, panels):
    """Kronrod estimate and QUADPACK-style error bound per panel."""
    nodes, _ = gauss_kronrod_nodes(panels)
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    fx = _evaluate(f, nodes)
    kronrod = fx @ _KRONROD_W
    gauss = fx @ _GAUSS_W
    mean = 0.5 * kronrod
    resabs = np.abs(fx) @ _KRONROD_W
    resasc = np.abs(fx - mean[:, None]) @ _KRONROD_W
    err = np.abs(kronrod - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    err = np.maximum(err, 50 * _EPS * resabs)
    return kronrod * half, err * np.abs(half)


def adaptive_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec | None = None,
    breakpoints=None,
) -> QuadratureResult:
    """Integrate a vectorised ``f`` over ``[lo, hi]``.

    ``f`` receives an ndarray of abscissae and must return values of the same
    shape. Optional ``breakpoints`` inside ``(lo, hi)`` seed the initial
    subdivision. Panels are bisected in batches, worst error first, until the
    summed error estimate meets ``max(absolute, relative * |value|)`` or the
    panel budget ``spec.max_subdivisions`` is spent; in the latter case the
    best estimate is returned with ``converged=False``.
    """
    spec = spec or QuadratureSpec()
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    edges = [lo, hi]
    if breakpoints is not None:
        inner = np.asarray(breakpoints, dtype=float).ravel()
        inner = inner[(inner > lo) & (inner < hi)]
        edges = np.unique(np.concatenate([[lo, hi], inner]))
    edges = np.asarray(edges, dtype=float)
    panels = np.column_stack([edges[:-1], edges[1:]])
    budget = max(spec.max_subdivisions, len(panels))
    values, errors = _gk15(f, panels)

    while True:
        total = values.sum()
        err = errors.sum()
        target = max(spec.absolute_tolerance, spec.relative_tolerance * abs(total))
        if err <= target:
            converged = True
            break
        room = budget - len(panels)
        if room <= 0:
            converged = False
            break
        # Bisect the largest-error panels that together carry the excess.
        order = np.argsort(errors)[::-1]
        excess = np.cumsum(errors[order])
        count = int(np.searchsorted(excess, err - 0.5 * target)) + 1
        count = max(1, min(count, room, len(panels)))
        pick = order[:count]
        widths = panels[pick, 1] - panels[pick, 0]
        mids = panels[pick, 0] + 0.5 * widths
        if np.any(widths <= 4 * _EPS * np.maximum(np.abs(mids), 1e-300)):
            converged = False
            break
        keep = np.ones(len(panels), dtype=bool)
        keep[pick] = False
        children = np.concatenate([
            np.column_stack([panels[pick, 0], mids]),
            np.column_stack([mids, panels[pick, 1]]),
        ])
        child_values, child_errors = _gk15(f, children)
        panels = np.concatenate([panels[keep], children])
        values = np.concatenate([values[keep], child_values])
        errors = np.concatenate([errors[keep], child_errors])

    order = np.argsort(panels[:, 0])
    return QuadratureResult(
        value=float(values.sum()),
        error=float(errors.sum()),
        converged=converged,
        panels=panels[order],
    )


def left_improper_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    upper: float,
    gaussian_rate: float,
    gaussian_center: float,
    spec: QuadratureSpec | None = None,
    breakpoints=None,
    tail_constant: float = 9.0,
) -> QuadratureResult:
    """Integrate ``f`` over ``(-inf, upper]`` for a Gaussian-dominated left tail.

    The caller guarantees ``|f(t)| <= C exp(-rate (t - center)^2) poly(t)``
    as ``t -> -inf``. The range is truncated at
    ``min(upper, center) - tail_constant / sqrt(rate)``; with the default
    constant the neglected Gaussian mass is below ``exp(-40.5)``.
    """
    rate = _require_positive_finite(gaussian_rate, "gaussian_rate")
    upper = float(upper)
    lower = min(upper, float(gaussian_center)) - tail_constant / math.sqrt(rate)
    return adaptive_quadrature(f, lower, upper, spec, breakpoints=breakpoints)


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    spec: RootSpec | None = None,
) -> float:
    """Root of ``f`` in ``[lo, hi]`` by Brent's method.

    Raises ``ValueError`` when ``f(lo)`` and ``f(hi)`` share a sign.
    """
    spec = spec or RootSpec()
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"root not bracketed: f({lo})={flo:.3g}, f({hi})={fhi:.3g}")
    scale = max(abs(lo), abs(hi))
    xtol = max(spec.relative_tolerance * scale, 1e-300)
    try:
        root, info = optimize.brentq(
            f, lo, hi, xtol=xtol, rtol=4 * _EPS,
            maxiter=spec.max_iterations, full_output=True, disp=False,
        )
    except RuntimeError as exc:  # pragma: no cover - brentq only raises on maxiter
        raise ConvergenceError(str(exc)) from exc
    if not info.converged:
        raise ConvergenceError(f"Brent iteration did not converge: {info.flag}")
    return float(root)


def safeguarded_newton(
    fdf: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    lo,
    hi,
    spec: RootSpec | None = None,
    x0=None,
) -> np.ndarray:
    """Solve ``f(x) = 0`` elementwise inside brackets ``[lo, hi]``.

    ``fdf`` maps an array of abscissae to ``(f, f')``. A Newton step is taken
    when it stays inside the current bracket and at least halves ``|f|``;
    otherwise the bracket is bisected, so convergence is guaranteed for a
    continuous ``f`` that changes sign on every bracket. Iteration stops once
    ``|f| <= spec.tolerance`` or the bracket is below the relative abscissa
    tolerance.
    """
    spec = spec or RootSpec()
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    n = lo.size
    f_lo, f_hi = fdf(np.stack([lo, hi]))[0]
    # an endpoint that already meets the tolerance is accepted as the root
    at_lo = np.abs(f_lo) <= spec.tolerance
    at_hi = (np.abs(f_hi) <= spec.tolerance) & ~at_lo
    if np.any((np.sign(f_lo) * np.sign(f_hi) > 0) & ~at_lo & ~at_hi):
        raise ValueError("root not bracketed on every interval")
    rising = f_lo < f_hi
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.array(x0, dtype=float, ndmin=1), lo, hi)
    x = np.where(at_lo, lo, np.where(at_hi, hi, x))
    lo, hi = np.where(at_hi, hi, lo), np.where(at_lo, lo, hi)
    f_prev = np.full(n, np.inf)
    xtol = spec.relative_tolerance * np.maximum(np.maximum(abs(lo), abs(hi)), 1e-300)
    for _ in range(spec.max_iterations):
        f, df = fdf(x)
        done = (np.abs(f) <= spec.tolerance) | (hi - lo <= xtol)
        if np.all(done):
            return x
        below = (f < 0) == rising
        lo = np.where(below & ~done, x, lo)
        hi = np.where(~below & ~done, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / df
        # after a bisection f_prev is reset to inf, so Newton gets another try
        ok = np.isfinite(step) & (step > lo) & (step < hi) & (np.abs(f) <= 0.5 * np.abs(f_prev))
        f_prev = np.where(ok, f, np.inf)
        x = np.where(done, x, np.where(ok, step, 0.5 * (lo + hi)))
    raise ConvergenceError(f"safeguarded Newton did not converge in {spec.max_iterations} steps")


def unimodal_maximize(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    spec: RootSpec | None = None,
    slope: Callable[[float], float] | None = None,
) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(argmax, max)``.

    With an analytic ``slope`` the peak is the bracketed root of ``f'``.
    Otherwise Brent's bounded minimiser locates the peak and a final secant
    iteration on the central-difference slope pushes the abscissa below the
    ``sqrt(eps)`` floor of a pure comparison search.
    """
    spec = spec or RootSpec()
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if slope is not None and slope(lo) > 0 > slope(hi):
        x = bracketed_root(slope, lo, hi, RootSpec(spec.tolerance, 1e-15, spec.max_iterations))
        return x, float(f(x))
    res = optimize.minimize_scalar(
        lambda x: -f(x), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12 * max(abs(lo), abs(hi), 1e-300), "maxiter": 500},
    )
    x = float(res.x)
    x = _polish_peak(f, x, lo, hi)
    return x, float(f(x))


def _polish_peak(f, x, lo, hi):
    span = hi - lo
    h = max(abs(x), span * 1e-3) * 1e-5

    def slope(z):
        return (f(z + h) - f(z - h)) / (2 * h)

    a, b = max(lo, x - 1e4 * h), min(hi, x + 1e4 * h)
    if a + h >= b - h:
        return x
    try:
        sa, sb = slope(a + h), slope(b - h)
    except (ValueError, FloatingPointError):
        return x
    if not (sa > 0 > sb):
        return x
    try:
        z = optimize.brentq(slope, a + h, b - h, xtol=1e-15 * max(abs(x), 1e-300), rtol=4 * _EPS)
    except (ValueError, RuntimeError):
        return x
    return float(z) if f(z) >= f(x) else x
