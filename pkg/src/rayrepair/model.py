"""Rayleigh lifetimes, hybrid censoring and k-record densities.

Throughout, ``sigma`` is the divisor of the *squared* deviation,

    F(x) = 1 - exp(-(x - mu)^2 / (2 sigma)),   x > mu,

so it carries squared time units. It is not the classical Rayleigh scale
(which would be ``sqrt(sigma)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "RayleighParams",
    "HybridScheme",
    "HybridSample",
    "PredictionTarget",
    "rayleigh_pdf",
    "rayleigh_cdf",
    "rayleigh_quantile",
    "krecord_pdf",
    "sample_krecord",
    "sample_lifetimes",
    "extract_hybrid_sample",
    "simulate_hybrid_sample",
    "delta",
    "delta_star",
]


@dataclass(frozen=True)
class RayleighParams:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class HybridScheme:
    """Stop the test at ``min(X_{r:n}, T)``."""

    n: int
    r: int
    T: float

    def __post_init__(self):
        if not 1 <= self.r <= self.n:
            raise ValueError(f"need 1 <= r <= n, got r={self.r}, n={self.n}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")


@dataclass(frozen=True, eq=False)
class HybridSample:
    """Observed failure times ``x[0] <= ... <= x[d-1]`` and termination time ``t0``."""

    x: np.ndarray
    scheme: HybridScheme
    d: int
    t0: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if len(x) != self.d:
            raise ValueError("len(x) must equal d")
        if not 0 <= self.d <= self.scheme.r:
            raise ValueError("need 0 <= d <= r")
        if self.d and (np.any(np.diff(x) < 0) or x[-1] > self.t0):
            raise ValueError("x must be sorted and not exceed t0")

    @property
    def n(self) -> int:
        return self.scheme.n

    @property
    def x1(self) -> float:
        return float(self.x[0])

    def scaled(self, factor: float, shift: float = 0.0) -> "HybridSample":
        """Sample under the map ``t -> factor * t + shift`` (``factor > 0``)."""
        scheme = HybridScheme(self.scheme.n, self.scheme.r, factor * self.scheme.T + shift)
        return HybridSample(factor * self.x + shift, scheme, self.d, factor * self.t0 + shift)

    def __repr__(self):
        return (f"HybridSample(d={self.d}, n={self.n}, r={self.scheme.r}, "
                f"T={self.scheme.T}, t0={self.t0})")


@dataclass(frozen=True)
class PredictionTarget:
    """The ``m``-th minimal-repair time of a ``k``-component series system."""

    m: int
    k: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def rayleigh_pdf(x, p: RayleighParams):
    x = np.asarray(x, dtype=float)
    z = np.maximum(x - p.mu, 0.0)
    out = np.where(x > p.mu, z / p.sigma * np.exp(-z * z / (2 * p.sigma)), 0.0)
    return _scalar_or_array(out)


def rayleigh_cdf(x, p: RayleighParams):
    x = np.asarray(x, dtype=float)
    z = np.maximum(x - p.mu, 0.0)
    out = np.where(x > p.mu, -np.expm1(-z * z / (2 * p.sigma)), 0.0)
    return _scalar_or_array(out)


def rayleigh_quantile(u, p: RayleighParams):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("quantile level must lie in (0, 1)")
    return _scalar_or_array(p.mu + np.sqrt(-2 * p.sigma * np.log1p(-u)))


def krecord_pdf(u, p: RayleighParams, t: PredictionTarget):
    """Density of the ``m``-th ``k``-record value of a Rayleigh law."""
    u = np.asarray(u, dtype=float)
    z = np.maximum(u - p.mu, 0.0)
    m, k = t.m, t.k
    with np.errstate(divide="ignore"):
        log_dens = (m * math.log(k) + (2 * m - 1) * np.log(z) - special.gammaln(m)
                    - m * math.log(p.sigma) - (m - 1) * math.log(2) - k * z * z / (2 * p.sigma))
    out = np.where(u > p.mu, np.exp(log_dens), 0.0)
    return _scalar_or_array(out)


def sample_krecord(p: RayleighParams, t: PredictionTarget, rng, size=None):
    """Draw ``U_{m(k)}`` via ``k (U - mu)^2 / (2 sigma) ~ Gamma(m, 1)``.

    The gamma variate is the sum of ``m`` unit exponentials.
    """
    shape = (t.m,) if size is None else (*np.atleast_1d(size), t.m)
    g = rng.standard_exponential(shape).sum(axis=-1)
    out = p.mu + np.sqrt(2 * p.sigma * g / t.k)
    return float(out) if size is None else out


def sample_lifetimes(p: RayleighParams, n: int, rng) -> np.ndarray:
    return p.mu + np.sqrt(2 * p.sigma * rng.standard_exponential(n))


def extract_hybrid_sample(lifetimes, scheme: HybridScheme) -> HybridSample:
    """Apply the hybrid censoring rule to a complete set of ``n`` lifetimes."""
    xs = np.sort(np.asarray(lifetimes, dtype=float).ravel())
    if len(xs) != scheme.n:
        raise ValueError(f"expected {scheme.n} lifetimes, got {len(xs)}")
    if not np.all(np.isfinite(xs)):
        raise ValueError("lifetimes must be finite")
    head = xs[: scheme.r]
    d = int(np.count_nonzero(head <= scheme.T))
    t0 = float(xs[scheme.r - 1]) if d == scheme.r else float(scheme.T)
    return HybridSample(xs[:d].copy(), scheme, d, t0)


def simulate_hybrid_sample(p: RayleighParams, scheme: HybridScheme, rng) -> HybridSample:
    return extract_hybrid_sample(sample_lifetimes(p, scheme.n, rng), scheme)


def delta(s: HybridSample) -> float:
    """Sum of squared observed times plus ``(n - d) t0^2``."""
    return float(np.sum(s.x ** 2) + (s.n - s.d) * s.t0 ** 2)


def delta_star(mu, s: HybridSample):
    """``delta`` with every time measured from ``mu``; vectorised over ``mu``."""
    mu = np.asarray(mu, dtype=float)
    dev = s.x[None, :] - mu.reshape(-1, 1)
    out = np.sum(dev * dev, axis=1) + (s.n - s.d) * (s.t0 - mu.ravel()) ** 2
    return float(out[0]) if mu.ndim == 0 else out.reshape(mu.shape)
