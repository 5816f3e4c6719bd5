"""Input checking shared by the estimators and the command line."""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np

from .model import HybridSample, HybridScheme, PredictionTarget, extract_hybrid_sample

__all__ = [
    "check_lifetimes",
    "check_targets",
    "check_alpha",
    "as_hybrid_sample",
    "sample_from_failures",
]


def check_lifetimes(X, name="X") -> np.ndarray:
    """1-D float array of finite values; a single column is flattened."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {np.shape(X)}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_targets(targets) -> tuple[PredictionTarget, ...]:
    """Normalise targets to a tuple of :class:`PredictionTarget`.

    Accepts a single target, an ``(m, k)`` pair, or an iterable of either
    (including an ``(n, 2)`` array of ``(m, k)`` rows).
    """
    if isinstance(targets, PredictionTarget):
        return (targets,)
    if not isinstance(targets, Iterable):
        raise TypeError(f"cannot interpret {targets!r} as prediction targets")
    items = list(targets)
    if len(items) == 2 and all(np.isscalar(v) for v in items):
        items = [tuple(items)]
    out = []
    for item in items:
        if isinstance(item, PredictionTarget):
            out.append(item)
            continue
        pair = tuple(item)
        if len(pair) != 2:
            raise ValueError(f"a target is an (m, k) pair, got {item!r}")
        m, k = pair
        if int(m) != m or int(k) != k:
            raise ValueError(f"m and k must be integers, got {item!r}")
        out.append(PredictionTarget(int(m), int(k)))
    if not out:
        raise ValueError("no prediction targets given")
    return tuple(out)


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def sample_from_failures(failures, n: int, r: int, T: float) -> HybridSample:
    """Hybrid sample from the ``d`` observed failure times of an ``n``-unit test.

    The test is taken to have stopped at the ``r``-th failure when ``d = r``
    and at ``T`` otherwise.
    """
    x = np.sort(check_lifetimes(failures, "failures"))
    scheme = HybridScheme(n, r, T)
    d = x.size
    if d > r:
        raise ValueError(f"{d} failures observed but the test stops at the r = {r}-th")
    if x[-1] > T:
        raise ValueError(f"failure time {x[-1]} exceeds T = {T}")
    if d < r and not math.isfinite(T):
        raise ValueError("fewer than r failures observed: the time limit T must be finite")
    t0 = float(x[-1]) if d == r else float(T)
    return HybridSample(x, scheme, d, t0)


def as_hybrid_sample(X, n=None, r=None, T=None) -> HybridSample:
    """Coerce estimator input to a :class:`HybridSample`.

    ``X`` may already be a sample. Otherwise it holds lifetimes: when it has
    ``n`` values (or ``n`` is omitted) they are all the unit lifetimes and
    the censoring rule is applied; fewer than ``n`` values are taken to be
    the observed failures. Omitted ``r`` means ``r = n`` and omitted ``T``
    means no time limit.
    """
    if isinstance(X, HybridSample):
        return X
    x = check_lifetimes(X)
    n = x.size if n is None else int(n)
    r = n if r is None else int(r)
    T = math.inf if T is None else float(T)
    if x.size == n:
        return extract_hybrid_sample(x, HybridScheme(n, r, T))
    if x.size < n:
        return sample_from_failures(x, n, r, T)
    raise ValueError(f"got {x.size} lifetimes for a test of n = {n} units")
