"""Monte-Carlo studies: predictor performance and prior model checking.

Every replication draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(i,))`` for replication index ``i``. Results
therefore do not depend on execution order or on how the replications are
split between workers or runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classical import mle_fit, wald_pi
from .model import (
    HybridScheme,
    PredictionTarget,
    RayleighParams,
    sample_krecord,
    simulate_hybrid_sample,
)
from .twoparam import Hyperparams, MuPosterior, PredictiveContext, point_sel, predict

__all__ = [
    "METHODS",
    "SimConfig",
    "PerformanceRow",
    "PerformanceStudy",
    "ModelCheckResult",
    "run_performance_study",
    "run_model_check",
    "empirical_cdf",
    "replication_rng",
]

METHODS = ("bayes-equitailed", "bayes-hpd", "wald")


@dataclass(frozen=True)
class SimConfig:
    """Design of a simulation study.

    ``first_replication`` offsets the replication indices, so a study of
    ``N`` replications can be run in pieces and pooled exactly.
    """

    n: int = 20
    r: int = 17
    T: float = 2.0
    true_params: RayleighParams = field(default_factory=RayleighParams)
    hyper: Hyperparams = field(default_factory=lambda: Hyperparams(0.0, 0.005))
    targets: tuple = field(default_factory=lambda: tuple(
        PredictionTarget(m, k) for k in (1, 2, 3) for m in (1, 2, 3)))
    alpha: float = 0.05
    replications: int = 2000
    seed: int = 0
    methods: tuple = METHODS
    first_replication: int = 0

    def __post_init__(self):
        HybridScheme(self.n, self.r, self.T)  # validates n, r, T
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.targets:
            raise ValueError("at least one target is required")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def scheme(self) -> HybridScheme:
        return HybridScheme(self.n, self.r, self.T)


@dataclass(frozen=True)
class PerformanceRow:
    """Aggregate performance of one interval method for one target.

    The three ``er_*`` entries are the estimated risks of the SEL, AEL and
    zero-one predictors (mean squared error, mean absolute error and the
    fraction of replications with ``u* != u``). They are NaN for the Wald
    rows, which carry intervals only.
    """

    m: int
    k: int
    method: str
    er_sel: float
    er_ael: float
    er_zeroone: float
    aw: float
    cp: float
    replications: int
    discarded: int


@dataclass
class PerformanceStudy:
    """Rows plus the per-replication records they were averaged from.

    ``records[name]`` has shape ``(replications, len(targets))``; names are
    ``u``, ``sel``, ``ael``, ``mode`` and ``<method>_lower`` /
    ``<method>_upper`` for each requested method.
    """

    config: SimConfig
    rows: list
    records: dict
    discarded: int


@dataclass
class ModelCheckResult:
    tau_star: float
    l_star: int
    d1: float
    d2: float
    d3: float
    ecdf_sim: np.ndarray
    ecdf_pred: np.ndarray
    d1_by_l: dict
    fallback: bool
    discarded: int


def replication_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for replication ``index`` of a study seeded by ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _draw_sample(cfg, rng, min_d):
    discarded = 0
    while True:
        s = simulate_hybrid_sample(cfg.true_params, cfg.scheme, rng)
        if s.d >= min_d:
            return s, discarded
        discarded += 1


def _one_replication(cfg: SimConfig, index: int):
    rng = replication_rng(cfg.seed, index)
    bayes = any(m.startswith("bayes") for m in cfg.methods)
    min_d = 2 if "wald" in cfg.methods else 1
    s, discarded = _draw_sample(cfg, rng, min_d)
    u = np.array([sample_krecord(cfg.true_params, t, rng) for t in cfg.targets])
    out = {"u": u}
    if bayes:
        post = MuPosterior(s, cfg.hyper)
        results = [predict(PredictiveContext(post, t), cfg.alpha) for t in cfg.targets]
        out["sel"] = np.array([r.points.sel for r in results])
        out["ael"] = np.array([r.points.ael for r in results])
        out["mode"] = np.array([r.points.mode for r in results])
        out["bayes-equitailed_lower"] = np.array([r.equitailed.lower for r in results])
        out["bayes-equitailed_upper"] = np.array([r.equitailed.upper for r in results])
        out["bayes-hpd_lower"] = np.array([r.hpd.lower for r in results])
        out["bayes-hpd_upper"] = np.array([r.hpd.upper for r in results])
    if "wald" in cfg.methods:
        fit = mle_fit(s)
        ints = [wald_pi(fit, t, cfg.alpha) for t in cfg.targets]
        out["wald_lower"] = np.array([w.lower for w in ints])
        out["wald_upper"] = np.array([w.upper for w in ints])
    return out, discarded


def _run_chunk(cfg, indices):
    return [_one_replication(cfg, i) for i in indices]


def _map_replications(cfg, n_jobs):
    indices = range(cfg.first_replication, cfg.first_replication + cfg.replications)
    if n_jobs == 1:
        return _run_chunk(cfg, indices)
    chunks = np.array_split(np.asarray(indices), n_jobs)
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = pool.map(_run_chunk, [cfg] * len(chunks), [c.tolist() for c in chunks])
        return [item for part in parts for item in part]


def run_performance_study(cfg: SimConfig, n_jobs: int = 1) -> PerformanceStudy:
    """Estimated risks, average widths and coverage for every target and method.

    Each replication simulates one hybrid-censored sample (redrawn while it
    has too few failures to fit), shares it across all targets, and draws an
    independent true ``u`` per target.
    """
    reps = _map_replications(cfg, n_jobs)
    discarded = sum(d for _, d in reps)
    records = {name: np.vstack([r[name] for r, _ in reps]) for name in reps[0][0]}
    u = records["u"]
    rows = []
    nan = math.nan
    for j, t in enumerate(cfg.targets):
        if "sel" in records:
            er_sel = float(np.mean((records["sel"][:, j] - u[:, j]) ** 2))
            er_ael = float(np.mean(np.abs(records["ael"][:, j] - u[:, j])))
            er_01 = float(np.mean(records["mode"][:, j] != u[:, j]))
        for method in cfg.methods:
            lo = records[f"{method}_lower"][:, j]
            hi = records[f"{method}_upper"][:, j]
            cover = (lo < u[:, j]) & (u[:, j] < hi)
            errs = (er_sel, er_ael, er_01) if method != "wald" else (nan, nan, nan)
            rows.append(PerformanceRow(
                t.m, t.k, method, *errs, aw=float(np.mean(hi - lo)), cp=float(np.mean(cover)),
                replications=cfg.replications, discarded=discarded,
            ))
    return PerformanceStudy(cfg, rows, records, discarded)


def empirical_cdf(values) -> np.ndarray:
    """Sorted ``(value, i / N)`` pairs, one row per observation."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("values must be nonempty")
    return np.column_stack([v, np.arange(1, v.size + 1) / v.size])


def _model_check_replication(cfg, index, taus):
    rng = replication_rng(cfg.seed, index)
    s, discarded = _draw_sample(cfg, rng, 1)
    target = cfg.targets[0]
    u = sample_krecord(cfg.true_params, target, rng)
    u_prime = sample_krecord(cfg.true_params, target, rng)
    preds = [point_sel(PredictiveContext(MuPosterior(s, Hyperparams(0.0, tau)), target)) for tau in taus]
    return u, u_prime, preds, discarded


def run_model_check(cfg: SimConfig, l_values=(-2, -1, 0, 1, 2)) -> ModelCheckResult:
    """Select the prior precision by predictive risk and report diagnostics.

    Uses the first target of ``cfg``. For every ``l`` the prior is
    ``xi = 0``, ``tau = 0.5 * 10**(-l)``. All candidates are scored on the
    same simulated samples, so their risk ratios are compared without
    independent Monte-Carlo noise. ``D1 = SS1 / SS2`` compares the squared
    prediction error with that of an independent copy ``u'``; the selected
    ``l`` has the largest ``D1 <= 1``. If every candidate exceeds 1 the one
    with the smallest ``D1`` is returned and ``fallback`` is set.
    """
    l_values = tuple(int(l) for l in l_values)
    taus = [0.5 * 10.0 ** (-l) for l in l_values]
    start = cfg.first_replication
    reps = [_model_check_replication(cfg, i, taus) for i in range(start, start + cfg.replications)]
    u = np.array([r[0] for r in reps])
    u_prime = np.array([r[1] for r in reps])
    preds = np.array([r[2] for r in reps])
    discarded = sum(r[3] for r in reps)

    ss2 = np.mean((u - u_prime) ** 2)
    d1 = np.mean((u[:, None] - preds) ** 2, axis=0) / ss2
    ok = np.flatnonzero(d1 <= 1)
    fallback = ok.size == 0
    best = int(np.argmin(d1)) if fallback else int(ok[np.argmax(d1[ok])])
    u_star = preds[:, best]
    mu = cfg.true_params.mu
    d2 = float(np.mean(u - mu) / np.mean(u_star - mu))
    d3 = float(np.var(u) / np.var(u_star))
    return ModelCheckResult(
        tau_star=taus[best],
        l_star=l_values[best],
        d1=float(d1[best]),
        d2=d2,
        d3=d3,
        ecdf_sim=empirical_cdf(u),
        ecdf_pred=empirical_cdf(u_star),
        d1_by_l=dict(zip(l_values, map(float, d1))),
        fallback=fallback,
        discarded=discarded,
    )
