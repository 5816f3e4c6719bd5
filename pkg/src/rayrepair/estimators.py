"""Scikit-learn style front ends for the predictors.

Each estimator is fitted on one life-test (all ``n`` unit lifetimes, the
observed failures only, or a ready :class:`~rayrepair.model.HybridSample`)
and then predicts repair times for any number of ``(m, k)`` targets.

>>> est = RayleighRepairPredictor(xi=0.0, tau=0.5, r=20, T=1.25).fit(lifetimes)
>>> est.predict([(1, 1), (4, 3)], loss="sel")            # doctest: +SKIP
>>> est.predict_interval([(1, 1)], kind="hpd")           # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_hybrid_sample, check_alpha, check_targets
from .classical import mle_fit, plugin_point_predictions, wald_pi
from .scaled import (
    scaled_equitailed_pi,
    scaled_hpd_pi,
    scaled_point_predictions,
    scaled_posterior,
)
from .twoparam import Hyperparams, MuPosterior, PredictionResult, PredictiveContext, predict

__all__ = ["ScaledRayleighPredictor", "RayleighRepairPredictor", "WaldPredictor"]

_LOSSES = {"sel": "sel", "mean": "sel", "ael": "ael", "median": "ael", "zero-one": "mode", "mode": "mode"}


def _check_loss(loss):
    try:
        return _LOSSES[loss]
    except KeyError:
        raise ValueError(f"loss must be one of {sorted(_LOSSES)}, got {loss!r}") from None


class _RepairPredictorMixin:
    """``predict`` / ``predict_interval`` on top of ``predict_full``."""

    _interval_kinds: tuple = ("equi-tailed", "hpd")

    def predict(self, targets, loss="sel"):
        """Point predictions, one per target.

        Parameters
        ----------
        targets : (m, k) pair, PredictionTarget, or a sequence of them
        loss : {"sel", "ael", "zero-one"}
            Squared-error, absolute-error or zero-one loss (mean, median or
            mode of the predictive law).
        """
        field = _check_loss(loss)
        return np.array([getattr(res.points, field) for res in self.predict_full(targets)])

    def predict_interval(self, targets, kind=None):
        """``(n_targets, 2)`` array of ``[lower, upper]`` prediction limits."""
        kind = kind or self._interval_kinds[0]
        if kind not in self._interval_kinds:
            raise ValueError(f"kind must be one of {self._interval_kinds}, got {kind!r}")
        attr = "hpd" if kind == "hpd" else "equitailed"
        return np.array([[getattr(r, attr).lower, getattr(r, attr).upper]
                         for r in self.predict_full(targets)])


class ScaledRayleighPredictor(_RepairPredictorMixin, BaseEstimator):
    """Bayes predictor for the scaled model (location fixed at zero).

    Parameters
    ----------
    n, r, T : optional
        Censoring scheme. ``n`` defaults to the number of lifetimes passed
        to ``fit``, ``r`` to ``n`` and ``T`` to no time limit.
    alpha : float, default 0.05
        One minus the prediction level.

    Attributes
    ----------
    sample_ : HybridSample
    posterior_ : ScaledPosterior
        Inverted-gamma posterior of ``sigma``.
    """

    def __init__(self, n=None, r=None, T=None, alpha=0.05):
        self.n = n
        self.r = r
        self.T = T
        self.alpha = alpha

    def fit(self, X, y=None):
        check_alpha(self.alpha)
        self.sample_ = as_hybrid_sample(X, self.n, self.r, self.T)
        self.posterior_ = scaled_posterior(self.sample_)
        return self

    def predict_full(self, targets):
        check_is_fitted(self, "posterior_")
        out = []
        for t in check_targets(targets):
            out.append(PredictionResult(
                t,
                scaled_equitailed_pi(self.sample_, t, self.alpha),
                scaled_hpd_pi(self.sample_, t, self.alpha),
                scaled_point_predictions(self.sample_, t),
            ))
        return out


class RayleighRepairPredictor(_RepairPredictorMixin, BaseEstimator):
    """Bayes predictor for the two-parameter model.

    The prior is normal on the location (mean ``xi``, variance
    ``1 / (2 tau)``) and ``1 / sigma`` on the scale.

    Parameters
    ----------
    xi, tau : float
        Prior mean and precision parameter of the location.
    n, r, T : optional
        Censoring scheme, as for :class:`ScaledRayleighPredictor`.
    alpha : float, default 0.05

    Attributes
    ----------
    sample_ : HybridSample
    posterior_ : MuPosterior
        Marginal posterior of the location, with its quadrature rule.
    a1_ : float
        Normalising constant of the joint posterior.
    """

    def __init__(self, xi=0.0, tau=0.5, n=None, r=None, T=None, alpha=0.05):
        self.xi = xi
        self.tau = tau
        self.n = n
        self.r = r
        self.T = T
        self.alpha = alpha

    def fit(self, X, y=None):
        check_alpha(self.alpha)
        self.sample_ = as_hybrid_sample(X, self.n, self.r, self.T)
        self.posterior_ = MuPosterior(self.sample_, Hyperparams(float(self.xi), float(self.tau)))
        self.a1_ = self.posterior_.a1
        return self

    def context(self, target) -> PredictiveContext:
        """Predictive context for one target, for direct use of the density and survival."""
        check_is_fitted(self, "posterior_")
        (t,) = check_targets(target)
        return PredictiveContext(self.posterior_, t)

    def predict_full(self, targets):
        check_is_fitted(self, "posterior_")
        return [predict(PredictiveContext(self.posterior_, t), self.alpha) for t in check_targets(targets)]


class WaldPredictor(BaseEstimator):
    """Maximum-likelihood plug-in predictor with the chi-square interval.

    Parameters
    ----------
    n, r, T : optional
        Censoring scheme, as for :class:`ScaledRayleighPredictor`.
    alpha : float, default 0.05
    scaled : bool, default False
        Fix the location at zero.

    Attributes
    ----------
    fit_ : MleFit
    mu_, sigma_ : float
    """

    def __init__(self, n=None, r=None, T=None, alpha=0.05, scaled=False):
        self.n = n
        self.r = r
        self.T = T
        self.alpha = alpha
        self.scaled = scaled

    def fit(self, X, y=None):
        check_alpha(self.alpha)
        self.sample_ = as_hybrid_sample(X, self.n, self.r, self.T)
        self.fit_ = mle_fit(self.sample_, scaled=self.scaled)
        self.mu_, self.sigma_ = self.fit_.mu_hat, self.fit_.sigma_hat
        return self

    def predict(self, targets, loss="sel"):
        """Mean, median or mode of the k-record law at the fitted parameters."""
        check_is_fitted(self, "fit_")
        field = _check_loss(loss)
        return np.array([getattr(plugin_point_predictions(self.fit_, t), field) for t in check_targets(targets)])

    def predict_interval(self, targets, kind="wald"):
        check_is_fitted(self, "fit_")
        if kind != "wald":
            raise ValueError(f"kind must be 'wald', got {kind!r}")
        ints = [wald_pi(self.fit_, t, self.alpha) for t in check_targets(targets)]
        return np.array([[w.lower, w.upper] for w in ints])
