"""Prediction of minimal-repair times of series systems from hybrid-censored Rayleigh data."""

__version__ = "0.1.0"

from .exceptions import ConvergenceError, ImproperPosteriorError
from .model import (
    HybridSample,
    HybridScheme,
    PredictionTarget,
    RayleighParams,
    extract_hybrid_sample,
)
from .twoparam import Hyperparams, PredictionResult, PredictiveContext
from .estimators import RayleighRepairPredictor, ScaledRayleighPredictor, WaldPredictor

__all__ = [
    "ConvergenceError",
    "ImproperPosteriorError",
    "HybridSample",
    "HybridScheme",
    "PredictionTarget",
    "RayleighParams",
    "extract_hybrid_sample",
    "Hyperparams",
    "PredictionResult",
    "PredictiveContext",
    "RayleighRepairPredictor",
    "ScaledRayleighPredictor",
    "WaldPredictor",
]
