"""Experiment configuration, slope fitting, runs and the command line."""

from .config import EXPERIMENTS, ExperimentConfig, stream_rng
from .fit import DecayFit, fit_decay
from .run import ExperimentError, ExperimentReport, Prediction, run

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "stream_rng",
    "DecayFit",
    "fit_decay",
    "ExperimentError",
    "ExperimentReport",
    "Prediction",
    "run",
]
