"""Sharpness-aware optimizer family with a small analysis toolkit."""

from .analysis import (
    EigEstimate,
    GenBoundInputs,
    Trajectory,
    classify_minimum,
    generalization_bound,
    min_grad_norm_curve,
    power_iteration,
    regret_curve,
    toy_minima,
)
from .base_optimizers import BaseOptConfig, BaseOptState
from .config import RunConfig, parse_config, parse_sweep_config, toy_preset
from .core import Schedule, constant, inverse_sqrt
from .objectives import Logistic, Quadratic, ToyLandscape, finite_diff_grad
from .runner import NumericBlowup, run, sweep
from .sam import SamConfig, StepOutput, step, step_sgd_wsam

__all__ = [
    "BaseOptConfig",
    "BaseOptState",
    "EigEstimate",
    "GenBoundInputs",
    "Logistic",
    "NumericBlowup",
    "Quadratic",
    "RunConfig",
    "SamConfig",
    "Schedule",
    "StepOutput",
    "ToyLandscape",
    "Trajectory",
    "classify_minimum",
    "constant",
    "finite_diff_grad",
    "generalization_bound",
    "inverse_sqrt",
    "min_grad_norm_curve",
    "parse_config",
    "parse_sweep_config",
    "power_iteration",
    "regret_curve",
    "run",
    "step",
    "step_sgd_wsam",
    "sweep",
    "toy_minima",
    "toy_preset",
]

__version__ = "0.1.0"
