"""Relative Fisher information metrics and relative natural gradient descent."""

from .activations import ActivationKind, elu, relu, sigm, tanh
from .estimators import NaturalLogisticRegression, RelativeMLPClassifier
from .experiment import ExperimentConfig, RunRecord, emit_curves, run, run_grid, tau_sharp_ratio
from .metrics import (
    batch_neuron_rfim,
    linear_layer_rfim,
    neuron_rfim,
    nonlinear_layer_rfim,
    softmax_rfim,
    two_layer_rfim,
)
from .optim import RNGD, Adam, MomentumSGD, ngd_logistic_step
from .whitening import Whitener

__version__ = "0.1.0"

__all__ = [
    "ActivationKind", "tanh", "sigm", "relu", "elu",
    "neuron_rfim", "batch_neuron_rfim", "linear_layer_rfim", "nonlinear_layer_rfim",
    "softmax_rfim", "two_layer_rfim",
    "MomentumSGD", "Adam", "RNGD", "ngd_logistic_step",
    "Whitener", "NaturalLogisticRegression", "RelativeMLPClassifier",
    "ExperimentConfig", "RunRecord", "run", "run_grid", "tau_sharp_ratio", "emit_curves",
]
