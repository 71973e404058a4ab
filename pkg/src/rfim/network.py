"""Feed-forward networks with augmented-input weights, cross-entropy and backprop.

Two heads are supported: a softmax over ``m`` classes and a single sigmoid
unit for binary labels. A one-layer network with the sigmoid head is the
logistic model ``p(y=1) = sigm(theta^T z~)``.

Hidden units with the relu family run the exact (unsmoothed) PReLU in the
forward and backward passes; the smoothed variant only enters the metric
coefficients used by the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit, log_softmax

from . import activations as act
from .activations import ActivationKind
from .linalg import augment

PROB_FLOOR = 1e-12
_LOG_FLOOR = float(np.log(PROB_FLOOR))

SOFTMAX = "softmax"
SIGMOID = "sigmoid"


@dataclass(frozen=True)
class MlpSpec:
    layer_sizes: tuple
    hidden_activation: ActivationKind = field(default_factory=act.relu)
    head: str = SOFTMAX

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"need at least an input and an output size, got {sizes}")
        if self.head not in (SOFTMAX, SIGMOID):
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == SIGMOID and sizes[-1] != 1:
            raise ValueError("the sigmoid head has exactly one output unit")
        if self.head == SOFTMAX and sizes[-1] < 2:
            raise ValueError("the softmax head needs at least two classes")

    @property
    def num_layers(self):
        return len(self.layer_sizes) - 1

    @property
    def num_classes(self):
        return 2 if self.head == SIGMOID else self.layer_sizes[-1]

    def shapes(self):
        s = self.layer_sizes
        return [(s[i] + 1, s[i + 1]) for i in range(self.num_layers)]


def logistic_spec(input_dim):
    return MlpSpec((input_dim, 1), head=SIGMOID)


def init_params(spec, rng=None, scale="auto"):
    """Gaussian fan-in initialization with zero biases; ``scale=0`` gives all zeros."""
    rng = np.random.default_rng(rng)
    params = []
    for rows, cols in spec.shapes():
        W = np.zeros((rows, cols))
        if scale != 0:
            if scale == "auto":
                gain = 2.0 if spec.hidden_activation.family is act.Family.RELU else 1.0
                std = np.sqrt(gain / (rows - 1))
            else:
                std = float(scale)
            W[:-1] = rng.normal(0.0, std, size=(rows - 1, cols))
        params.append(W)
    return params


def check_params(spec, params):
    if len(params) != spec.num_layers:
        raise ValueError(f"expected {spec.num_layers} weight matrices, got {len(params)}")
    for l, (W, shape) in enumerate(zip(params, spec.shapes())):
        if W.shape != shape:
            raise ValueError(f"layer {l} has shape {W.shape}, expected {shape}")


@dataclass
class ForwardTrace:
    head: str
    inputs: list  # augmented layer inputs, one (n, D_{l-1}+1) array per layer
    pre_activations: list  # (n, D_l) per layer
    log_probs: np.ndarray  # softmax: (n, m); sigmoid: (n, 2) as [log p(0), log p(1)]
    clamped: bool = False

    @property
    def probs(self):
        return np.exp(self.log_probs)

    @property
    def batch_size(self):
        return self.inputs[0].shape[0]


def forward(spec, params, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    check_params(spec, params)
    if X.shape[1] != spec.layer_sizes[0]:
        raise ValueError(f"inputs have {X.shape[1]} features, expected {spec.layer_sizes[0]}")
    kind = spec.hidden_activation
    inputs, pres = [], []
    h = X
    for l, W in enumerate(params):
        ht = augment(h)
        s = ht @ W
        inputs.append(ht)
        pres.append(s)
        if l < spec.num_layers - 1:
            h = act.hard(kind, s)
            if not np.all(np.isfinite(h)):
                raise FloatingPointError(f"non-finite activation in layer {l}")
    s = pres[-1]
    if spec.head == SOFTMAX:
        logp = log_softmax(s, axis=1)
    else:
        logp = np.hstack([log_expit(-s), log_expit(s)])
    return ForwardTrace(spec.head, inputs, pres, logp)


def _label_log_probs(trace, labels):
    labels = np.asarray(labels).astype(int).ravel()
    n, k = trace.log_probs.shape
    if labels.size != n:
        raise ValueError(f"{labels.size} labels for a batch of {n}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    return trace.log_probs[np.arange(n), labels]


def loss_cross_entropy(trace, labels):
    """Average negative log-likelihood; log-probabilities are floored at ``log(1e-12)``."""
    lp = _label_log_probs(trace, labels)
    low = lp < _LOG_FLOOR
    if np.any(low):
        trace.clamped = True
        lp = np.maximum(lp, _LOG_FLOOR)
    return float(-np.mean(lp))


def accuracy_error(trace, labels):
    pred = np.argmax(trace.log_probs, axis=1)
    return float(np.mean(pred != np.asarray(labels).ravel()))


def backward(spec, params, trace, labels):
    """Gradients of :func:`loss_cross_entropy` w.r.t. each weight matrix."""
    check_params(spec, params)
    if len(trace.inputs) != spec.num_layers or any(
        t.shape[1] != W.shape[0] for t, W in zip(trace.inputs, params)
    ):
        raise ValueError("trace does not match the parameter shapes")
    labels = np.asarray(labels).astype(int).ravel()
    n = trace.batch_size
    rows = np.arange(n)
    if spec.head == SOFTMAX:
        delta = np.exp(trace.log_probs)
        # p_y - 1 = expm1(log p_y) keeps precision for confident predictions
        delta[rows, labels] = np.expm1(trace.log_probs[rows, labels])
    else:
        lp0, lp1 = trace.log_probs[:, 0], trace.log_probs[:, 1]
        delta = np.where(labels == 1, -np.exp(lp0), np.exp(lp1))[:, None]
    delta /= n
    kind = spec.hidden_activation
    grads = [None] * spec.num_layers
    for l in range(spec.num_layers - 1, -1, -1):
        grads[l] = trace.inputs[l].T @ delta
        if l > 0:
            delta = (delta @ params[l][:-1].T) * act.hard_deriv(kind, trace.pre_activations[l - 1])
    return grads


def loss_and_grads(spec, params, X, labels):
    trace = forward(spec, params, X)
    return loss_cross_entropy(trace, labels), backward(spec, params, trace, labels), trace


def flatten(params):
    return np.concatenate([W.ravel() for W in params])


def unflatten(spec, vec):
    out, i = [], 0
    for rows, cols in spec.shapes():
        out.append(vec[i:i + rows * cols].reshape(rows, cols))
        i += rows * cols
    return out
