"""Optimizers: heavy-ball SGD, Adam, natural gradient for the logistic model, and RNGD.

RNGD keeps one exponentially averaged metric per neuron. Hidden layers use
the nonlinear-layer metric ``nu(s) x~ x~^T``; the input layer and the output
head use the linear-layer metric ``x~ x~^T / sigma^2``, which is identical
for every neuron of the layer and is therefore stored once.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from . import activations as act
from .linalg import SymmetricFactorization, regularized_solve, trace_scaled_epsilon


class MomentumSGD:
    """Heavy-ball update ``v <- m v - lr g; theta <- theta + v``."""

    def __init__(self, lr=1e-2, momentum=0.0):
        self.lr = lr
        self.momentum = momentum
        self.velocity = None

    def step(self, params, grads):
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ValueError(f"parameter {i} has shape {p.shape} but gradient {g.shape}")
            v = self.momentum * self.velocity[i] - self.lr * g
            self.velocity[i] = v
            out.append(p + v)
        return out


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            out.append(p - self.lr * (self.m[i] / c1) / (np.sqrt(self.v[i] / c2) + self.eps))
        return out


# -- logistic model -----------------------------------------------------------


def logistic_gradient(theta, Z, y):
    """Mean of ``(sigm(theta^T z) - y) z`` over the rows of ``Z``."""
    s = Z @ theta
    y = np.asarray(y)
    r = np.where(y == 1, -expit(-s), expit(s))
    return Z.T @ r / Z.shape[0]


def logistic_metric(theta, Z):
    """Batch metric ``mean(nu_sigm(theta^T z) z z^T)`` of the single sigm neuron."""
    coef = act.nu(act.sigm(), Z @ theta)
    return (Z * coef[:, None]).T @ Z / Z.shape[0]


def ngd_logistic_direction(theta, Z, y, eps_rel=1e-2):
    """``(G + eps I)^{-1} grad`` with ``eps`` set by the relative trace rule.

    ``Z`` holds the already augmented (and possibly whitened) inputs as rows.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[0] == 0:
        raise ValueError("batch is empty")
    theta = np.asarray(theta, dtype=float)
    G = logistic_metric(theta, Z)
    eps = trace_scaled_epsilon(G, eps_rel) if eps_rel else 0.0
    return regularized_solve(G, logistic_gradient(theta, Z, y), eps)


def ngd_logistic_step(theta, Z, y, gamma, eps_rel=1e-2):
    return np.asarray(theta, dtype=float) - gamma * ngd_logistic_direction(theta, Z, y, eps_rel)


class NaturalMomentum:
    """Heavy-ball momentum applied to the logistic natural-gradient direction."""

    def __init__(self, lr=1.0, momentum=0.0, eps_rel=1e-2):
        self.lr = lr
        self.momentum = momentum
        self.eps_rel = eps_rel
        self.velocity = None

    def step(self, theta, Z, y):
        d = ngd_logistic_direction(theta, Z, y, self.eps_rel)
        if self.velocity is None:
            self.velocity = np.zeros_like(d)
        self.velocity = self.momentum * self.velocity - self.lr * d
        return theta + self.velocity


# -- RNGD ---------------------------------------------------------------------


class LayerMetric:
    """EMA metrics and cached inverses for the neurons of one layer.

    ``kind=None`` selects the linear-layer metric, stored as a single shared
    block. Otherwise one block per neuron is kept and weighted by ``nu``.
    ``metrics`` has shape ``(count, d, d)`` and so has ``inverses``, which is
    only recomputed by :meth:`refresh`.
    """

    def __init__(self, input_dim, num_neurons, kind=None, sigma=1.0):
        self.kind = kind
        self.sigma = sigma
        self.num_neurons = num_neurons
        d = input_dim + 1
        count = 1 if kind is None else num_neurons
        self.metrics = np.repeat(np.eye(d)[None], count, axis=0)
        self.inverses = self.metrics.copy()
        self.refreshed_at = 0

    @property
    def shared(self):
        return self.kind is None

    def batch_term(self, inputs, pre_activations=None):
        """Fresh per-neuron term ``mean(nu x~ x~^T)`` for one minibatch, without damping."""
        n, d = inputs.shape
        if n == 0:
            raise ValueError("batch is empty")
        if self.shared:
            return (inputs.T @ inputs / (n * self.sigma**2))[None]
        coef = act.nu(self.kind, pre_activations)
        weighted = coef.T[:, :, None] * inputs[None]  # (neurons, n, d)
        return np.matmul(weighted.transpose(0, 2, 1), inputs) / n

    def ema_update(self, inputs, pre_activations, decay, eps_rel):
        fresh = self.batch_term(inputs, pre_activations)
        d = fresh.shape[1]
        eps = eps_rel * np.trace(fresh, axis1=1, axis2=2) / d
        eps[eps == 0.0] = eps_rel
        diag = np.arange(d)
        fresh[:, diag, diag] += eps[:, None]
        fresh *= 1.0 - decay
        self.metrics *= decay
        self.metrics += fresh

    def refresh(self, iteration=0):
        self.inverses = np.stack([SymmetricFactorization.of(G).inverse() for G in self.metrics])
        self.refreshed_at = iteration

    def solve(self, grad):
        """Apply the cached inverse metric to each column of ``grad``."""
        if self.shared:
            return self.inverses[0] @ grad
        return np.einsum("lij,jl->il", self.inverses, grad)


class RNGD:
    """Relative natural gradient descent with EMA per-neuron metrics.

    Call :meth:`observe` with the forward trace of each minibatch, then
    :meth:`step`. Metrics start at the identity and the cached inverses are
    recomputed every ``refresh_period`` observed minibatches, so the first
    ``refresh_period`` steps are plain gradient steps.
    """

    def __init__(self, spec, lr=1e-2, decay=0.995, refresh_period=100, eps_rel=1e-2,
                 metric_activation=None, sigma=1.0):
        if not 0.0 <= decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {decay}")
        if refresh_period < 1:
            raise ValueError("refresh_period must be at least 1")
        self.lr = lr
        self.decay = decay
        self.refresh_period = int(refresh_period)
        self.eps_rel = eps_rel
        self.iteration = 0
        kind = metric_activation or spec.hidden_activation
        L = spec.num_layers
        sizes = spec.layer_sizes
        self.layers = []
        for l in range(L):
            hidden = 0 < l < L - 1
            self.layers.append(LayerMetric(sizes[l], sizes[l + 1], kind if hidden else None, sigma))

    def observe(self, trace):
        for layer, inputs, pre in zip(self.layers, trace.inputs, trace.pre_activations):
            layer.ema_update(inputs, pre, self.decay, self.eps_rel)
        self.iteration += 1

    def refresh(self):
        for layer in self.layers:
            layer.refresh(self.iteration)

    def step(self, params, grads):
        if len(params) != len(self.layers):
            raise ValueError(f"expected {len(self.layers)} weight matrices, got {len(params)}")
        out = []
        for layer, W, g in zip(self.layers, params, grads):
            if W.shape != g.shape or W.shape[0] != layer.metrics.shape[1]:
                raise ValueError(f"shape mismatch: weights {W.shape}, gradient {g.shape}")
            out.append(W - self.lr * layer.solve(g))
        if self.iteration and self.iteration % self.refresh_period == 0:
            self.refresh()
        return out

    def update(self, params, grads, trace):
        """Observe the minibatch, take a step and refresh when due."""
        self.observe(trace)
        return self.step(params, grads)
