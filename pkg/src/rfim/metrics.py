"""Closed-form relative Fisher metrics for neurons, layers and two-layer blocks.

Weight matrices follow the augmented-input convention: a layer with ``D``
inputs and ``m`` outputs has ``W`` of shape ``(D + 1, m)`` whose last row is
the bias, and neuron ``i`` owns column ``W[:, i]``. Full metrics vectorize
``W`` by stacking its columns, so block ``(i, j)`` couples neurons ``i`` and
``j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax as _softmax

from .activations import ActivationKind, deriv, evaluate, nu
from .linalg import augment


@dataclass(frozen=True)
class BlockDiagMetric:
    """One ``(D+1, D+1)`` block per output neuron; off-diagonal blocks are zero."""

    blocks: np.ndarray  # (m, D+1, D+1)

    @property
    def num_outputs(self):
        return self.blocks.shape[0]

    @property
    def input_dim(self):
        return self.blocks.shape[1] - 1

    def block(self, i):
        return self.blocks[i]

    def to_dense(self):
        m, d, _ = self.blocks.shape
        out = np.zeros((m * d, m * d))
        for i in range(m):
            out[i * d:(i + 1) * d, i * d:(i + 1) * d] = self.blocks[i]
        return out


@dataclass(frozen=True)
class FullMetric:
    """Dense metric over all columns of ``W`` with ``(D+1, D+1)`` blocks."""

    matrix: np.ndarray
    block_size: int

    @property
    def num_outputs(self):
        return self.matrix.shape[0] // self.block_size

    def block(self, i, j):
        b = self.block_size
        return self.matrix[i * b:(i + 1) * b, j * b:(j + 1) * b]

    def to_dense(self):
        return self.matrix


def _weights_and_input(W, x):
    W = np.asarray(W, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != x.size + 1:
        raise ValueError(f"weights have {W.shape[0]} rows but the augmented input has {x.size + 1}")
    return W, augment(x)


def neuron_rfim(kind: ActivationKind, w, x):
    """``nu(w^T x~) x~ x~^T`` for a single neuron."""
    w = np.asarray(w, dtype=float).ravel()
    _, xt = _weights_and_input(w, x)
    return nu(kind, float(w @ xt)) * np.outer(xt, xt)


def batch_neuron_rfim(kind: ActivationKind, w, xs):
    """Sample mean of :func:`neuron_rfim` over the rows of ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise ValueError("batch is empty")
    w = np.asarray(w, dtype=float).ravel()
    if w.size != xs.shape[1] + 1:
        raise ValueError(f"weight vector has {w.size} entries, expected {xs.shape[1] + 1}")
    Xt = augment(xs)
    coef = nu(kind, Xt @ w)
    return (Xt * coef[:, None]).T @ Xt / xs.shape[0]


def linear_layer_rfim(sigma, x, m) -> BlockDiagMetric:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    xt = augment(np.asarray(x, dtype=float).ravel())
    block = np.outer(xt, xt) / sigma**2
    return BlockDiagMetric(np.repeat(block[None], int(m), axis=0))


def nonlinear_layer_rfim(kind: ActivationKind, W, x) -> BlockDiagMetric:
    W, xt = _weights_and_input(W, x)
    coef = np.asarray(nu(kind, xt @ W), dtype=float).reshape(-1)
    return BlockDiagMetric(coef[:, None, None] * np.outer(xt, xt)[None])


def softmax_probs(W, x):
    W, xt = _weights_and_input(W, x)
    return _softmax(xt @ W)


def softmax_rfim(W, x) -> FullMetric:
    """Categorical-output metric; block ``(i, j)`` is ``(delta_ij eta_i - eta_i eta_j) x~ x~^T``."""
    W, xt = _weights_and_input(W, x)
    if W.shape[1] < 2:
        raise ValueError("a softmax layer needs at least two outputs")
    eta = _softmax(xt @ W)
    coupling = np.diag(eta) - np.outer(eta, eta)
    return FullMetric(np.kron(coupling, np.outer(xt, xt)), xt.size)


def two_layer_rfim(kind: ActivationKind, W, C, x, mode="literal") -> FullMetric:
    """Metric of the first-layer weights ``W`` with ``x`` and ``C`` held fixed.

    ``mode="literal"`` multiplies the three ``nu`` factors literally. With
    ``mode="derivative"`` the two first-layer factors are replaced by the
    activation derivative, which is the exact Fisher for every family; the two
    agree for tanh and sigm.
    """
    if mode not in ("literal", "derivative"):
        raise ValueError(f"unknown mode {mode!r}")
    W, xt = _weights_and_input(W, x)
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    dh = W.shape[1]
    if C.shape[0] != dh + 1:
        raise ValueError(f"C has {C.shape[0]} rows, expected {dh + 1}")
    s_hidden = xt @ W
    h = np.asarray(evaluate(kind, s_hidden)).reshape(-1)
    out_coef = np.asarray(nu(kind, augment(h) @ C)).reshape(-1)
    if mode == "literal":
        a = np.asarray(nu(kind, s_hidden)).reshape(-1)
    else:
        a = np.asarray(deriv(kind, s_hidden)).reshape(-1)
    Ch = C[:dh]
    coupling = (Ch * out_coef) @ Ch.T * np.outer(a, a)
    return FullMetric(np.kron(coupling, np.outer(xt, xt)), xt.size)
