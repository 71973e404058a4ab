"""Small dense linear-algebra helpers shared by the metric and optimizer code.

Vectors and matrices are plain float64 numpy arrays. The only non-trivial
piece is the damped symmetric solve ``(G + eps I) d = b`` used by every
natural-gradient update.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

SYMMETRY_TOL = 1e-10


class NotSymmetricError(ValueError):
    """Raised when a matrix that must be symmetric is not."""


class FactorizationError(ArithmeticError):
    """Raised when a Cholesky factorization fails or produces non-finite values."""


def augment(x):
    """Append a constant 1 to a vector, or a column of ones to a batch of rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.append(x, 1.0)
    if x.ndim == 2:
        return np.hstack([x, np.ones((x.shape[0], 1))])
    raise ValueError(f"augment expects a 1-D or 2-D array, got ndim={x.ndim}")


def outer(v):
    v = np.asarray(v, dtype=float)
    return np.outer(v, v)


def check_symmetric(G, tol=SYMMETRY_TOL):
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {G.shape}")
    scale = max(1.0, float(np.max(np.abs(G)))) if G.size else 1.0
    asym = float(np.max(np.abs(G - G.T))) if G.size else 0.0
    if asym > tol * scale:
        raise NotSymmetricError(f"matrix is not symmetric (max |G - G^T| = {asym:.3e})")
    return G


class SymmetricFactorization:
    """Lower Cholesky factor of a symmetric positive-definite matrix."""

    def __init__(self, lower):
        self.lower = lower
        self.dim = lower.shape[0]

    @classmethod
    def of(cls, G, eps=0.0):
        """Factor ``G + eps*I``. The shift is applied before factorizing."""
        G = np.asarray(G, dtype=float)
        if not np.all(np.isfinite(G)):
            raise FactorizationError("matrix contains non-finite entries")
        G = check_symmetric(G)
        A = G + eps * np.eye(G.shape[0]) if eps else G.copy()
        A = 0.5 * (A + A.T)
        try:
            L = sla.cholesky(A, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise FactorizationError(str(exc)) from exc
        if not np.all(np.isfinite(L)):
            raise FactorizationError("Cholesky factor is not finite")
        return cls(L)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    def solve(self, b):
        """Solve ``L L^T d = b`` for a vector or a matrix of right-hand sides."""
        return sla.cho_solve((self.lower, True), b, check_finite=False)

    def inverse(self):
        return self.solve(np.eye(self.dim))

    def reconstruct(self):
        return self.lower @ self.lower.T


def regularized_solve(G, b, eps):
    """Return ``d`` with ``(G + eps I) d = b``.

    ``eps`` may be zero when ``G`` itself is known to be positive definite.
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    return SymmetricFactorization.of(G, eps).solve(np.asarray(b, dtype=float))


def trace_scaled_epsilon(G, eps_rel):
    """Damping ``eps_rel * tr(G) / D``, floored at ``eps_rel`` when the trace is zero."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {G.shape}")
    tr = float(np.trace(G))
    if tr == 0.0:
        return float(eps_rel)
    return float(eps_rel) * tr / G.shape[0]
