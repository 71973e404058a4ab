"""Activation functions and the per-neuron metric coefficient ``nu``.

Every single-neuron metric has the form ``nu(s) * x~ x~^T`` where ``s = w^T x~``
is the neuron's pre-activation. ``nu`` is large in the neuron's linear region
and vanishes where the unit saturates or is switched off.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


class Family(str, enum.Enum):
    TANH = "tanh"
    SIGM = "sigm"
    RELU = "relu"
    ELU = "elu"


@dataclass(frozen=True)
class ActivationKind:
    """An activation family plus its hyperparameters.

    ``iota`` is the PReLU negative slope and ``omega`` the smoothing width used
    by the relu metric. ``sigma`` is the output-noise scale of the Gaussian
    families (relu, elu); ``alpha`` is the ELU saturation level.
    """

    family: Family
    iota: float = 0.0
    omega: float = 0.1
    sigma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not 0.0 <= self.iota < 1.0:
            raise ValueError(f"iota must lie in [0, 1), got {self.iota}")
        for name in ("omega", "sigma", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def gaussian(self):
        return self.family in (Family.RELU, Family.ELU)

    def __call__(self, t):
        return evaluate(self, t)

    def nu(self, s):
        return nu(self, s)

    def deriv(self, t):
        return deriv(self, t)


def tanh(**kw):
    return ActivationKind(Family.TANH, **kw)


def sigm(**kw):
    return ActivationKind(Family.SIGM, **kw)


def relu(**kw):
    return ActivationKind(Family.RELU, **kw)


def elu(**kw):
    return ActivationKind(Family.ELU, **kw)


def _sech2(t):
    # 1 - tanh(t)**2 without cancellation for large |t|
    e = np.exp(-2.0 * np.abs(t))
    return 4.0 * e / (1.0 + e) ** 2


def _scalar_or_array(out, t):
    return float(out) if np.ndim(t) == 0 else out


def evaluate(kind, t):
    """Apply the activation. The relu family returns the smoothed ``relu_omega``."""
    t = np.asarray(t, dtype=float)
    fam = kind.family
    if fam is Family.TANH:
        out = np.tanh(t)
    elif fam is Family.SIGM:
        out = expit(t)
    elif fam is Family.RELU:
        w = kind.omega
        out = w * np.logaddexp(kind.iota * t / w, t / w)
    else:
        out = np.where(t >= 0, t, kind.alpha * np.expm1(np.minimum(t, 0.0)))
    return _scalar_or_array(out, t)


def hard(kind, t):
    """Unsmoothed activation, used by forward passes (exact PReLU for the relu family)."""
    if kind.family is not Family.RELU:
        return evaluate(kind, t)
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(np.where(t > 0, t, kind.iota * t), t)


def hard_deriv(kind, t):
    if kind.family is not Family.RELU:
        return deriv(kind, t)
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(np.where(t > 0, 1.0, kind.iota), t)


def deriv(kind, t):
    """Exact derivative of :func:`evaluate`. ELU uses the right derivative at 0."""
    t = np.asarray(t, dtype=float)
    fam = kind.family
    if fam is Family.TANH:
        out = _sech2(t)
    elif fam is Family.SIGM:
        out = expit(t) * expit(-t)
    elif fam is Family.RELU:
        i = kind.iota
        out = i + (1.0 - i) * expit((1.0 - i) * t / kind.omega)
    else:
        out = np.where(t >= 0, 1.0, kind.alpha * np.exp(np.minimum(t, 0.0)))
    return _scalar_or_array(out, t)


def nu(kind, s):
    """Metric coefficient at pre-activation ``s``; always non-negative."""
    s = np.asarray(s, dtype=float)
    fam = kind.family
    if fam is Family.TANH:
        out = _sech2(s)
    elif fam is Family.SIGM:
        out = expit(s) * expit(-s)
    elif fam is Family.RELU:
        i = kind.iota
        out = (i + (1.0 - i) * expit((1.0 - i) * s / kind.omega)) ** 2 / kind.sigma**2
    else:
        a2 = kind.alpha**2
        out = np.where(s >= 0, 1.0, a2 * np.exp(2.0 * np.minimum(s, 0.0))) / kind.sigma**2
    return _scalar_or_array(out, s)
