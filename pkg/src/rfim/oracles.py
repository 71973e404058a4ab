"""Brute-force Fisher information of small conditional output models.

These estimators know nothing about the closed forms in :mod:`rfim.metrics`.
A model is described only by its log-likelihood ``log p(y | theta)``; scores
come from complex-step differentiation of that log-likelihood, and the Fisher
matrix is obtained by exact enumeration of the outcome space, Monte Carlo
sampling, or finite-difference Hessians.

Parameters are flat vectors. For a layer with weights ``W`` of shape
``(D+1, m)`` the flat vector stacks the columns of ``W``
(``W.T.ravel()``), matching the block layout of the analytic metrics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_OUTCOMES = 20
_CSTEP = 1e-20


class OutcomeSpaceTooLarge(ValueError):
    pass


class NonFiniteLikelihood(ArithmeticError):
    pass


def _augment(x):
    return np.append(np.asarray(x, dtype=float).ravel(), 1.0)


def _unflatten(theta, rows):
    return theta.reshape(-1, rows).T


def complex_activation(family, z, *, iota=0.0, omega=0.1, alpha=1.0):
    """Activation evaluated on complex arguments; branch choice uses the real part."""
    z = np.asarray(z)
    if family == "tanh":
        return np.tanh(z)
    if family == "sigm":
        return 1.0 / (1.0 + np.exp(-z))
    if family == "relu":
        a, b = iota * z / omega, z / omega
        top = np.maximum(a.real, b.real)
        return omega * (top + np.log(np.exp(a - top) + np.exp(b - top)))
    if family == "elu":
        return np.where(z.real >= 0, z, alpha * (np.exp(z) - 1.0))
    if family == "identity":
        return z
    raise ValueError(f"unknown family {family!r}")


class OutputModel:
    """A conditional output distribution ``p(y | theta)`` with the input fixed."""

    tag = "abstract"
    num_outputs = 1

    def log_prob(self, theta, ys):
        """Log-likelihood of each row of ``ys``; must accept complex ``theta``."""
        raise NotImplementedError

    def outcomes(self):
        """All outcomes as rows, or ``None`` when the outcome space is continuous."""
        return None

    def sample(self, theta, rng, n):
        raise NotImplementedError


class BernoulliModel(OutputModel):
    """Independent binary outputs driven by pre-activations ``response(theta)``.

    ``tag="BernoulliTanh"`` uses ``y in {-1, 1}`` with ``p(y=1) = (1 + tanh s)/2``;
    ``tag="BernoulliSigm"`` uses ``y in {0, 1}`` with ``p(y=1) = sigm(s)``.
    """

    def __init__(self, tag, response, num_outputs):
        if tag not in ("BernoulliTanh", "BernoulliSigm"):
            raise ValueError(f"unknown Bernoulli tag {tag!r}")
        self.tag = tag
        self.response = response
        self.num_outputs = num_outputs
        self.levels = (-1.0, 1.0) if tag == "BernoulliTanh" else (0.0, 1.0)

    def outcomes(self):
        return np.array(list(itertools.product(self.levels, repeat=self.num_outputs)))

    def log_prob(self, theta, ys):
        s = self.response(theta)
        ys = np.atleast_2d(ys)
        if self.tag == "BernoulliTanh":
            # (1 + y tanh s)/2 == sigm(2 y s); this form avoids cancellation in saturation
            terms = -np.log(1.0 + np.exp(-2.0 * ys * s[None, :]))
        else:
            # log sigm(s) and log(1 - sigm(s)) without cancellation
            log_p1 = -np.log(1.0 + np.exp(-s))
            log_p0 = -np.log(1.0 + np.exp(s))
            terms = ys * log_p1[None, :] + (1.0 - ys) * log_p0[None, :]
        return terms.sum(axis=1)

    def prob_one(self, theta):
        s = np.asarray(self.response(theta)).real
        if self.tag == "BernoulliTanh":
            return (1.0 + np.tanh(s)) / 2.0
        return 1.0 / (1.0 + np.exp(-s))

    def sample(self, theta, rng, n):
        p = self.prob_one(theta)
        hits = rng.random((n, self.num_outputs)) < p[None, :]
        lo, hi = self.levels
        return np.where(hits, hi, lo)


class GaussianModel(OutputModel):
    """Outputs ``y ~ N(mean(theta), sigma^2 I)``."""

    tag = "GaussianMean"

    def __init__(self, mean, num_outputs, sigma=1.0):
        self.mean = mean
        self.num_outputs = num_outputs
        self.sigma = float(sigma)

    def log_prob(self, theta, ys):
        mu = self.mean(theta)
        ys = np.atleast_2d(ys)
        r = ys - mu[None, :]
        return (-0.5 * r**2 / self.sigma**2).sum(axis=1) - self.num_outputs * np.log(
            self.sigma * np.sqrt(2 * np.pi)
        )

    def sample(self, theta, rng, n):
        mu = np.asarray(self.mean(theta)).real
        return mu[None, :] + self.sigma * rng.standard_normal((n, self.num_outputs))


class CategoricalModel(OutputModel):
    """One draw from ``softmax(response(theta))``, encoded as a one-hot row."""

    tag = "Categorical"

    def __init__(self, response, num_classes):
        self.response = response
        self.num_outputs = num_classes

    def outcomes(self):
        return np.eye(self.num_outputs)

    def log_prob(self, theta, ys):
        s = self.response(theta)
        top = np.max(s.real)
        logz = top + np.log(np.sum(np.exp(s - top)))
        return np.atleast_2d(ys) @ (s - logz)

    def sample(self, theta, rng, n):
        s = np.asarray(self.response(theta)).real
        p = np.exp(s - s.max())
        p /= p.sum()
        idx = rng.choice(self.num_outputs, size=n, p=p)
        return np.eye(self.num_outputs)[idx]


# -- model builders ----------------------------------------------------------


def _kind_kwargs(kind):
    return {"iota": kind.iota, "omega": kind.omega, "alpha": kind.alpha}


def layer_model(kind, x, num_outputs=1):
    """Stochastic layer ``y = f(W^T x~) + noise``; one neuron when ``num_outputs == 1``."""
    xt = _augment(x)
    rows = xt.size
    family = kind.family.value

    def pre(theta):
        return xt @ _unflatten(theta, rows)

    if family == "tanh":
        return BernoulliModel("BernoulliTanh", pre, num_outputs)
    if family == "sigm":
        return BernoulliModel("BernoulliSigm", pre, num_outputs)

    def mean(theta):
        return complex_activation(family, pre(theta), **_kind_kwargs(kind))

    return GaussianModel(mean, num_outputs, sigma=kind.sigma)


def neuron_model(kind, x):
    return layer_model(kind, x, 1)


def linear_layer_model(sigma, x, num_outputs):
    xt = _augment(x)
    rows = xt.size
    return GaussianModel(lambda theta: xt @ _unflatten(theta, rows), num_outputs, sigma=sigma)


def softmax_model(x, num_classes):
    xt = _augment(x)
    rows = xt.size
    return CategoricalModel(lambda theta: xt @ _unflatten(theta, rows), num_classes)


def two_layer_model(kind, C, x):
    """Two stacked layers with the second layer ``C`` held fixed; theta is the first layer."""
    xt = _augment(x)
    rows = xt.size
    C = np.asarray(C, dtype=float)
    family = kind.family.value
    kw = _kind_kwargs(kind)

    def pre(theta):
        h = complex_activation(family, xt @ _unflatten(theta, rows), **kw)
        return np.append(h, 1.0) @ C

    if family == "tanh":
        return BernoulliModel("BernoulliTanh", pre, C.shape[1])
    if family == "sigm":
        return BernoulliModel("BernoulliSigm", pre, C.shape[1])
    return GaussianModel(lambda theta: complex_activation(family, pre(theta), **kw), C.shape[1], kind.sigma)


# -- estimators --------------------------------------------------------------


@dataclass
class FisherEstimate:
    matrix: np.ndarray
    stderr: np.ndarray | None = None
    nsamples: int | None = None


def scores(model, theta, ys):
    """Gradient of ``log p(y | theta)`` for each row of ``ys`` via complex steps."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty((np.atleast_2d(ys).shape[0], theta.size))
    for k in range(theta.size):
        probe = theta.astype(complex)
        probe[k] += 1j * _CSTEP
        out[:, k] = np.imag(model.log_prob(probe, ys)) / _CSTEP
    if not np.all(np.isfinite(out)):
        raise NonFiniteLikelihood("score is not finite")
    return out


def _neg_hessian(model, theta, ys, step):
    d = theta.size
    H = np.zeros((ys.shape[0], d, d))
    eye = np.eye(d) * step
    for k in range(d):
        for j in range(k, d):
            val = (
                model.log_prob(theta + eye[k] + eye[j], ys)
                - model.log_prob(theta + eye[k] - eye[j], ys)
                - model.log_prob(theta - eye[k] + eye[j], ys)
                + model.log_prob(theta - eye[k] - eye[j], ys)
            ).real / (4 * step**2)
            H[:, k, j] = H[:, j, k] = -val
    return H


def _enumerated(model, theta):
    ys = model.outcomes()
    if ys is None:
        raise OutcomeSpaceTooLarge(f"{model.tag} has a continuous outcome space")
    if ys.shape[0] > MAX_OUTCOMES:
        raise OutcomeSpaceTooLarge(f"{ys.shape[0]} outcomes exceeds the limit of {MAX_OUTCOMES}")
    logp = model.log_prob(theta.astype(float), ys).real
    if not np.all(np.isfinite(logp)):
        raise NonFiniteLikelihood("log-likelihood is not finite")
    return ys, np.exp(logp)


def observed_fisher_oracle(model, theta, method="enumerate", *, nsamples=100_000, seed=0, step=1e-4):
    """Estimate the Fisher information of ``model`` at ``theta``.

    ``method`` is one of ``"enumerate"`` (exact expectation of the score outer
    product over every outcome), ``"monte_carlo"`` (sample mean with per-entry
    standard errors) or ``"hessian_fd"`` (expected negative Hessian from
    central differences, averaged by enumeration when possible, else by
    sampling).
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if method == "enumerate":
        ys, p = _enumerated(model, theta)
        S = scores(model, theta, ys)
        return FisherEstimate((S * p[:, None]).T @ S)
    if method == "monte_carlo":
        rng = np.random.default_rng(seed)
        ys = model.sample(theta, rng, nsamples)
        S = scores(model, theta, ys)
        terms = S[:, :, None] * S[:, None, :]
        mean = terms.mean(axis=0)
        se = terms.std(axis=0, ddof=1) / np.sqrt(nsamples)
        return FisherEstimate(mean, se, nsamples)
    if method == "hessian_fd":
        if not step > 0:
            raise ValueError("step must be positive")
        if model.outcomes() is not None:
            ys, p = _enumerated(model, theta)
            H = _neg_hessian(model, theta, ys, step)
            return FisherEstimate(np.tensordot(p, H, axes=1))
        rng = np.random.default_rng(seed)
        ys = model.sample(theta, rng, nsamples)
        H = _neg_hessian(model, theta, ys, step)
        return FisherEstimate(H.mean(axis=0), H.std(axis=0, ddof=1) / np.sqrt(nsamples), nsamples)
    raise ValueError(f"unknown method {method!r}")
