"""Self-checks of the closed-form metrics, the natural-gradient step and whitening.

Each check yields a :class:`PropertyResult`; :func:`report` renders them as
``PROPERTY <name> PASS|FAIL err=<value> tol=<value>`` lines. ``nu_scale``
multiplies every analytic metric before comparison and exists so that a
corrupted coefficient can be shown to fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import activations as act
from . import metrics as rm
from . import oracles
from .optim import ngd_logistic_step
from .whitening import Whitener

SUITES = ("oracles", "invariance", "rank", "whitening")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    err: float
    tol: float

    @property
    def passed(self):
        return bool(np.isfinite(self.err) and self.err <= self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"PROPERTY {self.name} {status} err={self.err:.3e} tol={self.tol:.1e}"


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _flat_theta(W):
    return np.asarray(W).T.ravel()


def _complex_deriv(kind, s):
    h = 1e-20
    f = oracles.complex_activation(kind.family.value, np.asarray(s) + 1j * h,
                                   iota=kind.iota, omega=kind.omega, alpha=kind.alpha)
    return np.imag(f) / h


def oracle_suite(rng, nu_scale=1.0, instances=20):
    out = []
    for kind in (act.tanh(), act.sigm()):
        worst = 0.0
        for _ in range(instances):
            D = int(rng.integers(1, 6))
            w, x = rng.normal(size=D + 1), rng.normal(size=D)
            G = nu_scale * rm.neuron_rfim(kind, w, x)
            F = oracles.observed_fisher_oracle(oracles.neuron_model(kind, x), w).matrix
            worst = max(worst, _rel(G, F))
        out.append(PropertyResult(f"neuron_{kind.family.value}_enumeration", worst, 1e-10))

    for kind in (act.relu(omega=0.3, sigma=0.7), act.elu(sigma=1.3)):
        worst = 0.0
        for _ in range(instances):
            D = int(rng.integers(1, 6))
            w, x = rng.normal(size=D + 1), rng.normal(size=D)
            xt = np.append(x, 1.0)
            ref = _complex_deriv(kind, w @ xt) ** 2 / kind.sigma**2 * np.outer(xt, xt)
            worst = max(worst, _rel(nu_scale * rm.neuron_rfim(kind, w, x), ref))
        out.append(PropertyResult(f"neuron_{kind.family.value}_closed_form", worst, 1e-12))

    kind = act.tanh()
    W, x = rng.normal(size=(4, 3)), rng.normal(size=3)
    F = oracles.observed_fisher_oracle(oracles.layer_model(kind, x, 3), _flat_theta(W)).matrix
    G = nu_scale * rm.nonlinear_layer_rfim(kind, W, x).to_dense()
    out.append(PropertyResult("layer_tanh_enumeration", _rel(G, F), 1e-10))
    mask = rm.nonlinear_layer_rfim(kind, W, x).to_dense() == 0
    out.append(PropertyResult("layer_offdiagonal_blocks", float(np.max(np.abs(F[mask]))), 1e-10))

    W = rng.normal(size=(4, 3))
    F = oracles.observed_fisher_oracle(oracles.softmax_model(x, 3), _flat_theta(W)).matrix
    out.append(PropertyResult("softmax_enumeration", _rel(nu_scale * rm.softmax_rfim(W, x).to_dense(), F), 1e-10))

    W, C = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    F = oracles.observed_fisher_oracle(oracles.two_layer_model(kind, C, x), _flat_theta(W)).matrix
    G = nu_scale * rm.two_layer_rfim(kind, W, C, x).to_dense()
    out.append(PropertyResult("two_layer_tanh_enumeration", _rel(G, F), 1e-8))
    return out


def invariance_suite(rng, seeds=5):
    """One natural-gradient step commutes with an invertible linear reparameterization."""
    worst = 0.0
    for _ in range(seeds):
        n, d = 40, 4
        Z = np.hstack([rng.normal(size=(n, d - 1)), np.ones((n, 1))])
        y = rng.integers(0, 2, n)
        theta = 0.3 * rng.normal(size=d)
        J = rng.normal(size=(d, d)) + d * np.eye(d)
        # Lambda = J theta, so theta^T z = Lambda^T (J^{-T} z)
        Zl = Z @ np.linalg.inv(J)
        lam = J @ theta
        d_theta = ngd_logistic_step(theta, Z, y, 0.5, eps_rel=0.0) - theta
        d_lam = ngd_logistic_step(lam, Zl, y, 0.5, eps_rel=0.0) - lam
        worst = max(worst, _rel(np.linalg.solve(J, d_lam), d_theta))
    return [PropertyResult("ngd_reparameterization", worst, 1e-6)]


def rank_suite(rng, n=5, D=10):
    xs = rng.normal(size=(n, D))
    w = rng.normal(size=D + 1)
    G = rm.batch_neuron_rfim(act.tanh(), w, xs)
    sv = np.linalg.svd(G, compute_uv=False)
    rank = int(np.sum(sv > 1e-9 * sv[0]))
    return [PropertyResult(f"batch_rank_n{n}_D{D}", float(abs(rank - min(n, D + 1))), 0.0)]


def whitening_suite(rng):
    X = rng.normal(size=(300, 6)) @ rng.normal(size=(6, 6)) + rng.normal(size=6)
    X = np.hstack([X, np.full((300, 1), 0.25)])
    wh = Whitener().fit(X)
    Y = wh.transform(X)
    cov = Y.T @ Y / Y.shape[0]
    return [
        PropertyResult("whitening_mean", float(np.max(np.abs(Y.mean(axis=0)))), 1e-8),
        PropertyResult("whitening_cov", float(np.max(np.abs(cov - np.eye(cov.shape[0])))), 1e-6),
        PropertyResult("whitening_dropped_constant", float(abs(wh.n_dropped_ - 1)), 0.0),
    ]


def verify(suites=SUITES, nu_scale=1.0, seed=0):
    """Run the named suites and return their results in order."""
    results = []
    for name in suites:
        rng = np.random.default_rng(seed)
        if name == "oracles":
            results += oracle_suite(rng, nu_scale)
        elif name == "invariance":
            results += invariance_suite(rng)
        elif name == "rank":
            results += rank_suite(rng)
        elif name == "whitening":
            results += whitening_suite(rng)
        else:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    return results


def report(results):
    return "\n".join(r.line() for r in results)
