"""scikit-learn classifiers wrapping the training loops.

:class:`NaturalLogisticRegression` is the single sigm neuron trained by
gradient descent or natural gradient, optionally on whitened features.
:class:`RelativeMLPClassifier` is a relu MLP with a softmax head trained by
SGD, Adam or RNGD. Both record the per-iteration training cost so that runs
can be compared curve by curve.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import activations as act
from . import network as net
from .data import minibatches
from .optim import RNGD, Adam, MomentumSGD, NaturalMomentum
from .whitening import Whitener


class Diverged(ArithmeticError):
    def __init__(self, iteration, cost):
        super().__init__(f"training diverged at iteration {iteration} (cost={cost})")
        self.iteration = iteration
        self.cost = cost


class _TrainingLog:
    def __init__(self, max_cost):
        self.max_cost = max_cost
        self.costs = []
        self.epoch_errors = []
        self.epoch_times = []
        self.clamped = False

    def record(self, cost, trace, params):
        self.clamped |= trace.clamped
        it = len(self.costs)
        self.costs.append(cost)
        if not np.isfinite(cost) or cost > self.max_cost:
            raise Diverged(it, cost)
        if not all(np.all(np.isfinite(W)) for W in params):
            raise Diverged(it, float("nan"))


def _final_cost(spec, params, X, y, log):
    trace = net.forward(spec, params, X)
    cost = net.loss_cross_entropy(trace, y)
    log.clamped |= trace.clamped
    if not np.isfinite(cost) or cost > log.max_cost:
        raise Diverged(len(log.costs), cost)
    return cost


def _as_diverged(exc, log):
    if isinstance(exc, Diverged):
        return exc
    return Diverged(len(log.costs), float("nan"))


class _TrainedClassifier(ClassifierMixin, BaseEstimator):
    # fit() silences overflow warnings: blow-ups are detected and recorded as divergence
    def _start(self, X, y, min_classes=2):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if self.classes_.size < min_classes:
            raise ValueError(f"need at least {min_classes} classes, got {self.classes_.size}")
        return X, np.searchsorted(self.classes_, y)

    def _finish(self, log, exc):
        self.cost_curve_ = np.asarray(log.costs)
        self.epoch_error_ = np.asarray(log.epoch_errors)
        self.epoch_time_ = np.asarray(log.epoch_times)
        self.clamped_ = log.clamped
        self.diverged_ = exc is not None
        self.diverged_at_ = None if exc is None else exc.iteration
        self.n_iter_ = len(log.costs)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class NaturalLogisticRegression(_TrainedClassifier):
    """Logistic regression trained by (natural) gradient descent with momentum.

    Parameters
    ----------
    method : {"gd", "ngd"}
        ``"ngd"`` preconditions each step with ``(G + eps I)^{-1}`` where ``G``
        is the batch metric of the sigm neuron.
    whiten : bool
        Fit a :class:`~rfim.whitening.Whitener` on the training features first.
    lr, momentum : float
        Heavy-ball learning rate and momentum.
    epochs : int
    batch_size : int or None
        ``None`` trains full-batch, one iteration per epoch.
    eps_rel : float
        Relative damping; ``eps = eps_rel * tr(G) / D``.
    """

    def __init__(self, method="ngd", whiten=False, lr=1.0, momentum=0.0, epochs=100,
                 batch_size=None, eps_rel=1e-2, whiten_threshold=1e-8, random_state=0,
                 max_cost=1e6, raise_on_divergence=False):
        self.method = method
        self.whiten = whiten
        self.lr = lr
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.eps_rel = eps_rel
        self.whiten_threshold = whiten_threshold
        self.random_state = random_state
        self.max_cost = max_cost
        self.raise_on_divergence = raise_on_divergence

    def _features(self, X):
        return self.whitener_.transform(X) if self.whitener_ is not None else X

    @np.errstate(over="ignore", invalid="ignore")
    def fit(self, X, y):
        if self.method not in ("gd", "ngd"):
            raise ValueError(f"unknown method {self.method!r}")
        X, yi = self._start(X, y)
        if self.classes_.size != 2:
            raise ValueError("logistic regression needs exactly two classes")
        self.whitener_ = Whitener(self.whiten_threshold).fit(X) if self.whiten else None
        F = self._features(X)
        spec = net.logistic_spec(F.shape[1])
        theta = np.zeros(F.shape[1] + 1)
        if self.method == "ngd":
            opt = NaturalMomentum(self.lr, self.momentum, self.eps_rel)
        else:
            opt = MomentumSGD(self.lr, self.momentum)
        n = F.shape[0]
        bs = n if self.batch_size is None else int(self.batch_size)
        log = _TrainingLog(self.max_cost)
        exc = None
        try:
            for epoch in range(self.epochs):
                t0 = time.perf_counter()
                batches = [np.arange(n)] if bs >= n else minibatches(n, bs, self.random_state, epoch)
                for idx in batches:
                    Fb, yb = F[idx], yi[idx]
                    cost, grads, trace = net.loss_and_grads(spec, [theta[:, None]], Fb, yb)
                    log.record(cost, trace, [theta])
                    if self.method == "ngd":
                        theta = opt.step(theta, net.augment(Fb), yb)
                    else:
                        theta = opt.step([theta], [grads[0][:, 0]])[0]
                trace = net.forward(spec, [theta[:, None]], F)
                log.epoch_errors.append(net.accuracy_error(trace, yi))
                log.epoch_times.append(time.perf_counter() - t0)
            self.final_cost_ = _final_cost(spec, [theta[:, None]], F, yi, log)
        except (Diverged, FloatingPointError) as e:
            exc = _as_diverged(e, log)
            self.final_cost_ = float("nan")
            if self.raise_on_divergence:
                raise exc from e
        self.coef_ = theta
        self._spec = spec
        self._finish(log, exc)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        F = self._features(check_array(X, dtype=np.float64))
        return net.augment(F) @ self.coef_

    def predict_proba(self, X):
        check_is_fitted(self, "coef_")
        F = self._features(check_array(X, dtype=np.float64))
        return net.forward(self._spec, [self.coef_[:, None]], F).probs


class RelativeMLPClassifier(_TrainedClassifier):
    """Softmax MLP trained by SGD, Adam or RNGD.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
    optimizer : {"sgd", "adam", "rngd"}
    lr, momentum : float
        ``momentum`` only applies to ``"sgd"``.
    epochs, batch_size : int
    refresh_period, decay, eps_rel : RNGD settings (``T``, ``lambda``, relative damping).
    omega, iota, sigma : float
        Hyperparameters of the relu metric coefficient; the forward pass always
        uses the exact PReLU with slope ``iota``.
    random_state : int
        Seeds the initialization and the minibatch order.
    """

    def __init__(self, hidden_layer_sizes=(32, 32), optimizer="rngd", lr=1e-2, momentum=0.0,
                 epochs=5, batch_size=64, refresh_period=100, decay=0.995, eps_rel=1e-2,
                 omega=0.1, iota=0.0, sigma=1.0, random_state=0, max_cost=1e6,
                 raise_on_divergence=False):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.optimizer = optimizer
        self.lr = lr
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.refresh_period = refresh_period
        self.decay = decay
        self.eps_rel = eps_rel
        self.omega = omega
        self.iota = iota
        self.sigma = sigma
        self.random_state = random_state
        self.max_cost = max_cost
        self.raise_on_divergence = raise_on_divergence

    def _make_optimizer(self, spec):
        if self.optimizer == "sgd":
            return MomentumSGD(self.lr, self.momentum)
        if self.optimizer == "adam":
            return Adam(self.lr)
        if self.optimizer == "rngd":
            return RNGD(spec, self.lr, self.decay, self.refresh_period, self.eps_rel, sigma=self.sigma)
        raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @np.errstate(over="ignore", invalid="ignore")
    def fit(self, X, y):
        X, yi = self._start(X, y)
        kind = act.relu(iota=self.iota, omega=self.omega, sigma=self.sigma)
        spec = net.MlpSpec((X.shape[1], *self.hidden_layer_sizes, self.classes_.size), kind)
        params = net.init_params(spec, self.random_state)
        opt = self._make_optimizer(spec)
        n = X.shape[0]
        log = _TrainingLog(self.max_cost)
        exc = None
        try:
            for epoch in range(self.epochs):
                t0 = time.perf_counter()
                for idx in minibatches(n, self.batch_size, self.random_state, epoch):
                    cost, grads, trace = net.loss_and_grads(spec, params, X[idx], yi[idx])
                    log.record(cost, trace, params)
                    if isinstance(opt, RNGD):
                        params = opt.update(params, grads, trace)
                    else:
                        params = opt.step(params, grads)
                trace = net.forward(spec, params, X)
                log.epoch_errors.append(net.accuracy_error(trace, yi))
                log.epoch_times.append(time.perf_counter() - t0)
            self.final_cost_ = _final_cost(spec, params, X, yi, log)
        except (Diverged, FloatingPointError) as e:
            exc = _as_diverged(e, log)
            self.final_cost_ = float("nan")
            if self.raise_on_divergence:
                raise exc from e
        self.coefs_ = params
        self.spec_ = spec
        self.optimizer_ = opt
        self._finish(log, exc)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "coefs_")
        return net.forward(self.spec_, self.coefs_, check_array(X, dtype=np.float64)).probs
