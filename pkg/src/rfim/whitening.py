"""Feature whitening as a scikit-learn transformer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted


class Whitener(TransformerMixin, BaseEstimator):
    """Map ``x`` to ``A (x - a)`` with zero mean and identity covariance.

    ``a`` is the sample mean and the rows of ``A`` are covariance eigenvectors
    scaled by ``eigenvalue ** -0.5``. Directions whose eigenvalue is at most
    ``threshold`` times the largest one are dropped, so the output may have
    fewer columns than the input. The covariance uses the ``1/n`` normalization.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    components_ : ndarray of shape (n_components_, n_features)
        The transform ``A``.
    explained_variance_ : ndarray of shape (n_components_,)
    n_components_ : int
    n_dropped_ : int
    """

    def __init__(self, threshold=1e-8):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        if n < 2:
            raise ValueError(f"whitening needs at least 2 samples, got {n}")
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        cov = Xc.T @ Xc / n
        evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        top = evals[0]
        if top <= 0:
            raise ValueError("all features are constant; nothing to whiten")
        keep = evals > self.threshold * top
        self.explained_variance_ = evals[keep]
        self.components_ = (evecs[:, keep] / np.sqrt(evals[keep])).T
        self.n_components_ = int(keep.sum())
        self.n_dropped_ = int(X.shape[1] - self.n_components_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return (X - self.mean_) @ self.components_.T


def whiten_fit(xs, threshold=1e-8):
    return Whitener(threshold=threshold).fit(xs)


def whiten_apply(whitener, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return whitener.transform(x[None])[0]
    return whitener.transform(x)
