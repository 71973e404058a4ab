import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from rfim.whitening import Whitener, whiten_apply, whiten_fit

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(2, 8), st.integers(0, 3))
def test_contract_on_training_data(seed, d, n_const):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(200, d)) @ rng.normal(size=(d, d)) + 5 * rng.normal(size=d)
    X = np.hstack([X, np.tile(rng.normal(size=n_const), (200, 1))])
    wh = Whitener().fit(X)
    Y = wh.transform(X)
    assert wh.n_dropped_ == n_const and Y.shape[1] == d
    assert np.abs(Y.mean(axis=0)).max() <= 1e-8
    assert np.abs(Y.T @ Y / 200 - np.eye(d)).max() <= 1e-6


def test_collinear_feature_is_dropped(rng):
    X = rng.normal(size=(50, 2))
    X = np.hstack([X, X[:, :1] - 2 * X[:, 1:]])
    assert Whitener().fit(X).n_components_ == 2


def test_sklearn_api(rng):
    X = rng.normal(size=(30, 3))
    wh = Whitener(threshold=1e-6)
    assert wh.get_params() == {"threshold": 1e-6}
    assert clone(wh).threshold == 1e-6
    np.testing.assert_allclose(wh.fit_transform(X), wh.transform(X))


def test_single_vector_apply(rng):
    X = rng.normal(size=(30, 3))
    wh = whiten_fit(X)
    np.testing.assert_allclose(whiten_apply(wh, X[4]), wh.transform(X)[4])


def test_errors(rng):
    with pytest.raises(ValueError):
        Whitener().fit(np.ones((1, 3)))
    with pytest.raises(ValueError):
        Whitener().fit(np.ones((5, 3)))
    wh = Whitener().fit(rng.normal(size=(10, 3)))
    with pytest.raises(ValueError):
        wh.transform(np.zeros((2, 4)))


def test_one_dimensional_variance_nine():
    X = np.array([[-3.0], [3.0]]) + 1.0
    wh = Whitener().fit(X)
    np.testing.assert_allclose(np.abs(wh.components_), [[1 / 3]])
    np.testing.assert_allclose(wh.mean_, [1.0])


def test_white_data_gives_orthogonal_map(rng):
    Y = Whitener().fit_transform(rng.normal(size=(500, 4)))
    A = Whitener().fit(Y).components_
    np.testing.assert_allclose(A @ A.T, np.eye(4), atol=1e-8)


def test_constant_mnist_pixels_are_dropped(mnist_idx):
    from rfim.data import load_idx

    ds = load_idx(*mnist_idx[:2])
    X = ds.features[:3000]
    wh = Whitener().fit(X)
    constant = int(np.sum(X.std(axis=0) == 0))
    # rarely-lit pixels add exactly collinear directions on top of the constant ones
    assert constant > 0 and wh.n_dropped_ >= constant
    assert wh.n_components_ <= np.linalg.matrix_rank(X - X.mean(axis=0))
    Y = wh.transform(X)
    assert np.abs(Y.T @ Y / len(Y) - np.eye(wh.n_components_)).max() <= 1e-6
