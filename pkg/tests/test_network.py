import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfim import activations as act
from rfim import network as net

seeds = st.integers(0, 2**32 - 1)


def _fd_grads(spec, params, X, y, h=1e-6):
    out = []
    for l, W in enumerate(params):
        g = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            plus = [P.copy() for P in params]
            minus = [P.copy() for P in params]
            plus[l][idx] += h
            minus[l][idx] -= h
            fp = net.loss_cross_entropy(net.forward(spec, plus, X), y)
            fm = net.loss_cross_entropy(net.forward(spec, minus, X), y)
            g[idx] = (fp - fm) / (2 * h)
        out.append(g)
    return out


@pytest.mark.parametrize("kind", [act.relu(), act.tanh(), act.elu()])
@pytest.mark.parametrize("seed", range(5))
def test_backward_matches_finite_differences(kind, seed):
    rng = np.random.default_rng(seed)
    spec = net.MlpSpec((4, 3, 2), kind)
    params = net.init_params(spec, rng)
    X, y = rng.normal(size=(7, 4)), rng.integers(0, 2, 7)
    _, grads, _ = net.loss_and_grads(spec, params, X, y)
    fd = net.flatten(_fd_grads(spec, params, X, y))
    assert np.linalg.norm(net.flatten(grads) - fd) <= 1e-5 * np.linalg.norm(fd)


def test_sigmoid_head_gradient_is_logistic_gradient(rng):
    spec = net.logistic_spec(3)
    theta = rng.normal(size=4)
    X, y = rng.normal(size=(10, 3)), rng.integers(0, 2, 10)
    _, grads, _ = net.loss_and_grads(spec, [theta[:, None]], X, y)
    Z = np.hstack([X, np.ones((10, 1))])
    p = 1 / (1 + np.exp(-Z @ theta))
    np.testing.assert_allclose(grads[0][:, 0], Z.T @ (p - y) / 10, rtol=1e-12)


@given(seeds)
def test_softmax_rows_sum_to_one_and_shift_invariance(seed):
    rng = np.random.default_rng(seed)
    spec = net.MlpSpec((3, 4, 5))
    params = net.init_params(spec, rng)
    X = rng.normal(size=(6, 3))
    p = net.forward(spec, params, X).probs
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((p >= 0) & (p <= 1))
    shifted = [params[0], params[1] + rng.normal(size=(5, 1))]
    np.testing.assert_allclose(net.forward(spec, shifted, X).probs, p, atol=1e-12)


def test_clamp_fires_and_is_recorded():
    spec = net.MlpSpec((1, 2))
    W = np.array([[100.0, -100.0], [0.0, 0.0]])
    trace = net.forward(spec, [W], np.array([[1.0]]))
    loss = net.loss_cross_entropy(trace, [1])
    assert trace.clamped
    assert loss == pytest.approx(-np.log(net.PROB_FLOOR))
    ok = net.forward(spec, [W], np.array([[1.0]]))
    net.loss_cross_entropy(ok, [0])
    assert not ok.clamped


def test_gradient_precise_for_confident_predictions():
    # the residual p - y is exp(log p) - 1 computed without cancellation
    spec = net.logistic_spec(1)
    theta = np.array([[50.0], [0.0]])
    _, grads, _ = net.loss_and_grads(spec, [theta], np.array([[1.0]]), [1])
    assert grads[0][0, 0] == pytest.approx(-np.exp(-50.0), rel=1e-12)


def test_spec_validation_and_shapes():
    spec = net.MlpSpec((784, 32, 32, 10))
    assert spec.shapes() == [(785, 32), (33, 32), (33, 10)]
    assert spec.num_layers == 3 and spec.num_classes == 10
    with pytest.raises(ValueError):
        net.MlpSpec((3,))
    with pytest.raises(ValueError):
        net.MlpSpec((3, 2), head="sigmoid")
    with pytest.raises(ValueError):
        net.MlpSpec((3, 1))
    with pytest.raises(ValueError):
        net.MlpSpec((3, 2), head="tanh")


def test_bad_inputs_rejected(rng):
    spec = net.MlpSpec((3, 2))
    params = net.init_params(spec, rng)
    with pytest.raises(ValueError):
        net.forward(spec, params, np.zeros((2, 4)))
    with pytest.raises(ValueError):
        net.forward(spec, [np.zeros((3, 2))], np.zeros((2, 3)))
    trace = net.forward(spec, params, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        net.loss_cross_entropy(trace, [0, 2])
    with pytest.raises(ValueError):
        net.loss_cross_entropy(trace, [0])


def test_init_and_flatten_round_trip(rng):
    spec = net.MlpSpec((5, 4, 3))
    params = net.init_params(spec, rng)
    assert all(np.all(W[-1] == 0) for W in params)
    assert all(np.all(W == 0) for W in net.init_params(spec, rng, scale=0))
    back = net.unflatten(spec, net.flatten(params))
    for a, b in zip(params, back):
        np.testing.assert_array_equal(a, b)


def test_accuracy_error():
    spec = net.MlpSpec((1, 2))
    W = np.array([[1.0, -1.0], [0.0, 0.0]])
    trace = net.forward(spec, [W], np.array([[1.0], [-1.0]]))
    assert net.accuracy_error(trace, [0, 0]) == 0.5
