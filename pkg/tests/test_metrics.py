import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from rfim import activations as act
from rfim import metrics as rm
from rfim import oracles as orc

seeds = st.integers(0, 2**32 - 1)


def _flat(W):
    return np.asarray(W).T.ravel()


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_single_sigm_neuron_hand_value():
    # w = (0.5, -0.25), x = 2: s = 0.75, nu = sigm(s)(1 - sigm(s))
    p = 1 / (1 + np.exp(-0.75))
    expected = p * (1 - p) * np.array([[4.0, 2.0], [2.0, 1.0]])
    np.testing.assert_allclose(rm.neuron_rfim(act.sigm(), [0.5, -0.25], [2.0]), expected, rtol=1e-14)


def test_linear_layer_blocks():
    G = rm.linear_layer_rfim(2.0, [1.0, -1.0], 3)
    assert G.blocks.shape == (3, 3, 3)
    np.testing.assert_allclose(G.block(1), np.outer([1, -1, 1], [1, -1, 1]) / 4)
    F = orc.observed_fisher_oracle(orc.linear_layer_model(2.0, [1.0, -1.0], 3), np.zeros(9)).matrix \
        if False else None  # continuous outcomes: checked by Monte Carlo below
    assert F is None


def test_linear_layer_matches_monte_carlo():
    x = np.array([0.3, -1.2])
    model = orc.linear_layer_model(0.5, x, 2)
    est = orc.observed_fisher_oracle(model, np.zeros(6), "monte_carlo", nsamples=200_000, seed=3)
    G = rm.linear_layer_rfim(0.5, x, 2).to_dense()
    assert np.all(np.abs(G - est.matrix) <= 4 * est.stderr + 1e-12)


@given(seeds, st.sampled_from(["tanh", "sigm"]))
@example(51212, "tanh")  # saturated pre-activation, nu ~ 1e-8
def test_neuron_matches_enumeration(seed, fam):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(1, 6))
    w, x = rng.normal(size=D + 1), rng.normal(size=D)
    kind = act.ActivationKind(fam)
    F = orc.observed_fisher_oracle(orc.neuron_model(kind, x), w).matrix
    assert _rel(rm.neuron_rfim(kind, w, x), F) <= 1e-10


def test_neuron_matches_hessian_estimator(rng):
    kind = act.tanh()
    w, x = rng.normal(size=4), rng.normal(size=3)
    F = orc.observed_fisher_oracle(orc.neuron_model(kind, x), w, "hessian_fd").matrix
    assert _rel(rm.neuron_rfim(kind, w, x), F) <= 1e-6


@pytest.mark.parametrize("kind", [act.relu(omega=0.5), act.elu(alpha=1.0)])
def test_gaussian_neuron_matches_monte_carlo(kind):
    rng = np.random.default_rng(7)
    w, x = rng.normal(size=3), rng.normal(size=2)
    est = orc.observed_fisher_oracle(orc.neuron_model(kind, x), w, "monte_carlo", nsamples=200_000, seed=1)
    G = rm.neuron_rfim(kind, w, x)
    assert np.all(np.abs(G - est.matrix) <= 4 * est.stderr + 1e-12)


def test_layer_is_block_diagonal_and_exact(rng):
    kind = act.tanh()
    W, x = rng.normal(size=(4, 3)), rng.normal(size=3)
    F = orc.observed_fisher_oracle(orc.layer_model(kind, x, 3), _flat(W)).matrix
    G = rm.nonlinear_layer_rfim(kind, W, x)
    assert _rel(G.to_dense(), F) <= 1e-10
    for i in range(3):
        for j in range(3):
            if i != j:
                assert np.abs(F[4 * i:4 * i + 4, 4 * j:4 * j + 4]).max() <= 1e-10


@given(seeds)
def test_softmax_psd_null_vector_and_enumeration(seed):
    rng = np.random.default_rng(seed)
    m, D = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    W, x = rng.normal(size=(D + 1, m)), rng.normal(size=D)
    G = rm.softmax_rfim(W, x)
    assert np.linalg.eigvalsh(G.matrix).min() >= -1e-10
    xt = np.append(x, 1.0)
    assert np.abs(G.matrix @ np.tile(xt, m)).max() <= 1e-10
    F = orc.observed_fisher_oracle(orc.softmax_model(x, m), _flat(W)).matrix
    assert _rel(G.matrix, F) <= 1e-10


def test_softmax_needs_two_classes():
    with pytest.raises(ValueError):
        rm.softmax_rfim(np.ones((3, 1)), [1.0, 2.0])


@given(seeds, st.sampled_from(["tanh", "sigm"]))
def test_two_layer_matches_enumeration(seed, fam):
    rng = np.random.default_rng(seed)
    kind = act.ActivationKind(fam)
    W, C, x = rng.normal(size=(4, 2)), rng.normal(size=(3, 2)), rng.normal(size=3)
    F = orc.observed_fisher_oracle(orc.two_layer_model(kind, C, x), _flat(W)).matrix
    assert _rel(rm.two_layer_rfim(kind, W, C, x).matrix, F) <= 1e-8


def test_two_layer_derivative_mode_is_exact_for_relu():
    rng = np.random.default_rng(4)
    kind = act.relu(omega=0.5)
    W, C, x = rng.normal(size=(3, 2)), rng.normal(size=(3, 1)), rng.normal(size=2)
    est = orc.observed_fisher_oracle(orc.two_layer_model(kind, C, x), _flat(W), "monte_carlo",
                                     nsamples=200_000, seed=2)
    G = rm.two_layer_rfim(kind, W, C, x, mode="derivative").matrix
    assert np.all(np.abs(G - est.matrix) <= 4 * est.stderr + 1e-12)
    with pytest.raises(ValueError):
        rm.two_layer_rfim(kind, W, C, x, mode="other")


def test_dimension_checks():
    with pytest.raises(ValueError):
        rm.neuron_rfim(act.tanh(), np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        rm.batch_neuron_rfim(act.tanh(), np.ones(3), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        rm.two_layer_rfim(act.tanh(), np.ones((3, 2)), np.ones((2, 1)), np.ones(2))


@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_batch_rank_is_min_of_samples_and_dim(seed, n, D):
    rng = np.random.default_rng(seed)
    G = rm.batch_neuron_rfim(act.tanh(), 0.3 * rng.normal(size=D + 1), rng.normal(size=(n, D)))
    sv = np.linalg.svd(G, compute_uv=False)
    assert int(np.sum(sv > 1e-9 * sv[0])) == min(n, D + 1)


def test_batch_mean_of_single_neuron_metrics(rng):
    kind = act.sigm()
    w, xs = rng.normal(size=3), rng.normal(size=(6, 2))
    expected = np.mean([rm.neuron_rfim(kind, w, x) for x in xs], axis=0)
    np.testing.assert_allclose(rm.batch_neuron_rfim(kind, w, xs), expected, rtol=1e-13)
