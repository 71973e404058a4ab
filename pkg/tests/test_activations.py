import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfim import activations as act

s_vals = st.floats(-40, 40, allow_nan=False)


def test_frozen_values_against_mpmath():
    # sech^2, sigm' and a smoothed relu derivative at fixed points, evaluated at 30 digits
    mpmath.mp.dps = 30
    for t in (-3.2, 0.0, 0.75, 5.0):
        assert act.nu(act.tanh(), t) == pytest.approx(float(mpmath.sech(t) ** 2), rel=1e-14)
        sig = 1 / (1 + mpmath.exp(-t))
        assert act.nu(act.sigm(), t) == pytest.approx(float(sig * (1 - sig)), rel=1e-14)
        k = act.relu(iota=0.1, omega=0.5, sigma=2.0)
        d = 0.1 + 0.9 / (1 + mpmath.exp(-0.9 * t / 0.5))
        assert act.nu(k, t) == pytest.approx(float(d**2 / 4), rel=1e-14)


def test_tails_keep_relative_precision():
    # the naive 1 - tanh^2 underflows to 0 long before sech^2 does
    assert act.nu(act.tanh(), 30.0) == pytest.approx(4 * np.exp(-60.0), rel=1e-12)
    assert act.nu(act.sigm(), 50.0) == pytest.approx(np.exp(-50.0), rel=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        act.relu(iota=1.0)
    with pytest.raises(ValueError):
        act.relu(omega=0.0)
    with pytest.raises(ValueError):
        act.elu(sigma=-1.0)
    with pytest.raises(ValueError):
        act.ActivationKind("swish")


def test_scalar_in_scalar_out():
    assert isinstance(act.nu(act.tanh(), 0.3), float)
    assert act.nu(act.tanh(), np.zeros(3)).shape == (3,)


def test_hard_relu_is_prelu():
    k = act.relu(iota=0.2)
    np.testing.assert_array_equal(act.hard(k, np.array([-2.0, 0.0, 3.0])), [-0.4, 0.0, 3.0])
    np.testing.assert_array_equal(act.hard_deriv(k, np.array([-2.0, 3.0])), [0.2, 1.0])


@pytest.mark.parametrize("omega", [1.0, 0.1, 0.01])
def test_smoothed_relu_gap_bounded(omega):
    t = np.linspace(-10, 10, 200001)
    gap = np.abs(act.evaluate(act.relu(omega=omega), t) - np.maximum(t, 0))
    assert gap.max() <= omega * np.log(2) + 1e-15


@given(s_vals, st.sampled_from([act.tanh(), act.sigm(), act.relu(), act.elu(alpha=0.7, sigma=0.5)]))
def test_nu_nonnegative_and_bounded(s, kind):
    v = act.nu(kind, s)
    assert v >= 0.0
    cap = {"tanh": 1.0, "sigm": 0.25}.get(kind.family.value, 1.0 / kind.sigma**2)
    assert v <= cap * (1 + 1e-12)


@given(st.floats(-5, 5), st.sampled_from([act.tanh(), act.sigm(), act.relu(omega=0.3), act.elu()]))
def test_deriv_matches_central_difference(t, kind):
    if kind.family is act.Family.ELU and abs(t) < 1e-4:
        return
    h = 1e-6
    fd = (act.evaluate(kind, t + h) - act.evaluate(kind, t - h)) / (2 * h)
    assert act.deriv(kind, t) == pytest.approx(fd, rel=1e-6, abs=1e-8)


@given(st.floats(-5, 5), st.sampled_from([act.relu(omega=0.3, sigma=1.5), act.elu(alpha=0.5, sigma=0.8)]))
def test_gaussian_nu_is_squared_derivative(t, kind):
    assert act.nu(kind, t) == pytest.approx(act.deriv(kind, t) ** 2 / kind.sigma**2, rel=1e-13)
