"""Test the Adam optimizer."""

import math

import numpy as np
import pytest

from dislab.engine import AdamState, Network, adam_step, dense, mse_loss
from dislab.exceptions import ConfigurationError, NumericError


def _scalar_adam(x: float, steps: int, lr: float = 0.01) -> list[float]:
    """Textbook scalar Adam on f(x) = (x - 3)^2."""
    m = v = 0.0
    trajectory = []
    for t in range(1, steps + 1):
        g = 2 * (x - 3.0)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        m_hat = m / (1 - 0.9**t)
        v_hat = v / (1 - 0.999**t)
        x -= lr * m_hat / (math.sqrt(v_hat) + 1e-8)
        trajectory.append(x)
    return trajectory


class TestAdam:
    """Tests bias-corrected Adam updates."""

    def test_matches_scalar_reference(self):
        """Test 100 steps against a scalar reference to 1e-7."""
        params = {"w": np.array([0.5])}
        state = AdamState(lr=0.01)
        reference = _scalar_adam(0.5, 100)
        for expected in reference:
            grads = {"w": 2 * (params["w"] - 3.0)}
            adam_step(state, params, grads)
            assert params["w"][0] == pytest.approx(expected, abs=1e-7)
        assert state.step == 100

    def test_first_step(self):
        """Test that the first update moves a scalar by lr for a unit gradient."""
        params = {"w": np.array([1.0])}
        adam_step(AdamState(lr=0.001), params, {"w": np.array([1.0])})
        assert params["w"][0] - 1.0 == pytest.approx(-0.001 / (1.0 + 1e-8), abs=1e-12)

    def test_zero_gradient(self):
        """Test that zero gradients leave parameters and moments at rest."""
        params = {"w": np.array([1.0, -2.0])}
        state = AdamState()
        adam_step(state, params, {"w": np.zeros(2)})
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])
        np.testing.assert_array_equal(state.m["w"], 0.0)
        np.testing.assert_array_equal(state.v["w"], 0.0)
        assert state.step == 1

    def test_linear_regression_converges(self):
        """Test that 50 steps cut the loss of a linear regression by 90%."""
        rng = np.random.default_rng(0)
        x = rng.standard_normal((64, 3))
        y = x @ np.array([[2.0], [-1.0], [0.5]]) + 0.3
        network = Network([dense(1)], (3,), dtype=np.float64).initialize(0)
        state = AdamState(lr=0.1)
        initial, _ = mse_loss(network.forward(x, cache=False), y)
        for _ in range(50):
            _, grad = mse_loss(network.forward(x), y)
            grads, _ = network.backward(grad)
            adam_step(state, network.params, grads)
        final, _ = mse_loss(network.forward(x, cache=False), y)
        assert final <= 0.1 * initial

    def test_nan_gradient_leaves_params(self):
        """Test that a NaN gradient raises before anything is updated."""
        params = {"a": np.ones(2), "b": np.ones(2)}
        state = AdamState()
        grads = {"a": np.ones(2), "b": np.array([np.nan, 0.0])}
        with pytest.raises(NumericError) as err:
            adam_step(state, params, grads)
        assert err.value.snapshot["parameter"] == "b"
        np.testing.assert_array_equal(params["a"], np.ones(2))
        assert state.step == 0

    def test_unknown_parameter(self):
        """Test that a gradient without a parameter is rejected."""
        with pytest.raises(ConfigurationError, match="unknown parameter"):
            adam_step(AdamState(), {"a": np.ones(1)}, {"c": np.ones(1)})

    def test_shape_mismatch(self):
        """Test that a mis-shaped gradient is rejected."""
        with pytest.raises(ConfigurationError, match="shape"):
            adam_step(AdamState(), {"a": np.ones(2)}, {"a": np.ones(3)})

    def test_missing_gradient_untouched(self):
        """Test that parameters without a gradient keep their values."""
        params = {"a": np.ones(2), "frozen": np.full(2, 7.0)}
        adam_step(AdamState(), params, {"a": np.ones(2)})
        np.testing.assert_array_equal(params["frozen"], np.full(2, 7.0))
        assert not np.array_equal(params["a"], np.ones(2))
