"""Finite-difference gradient checking."""

import numpy as np

from dislab.engine.losses import mse_loss
from dislab.engine.network import Network


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-based relative difference between two gradient arrays."""
    denom = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric)) / denom


def check_gradients(
    network: Network, x: np.ndarray, target: np.ndarray, h: float = 1e-3
) -> dict[str, float]:
    """Compare backward() against central differences of the MSE loss.

    The network should use float64 parameters. Returns the relative error per
    parameter plus ``"input"`` for the input gradient.
    """
    output = network.forward(x)
    _, grad_out = mse_loss(output, target)
    analytic, grad_in = network.backward(grad_out)

    def loss_at() -> float:
        return mse_loss(network.forward(x, cache=False), target)[0]

    errors: dict[str, float] = {}
    for name, param in network.params.items():
        numeric = np.zeros_like(param)
        flat = param.reshape(-1)
        numeric_flat = numeric.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + h
            plus = loss_at()
            flat[idx] = original - h
            minus = loss_at()
            flat[idx] = original
            numeric_flat[idx] = (plus - minus) / (2 * h)
        errors[name] = relative_error(analytic[name], numeric)

    x = np.array(x, dtype=network.dtype)
    numeric_in = np.zeros_like(x)
    flat_x = x.reshape(-1)
    numeric_in_flat = numeric_in.reshape(-1)
    for idx in range(flat_x.size):
        original = flat_x[idx]
        flat_x[idx] = original + h
        plus = mse_loss(network.forward(x, cache=False), target)[0]
        flat_x[idx] = original - h
        minus = mse_loss(network.forward(x, cache=False), target)[0]
        flat_x[idx] = original
        numeric_in_flat[idx] = (plus - minus) / (2 * h)
    errors["input"] = relative_error(grad_in, numeric_in)
    return errors
