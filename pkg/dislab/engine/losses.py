"""Losses returning their value and the gradient w.r.t. their inputs."""

import numpy as np

from dislab.exceptions import ConfigurationError


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over every element.

    Args:
        prediction (np.ndarray): Model output.
        target (np.ndarray): Target of the same shape.

    Returns:
        tuple[float, np.ndarray]: The loss and d loss / d prediction.

    Raises:
        ConfigurationError: If the shapes differ.
    """
    if prediction.shape != target.shape:
        shape_msg = f"Prediction shape {prediction.shape} != target shape {target.shape}"
        raise ConfigurationError(shape_msg)
    diff = prediction - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (2.0 / diff.size) * diff
    return loss, grad.astype(prediction.dtype)


def summed_sse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Squared error summed per example and averaged over the batch."""
    if prediction.shape != target.shape:
        shape_msg = f"Prediction shape {prediction.shape} != target shape {target.shape}"
        raise ConfigurationError(shape_msg)
    batch = prediction.shape[0]
    diff = prediction - target
    loss = float(np.sum(diff.astype(np.float64) ** 2) / batch)
    return loss, ((2.0 / batch) * diff).astype(prediction.dtype)


def gaussian_kl(mu: np.ndarray, logvar: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """KL(N(mu, exp(logvar)) || N(0, I)) summed over dims, averaged over the batch.

    Returns:
        tuple[float, np.ndarray, np.ndarray]: The divergence and its gradients
        w.r.t. ``mu`` and ``logvar``.
    """
    batch = mu.shape[0]
    var = np.exp(logvar)
    value = float(0.5 * np.sum(mu.astype(np.float64) ** 2 + var - 1.0 - logvar) / batch)
    grad_mu = (mu / batch).astype(mu.dtype)
    grad_logvar = (0.5 * (var - 1.0) / batch).astype(logvar.dtype)
    return value, grad_mu, grad_logvar
