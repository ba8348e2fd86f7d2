"""Discretized mutual information between latents and factors."""

import numpy as np
from scipy.stats import entropy
from sklearn.metrics import mutual_info_score

from dislab.exceptions import ConfigurationError

DEFAULT_BINS = 20


def discretize(column: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-count quantile binning; a constant column falls into one bin."""
    inner_edges = np.quantile(column, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(inner_edges, column, side="right")


def discretized_mutual_information(
    a: np.ndarray, b: np.ndarray, bins: int = DEFAULT_BINS
) -> float:
    """Plug-in MI (nats) between a binned real column and a discrete column.

    Raises:
        ConfigurationError: If ``bins < 2`` or there are fewer rows than bins.
    """
    a = np.asarray(a, dtype=np.float64)
    if bins < 2 or a.shape[0] < bins:
        bins_msg = f"Need bins >= 2 and at least {bins} rows, got {a.shape[0]} rows"
        raise ConfigurationError(bins_msg)
    return float(mutual_info_score(np.asarray(b), discretize(a, bins)))


def mutual_info_matrix(
    codes: np.ndarray, factor_indices: np.ndarray, bins: int = DEFAULT_BINS
) -> np.ndarray:
    """(d, m) matrix of MI between every latent and every factor."""
    d, m = codes.shape[1], factor_indices.shape[1]
    matrix = np.zeros((d, m))
    for i in range(d):
        for j in range(m):
            matrix[i, j] = discretized_mutual_information(codes[:, i], factor_indices[:, j], bins)
    return matrix


def discrete_entropy(labels: np.ndarray) -> float:
    """Plug-in entropy (nats) of a discrete column."""
    _, counts = np.unique(labels, return_counts=True)
    return float(entropy(counts))
