"""2-D PCA embeddings of latent codes, colored per factor.

This is the stand-in for the UMAP figures; every artifact written here
says so in its ``method`` field.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from matplotlib.axes import Axes
from matplotlib.figure import Figure

from dislab.analysis.files import write_svg, write_table
from dislab.exceptions import DataError
from dislab.metrics.sample import RepresentationSample
from dislab.utils import make_rng

METHOD = "pca (power iteration), substituted for umap"
MAX_ITERATIONS = 10000
TOLERANCE = 1e-12


@dataclass
class PCAEmbedding:
    """Projected coordinates and the principal axes."""

    coordinates: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray
    mean: np.ndarray


def power_iteration(
    matrix: np.ndarray, n_components: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenpairs of a symmetric PSD matrix by power iteration with deflation.

    Each eigenvector's largest-magnitude entry is made positive.
    """
    work = matrix.astype(np.float64).copy()
    vectors, values = [], []
    for _ in range(n_components):
        vector = rng.standard_normal(work.shape[0])
        vector /= np.linalg.norm(vector)
        for _ in range(MAX_ITERATIONS):
            nxt = work @ vector
            norm = np.linalg.norm(nxt)
            if norm == 0:
                break
            nxt /= norm
            converged = np.linalg.norm(nxt - vector) < TOLERANCE
            vector = nxt
            if converged:
                break
        if vector[np.argmax(np.abs(vector))] < 0:
            vector = -vector
        value = float(vector @ work @ vector)
        vectors.append(vector)
        values.append(value)
        work = work - value * np.outer(vector, vector)
    return np.asarray(values), np.asarray(vectors)


def pca_embedding(codes: np.ndarray, seed: int = 0, n_components: int = 2) -> PCAEmbedding:
    """Project mean-centered codes on their top principal components.

    Raises:
        DataError: If there are fewer than 3 rows or the codes have no variance.
    """
    codes = np.asarray(codes, dtype=np.float64)
    if codes.shape[0] < 3:
        few_msg = f"PCA needs at least 3 rows, got {codes.shape[0]}"
        raise DataError(few_msg)
    mean = codes.mean(axis=0)
    centered = codes - mean
    covariance = centered.T @ centered / (codes.shape[0] - 1)
    total = float(np.trace(covariance))
    if total <= 0:
        flat_msg = "Codes have zero variance; nothing to embed"
        raise DataError(flat_msg)
    n_components = min(n_components, codes.shape[1])
    values, vectors = power_iteration(covariance, n_components, make_rng(seed, "pca"))
    return PCAEmbedding(
        coordinates=centered @ vectors.T,
        components=vectors,
        eigenvalues=values,
        explained_variance_ratio=values / total,
        mean=mean,
    )


def scatter_table(embedding: PCAEmbedding, sample: RepresentationSample) -> pd.DataFrame:
    """Coordinates with one column per factor value, ready for plotting."""
    frame = pd.DataFrame(
        embedding.coordinates, columns=[f"pc{i + 1}" for i in range(embedding.coordinates.shape[1])]
    )
    for j, name in enumerate(sample.space.names):
        frame[name] = sample.factor_values[:, j]
    frame["method"] = METHOD
    return frame


def plot_embedding(table: pd.DataFrame, factor_names: list[str], title: str = "") -> tuple[Figure, list[Axes]]:
    """One scatter panel per factor, colored by the factor value."""
    figure, axes = plt.subplots(1, len(factor_names), figsize=(3 * len(factor_names), 3))
    axes_list = list(np.atleast_1d(axes))
    y_column = "pc2" if "pc2" in table else "pc1"
    for ax, name in zip(axes_list, factor_names):
        ax.scatter(table["pc1"], table[y_column], c=table[name], s=2, cmap="viridis")
        ax.set_title(name)
        ax.set_xticks([])
        ax.set_yticks([])
    figure.suptitle(f"{title} ({METHOD})".strip())
    figure.tight_layout()
    return figure, axes_list


def save_embedding(
    embedding: PCAEmbedding,
    sample: RepresentationSample,
    stem: Path,
    title: str = "",
    stage_hash: Optional[str] = None,
) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.svg``."""
    stem = Path(stem)
    table = scatter_table(embedding, sample)
    figure, _ = plot_embedding(table, sample.space.names, title)
    return (
        write_table(table, stem.with_suffix(".csv"), stage_hash),
        write_svg(figure, stem.with_suffix(".svg"), stage_hash),
    )
