"""Latent traversal grids."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dislab.analysis.files import write_graymap
from dislab.data.io import LabeledDataset
from dislab.models.model import TrainedModel, decode, encode
from dislab.utils import make_rng

TRAVERSAL_VALUES = np.linspace(-1.0, 1.0, 21)


@dataclass
class TraversalGrid:
    """Images decoded while sweeping one latent coordinate at a time.

    ``images[r, c]`` decodes the base latent with coordinate ``r`` replaced
    by ``values[c]``.
    """

    source: str
    base_index: int
    base_latent: np.ndarray
    values: np.ndarray
    images: np.ndarray
    clamped: bool = False

    def adjacent_change(self) -> np.ndarray:
        """Per-dimension mean absolute pixel change between neighbouring columns."""
        diffs = np.abs(np.diff(self.images.astype(np.float64), axis=1))
        return diffs.reshape(diffs.shape[0], -1).mean(axis=1)


def traversal_base_index(dataset: LabeledDataset, example_seed: int) -> int:
    """Test-split row used as the shared base example."""
    rows = dataset.rows("test")
    return int(rows[make_rng(example_seed, "traversal").integers(rows.size)])


def make_traversal(
    model: TrainedModel,
    dataset: LabeledDataset,
    base_index: int,
    *,
    clamp: bool = False,
    source: str = "",
) -> TraversalGrid:
    """Decode one grid of shape (d, 21, C, H, W).

    Every cell is decoded on its own so that a cell whose value equals the
    base coordinate matches the base reconstruction exactly. With ``clamp``
    the base latent is first clipped into [-1, 1].
    """
    base = encode(model, dataset.images[base_index : base_index + 1])[0]
    if clamp:
        base = np.clip(base, -1.0, 1.0)
    rows = []
    for dim in range(model.latent_dim):
        cells = []
        for value in TRAVERSAL_VALUES:
            latent = base.copy()
            latent[dim] = value
            cells.append(decode(model, latent[None, :])[0])
        rows.append(np.stack(cells))
    return TraversalGrid(
        source=source or str(model.regime),
        base_index=base_index,
        base_latent=base,
        values=TRAVERSAL_VALUES.copy(),
        images=np.stack(rows),
        clamped=clamp,
    )


def make_traversals(
    probes: dict[str, TrainedModel],
    dataset: LabeledDataset,
    example_seed: int,
    *,
    clamp: bool = False,
) -> dict[str, TraversalGrid]:
    """One grid per probed encoder, all from the same base example."""
    base_index = traversal_base_index(dataset, example_seed)
    return {
        source: make_traversal(model, dataset, base_index, clamp=clamp, source=source)
        for source, model in probes.items()
    }


def tile(images: np.ndarray, gap: int = 1) -> np.ndarray:
    """Tile (rows, cols, C, H, W) images into one uint8 grayscale canvas."""
    n_rows, n_cols, _, height, width = images.shape
    canvas = np.zeros(
        (n_rows * (height + gap) - gap, n_cols * (width + gap) - gap), dtype=np.uint8
    )
    pixels = np.round(np.clip(images.mean(axis=2), 0.0, 1.0) * 255).astype(np.uint8)
    for r in range(n_rows):
        for c in range(n_cols):
            top, left = r * (height + gap), c * (width + gap)
            canvas[top : top + height, left : left + width] = pixels[r, c]
    return canvas


def save_grid(grid: TraversalGrid, path: Path) -> Path:
    """Write the grid as a portable graymap."""
    return write_graymap(tile(grid.images), path)
