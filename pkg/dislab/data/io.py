"""Labeled datasets, deterministic splits and their DTB persistence."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from loguru import logger

from dislab.container import DTBContainer, load_container, save_container
from dislab.data.factors import FactorSpace
from dislab.exceptions import DataError

DATASET_KIND = "labeled_dataset"
SplitName = Literal["train", "test"]


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Images paired with their ground-truth factors.

    Attributes:
        space (FactorSpace): The factor declaration.
        images (np.ndarray): Float32 (N, C, H, W) array in [0, 1].
        factor_indices (np.ndarray): Int64 (N, m) level indices.
        is_test (np.ndarray, optional): Boolean (N,) split tag; None if unsplit.
        manifest (dict): Generation metadata.
    """

    space: FactorSpace
    images: np.ndarray
    factor_indices: np.ndarray
    is_test: Optional[np.ndarray] = None
    manifest: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate shapes, ranges and the index/value relation.

        Raises:
            DataError: If the arrays are inconsistent.
        """
        if self.images.ndim != 4:
            ndim_msg = f"Images must be (N, C, H, W), got shape {self.images.shape}"
            raise DataError(ndim_msg)
        n_rows = self.images.shape[0]
        if self.factor_indices.shape != (n_rows, len(self.space)):
            idx_msg = (
                f"Factor indices have shape {self.factor_indices.shape}, "
                f"expected {(n_rows, len(self.space))}"
            )
            raise DataError(idx_msg)
        if n_rows and (self.images.min() < 0 or self.images.max() > 1):
            range_msg = "Image entries must lie in [0, 1]"
            raise DataError(range_msg)
        cards = np.asarray(self.space.cardinalities)
        if np.any(self.factor_indices < 0) or np.any(self.factor_indices >= cards):
            level_msg = f"Factor indices out of range for cardinalities {tuple(cards)}"
            raise DataError(level_msg)
        if self.is_test is not None and self.is_test.shape != (n_rows,):
            split_msg = f"Split tags have shape {self.is_test.shape}, expected ({n_rows},)"
            raise DataError(split_msg)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def factor_values(self) -> np.ndarray:
        """(N, m) float64 factor values looked up from the indices."""
        return self.space.values_of(self.factor_indices)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        """(C, H, W) of a single image."""
        return tuple(int(v) for v in self.images.shape[1:])  # type: ignore[return-value]

    def rows(self, which: SplitName) -> np.ndarray:
        """Row indices belonging to one side of the split.

        Raises:
            DataError: If the dataset has not been split.
        """
        if self.is_test is None:
            unsplit_msg = "Dataset has no split; call split() first"
            raise DataError(unsplit_msg)
        mask = self.is_test if which == "test" else ~self.is_test
        return np.flatnonzero(mask)


def split(dataset: LabeledDataset, test_fraction: float, seed: int) -> LabeledDataset:
    """Partition a dataset into train and test so both see every factor level.

    Each row's rank is a seeded permutation of its flat factor index, so the
    partition depends only on ``(seed, factor_indices)``. The test side first
    takes the lowest-ranked row for every level it would otherwise miss, then
    fills up by rank to ``round(N * test_fraction)`` rows.

    Args:
        dataset (LabeledDataset): The dataset to split.
        test_fraction (float): Share of rows in the test split, in (0, 1).
        seed (int): Split seed.

    Returns:
        LabeledDataset: A copy carrying ``is_test``.

    Raises:
        DataError: If the fraction is outside (0, 1) or too small (or too
            large) for both sides to cover every level.
    """
    if not 0 < test_fraction < 1:
        fraction_msg = f"test_fraction must be in (0, 1), got {test_fraction}"
        raise DataError(fraction_msg)
    n_rows = len(dataset)
    n_test = round(n_rows * test_fraction)
    widest = max(dataset.space.cardinalities)
    if n_test < widest or n_rows - n_test < widest:
        coverage_msg = (
            f"test_fraction {test_fraction} gives {n_test} test and {n_rows - n_test} train "
            f"rows; each side needs at least {widest} to cover every factor level"
        )
        raise DataError(coverage_msg)

    flat = np.asarray(dataset.space.multi_to_flat(dataset.factor_indices)).reshape(-1)
    ranks = np.random.default_rng(seed).permutation(dataset.space.n_combinations)[flat]
    order = np.lexsort((np.arange(n_rows), ranks))

    is_test = np.zeros(n_rows, dtype=bool)
    for j, cardinality in enumerate(dataset.space.cardinalities):
        column = dataset.factor_indices[order, j]
        for level in range(cardinality):
            if np.any(is_test & (dataset.factor_indices[:, j] == level)):
                continue
            candidates = order[column == level]
            if candidates.size == 0:
                absent_msg = f"Factor {dataset.space.names[j]} level {level} absent from dataset"
                raise DataError(absent_msg)
            is_test[candidates[0]] = True
    if is_test.sum() > n_test:
        forced_msg = f"Coverage needs {int(is_test.sum())} test rows, more than {n_test}"
        raise DataError(forced_msg)
    fill = order[~is_test[order]][: n_test - int(is_test.sum())]
    is_test[fill] = True

    for j, cardinality in enumerate(dataset.space.cardinalities):
        train_levels = np.unique(dataset.factor_indices[~is_test, j])
        if train_levels.size != cardinality:
            train_msg = f"Train split misses levels of factor {dataset.space.names[j]}"
            raise DataError(train_msg)

    logger.debug(f"Split {n_rows} rows into {n_rows - n_test} train / {n_test} test")
    return replace(
        dataset,
        is_test=is_test,
        manifest={**dataset.manifest, "split": {"test_fraction": test_fraction, "seed": seed}},
    )


def save_dataset(path: Path, dataset: LabeledDataset) -> Path:
    """Write a dataset as a DTB container."""
    arrays = {
        "images": dataset.images.astype(np.float32),
        "factor_indices": dataset.factor_indices.astype(np.int32),
    }
    if dataset.is_test is not None:
        arrays["is_test"] = dataset.is_test.astype(np.uint8)
    manifest = {
        "kind": DATASET_KIND,
        "space": dataset.space.to_dict(),
        "dataset": dataset.manifest,
    }
    return save_container(path, DTBContainer(arrays=arrays, manifest=manifest))


def load_dataset(path: Path) -> LabeledDataset:
    """Read a dataset container.

    Any container with a ``space`` manifest plus ``images`` and
    ``factor_indices`` entries is accepted, so externally converted datasets
    load the same way as rendered ones.

    Raises:
        DataError: If the container does not describe a labeled dataset.
    """
    container = load_container(path)
    if "space" not in container.manifest:
        no_space_msg = f"{path} has no factor space in its manifest"
        raise DataError(no_space_msg)
    is_test = container.arrays.get("is_test")
    return LabeledDataset(
        space=FactorSpace.from_dict(container.manifest["space"]),
        images=container["images"].astype(np.float32),
        factor_indices=container["factor_indices"].astype(np.int64),
        is_test=None if is_test is None else is_test.astype(bool),
        manifest=container.manifest.get("dataset", {}),
    )
