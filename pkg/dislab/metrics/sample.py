"""Representation samples: latent codes row-aligned with ground-truth factors."""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from dislab.data.factors import FactorSpace
from dislab.data.io import LabeledDataset, SplitName
from dislab.exceptions import DataError
from dislab.models.model import TrainedModel, encode


def clamp_unit(value: float) -> float:
    """Clamp a score into [0, 1]."""
    return float(min(1.0, max(0.0, value)))


@dataclass(frozen=True, eq=False)
class RepresentationSample:
    """Codes of N examples together with their factors.

    Attributes:
        codes (np.ndarray): (N, d) latent codes.
        factor_indices (np.ndarray): (N, m) factor level indices.
        space (FactorSpace): Factor declaration.
        provenance (dict): Where the codes came from.
    """

    codes: np.ndarray
    factor_indices: np.ndarray
    space: FactorSpace
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check row alignment and dimensions.

        Raises:
            DataError: If the arrays do not line up or codes are non-finite.
        """
        if self.codes.ndim != 2 or self.factor_indices.ndim != 2:
            ndim_msg = "Codes and factor indices must be 2-D"
            raise DataError(ndim_msg)
        if self.codes.shape[0] != self.factor_indices.shape[0]:
            rows_msg = (
                f"Codes have {self.codes.shape[0]} rows, factors have "
                f"{self.factor_indices.shape[0]}"
            )
            raise DataError(rows_msg)
        if self.factor_indices.shape[1] != len(self.space):
            dim_msg = f"Factor indices have {self.factor_indices.shape[1]} columns, space has {len(self.space)}"
            raise DataError(dim_msg)
        if not np.all(np.isfinite(self.codes)):
            finite_msg = "Codes contain NaN or infinity"
            raise DataError(finite_msg)

    def __len__(self) -> int:
        return int(self.codes.shape[0])

    @property
    def n_latents(self) -> int:
        """Latent dimension d."""
        return int(self.codes.shape[1])

    @property
    def n_factors(self) -> int:
        """Factor dimension m."""
        return int(self.factor_indices.shape[1])

    @property
    def factor_values(self) -> np.ndarray:
        """(N, m) factor values."""
        return self.space.values_of(self.factor_indices)

    def with_codes(self, codes: np.ndarray) -> "RepresentationSample":
        """Same factors, different codes."""
        return RepresentationSample(codes, self.factor_indices, self.space, dict(self.provenance))

    @classmethod
    def from_dataset(
        cls,
        dataset: LabeledDataset,
        codes: np.ndarray,
        rows: Optional[np.ndarray] = None,
        provenance: Optional[dict[str, Any]] = None,
    ) -> "RepresentationSample":
        """Pair codes with the factors of ``rows`` (all rows by default)."""
        indices = dataset.factor_indices if rows is None else dataset.factor_indices[rows]
        return cls(np.asarray(codes, dtype=np.float64), indices, dataset.space, provenance or {})

    @classmethod
    def from_model(
        cls, model: TrainedModel, dataset: LabeledDataset, which: SplitName = "test"
    ) -> "RepresentationSample":
        """Encode one side of the split."""
        rows = dataset.rows(which)
        codes = encode(model, dataset.images[rows])
        provenance = {
            "regime": str(model.regime),
            "seed": model.manifest.get("seed"),
            "split": which,
        }
        return cls.from_dataset(dataset, codes, rows, provenance)


class RowSampler:
    """Draws codes of examples that share one randomly chosen factor level.

    Calling ``sampler(factor, rng, size)`` picks a level of ``factor``
    uniformly among the levels present, then ``size`` rows with that level
    (with replacement), and returns their codes.
    """

    def __init__(self, sample: RepresentationSample) -> None:
        """Index the rows of every factor level."""
        self.codes = sample.codes
        self.pools: list[list[np.ndarray]] = []
        for j in range(sample.n_factors):
            column = sample.factor_indices[:, j]
            levels = np.unique(column)
            self.pools.append([np.flatnonzero(column == level) for level in levels])

    def __call__(self, factor: int, rng: np.random.Generator, size: int) -> np.ndarray:
        pools = self.pools[factor]
        pool = pools[int(rng.integers(len(pools)))]
        return self.codes[pool[rng.integers(pool.size, size=size)]]
