"""Factor spaces and the mixed-radix index bijection."""

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from dislab.exceptions import ConfigurationError, DataError

FactorKind = Literal["categorical", "ordered"]


@dataclass(frozen=True)
class Factor:
    """One generative factor.

    Attributes:
        name (str): Factor name, e.g. ``"pos_x"``.
        kind (str): ``"categorical"`` or ``"ordered"``.
        values (tuple[float, ...]): Numeric value of each level.
    """

    name: str
    kind: FactorKind
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        """Check the level grid.

        Raises:
            ConfigurationError: If the factor has fewer than two levels or an
                ordered grid is not strictly increasing.
        """
        if self.kind not in ("categorical", "ordered"):
            bad_kind_msg = f"Factor {self.name} has unknown kind '{self.kind}'"
            raise ConfigurationError(bad_kind_msg)
        if len(self.values) < 2:
            few_levels_msg = f"Factor {self.name} needs at least 2 levels, got {len(self.values)}"
            raise ConfigurationError(few_levels_msg)
        if self.kind == "ordered" and np.any(np.diff(self.values) <= 0):
            unordered_msg = f"Ordered factor {self.name} values must be strictly increasing"
            raise ConfigurationError(unordered_msg)

    @property
    def cardinality(self) -> int:
        """Number of levels."""
        return len(self.values)

    @classmethod
    def normalized(cls, name: str, kind: FactorKind, cardinality: int) -> "Factor":
        """Factor whose levels are a uniform grid on [-1, 1]."""
        grid = np.linspace(-1.0, 1.0, cardinality)
        return cls(name, kind, tuple(float(v) for v in grid))


class FactorSpace:
    """Ordered collection of factors with a row-major index bijection."""

    def __init__(self, factors: list[Factor]) -> None:
        """Build the space.

        Raises:
            ConfigurationError: If there are no factors or names repeat.
        """
        if not factors:
            empty_msg = "A factor space needs at least one factor"
            raise ConfigurationError(empty_msg)
        names = [factor.name for factor in factors]
        if len(set(names)) != len(names):
            dup_msg = f"Duplicate factor names in {names}"
            raise ConfigurationError(dup_msg)
        self.factors = tuple(factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FactorSpace) and self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __repr__(self) -> str:
        dims = ", ".join(f"{f.name}={f.cardinality}" for f in self.factors)
        return f"FactorSpace({dims})"

    @property
    def names(self) -> list[str]:
        """Factor names in order."""
        return [factor.name for factor in self.factors]

    @property
    def cardinalities(self) -> tuple[int, ...]:
        """Level counts in order."""
        return tuple(factor.cardinality for factor in self.factors)

    @property
    def n_combinations(self) -> int:
        """Product of the cardinalities."""
        return int(np.prod(self.cardinalities))

    def flat_to_multi(self, flat_index: np.ndarray | int) -> np.ndarray:
        """Decode flat indices into multi-indices (last factor varies fastest).

        Args:
            flat_index (np.ndarray | int): One index or an array of indices.

        Returns:
            np.ndarray: Shape (m,) for a scalar input, else (n, m).

        Raises:
            DataError: If an index is out of range.
        """
        flat = np.asarray(flat_index, dtype=np.int64)
        self._check_flat(flat)
        multi = np.stack(np.unravel_index(flat, self.cardinalities), axis=-1)
        return multi.astype(np.int64)

    def multi_to_flat(self, multi_index: np.ndarray) -> np.ndarray | int:
        """Encode multi-indices into flat indices.

        Raises:
            DataError: If a component is out of range.
        """
        multi = np.asarray(multi_index, dtype=np.int64)
        if multi.shape[-1] != len(self):
            dim_msg = f"Multi-index has {multi.shape[-1]} components, space has {len(self)} factors"
            raise DataError(dim_msg)
        cards = np.asarray(self.cardinalities)
        if np.any(multi < 0) or np.any(multi >= cards):
            range_msg = f"Multi-index out of range for cardinalities {self.cardinalities}"
            raise DataError(range_msg)
        flat = np.ravel_multi_index(tuple(np.moveaxis(multi, -1, 0)), self.cardinalities)
        return int(flat) if np.ndim(flat) == 0 else np.asarray(flat, dtype=np.int64)

    def values_of(self, multi_index: np.ndarray) -> np.ndarray:
        """Map an (n, m) index matrix to its (n, m) factor value matrix."""
        multi = np.atleast_2d(np.asarray(multi_index, dtype=np.int64))
        columns = [
            np.asarray(factor.values, dtype=np.float64)[multi[:, j]]
            for j, factor in enumerate(self.factors)
        ]
        return np.stack(columns, axis=1)

    def all_indices(self) -> np.ndarray:
        """Every multi-index in flat order, shape (Π k_i, m)."""
        return self.flat_to_multi(np.arange(self.n_combinations))

    def to_dict(self) -> list[dict[str, Any]]:
        """Serialize to JSON-compatible form."""
        return [
            {"name": f.name, "kind": f.kind, "values": list(f.values)} for f in self.factors
        ]

    @classmethod
    def from_dict(cls, data: list[dict[str, Any]]) -> "FactorSpace":
        """Rebuild from :meth:`to_dict`."""
        return cls(
            [Factor(d["name"], d["kind"], tuple(float(v) for v in d["values"])) for d in data]
        )

    def _check_flat(self, flat: np.ndarray) -> None:
        if np.any(flat < 0) or np.any(flat >= self.n_combinations):
            range_msg = f"Flat index out of range [0, {self.n_combinations})"
            raise DataError(range_msg)
