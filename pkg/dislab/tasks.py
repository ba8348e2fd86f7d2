"""Random-network regression tasks over ground-truth factors.

Every task is a frozen MLP with N(0, 1) weights and biases mapping a factor
vector to one scalar. A bank of such networks turns a factor-labeled dataset
into a multi-task regression dataset.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from loguru import logger

from dislab.container import DTBContainer, load_container, save_container
from dislab.data.io import LabeledDataset
from dislab.engine import LayerSpec, Network, activation, dense
from dislab.exceptions import DataError
from dislab.utils import derive_seed, make_rng

TASK_HIDDEN_LAYERS = 4
TASK_HIDDEN_UNITS = 300
MIN_TARGET_STD = 1e-6
MAX_CORRELATION = 0.99
MAX_ATTEMPTS = 16
DEFAULT_REFERENCE_ROWS = 512
BANK_KIND = "task_bank"


def task_specs() -> list[LayerSpec]:
    """Four tanh layers of 300 units and a scalar output."""
    specs: list[LayerSpec] = []
    for _ in range(TASK_HIDDEN_LAYERS):
        specs += [dense(TASK_HIDDEN_UNITS), activation("tanh")]
    specs.append(dense(1))
    return specs


def _task_network(factor_dim: int, seed: int) -> Network:
    return Network(task_specs(), (factor_dim,), dtype=np.float64).initialize(
        seed, "gaussian_unit"
    )


@dataclass
class TaskBank:
    """Frozen task networks regenerable from ``(master_seed, task_seeds)``.

    Attributes:
        factor_dim (int): Input dimension m.
        master_seed (int): Root seed of the bank.
        task_seeds (list[int]): Accepted seed of each task after resampling.
        networks (list[Network]): One float64 network per task.
        targets (np.ndarray, optional): Cached (N, n_tasks) target matrix.
        target_mean (np.ndarray, optional): Per-task mean if standardized.
        target_std (np.ndarray, optional): Per-task std if standardized.
    """

    factor_dim: int
    master_seed: int
    task_seeds: list[int]
    networks: list[Network]
    targets: Optional[np.ndarray] = None
    target_mean: Optional[np.ndarray] = None
    target_std: Optional[np.ndarray] = None
    resampled: list[int] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def n_tasks(self) -> int:
        """Number of tasks."""
        return len(self.networks)

    @property
    def standardized(self) -> bool:
        """Whether cached targets are per-task standardized."""
        return self.target_mean is not None

    def checksum(self) -> str:
        """sha256 over every parameter of every task, in task then name order."""
        digest = hashlib.sha256()
        for network in self.networks:
            for name in sorted(network.params):
                digest.update(name.encode("utf-8"))
                digest.update(np.ascontiguousarray(network.params[name]).tobytes())
        return digest.hexdigest()

    def to_manifest(self) -> dict[str, Any]:
        """Everything needed to regenerate the bank."""
        return {
            "kind": BANK_KIND,
            "factor_dim": self.factor_dim,
            "n_tasks": self.n_tasks,
            "master_seed": self.master_seed,
            "task_seeds": list(self.task_seeds),
            "resampled": list(self.resampled),
            "architecture": [spec.to_dict() for spec in task_specs()],
            "checksum": self.checksum(),
            "target_mean": None if self.target_mean is None else self.target_mean.tolist(),
            "target_std": None if self.target_std is None else self.target_std.tolist(),
            "provenance": dict(self.provenance),
        }


def _is_degenerate(column: np.ndarray, accepted: list[np.ndarray]) -> Optional[str]:
    std = float(np.std(column))
    if std < MIN_TARGET_STD:
        return f"target std {std:.2e} below {MIN_TARGET_STD:.0e}"
    for k, other in enumerate(accepted):
        corr = float(np.corrcoef(column, other)[0, 1])
        if abs(corr) >= MAX_CORRELATION:
            return f"correlation {corr:.4f} with task {k}"
    return None


def build_bank(
    factor_dim: int,
    n_tasks: int,
    master_seed: int,
    *,
    reference: Optional[np.ndarray] = None,
    verbose: bool = False,
) -> TaskBank:
    """Draw ``n_tasks`` random task networks.

    Task ``i`` first tries ``derive_seed(master_seed, "task", i, 0)``. A task
    whose targets on the ``reference`` factor matrix are near-constant or
    almost collinear with an earlier task is redrawn with the next attempt
    index. Without a reference the guard runs on seeded uniform factor
    vectors in [-1, 1].

    Args:
        factor_dim (int): Factor dimension m.
        n_tasks (int): Number of tasks.
        master_seed (int): Root seed.
        reference (np.ndarray, optional): (N, m) factor values for the guard.
            Defaults to ``DEFAULT_REFERENCE_ROWS`` seeded uniform rows.
        verbose (bool, optional): Log progress. Defaults to False.

    Returns:
        TaskBank: The bank, without cached targets.

    Raises:
        DataError: If the sizes are invalid or a task stays degenerate after
            ``MAX_ATTEMPTS`` redraws.
    """
    if factor_dim < 1 or n_tasks < 1:
        size_msg = f"factor_dim and n_tasks must be >= 1, got {factor_dim} and {n_tasks}"
        raise DataError(size_msg)
    if reference is None:
        rng = make_rng(master_seed, "task_reference")
        reference = rng.uniform(-1.0, 1.0, size=(DEFAULT_REFERENCE_ROWS, factor_dim))

    seeds: list[int] = []
    networks: list[Network] = []
    accepted: list[np.ndarray] = []
    resampled: list[int] = []
    for i in range(n_tasks):
        for attempt in range(MAX_ATTEMPTS):
            seed = derive_seed(master_seed, "task", i, attempt)
            network = _task_network(factor_dim, seed)
            column = network.predict(reference)[:, 0]
            reason = _is_degenerate(column, accepted)
            if reason is None:
                accepted.append(column)
                break
            logger.warning(f"Task {i} attempt {attempt} is degenerate ({reason}); redrawing")
            resampled.append(i)
        else:
            degenerate_msg = f"Task {i} is still degenerate after {MAX_ATTEMPTS} attempts"
            raise DataError(degenerate_msg)
        seeds.append(seed)
        networks.append(network)

    if verbose:
        logger.success(f"Built a bank of {n_tasks} tasks from master seed {master_seed}")
    return TaskBank(
        factor_dim=factor_dim,
        master_seed=master_seed,
        task_seeds=seeds,
        networks=networks,
        resampled=sorted(set(resampled)),
    )


def eval_task(bank: TaskBank, task_index: int, z: np.ndarray) -> np.ndarray | float:
    """Evaluate task ``task_index`` on one factor vector or an (n, m) matrix.

    Raises:
        DataError: If the index is out of range or ``z`` has the wrong dimension.
    """
    if not 0 <= task_index < bank.n_tasks:
        index_msg = f"Task index {task_index} out of range [0, {bank.n_tasks})"
        raise DataError(index_msg)
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != bank.factor_dim:
        dim_msg = f"Factor vector has dimension {z.shape[-1]}, bank expects {bank.factor_dim}"
        raise DataError(dim_msg)
    out = bank.networks[task_index].predict(np.atleast_2d(z))[:, 0]
    return float(out[0]) if z.ndim == 1 else out


def build_targets(
    bank: TaskBank, dataset: LabeledDataset, *, standardize: bool = False
) -> np.ndarray:
    """Evaluate every task on every row and cache the (N, n_tasks) matrix.

    With ``standardize`` each column is shifted and scaled by its mean and
    std over the train rows (all rows if the dataset is unsplit).

    Raises:
        DataError: If the factor dimension does not match the bank.
    """
    values = dataset.factor_values
    if values.shape[1] != bank.factor_dim:
        dim_msg = f"Dataset has {values.shape[1]} factors, bank expects {bank.factor_dim}"
        raise DataError(dim_msg)

    targets = np.stack([network.predict(values)[:, 0] for network in bank.networks], axis=1)
    for i, std in enumerate(targets.std(axis=0)):
        if std < MIN_TARGET_STD:
            logger.warning(f"Task {i} is near-constant on this dataset (std {std:.2e})")

    if standardize:
        rows = dataset.rows("train") if dataset.is_test is not None else slice(None)
        bank.target_mean = targets[rows].mean(axis=0)
        bank.target_std = np.maximum(targets[rows].std(axis=0), MIN_TARGET_STD)
        targets = (targets - bank.target_mean) / bank.target_std
    else:
        bank.target_mean = bank.target_std = None
    bank.targets = targets
    return targets


def save_bank(path: Path, bank: TaskBank) -> Path:
    """Persist the bank manifest; parameters are regenerated on load."""
    return save_container(path, DTBContainer(manifest=bank.to_manifest()))


def load_bank(path: Path) -> TaskBank:
    """Regenerate a bank from its manifest and verify the parameter checksum.

    Raises:
        DataError: If the container is not a bank or the checksum differs.
    """
    manifest = load_container(path).manifest
    if manifest.get("kind") != BANK_KIND:
        kind_msg = f"{path} is not a task bank (kind={manifest.get('kind')!r})"
        raise DataError(kind_msg)
    factor_dim = int(manifest["factor_dim"])
    networks = [_task_network(factor_dim, int(seed)) for seed in manifest["task_seeds"]]
    bank = TaskBank(
        factor_dim=factor_dim,
        master_seed=int(manifest["master_seed"]),
        task_seeds=[int(seed) for seed in manifest["task_seeds"]],
        networks=networks,
        resampled=list(manifest.get("resampled", [])),
        provenance=dict(manifest.get("provenance", {})),
    )
    if bank.checksum() != manifest["checksum"]:
        checksum_msg = f"Regenerated task parameters do not match the checksum stored in {path}"
        raise DataError(checksum_msg)
    if manifest.get("target_mean") is not None:
        bank.target_mean = np.asarray(manifest["target_mean"], dtype=np.float64)
        bank.target_std = np.asarray(manifest["target_std"], dtype=np.float64)
    return bank


def apply_standardization(bank: TaskBank, targets: np.ndarray) -> np.ndarray:
    """Apply the bank's stored standardization (identity if none)."""
    if bank.target_mean is None or bank.target_std is None:
        return targets
    return (targets - bank.target_mean) / bank.target_std
