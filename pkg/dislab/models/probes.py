"""Frozen-representation probes: task heads on latents repeated over seeds."""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from loguru import logger

from dislab.data.io import LabeledDataset
from dislab.models.model import TrainedModel, encode
from dislab.models.profiles import TrainingProfile
from dislab.models.training import train_heads_on_latents

GROUND_TRUTH = "ground_truth"


@dataclass
class HeadProbeResult:
    """Test RMSE of heads trained on one frozen input source, per seed."""

    source: str
    seeds: list[int]
    rmse: list[list[float]]

    @property
    def mean_rmse_per_seed(self) -> np.ndarray:
        """Mean over tasks for each seed."""
        return np.asarray(self.rmse, dtype=np.float64).mean(axis=1)

    @property
    def mean(self) -> float:
        """Mean over seeds of the task-mean RMSE."""
        return float(self.mean_rmse_per_seed.mean())

    @property
    def std(self) -> float:
        """Sample std over seeds (0 for a single seed)."""
        values = self.mean_rmse_per_seed
        return float(values.std(ddof=1)) if values.size > 1 else 0.0

    def to_dict(self) -> dict[str, Any]:
        """Serialize to JSON-compatible form."""
        return {
            "source": self.source,
            "seeds": list(self.seeds),
            "rmse": self.rmse,
            "mean_rmse_per_seed": self.mean_rmse_per_seed.tolist(),
            "mean": self.mean,
            "std": self.std,
        }


def probe_inputs(
    dataset: LabeledDataset, model: Optional[TrainedModel] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Train and test inputs: encoder latents, or factor values without a model."""
    train, test = dataset.rows("train"), dataset.rows("test")
    if model is None:
        values = dataset.factor_values
        return values[train], values[test]
    return encode(model, dataset.images[train]), encode(model, dataset.images[test])


def latent_head_probe(
    source: str,
    dataset: LabeledDataset,
    targets: np.ndarray,
    profile: TrainingProfile,
    seeds: list[int],
    model: Optional[TrainedModel] = None,
    *,
    verbose: bool = False,
) -> HeadProbeResult:
    """Train task heads on a frozen representation once per seed.

    Args:
        source (str): Label of the input source, e.g. ``ground_truth`` or ``vae``.
        dataset (LabeledDataset): Split dataset.
        targets (np.ndarray): (N, n_tasks) targets aligned with the dataset.
        profile (TrainingProfile): Head training profile.
        seeds (list[int]): One head-training run per seed.
        model (TrainedModel, optional): Encoder providing latents; ground-truth
            factors are used when None.
        verbose (bool, optional): Log progress. Defaults to False.

    Returns:
        HeadProbeResult: Per-seed, per-task test RMSE.
    """
    train_inputs, test_inputs = probe_inputs(dataset, model)
    train, test = dataset.rows("train"), dataset.rows("test")
    rmse = []
    for seed in seeds:
        fit = train_heads_on_latents(
            train_inputs, targets[train], test_inputs, targets[test], profile, seed,
            verbose=verbose,
        )
        rmse.append(fit["rmse"])
        if verbose:
            logger.debug(f"Heads on {source} (seed {seed}): mean RMSE {fit['mean_rmse']:.3f}")
    result = HeadProbeResult(source=source, seeds=list(seeds), rmse=rmse)
    if verbose:
        logger.success(f"Heads on {source}: RMSE {result.mean:.3f} +/- {result.std:.3f}")
    return result
