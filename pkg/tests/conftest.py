"""dislab test configuration."""

import numpy as np
import pytest

from dislab.data import LabeledDataset, SpriteProfile, make_minisprites, split
from dislab.metrics import MetricConfig
from dislab.models.profiles import PROFILES, TrainingProfile
from dislab.pipeline import ExperimentManifest
from dislab.tasks import TaskBank, build_bank, build_targets

TINY_SPRITES = SpriteProfile(size=16, n_scales=2, n_orientations=2, n_pos_x=3, n_pos_y=3)
TINY_PROFILES = {
    "multitask": TrainingProfile(epochs=2, batch_size=32, lr=1e-3),
    "autoencoder": TrainingProfile(epochs=1, batch_size=32, lr=1e-3),
    "decoder_probe": TrainingProfile(epochs=2, batch_size=32, lr=1e-3, lr_halving_every=1),
    "latent_heads": TrainingProfile(epochs=2, batch_size=32, lr=1e-3),
}
TINY_METRICS = MetricConfig(bins=10, n_votes=100, subset_size=8, min_samples=16)


@pytest.fixture(scope="session")
def tiny_dataset() -> LabeledDataset:
    """108 rendered 16x16 sprites split 76 train / 32 test."""
    return split(make_minisprites(TINY_SPRITES, seed=0), 0.3, seed=0)


@pytest.fixture(scope="session")
def tiny_bank(tiny_dataset: LabeledDataset) -> TaskBank:
    """Two tasks guarded on the train split."""
    reference = tiny_dataset.factor_values[tiny_dataset.rows("train")]
    bank = build_bank(len(tiny_dataset.space), 2, master_seed=0, reference=reference)
    build_targets(bank, tiny_dataset)
    return bank


@pytest.fixture(scope="session")
def tiny_targets(tiny_bank: TaskBank) -> np.ndarray:
    """(108, 2) target matrix of the tiny bank."""
    assert tiny_bank.targets is not None
    return tiny_bank.targets


@pytest.fixture(autouse=True)
def tiny_profiles(monkeypatch: pytest.MonkeyPatch) -> None:
    """Register a one-or-two-epoch profile named ``tiny``."""
    monkeypatch.setitem(PROFILES, "tiny", TINY_PROFILES)


def tiny_experiment() -> ExperimentManifest:
    """A manifest that runs every stage in seconds; needs the tiny profile registered."""
    return ExperimentManifest(
        sprites=TINY_SPRITES,
        test_fraction=0.3,
        n_tasks=2,
        seeds=(0, 1),
        profile="tiny",
        metrics=TINY_METRICS,
    )


@pytest.fixture
def tiny_manifest(tiny_profiles: None) -> ExperimentManifest:  # noqa: ARG001
    """The tiny experiment manifest."""
    return tiny_experiment()
