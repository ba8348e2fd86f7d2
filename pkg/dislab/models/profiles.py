"""Named training profiles."""

from dataclasses import asdict, dataclass
from typing import Any, Literal, Optional

from dislab.exceptions import ConfigurationError

StageKind = Literal["multitask", "autoencoder", "decoder_probe", "latent_heads"]
STAGE_KINDS = ("multitask", "autoencoder", "decoder_probe", "latent_heads")


@dataclass(frozen=True)
class TrainingProfile:
    """Epochs, batch size and learning rate of one training stage.

    ``lr_halving_every`` halves the learning rate after every that many
    epochs; None keeps it constant.
    """

    epochs: int
    batch_size: int
    lr: float
    lr_halving_every: Optional[int] = None

    def __post_init__(self) -> None:
        """Reject non-positive settings."""
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0:
            bad_profile_msg = (
                f"Invalid profile epochs={self.epochs}, batch_size={self.batch_size}, lr={self.lr}"
            )
            raise ConfigurationError(bad_profile_msg)
        if self.lr_halving_every is not None and self.lr_halving_every < 1:
            halving_msg = f"lr_halving_every must be >= 1, got {self.lr_halving_every}"
            raise ConfigurationError(halving_msg)

    def lr_at(self, epoch: int) -> float:
        """Learning rate used during ``epoch`` (0-based)."""
        if self.lr_halving_every is None:
            return self.lr
        return self.lr * 0.5 ** (epoch // self.lr_halving_every)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return asdict(self)


PROFILES: dict[str, dict[str, TrainingProfile]] = {
    "paper": {
        "multitask": TrainingProfile(epochs=200, batch_size=256, lr=1e-3),
        "autoencoder": TrainingProfile(epochs=100, batch_size=64, lr=1e-4),
        "decoder_probe": TrainingProfile(
            epochs=500, batch_size=64, lr=2e-4, lr_halving_every=100
        ),
        "latent_heads": TrainingProfile(epochs=30, batch_size=64, lr=1e-4),
    },
    "desk": {
        "multitask": TrainingProfile(epochs=30, batch_size=128, lr=1e-3),
        "autoencoder": TrainingProfile(epochs=20, batch_size=64, lr=1e-3),
        "decoder_probe": TrainingProfile(epochs=50, batch_size=64, lr=2e-4, lr_halving_every=10),
        "latent_heads": TrainingProfile(epochs=30, batch_size=64, lr=1e-4),
    },
}


def get_profile(name: str, stage: StageKind) -> TrainingProfile:
    """Look up the profile of ``stage`` in the registry ``name``.

    Raises:
        ConfigurationError: If the profile or the stage is unknown.
    """
    if name not in PROFILES:
        profile_msg = f"Unknown profile '{name}', expected one of {sorted(PROFILES)}"
        raise ConfigurationError(profile_msg)
    if stage not in PROFILES[name]:
        stage_msg = f"Profile '{name}' has no stage '{stage}', expected one of {STAGE_KINDS}"
        raise ConfigurationError(stage_msg)
    return PROFILES[name][stage]
