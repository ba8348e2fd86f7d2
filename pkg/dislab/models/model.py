"""Trained models, regimes and their DTB persistence."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from dislab.container import DTBContainer, load_container, save_container
from dislab.engine import Network
from dislab.exceptions import ConfigurationError, DataError

REGIMES = ("random", "single", "multi_head", "one_head", "ae", "vae", "decoder_probe")
MULTITASK_REGIMES = ("random", "single", "multi_head", "one_head")
AUTOENCODER_REGIMES = ("ae", "vae")
MODEL_KIND = "trained_model"


@dataclass(frozen=True)
class Regime:
    """A training regime; ``task`` is set only for ``single``."""

    name: str
    task: Optional[int] = None

    def __str__(self) -> str:
        return self.name if self.task is None else f"{self.name}:{self.task}"

    @property
    def is_multitask(self) -> bool:
        """Whether the regime trains encoder + task heads (or is untrained)."""
        return self.name in MULTITASK_REGIMES

    @property
    def is_autoencoder(self) -> bool:
        """Whether the regime trains encoder + decoder."""
        return self.name in AUTOENCODER_REGIMES


def parse_regime(text: str, n_tasks: Optional[int] = None) -> Regime:
    """Parse ``random``, ``single:3``, ``multi_head`` and so on.

    Raises:
        ConfigurationError: If the name is unknown or a task index is missing
            or out of range.
    """
    name, _, task = text.partition(":")
    if name not in REGIMES:
        regime_msg = f"Unknown regime '{text}', expected one of {', '.join(REGIMES)}"
        raise ConfigurationError(regime_msg)
    if name != "single":
        if task:
            extra_msg = f"Regime '{name}' takes no task index"
            raise ConfigurationError(extra_msg)
        return Regime(name)
    if not task.isdigit():
        task_msg = f"Regime 'single' needs a task index, e.g. 'single:0', got '{text}'"
        raise ConfigurationError(task_msg)
    index = int(task)
    if n_tasks is not None and index >= n_tasks:
        range_msg = f"Task index {index} out of range for {n_tasks} tasks"
        raise ConfigurationError(range_msg)
    return Regime(name, index)


@dataclass
class TrainedModel:
    """Encoder plus heads and/or decoder, with the manifest that produced them.

    Attributes:
        regime (Regime): How the model was trained.
        latent_dim (int): Size of the representation.
        encoder (Network, optional): Image encoder; absent for pure head probes.
        heads (list[Network]): Task heads (one per task, or one shared).
        decoder (Network, optional): Decoder acting on (d, 1, 1) latents.
        manifest (dict): Seed, profile, loss history and evaluation results.
    """

    regime: Regime
    latent_dim: int
    encoder: Optional[Network] = None
    heads: list[Network] = field(default_factory=list)
    decoder: Optional[Network] = None
    manifest: dict[str, Any] = field(default_factory=dict)

    @property
    def variational(self) -> bool:
        """Whether the encoder outputs a mean and a log-variance."""
        return self.encoder is not None and self.encoder.output_shape[0] == 2 * self.latent_dim

    def networks(self) -> dict[str, Network]:
        """Every network keyed by its role."""
        found: dict[str, Network] = {}
        if self.encoder is not None:
            found["encoder"] = self.encoder
        for i, head in enumerate(self.heads):
            found[f"head{i}"] = head
        if self.decoder is not None:
            found["decoder"] = self.decoder
        return found


def encode(model: TrainedModel, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Map images to (N, d) latents; variational encoders return the mean.

    Raises:
        ConfigurationError: If the model has no encoder.
    """
    if model.encoder is None:
        no_encoder_msg = f"Model with regime {model.regime} has no encoder"
        raise ConfigurationError(no_encoder_msg)
    output = model.encoder.predict(images, batch_size=batch_size)
    return output[:, : model.latent_dim]


def decode(model: TrainedModel, latents: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Map (N, d) latents to images.

    Raises:
        ConfigurationError: If the model has no decoder.
    """
    if model.decoder is None:
        no_decoder_msg = f"Model with regime {model.regime} has no decoder"
        raise ConfigurationError(no_decoder_msg)
    latents = np.asarray(latents).reshape(-1, model.latent_dim, 1, 1)
    return model.decoder.predict(latents, batch_size=batch_size)


def save_model(path: Path, model: TrainedModel) -> Path:
    """Write all parameters and the architecture to a DTB container."""
    arrays: dict[str, np.ndarray] = {}
    architecture: dict[str, Any] = {}
    for role, network in model.networks().items():
        architecture[role] = network.to_manifest()
        for name in sorted(network.params):
            arrays[f"{role}/{name}"] = network.params[name]
    manifest = {
        "kind": MODEL_KIND,
        "regime": str(model.regime),
        "latent_dim": model.latent_dim,
        "architecture": architecture,
        "training": model.manifest,
    }
    return save_container(path, DTBContainer(arrays=arrays, manifest=manifest))


def load_model(path: Path) -> TrainedModel:
    """Rebuild a model written by :func:`save_model`.

    Raises:
        DataError: If the container is not a model.
    """
    container = load_container(path)
    manifest = container.manifest
    if manifest.get("kind") != MODEL_KIND:
        kind_msg = f"{path} is not a trained model (kind={manifest.get('kind')!r})"
        raise DataError(kind_msg)

    networks: dict[str, Network] = {}
    for role, arch in manifest["architecture"].items():
        prefix = f"{role}/"
        params = {
            name[len(prefix) :]: array
            for name, array in container.arrays.items()
            if name.startswith(prefix)
        }
        networks[role] = Network.from_manifest(arch).load_params(params)

    n_heads = sum(1 for role in networks if role.startswith("head"))
    return TrainedModel(
        regime=parse_regime(manifest["regime"]),
        latent_dim=int(manifest["latent_dim"]),
        encoder=networks.get("encoder"),
        heads=[networks[f"head{i}"] for i in range(n_heads)],
        decoder=networks.get("decoder"),
        manifest=manifest["training"],
    )
