"""Model zoo: encoders, heads, decoders and their training loops."""

from dislab.models.architectures import LATENT_DIM, decoder_specs, encoder_specs, head_specs
from dislab.models.model import (
    REGIMES,
    Regime,
    TrainedModel,
    decode,
    encode,
    load_model,
    parse_regime,
    save_model,
)
from dislab.models.probes import GROUND_TRUTH, HeadProbeResult, latent_head_probe
from dislab.models.profiles import PROFILES, TrainingProfile, get_profile
from dislab.models.training import (
    build_multitask_model,
    predict_tasks,
    reconstruction_mse,
    task_mse,
    train_autoencoder,
    train_decoder_probe,
    train_heads_on_latents,
    train_multitask,
)

__all__ = [
    "GROUND_TRUTH",
    "LATENT_DIM",
    "PROFILES",
    "REGIMES",
    "HeadProbeResult",
    "Regime",
    "TrainedModel",
    "TrainingProfile",
    "build_multitask_model",
    "decode",
    "decoder_specs",
    "encode",
    "encoder_specs",
    "get_profile",
    "head_specs",
    "latent_head_probe",
    "load_model",
    "parse_regime",
    "predict_tasks",
    "reconstruction_mse",
    "save_model",
    "task_mse",
    "train_autoencoder",
    "train_decoder_probe",
    "train_heads_on_latents",
    "train_multitask",
]
