"""Minimal numpy network engine: layers, losses, Adam and seeded init."""

from dislab.engine.init import INIT_SCHEMES, seeded_init
from dislab.engine.layers import (
    LayerSpec,
    activation,
    conv2d,
    conv_transpose2d,
    dense,
)
from dislab.engine.losses import gaussian_kl, mse_loss, summed_sse_loss
from dislab.engine.network import Network
from dislab.engine.optim import AdamState, adam_step

__all__ = [
    "INIT_SCHEMES",
    "AdamState",
    "LayerSpec",
    "Network",
    "activation",
    "adam_step",
    "conv2d",
    "conv_transpose2d",
    "dense",
    "gaussian_kl",
    "mse_loss",
    "seeded_init",
    "summed_sse_loss",
]
