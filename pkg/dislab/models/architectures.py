"""Encoder, head and decoder declarations scaled to the image size."""

import math

from dislab.engine import LayerSpec, activation, conv2d, conv_transpose2d, dense
from dislab.engine.layers import ActivationName
from dislab.exceptions import ConfigurationError

LATENT_DIM = 8
HEAD_HIDDEN_LAYERS = 3
HEAD_HIDDEN_UNITS = 300
ENCODER_CHANNELS = (32, 32, 64, 128, 256, 256)
DECODER_CHANNELS = (256, 128, 128, 64, 64, 64)
DECODER_STEM_CHANNELS = 256


def n_downsamplings(size: int) -> int:
    """Number of stride-2 convolutions that bring ``size`` down to 1.

    Raises:
        ConfigurationError: If ``size`` is not a power of two in [2, 64].
    """
    depth = int(math.log2(size)) if size > 0 else 0
    if size < 2 or 2**depth != size or depth > len(ENCODER_CHANNELS):
        size_msg = f"Image size {size} must be a power of two between 2 and 64"
        raise ConfigurationError(size_msg)
    return depth


def encoder_specs(
    image_shape: tuple[int, int, int], latent_dim: int = LATENT_DIM, *, variational: bool = False
) -> list[LayerSpec]:
    """Stride-2 conv stack down to 1x1, then a dense layer to the latent.

    The variational encoder outputs ``2 * latent_dim`` values: the mean
    followed by the log-variance.
    """
    channels, height, width = image_shape
    if height != width:
        square_msg = f"Images must be square, got {height}x{width}"
        raise ConfigurationError(square_msg)
    specs: list[LayerSpec] = []
    for out_channels in ENCODER_CHANNELS[: n_downsamplings(height)]:
        specs += [conv2d(out_channels, kernel=4, stride=2, padding=1), activation("relu")]
    specs.append(dense(2 * latent_dim if variational else latent_dim))
    return specs


def head_specs(
    output_dim: int = 1, hidden_activation: ActivationName = "relu"
) -> list[LayerSpec]:
    """Three hidden layers of 300 units and a linear output."""
    specs: list[LayerSpec] = []
    for _ in range(HEAD_HIDDEN_LAYERS):
        specs += [dense(HEAD_HIDDEN_UNITS), activation(hidden_activation)]
    specs.append(dense(output_dim))
    return specs


def decoder_specs(image_shape: tuple[int, int, int]) -> list[LayerSpec]:
    """Mirror of the encoder acting on the latent viewed as a (d, 1, 1) map.

    A 1x1 convolution lifts the latent to 256 channels, stride-2 transposed
    convolutions double the side back to the image size, and a final 3x3
    transposed convolution maps to the image channels.
    """
    channels, height, _ = image_shape
    depth = n_downsamplings(height)
    specs: list[LayerSpec] = [conv2d(DECODER_STEM_CHANNELS, kernel=1, stride=1), activation("relu")]
    for out_channels in DECODER_CHANNELS[:depth]:
        specs += [conv_transpose2d(out_channels, kernel=4, stride=2, padding=1), activation("relu")]
    specs.append(conv_transpose2d(channels, kernel=3, stride=1, padding=1))
    return specs
