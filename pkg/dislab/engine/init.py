"""Seeded parameter initialization."""

from typing import Literal

import numpy as np

from dislab.engine.layers import LayerSpec, build_layers
from dislab.exceptions import ConfigurationError

InitScheme = Literal["gaussian_unit", "fan_in_uniform"]
INIT_SCHEMES = ("gaussian_unit", "fan_in_uniform")


def seeded_init(
    specs: list[LayerSpec],
    input_shape: tuple[int, ...],
    seed: int,
    scheme: InitScheme = "fan_in_uniform",
    dtype: type = np.float32,
) -> dict[str, np.ndarray]:
    """Draw every weight and bias of a network from one seeded stream.

    ``gaussian_unit`` draws N(0, 1) for weights and biases (used for frozen
    task networks). ``fan_in_uniform`` draws U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    (used for trainable models). Parameters are drawn layer by layer, weight
    before bias, so the same (specs, seed, scheme) is bit-identical.

    Args:
        specs (list[LayerSpec]): Network declaration.
        input_shape (tuple[int, ...]): Input shape without the batch axis.
        seed (int): 64-bit seed.
        scheme (str, optional): Initialization scheme. Defaults to "fan_in_uniform".
        dtype (type, optional): Parameter dtype. Defaults to np.float32.

    Returns:
        dict[str, np.ndarray]: Parameters keyed ``layer{i}.weight`` / ``layer{i}.bias``.

    Raises:
        ConfigurationError: If `scheme` is unknown.
    """
    if scheme not in INIT_SCHEMES:
        bad_scheme_msg = f"Unknown init scheme '{scheme}', expected one of {INIT_SCHEMES}"
        raise ConfigurationError(bad_scheme_msg)

    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for layer in build_layers(specs, input_shape):
        bound = 1.0 / np.sqrt(layer.fan_in)
        for name, shape in layer.param_shapes.items():
            if scheme == "gaussian_unit":
                values = rng.standard_normal(shape)
            else:
                values = rng.uniform(-bound, bound, size=shape)
            params[name] = values.astype(dtype)
    return params
