"""Sequential network with cached forward pass and reverse-mode backward pass."""

from typing import Any, Optional

import numpy as np

from dislab.engine.init import InitScheme, seeded_init
from dislab.engine.layers import Layer, LayerSpec, build_layers
from dislab.exceptions import ConfigurationError, EngineStateError


class Network:
    """An ordered stack of layers plus its parameters.

    Attributes:
        specs (tuple[LayerSpec, ...]): The layer declarations.
        input_shape (tuple[int, ...]): Input shape without the batch axis.
        output_shape (tuple[int, ...]): Output shape without the batch axis.
        params (dict[str, np.ndarray]): Parameters, empty until initialized.
    """

    def __init__(
        self,
        specs: list[LayerSpec],
        input_shape: tuple[int, ...],
        *,
        dtype: type = np.float32,
    ) -> None:
        """Bind the declarations to an input shape.

        Args:
            specs (list[LayerSpec]): Ordered layer declarations.
            input_shape (tuple[int, ...]): Input shape without the batch axis.
            dtype (type, optional): Parameter and activation dtype.
                Defaults to np.float32.

        Raises:
            ConfigurationError: If some layer cannot accept its input shape.
        """
        self.specs = tuple(specs)
        self.input_shape = tuple(int(v) for v in input_shape)
        self.dtype = dtype
        self.layers: list[Layer] = build_layers(list(self.specs), self.input_shape)
        self.output_shape = self.layers[-1].out_shape if self.layers else self.input_shape
        self.params: dict[str, np.ndarray] = {}
        self._caches: Optional[list[Any]] = None

    @property
    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected shape of every parameter."""
        shapes: dict[str, tuple[int, ...]] = {}
        for layer in self.layers:
            shapes.update(layer.param_shapes)
        return shapes

    @property
    def parameter_count(self) -> int:
        """Total number of scalar parameters."""
        return int(sum(np.prod(shape) for shape in self.param_shapes.values()))

    def initialize(self, seed: int, scheme: InitScheme = "fan_in_uniform") -> "Network":
        """Draw fresh parameters; returns self for chaining."""
        self.params = seeded_init(
            list(self.specs), self.input_shape, seed, scheme, dtype=self.dtype
        )
        self._caches = None
        return self

    def load_params(self, params: dict[str, np.ndarray]) -> "Network":
        """Install externally provided parameters after checking their shapes.

        Raises:
            ConfigurationError: If a parameter is missing or mis-shaped.
        """
        expected = self.param_shapes
        if set(params) != set(expected):
            missing = sorted(set(expected) ^ set(params))
            bad_keys_msg = f"Parameter names do not match the network: {missing}"
            raise ConfigurationError(bad_keys_msg)
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                bad_shape_msg = (
                    f"Parameter {name} has shape {tuple(params[name].shape)}, expected {shape}"
                )
                raise ConfigurationError(bad_shape_msg)
        self.params = {name: np.asarray(value, dtype=self.dtype) for name, value in params.items()}
        self._caches = None
        return self

    def forward(self, x: np.ndarray, *, cache: bool = True) -> np.ndarray:
        """Run the network on a batch.

        Args:
            x (np.ndarray): Batch of shape (N, *input_shape).
            cache (bool, optional): Keep intermediates for :meth:`backward`.
                Defaults to True.

        Returns:
            np.ndarray: Batch of shape (N, *output_shape).

        Raises:
            EngineStateError: If the network has no parameters yet.
            ConfigurationError: If the input shape does not match.
        """
        if not self.params and self.param_shapes:
            no_params_msg = "Network has no parameters; call initialize() or load_params() first"
            raise EngineStateError(no_params_msg)
        x = np.asarray(x, dtype=self.dtype)
        if tuple(x.shape[1:]) != self.input_shape:
            first = self.layers[0] if self.layers else None
            where = f"layer0 ({first.spec.kind})" if first else "network"
            bad_input_msg = (
                f"{where} expects input shape (N, {', '.join(map(str, self.input_shape))}), "
                f"got {tuple(x.shape)}"
            )
            raise ConfigurationError(bad_input_msg)

        caches = []
        for layer in self.layers:
            x, layer_cache = layer.forward(self.params, x)
            caches.append(layer_cache)
        self._caches = caches if cache else None
        return x

    def backward(self, grad_out: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Back-propagate a loss gradient through the last cached forward pass.

        Args:
            grad_out (np.ndarray): Gradient w.r.t. the network output.

        Returns:
            tuple[dict[str, np.ndarray], np.ndarray]: Parameter gradients and
            the gradient w.r.t. the network input.

        Raises:
            EngineStateError: If no cached forward pass exists.
        """
        if self._caches is None:
            no_cache_msg = "backward() called without a cached forward pass"
            raise EngineStateError(no_cache_msg)
        grad = np.asarray(grad_out, dtype=self.dtype)
        grads: dict[str, np.ndarray] = {}
        for layer, layer_cache in zip(reversed(self.layers), reversed(self._caches)):
            layer_grads, grad = layer.backward(self.params, layer_cache, grad)
            grads.update(layer_grads)
        return grads, grad

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Forward pass in batches without keeping caches."""
        x = np.asarray(x, dtype=self.dtype)
        outputs = [
            self.forward(x[start : start + batch_size], cache=False)
            for start in range(0, x.shape[0], batch_size)
        ]
        if not outputs:
            return np.zeros((0, *self.output_shape), dtype=self.dtype)
        return np.concatenate(outputs, axis=0)

    def to_manifest(self) -> dict[str, Any]:
        """Architecture description for persistence."""
        return {
            "specs": [spec.to_dict() for spec in self.specs],
            "input_shape": list(self.input_shape),
            "dtype": np.dtype(self.dtype).name,
        }

    @classmethod
    def from_manifest(cls, manifest: dict[str, Any]) -> "Network":
        """Rebuild an (uninitialized) network from :meth:`to_manifest`."""
        return cls(
            [LayerSpec.from_dict(spec) for spec in manifest["specs"]],
            tuple(manifest["input_shape"]),
            dtype=np.dtype(manifest.get("dtype", "float32")).type,
        )
