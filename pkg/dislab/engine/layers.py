"""Layer declarations and their forward/backward kernels."""

from dataclasses import asdict, dataclass
from typing import Any, Literal, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dislab.exceptions import ConfigurationError

LayerKind = Literal["dense", "conv2d", "conv_transpose2d", "activation"]
ActivationName = Literal["relu", "tanh", "none"]

LAYER_KINDS = ("dense", "conv2d", "conv_transpose2d", "activation")
ACTIVATIONS = ("relu", "tanh", "none")


@dataclass(frozen=True)
class LayerSpec:
    """Declaration of one layer.

    ``units`` is the number of output features for dense layers and the number
    of output channels for (transposed) convolutions. Activation layers only
    use ``activation``.
    """

    kind: LayerKind
    units: int = 0
    kernel: int = 1
    stride: int = 1
    padding: int = 0
    activation: ActivationName = "none"

    def __post_init__(self) -> None:
        """Validate the declaration.

        Raises:
            ConfigurationError: If a field is out of range.
        """
        if self.kind not in LAYER_KINDS:
            bad_kind_msg = f"Unknown layer kind '{self.kind}', expected one of {LAYER_KINDS}"
            raise ConfigurationError(bad_kind_msg)
        if self.activation not in ACTIVATIONS:
            bad_act_msg = f"Unknown activation '{self.activation}', expected one of {ACTIVATIONS}"
            raise ConfigurationError(bad_act_msg)
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            bad_geom_msg = (
                f"Invalid geometry kernel={self.kernel}, stride={self.stride}, "
                f"padding={self.padding} for {self.kind} layer"
            )
            raise ConfigurationError(bad_geom_msg)
        if self.kind != "activation" and self.units < 1:
            bad_units_msg = f"{self.kind} layer needs units >= 1, got {self.units}"
            raise ConfigurationError(bad_units_msg)

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LayerSpec":
        """Rebuild a spec serialized with :meth:`to_dict`."""
        return cls(**data)


def dense(units: int) -> LayerSpec:
    """Fully-connected layer with ``units`` outputs."""
    return LayerSpec("dense", units=units)


def conv2d(channels: int, kernel: int, stride: int, padding: int = 0) -> LayerSpec:
    """2-D convolution producing ``channels`` feature maps."""
    return LayerSpec("conv2d", units=channels, kernel=kernel, stride=stride, padding=padding)


def conv_transpose2d(
    channels: int, kernel: int, stride: int, padding: int = 0
) -> LayerSpec:
    """2-D transposed convolution producing ``channels`` feature maps."""
    return LayerSpec(
        "conv_transpose2d", units=channels, kernel=kernel, stride=stride, padding=padding
    )


def activation(name: ActivationName) -> LayerSpec:
    """Element-wise non-linearity."""
    return LayerSpec("activation", activation=name)


def _windows(padded: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """View (N, C, H, W) as (N, C, Ho, Wo, k, k) patches."""
    view = sliding_window_view(padded, (kernel, kernel), axis=(2, 3))
    return view[:, :, ::stride, ::stride]


def _scatter_windows(
    patches: np.ndarray, out_shape: tuple[int, ...], kernel: int, stride: int
) -> np.ndarray:
    """Sum (N, C, Ho, Wo, k, k) patches back into an (N, C, H, W) canvas."""
    out = np.zeros(out_shape, dtype=patches.dtype)
    rows, cols = patches.shape[2], patches.shape[3]
    for i in range(kernel):
        for j in range(kernel):
            out[:, :, i : i + stride * rows : stride, j : j + stride * cols : stride] += (
                patches[:, :, :, :, i, j]
            )
    return out


class Layer:
    """A layer bound to a concrete input shape (batch axis excluded)."""

    def __init__(self, spec: LayerSpec, in_shape: tuple[int, ...], name: str) -> None:
        """Bind ``spec`` to ``in_shape``.

        Args:
            spec (LayerSpec): The declaration.
            in_shape (tuple[int, ...]): Input shape without the batch axis.
            name (str): Parameter name prefix, e.g. ``"layer3"``.
        """
        self.spec = spec
        self.in_shape = tuple(in_shape)
        self.name = name
        self.out_shape = self._infer_out_shape()

    def _infer_out_shape(self) -> tuple[int, ...]:
        return self.in_shape

    @property
    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Shapes of this layer's parameters keyed by full parameter name."""
        return {}

    @property
    def fan_in(self) -> int:
        """Number of inputs feeding one output unit."""
        return 1

    def forward(
        self, params: dict[str, np.ndarray], x: np.ndarray
    ) -> tuple[np.ndarray, Any]:
        """Compute the output and the cache needed by :meth:`backward`."""
        raise NotImplementedError

    def backward(
        self, params: dict[str, np.ndarray], cache: Any, grad: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Return parameter gradients and the gradient w.r.t. the input."""
        raise NotImplementedError

    def _fail(self, reason: str) -> None:
        layer_msg = f"{self.name} ({self.spec.kind}) with input shape {self.in_shape}: {reason}"
        raise ConfigurationError(layer_msg)


class Dense(Layer):
    """Affine map over the flattened input."""

    def _infer_out_shape(self) -> tuple[int, ...]:
        return (self.spec.units,)

    @property
    def in_features(self) -> int:
        """Flattened input size."""
        return int(np.prod(self.in_shape))

    @property
    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {
            f"{self.name}.weight": (self.in_features, self.spec.units),
            f"{self.name}.bias": (self.spec.units,),
        }

    @property
    def fan_in(self) -> int:
        return self.in_features

    def forward(
        self, params: dict[str, np.ndarray], x: np.ndarray
    ) -> tuple[np.ndarray, Any]:
        flat = x.reshape(x.shape[0], -1)
        out = flat @ params[f"{self.name}.weight"] + params[f"{self.name}.bias"]
        return out, flat

    def backward(
        self, params: dict[str, np.ndarray], cache: Any, grad: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        flat = cache
        weight = params[f"{self.name}.weight"]
        grads = {
            f"{self.name}.weight": flat.T @ grad,
            f"{self.name}.bias": grad.sum(axis=0),
        }
        grad_in = (grad @ weight.T).reshape((grad.shape[0], *self.in_shape))
        return grads, grad_in


class Conv2d(Layer):
    """Strided, zero-padded 2-D convolution realised with patch matrices."""

    def _infer_out_shape(self) -> tuple[int, ...]:
        if len(self.in_shape) != 3:
            self._fail("expected a (channels, height, width) input")
        _, height, width = self.in_shape
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        out_h = (height + 2 * p - k) // s + 1
        out_w = (width + 2 * p - k) // s + 1
        if height + 2 * p < k or width + 2 * p < k or out_h < 1 or out_w < 1:
            self._fail(f"kernel {k} does not fit the padded input")
        return (self.spec.units, out_h, out_w)

    @property
    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        k = self.spec.kernel
        return {
            f"{self.name}.weight": (self.spec.units, self.in_shape[0], k, k),
            f"{self.name}.bias": (self.spec.units,),
        }

    @property
    def fan_in(self) -> int:
        return self.in_shape[0] * self.spec.kernel**2

    def forward(
        self, params: dict[str, np.ndarray], x: np.ndarray
    ) -> tuple[np.ndarray, Any]:
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        batch = x.shape[0]
        _, out_h, out_w = self.out_shape
        padded = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        cols = (
            _windows(padded, k, s)
            .transpose(0, 2, 3, 1, 4, 5)
            .reshape(batch * out_h * out_w, -1)
        )
        weight = params[f"{self.name}.weight"].reshape(self.spec.units, -1)
        out = cols @ weight.T + params[f"{self.name}.bias"]
        out = out.reshape(batch, out_h, out_w, self.spec.units).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(out), (cols, padded.shape)

    def backward(
        self, params: dict[str, np.ndarray], cache: Any, grad: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        cols, padded_shape = cache
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        batch = grad.shape[0]
        channels = self.in_shape[0]
        _, out_h, out_w = self.out_shape
        weight = params[f"{self.name}.weight"]
        grad_rows = grad.transpose(0, 2, 3, 1).reshape(-1, self.spec.units)
        grads = {
            f"{self.name}.weight": (grad_rows.T @ cols).reshape(weight.shape),
            f"{self.name}.bias": grad_rows.sum(axis=0),
        }
        grad_cols = (grad_rows @ weight.reshape(self.spec.units, -1)).reshape(
            batch, out_h, out_w, channels, k, k
        )
        grad_padded = _scatter_windows(
            grad_cols.transpose(0, 3, 1, 2, 4, 5), padded_shape, k, s
        )
        height, width = padded_shape[2], padded_shape[3]
        return grads, grad_padded[:, :, p : height - p, p : width - p]


class ConvTranspose2d(Layer):
    """Transposed convolution, the adjoint of :class:`Conv2d` w.r.t. its input."""

    def _infer_out_shape(self) -> tuple[int, ...]:
        if len(self.in_shape) != 3:
            self._fail("expected a (channels, height, width) input")
        _, height, width = self.in_shape
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        out_h = (height - 1) * s - 2 * p + k
        out_w = (width - 1) * s - 2 * p + k
        if out_h < 1 or out_w < 1:
            self._fail(f"padding {p} crops the whole output")
        return (self.spec.units, out_h, out_w)

    @property
    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        k = self.spec.kernel
        return {
            f"{self.name}.weight": (self.in_shape[0], self.spec.units, k, k),
            f"{self.name}.bias": (self.spec.units,),
        }

    @property
    def fan_in(self) -> int:
        return self.spec.units * self.spec.kernel**2

    def forward(
        self, params: dict[str, np.ndarray], x: np.ndarray
    ) -> tuple[np.ndarray, Any]:
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        batch, channels, height, width = x.shape
        rows = x.transpose(0, 2, 3, 1).reshape(-1, channels)
        weight = params[f"{self.name}.weight"].reshape(channels, -1)
        patches = (rows @ weight).reshape(batch, height, width, self.spec.units, k, k)
        full_h, full_w = (height - 1) * s + k, (width - 1) * s + k
        full = _scatter_windows(
            patches.transpose(0, 3, 1, 2, 4, 5),
            (batch, self.spec.units, full_h, full_w),
            k,
            s,
        )
        out = full[:, :, p : full_h - p, p : full_w - p]
        out = out + params[f"{self.name}.bias"][None, :, None, None]
        return np.ascontiguousarray(out), rows

    def backward(
        self, params: dict[str, np.ndarray], cache: Any, grad: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        rows = cache
        k, s, p = self.spec.kernel, self.spec.stride, self.spec.padding
        channels, height, width = self.in_shape
        batch = grad.shape[0]
        weight = params[f"{self.name}.weight"]
        padded = np.pad(grad, ((0, 0), (0, 0), (p, p), (p, p)))
        grad_cols = (
            _windows(padded, k, s)
            .transpose(0, 2, 3, 1, 4, 5)
            .reshape(batch * height * width, -1)
        )
        grads = {
            f"{self.name}.weight": (rows.T @ grad_cols).reshape(weight.shape),
            f"{self.name}.bias": grad.sum(axis=(0, 2, 3)),
        }
        grad_rows = grad_cols @ weight.reshape(channels, -1).T
        grad_in = grad_rows.reshape(batch, height, width, channels).transpose(0, 3, 1, 2)
        return grads, np.ascontiguousarray(grad_in)


class Activation(Layer):
    """Element-wise ReLU, tanh or identity."""

    def forward(
        self, params: dict[str, np.ndarray], x: np.ndarray
    ) -> tuple[np.ndarray, Any]:
        name = self.spec.activation
        if name == "relu":
            return np.maximum(x, 0), x > 0
        if name == "tanh":
            out = np.tanh(x)
            return out, out
        return x, None

    def backward(
        self, params: dict[str, np.ndarray], cache: Any, grad: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        name = self.spec.activation
        if name == "relu":
            return {}, grad * cache
        if name == "tanh":
            return {}, grad * (1 - cache * cache)
        return {}, grad


_LAYER_CLASSES: dict[str, type[Layer]] = {
    "dense": Dense,
    "conv2d": Conv2d,
    "conv_transpose2d": ConvTranspose2d,
    "activation": Activation,
}


def build_layers(
    specs: list[LayerSpec], input_shape: tuple[int, ...], names: Optional[list[str]] = None
) -> list[Layer]:
    """Bind a list of specs to a concrete input shape, layer by layer.

    Args:
        specs (list[LayerSpec]): Ordered declarations.
        input_shape (tuple[int, ...]): Input shape without the batch axis.
        names (list[str], optional): Parameter prefixes. Defaults to ``layer{i}``.

    Returns:
        list[Layer]: The bound layers.

    Raises:
        ConfigurationError: If a layer cannot accept its input shape.
    """
    names = names or [f"layer{i}" for i in range(len(specs))]
    layers = []
    shape = tuple(input_shape)
    for spec, name in zip(specs, names):
        layer = _LAYER_CLASSES[spec.kind](spec, shape, name)
        layers.append(layer)
        shape = layer.out_shape
    return layers
