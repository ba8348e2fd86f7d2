"""Adam optimizer."""

from dataclasses import dataclass, field

import numpy as np

from dislab.exceptions import ConfigurationError, NumericError


@dataclass
class AdamState:
    """First/second moment accumulators plus hyperparameters.

    ``lr`` may be changed between steps by a schedule.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
) -> AdamState:
    """Apply one bias-corrected Adam update to ``params`` in place.

    Parameters without a gradient are left untouched. Nothing is modified if
    any gradient is invalid.

    Raises:
        ConfigurationError: If a gradient has no parameter or a different shape.
        NumericError: If a gradient holds NaN or infinity.
    """
    for name, grad in grads.items():
        if name not in params:
            unknown_msg = f"Gradient for unknown parameter {name}"
            raise ConfigurationError(unknown_msg)
        if grad.shape != params[name].shape:
            shape_msg = f"Gradient for {name} has shape {grad.shape}, parameter has {params[name].shape}"
            raise ConfigurationError(shape_msg)
        if name in state.m and state.m[name].shape != grad.shape:
            state_msg = f"Optimizer state for {name} has shape {state.m[name].shape}"
            raise ConfigurationError(state_msg)
        if not np.all(np.isfinite(grad)):
            nan_msg = f"Non-finite gradient for parameter {name} at step {state.step + 1}"
            raise NumericError(nan_msg, snapshot={"parameter": name, "step": state.step + 1})

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, grad in grads.items():
        param = params[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        param -= (state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)).astype(
            param.dtype
        )
    return state
