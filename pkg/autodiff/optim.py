"""
Gradient-ascent optimizers.

Bounds are maximized, so both steps move parameters along +grad.
"""

from dataclasses import dataclass, field

import numpy as np

from utils.errors import MissingGradientError, ShapeMismatchError

from .params import ParameterStore


def _gradients(params: ParameterStore) -> list[tuple[str, np.ndarray, np.ndarray]]:
    items = []
    for name, p in params.trainable():
        if p.grad is None:
            raise MissingGradientError(name)
        items.append((name, p.data, p.grad))
    return items


def sgd_step(params: ParameterStore, lr: float) -> None:
    """p <- p + lr * grad"""
    for _, data, grad in _gradients(params):
        data += lr * grad


@dataclass
class AdamState:
    """Moment buffers keyed by parameter name"""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: ParameterStore, state: AdamState, lr: float) -> None:
    """One bias-corrected ADAM ascent step"""
    items = _gradients(params)
    for name, data, _ in items:
        if name not in state.m:
            state.m[name] = np.zeros_like(data)
            state.v[name] = np.zeros_like(data)
        elif state.m[name].shape != data.shape or state.v[name].shape != data.shape:
            raise ShapeMismatchError(
                f"ADAM state for '{name}' has shape {state.m[name].shape}, parameter {data.shape}"
            )

    state.step += 1
    bias1 = 1.0 - state.beta1**state.step
    bias2 = 1.0 - state.beta2**state.step
    for name, data, grad in items:
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / bias1
        v_hat = v / bias2
        data += lr * m_hat / (np.sqrt(v_hat) + state.eps)
