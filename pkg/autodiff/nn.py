"""
Fully-connected ReLU networks over a ParameterStore
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import ShapeMismatchError

from .init import semi_orthogonal_init
from .params import ParameterStore
from .tensor import Tensor


@dataclass
class Linear:
    """Affine map x @ weight + bias with weight of shape (in, out)"""

    weight: Tensor
    bias: Tensor

    @property
    def in_features(self) -> int:
        return self.weight.shape[0]

    @property
    def out_features(self) -> int:
        return self.weight.shape[1]

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class Mlp:
    """Linear layers with ReLU between them; the last layer is left linear"""

    def __init__(self, name: str, layers: list[Linear]):
        self.name = name
        self.layers = layers

    @property
    def in_features(self) -> int:
        return self.layers[0].in_features

    @property
    def out_features(self) -> int:
        return self.layers[-1].out_features

    @property
    def n_hidden_layers(self) -> int:
        return len(self.layers) - 1

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeMismatchError(
                f"{self.name}: expected {self.in_features} input features, got {x.shape[-1]}"
            )
        out = x
        for i, layer in enumerate(self.layers):
            out = layer(out)
            if i < len(self.layers) - 1:
                out = out.relu()
        return out


def make_linear(
    store: ParameterStore, name: str, in_features: int, out_features: int, rng: np.random.Generator
) -> Linear:
    """Semi-orthogonal weight, zero bias, registered under name"""
    weight = Tensor.parameter(semi_orthogonal_init(in_features, out_features, rng))
    bias = Tensor.parameter(np.zeros(out_features))
    store.add_layer(name, weight, bias)
    return Linear(weight, bias)


def network_maker(
    store: ParameterStore,
    name: str,
    n_hidden_layers: int,
    in_h: int,
    h: int,
    out_h: int,
    rng: np.random.Generator,
) -> Mlp:
    """in_h -> [h] * n_hidden_layers -> out_h"""
    if n_hidden_layers < 0:
        raise ValueError("n_hidden_layers must be >= 0")
    widths = [in_h] + [h] * n_hidden_layers + [out_h]
    layers = [
        make_linear(store, f"{name}.{i}", widths[i], widths[i + 1], rng)
        for i in range(len(widths) - 1)
    ]
    return Mlp(name, layers)
