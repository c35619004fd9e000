"""
Named parameter registry shared by networks and optimizers
"""

from collections.abc import Iterator

import numpy as np

from utils.errors import ShapeMismatchError

from .tensor import Tensor


class ParameterStore:
    """Layers as (weight, bias) pairs plus free-standing parameters, in registration order"""

    def __init__(self) -> None:
        self._layers: dict[str, tuple[Tensor, Tensor]] = {}
        self._extras: dict[str, Tensor] = {}

    def add_layer(self, name: str, weight: Tensor, bias: Tensor) -> None:
        """Register a layer's weight and bias"""
        self._check_free(name)
        self._layers[name] = (weight, bias)

    def add(self, name: str, tensor: Tensor) -> None:
        """Register a parameter that is not part of a layer"""
        self._check_free(name)
        self._extras[name] = tensor

    def _check_free(self, name: str) -> None:
        if name in self._layers or name in self._extras:
            raise ValueError(f"Parameter name '{name}' already registered")

    def layer(self, name: str) -> tuple[Tensor, Tensor]:
        return self._layers[name]

    def layer_names(self) -> list[str]:
        return list(self._layers)

    def get(self, name: str) -> Tensor:
        """Look up by flat name ('encoder.0.weight') or extra name"""
        if name in self._extras:
            return self._extras[name]
        layer, _, part = name.rpartition(".")
        if layer in self._layers and part in ("weight", "bias"):
            weight, bias = self._layers[layer]
            return weight if part == "weight" else bias
        raise KeyError(name)

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        for name, (weight, bias) in self._layers.items():
            yield f"{name}.weight", weight
            yield f"{name}.bias", bias
        yield from self._extras.items()

    def trainable(self) -> list[tuple[str, Tensor]]:
        return [(name, p) for name, p in self.named_parameters() if p.requires_grad]

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.grad = None

    def n_parameters(self) -> int:
        """Number of trainable scalars"""
        return sum(p.size for _, p in self.trainable())

    def snapshot(self) -> dict[str, np.ndarray]:
        """Deep copy of every parameter value"""
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        """Copy values back in place so tensors keep their identity"""
        for name, p in self.named_parameters():
            if name not in snapshot:
                raise KeyError(f"Snapshot lacks parameter '{name}'")
            value = np.asarray(snapshot[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise ShapeMismatchError(
                    f"Snapshot shape {value.shape} does not match '{name}' {p.data.shape}"
                )
            p.data[...] = value

    def __contains__(self, name: object) -> bool:
        try:
            self.get(str(name))
        except KeyError:
            return False
        return True

    def __len__(self) -> int:
        return sum(1 for _ in self.named_parameters())
