"""
Deeply-learned GLM head: η = h_π(x)·β + β0
"""

from typing import Union

import numpy as np

from autodiff import Linear, Mlp, ParameterStore, Tensor, as_tensor, network_maker
from utils.errors import ShapeMismatchError

from .family import Family

INTERCEPT_NAME = "(intercept)"


class GlmHead:
    """
    ReLU layers h_π followed by the coefficient layer (β, β0).

    With nhl_y = 0 the head is the affine map of a traditional GLM.
    """

    def __init__(
        self,
        store: ParameterStore,
        in_features: int,
        family: Family,
        nhl_y: int,
        h: int,
        rng: np.random.Generator,
        name: str = "glm",
    ):
        self.family = family
        self.nhl_y = nhl_y
        self.network: Mlp = network_maker(store, name, nhl_y, in_features, h, family.n_outputs, rng)

    @property
    def in_features(self) -> int:
        return self.network.in_features

    @property
    def coefficient_layer(self) -> Linear:
        return self.network.layers[-1]

    def __call__(self, x: Tensor) -> Tensor:
        return self.network(x)


def glm_head_forward(x: Tensor, head: GlmHead) -> Tensor:
    """Linear predictor for a row vector (p,) or a matrix of rows (n, p)"""
    x = as_tensor(x)
    if x.shape[-1] != head.in_features:
        raise ShapeMismatchError(
            f"GLM head expects {head.in_features} covariates, got {x.shape[-1]}"
        )
    if x.ndim == 1:
        return head(x.reshape(1, -1)).reshape(-1)
    return head(x)


def extract_coefficients(head: GlmHead) -> tuple[np.ndarray, np.ndarray]:
    """
    Final-layer weights and intercept.

    Returned shapes are (in,) and () for one-output families, (in, C) and (C,)
    for categorical. Only with nhl_y = 0 are these GLM coefficients on x.
    """
    layer = head.coefficient_layer
    beta = layer.weight.data.copy()
    beta0 = layer.bias.data.copy()
    if head.family.n_outputs == 1:
        return beta[:, 0], beta0[0]
    return beta, beta0


def coefficient_table(
    beta: np.ndarray, beta0: Union[float, np.ndarray], feature_names: list[str]
) -> list[tuple[str, float]]:
    """(feature, estimate) rows for one-output families, intercept first"""
    rows = [(INTERCEPT_NAME, float(np.asarray(beta0).reshape(-1)[0]))]
    values = np.asarray(beta).reshape(-1)
    rows.extend((name, float(value)) for name, value in zip(feature_names, values))
    return rows
