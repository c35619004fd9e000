"""
Autodiff package: tensors, parameters, optimizers and networks for dlglm
"""

from .init import semi_orthogonal_init
from .nn import Linear, Mlp, make_linear, network_maker
from .optim import AdamState, adam_step, sgd_step
from .params import ParameterStore
from .tensor import Tensor, as_tensor, concat, is_grad_enabled, no_grad, where

__all__ = [
    "AdamState",
    "Linear",
    "Mlp",
    "ParameterStore",
    "Tensor",
    "adam_step",
    "as_tensor",
    "concat",
    "is_grad_enabled",
    "make_linear",
    "network_maker",
    "no_grad",
    "semi_orthogonal_init",
    "sgd_step",
    "where",
]
