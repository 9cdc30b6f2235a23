"""Numeric core: tensors, reverse-mode gradients, FFTs, optimizers."""

from .conv import conv2d, conv_transpose2d
from .losses import loss, mse, relative_l2
from .optim import Adam, ExponentialDecay, adam, adamw, make_optimizer
from .spectral import irfft2, rfft2, spectral_multiply
from .tensor import (
    Tensor,
    abs2,
    activation,
    as_tensor,
    concatenate,
    exp,
    gelu,
    matmul,
    no_grad,
    relu,
    sin,
    sqrt,
    tape_nodes,
)

__all__ = [
    "Adam",
    "ExponentialDecay",
    "Tensor",
    "abs2",
    "activation",
    "adam",
    "adamw",
    "as_tensor",
    "concatenate",
    "conv2d",
    "conv_transpose2d",
    "exp",
    "gelu",
    "irfft2",
    "loss",
    "make_optimizer",
    "matmul",
    "mse",
    "no_grad",
    "relative_l2",
    "relu",
    "rfft2",
    "sin",
    "spectral_multiply",
    "sqrt",
    "tape_nodes",
]
