"""Thin layer helpers over the autodiff core.

Weight initialization is uniform in +-1/sqrt(fan_in) for dense and
convolutional layers; spectral mixing weights use a 1/(c_in*c_out) scale.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, activation, conv2d, conv_transpose2d


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def spectral_init(rng: np.random.Generator, ci: int, co: int, m1: int, m2: int) -> Tensor:
    scale = 1.0 / (ci * co)
    shape = (ci, co, 2 * m1, m2)
    data = scale * (rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape))
    return Tensor(data, requires_grad=True)


class Dense:
    def __init__(self, rng, in_dim: int, out_dim: int):
        self.weight = uniform_init(rng, (in_dim, out_dim), in_dim)
        self.bias = uniform_init(rng, (out_dim,), in_dim)

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]


class MLP:
    """Dense stack; ``act`` after every hidden layer, ``out_act`` after the last."""

    def __init__(self, rng, sizes: list[int], act: str, out_act: str = "identity"):
        self.layers = [Dense(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])]
        self.act = act
        self.out_act = out_act

    def __call__(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = activation(layer(x), self.act)
        return activation(self.layers[-1](x), self.out_act)

    def params(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params()]


class Conv2d:
    def __init__(self, rng, ci: int, co: int, kernel: int, stride=1, padding=0):
        fan_in = ci * kernel * kernel
        self.weight = uniform_init(rng, (co, ci, kernel, kernel), fan_in)
        self.bias = uniform_init(rng, (co,), fan_in)
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        out = conv2d(x, self.weight, self.stride, self.padding)
        return out + self.bias.reshape(1, -1, 1, 1)

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]


class ConvTranspose2d:
    def __init__(self, rng, ci: int, co: int, kernel: int, stride=1, padding=0,
                 output_padding=0):
        fan_in = ci * kernel * kernel
        self.weight = uniform_init(rng, (ci, co, kernel, kernel), fan_in)
        self.bias = uniform_init(rng, (co,), fan_in)
        self.stride = stride
        self.padding = padding
        self.output_padding = output_padding

    def __call__(self, x: Tensor) -> Tensor:
        out = conv_transpose2d(
            x, self.weight, self.stride, self.padding, self.output_padding
        )
        return out + self.bias.reshape(1, -1, 1, 1)

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]


def pointwise(rng, ci: int, co: int) -> Dense:
    """1x1 channel mixing used by lifting/projection layers."""
    return Dense(rng, ci, co)


def apply_pointwise(layer: Dense, x: Tensor) -> Tensor:
    """Apply a Dense layer over the channel axis of [b, c, H, W]."""
    b, c, h, w = x.shape
    flat = x.transpose(0, 2, 3, 1).reshape(b * h * w, c)
    out = layer(flat)
    return out.reshape(b, h, w, -1).transpose(0, 3, 1, 2)


def collect_params(*modules) -> list[Tensor]:
    out = []
    for m in modules:
        out.extend(m.params())
    return out
