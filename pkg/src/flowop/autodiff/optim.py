"""Adam-family optimizers with optional exponential learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GradientError
from .tensor import Tensor


@dataclass(frozen=True)
class ExponentialDecay:
    """Multiply the learning rate by ``rate`` every ``every`` epochs."""

    rate: float
    every: int

    def lr_at(self, base_lr: float, epoch: int) -> float:
        return base_lr * self.rate ** (epoch // self.every)


class Adam:
    """Adam with bias correction; ``decoupled=True`` gives AdamW weight decay.

    Complex parameters are handled in the usual paired-real sense: first
    moments stay complex, second moments track |g|^2.
    """

    def __init__(
        self,
        params: list[Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        decoupled: bool = False,
        decay: ExponentialDecay | None = None,
    ):
        self.params = list(params)
        self.base_lr = lr
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.decoupled = decoupled
        self.decay = decay
        self.step_count = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros(p.shape) for p in self.params]

    def set_epoch(self, epoch: int):
        if self.decay is not None:
            self.lr = self.decay.lr_at(self.base_lr, epoch)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1**self.step_count
        c2 = 1.0 - b2**self.step_count
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise GradientError(f"parameter {i} has no gradient")
            g = p.grad
            if self.weight_decay and not self.decoupled:
                g = g + self.weight_decay * p.data
            self._m[i] *= b1
            self._m[i] += (1.0 - b1) * g
            self._v[i] *= b2
            self._v[i] += (1.0 - b2) * (g * np.conj(g)).real
            if self.weight_decay and self.decoupled:
                p.data -= self.lr * self.weight_decay * p.data
            p.data -= self.lr * (self._m[i] / c1) / (np.sqrt(self._v[i] / c2) + self.eps)


def adamw(params, lr, weight_decay=1e-4, decay=None) -> Adam:
    return Adam(params, lr=lr, weight_decay=weight_decay, decoupled=True, decay=decay)


def adam(params, lr, decay=None) -> Adam:
    return Adam(params, lr=lr, decay=decay)


def make_optimizer(kind: str, params, lr, weight_decay=0.0, decay=None) -> Adam:
    if kind == "adam":
        return Adam(params, lr=lr, weight_decay=weight_decay, decay=decay)
    if kind == "adamw":
        return Adam(params, lr=lr, weight_decay=weight_decay, decoupled=True, decay=decay)
    raise ValueError(f"unknown optimizer kind {kind!r}")
