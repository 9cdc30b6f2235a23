"""Training losses: mean-squared error and per-sample relative L2."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError, ShapeError
from .tensor import Tensor, as_tensor, sqrt


def mse(pred, ref) -> Tensor:
    pred, ref = as_tensor(pred), as_tensor(ref)
    if pred.shape != ref.shape:
        raise ShapeError(f"mse shapes disagree: {pred.shape} vs {ref.shape}")
    d = pred - ref
    return (d * d).mean()


def relative_l2(pred, ref) -> Tensor:
    """||pred - ref|| / ||ref|| per leading-axis sample, averaged over samples."""
    pred, ref = as_tensor(pred), as_tensor(ref)
    if pred.shape != ref.shape:
        raise ShapeError(f"relative_l2 shapes disagree: {pred.shape} vs {ref.shape}")
    n = pred.shape[0] if pred.ndim > 1 else 1
    p = pred.reshape(n, -1)
    r = ref.reshape(n, -1)
    ref_norms = np.sqrt((r.data * r.data).sum(axis=1))
    if np.any(ref_norms == 0.0):
        idx = int(np.argmin(ref_norms))
        raise DomainError(f"relative_l2 reference sample {idx} has zero norm")
    d = p - r
    num = sqrt((d * d).sum(axis=1))
    return (num * (1.0 / ref_norms)).mean()


_LOSSES = {"mse": mse, "relative_l2": relative_l2}


def loss(pred, ref, kind: str) -> Tensor:
    try:
        fn = _LOSSES[kind]
    except KeyError:
        raise ShapeError(f"unknown loss kind {kind!r}") from None
    return fn(pred, ref)
