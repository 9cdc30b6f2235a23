"""Differentiable 2-d real FFT and truncated-spectrum channel mixing.

Conventions: the forward transform is unnormalized and keeps the W/2+1
non-redundant columns of the Hermitian-symmetric spectrum; the inverse
carries the full 1/(H*W) factor, so irfft2(rfft2(x)) == x exactly.  Both
transforms are linear, so each backward rule is the adjoint transform
(complex gradients follow the real-pair convention).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from .tensor import Tensor, _record, as_tensor


def _column_weights(w: int, wf: int) -> np.ndarray:
    """Multiplicity of each reduced-spectrum column in the full spectrum."""
    d = np.full(wf, 2.0)
    d[0] = 1.0
    if w % 2 == 0:
        d[-1] = 1.0
    return d


def rfft2(x) -> Tensor:
    """Unnormalized forward transform of a real field over the last two axes."""
    x = as_tensor(x)
    if x.is_complex:
        raise ShapeError("rfft2 expects a real tensor")
    if x.ndim < 2 or x.shape[-2] < 2 or x.shape[-1] < 2:
        raise ShapeError(f"rfft2 needs trailing dims >= 2, got {x.shape}")
    h, w = x.shape[-2], x.shape[-1]
    out = Tensor(np.fft.rfft2(x.data))

    def backward(g):
        # adjoint: inverse-type transform over the reduced bins only, so halve
        # the doubly-counted interior columns before the real synthesis
        wf = g.shape[-1]
        adj = g / _column_weights(w, wf)
        x._accumulate(np.fft.irfft2(adj, s=(h, w)) * (h * w))

    return _record(out, (x,), backward)


def irfft2(y, width: int | None = None) -> Tensor:
    """Inverse transform with 1/(H*W) normalization; output width defaults even."""
    y = as_tensor(y)
    if not y.is_complex:
        raise ShapeError("irfft2 expects a complex tensor")
    h, wf = y.shape[-2], y.shape[-1]
    w = 2 * (wf - 1) if width is None else width
    if w // 2 + 1 != wf:
        raise ShapeError(f"irfft2 width {w} inconsistent with {wf} columns")
    out = Tensor(np.fft.irfft2(y.data, s=(h, w)))

    def backward(g):
        y._accumulate(np.fft.rfft2(g) * (_column_weights(w, wf) / (h * w)))

    return _record(out, (y,), backward)


def spectral_multiply(v_hat, weight, m1: int, m2: int) -> Tensor:
    """Per-mode channel mixing on the retained low-frequency corner blocks.

    ``v_hat`` is [b, c_in, H, Wf] complex; ``weight`` is
    [c_in, c_out, 2*m1, m2] complex, rows 0..m1-1 acting on spectrum rows
    0..m1-1 and rows m1..2*m1-1 on spectrum rows H-m1..H-1.  Everything
    outside the retained blocks is truncated to zero.
    """
    v_hat, weight = as_tensor(v_hat), as_tensor(weight)
    if v_hat.ndim != 4 or weight.ndim != 4:
        raise ShapeError(
            f"spectral_multiply expects 4-d operands, got {v_hat.shape}, {weight.shape}"
        )
    b, ci, h, wf = v_hat.shape
    if weight.shape[0] != ci:
        raise ShapeError(
            f"channel mismatch: input {ci} vs weight {weight.shape[0]}"
        )
    co = weight.shape[1]
    if weight.shape[2] != 2 * m1 or weight.shape[3] != m2:
        raise ShapeError(
            f"weight block shape {weight.shape[2:]} != {(2 * m1, m2)}"
        )
    if m1 < 1 or 2 * m1 > h:
        raise ConfigError(f"m1={m1} exceeds the {h}-row spectrum (need 2*m1 <= H)")
    if m2 < 1 or m2 > wf:
        raise ConfigError(f"m2={m2} exceeds the {wf}-column reduced spectrum")

    def blocks(arr):
        return np.concatenate([arr[:, :, :m1, :m2], arr[:, :, h - m1 :, :m2]], axis=2)

    def mode_matmul(a, bmat):
        # [b, c, 2m1, m2] x [c, c', 2m1, m2] -> [b, c', 2m1, m2] per mode
        n = 2 * m1 * m2
        am = a.transpose(2, 3, 0, 1).reshape(n, a.shape[0], a.shape[1])
        bm = bmat.transpose(2, 3, 0, 1).reshape(n, bmat.shape[0], bmat.shape[1])
        om = am @ bm
        return om.reshape(2 * m1, m2, a.shape[0], bmat.shape[1]).transpose(2, 3, 0, 1)

    vb = blocks(v_hat.data)
    ob = mode_matmul(vb, weight.data)
    out_data = np.zeros((b, co, h, wf), dtype=np.complex128)
    out_data[:, :, :m1, :m2] = ob[:, :, :m1]
    out_data[:, :, h - m1 :, :m2] = ob[:, :, m1:]
    out = Tensor(out_data)

    def backward(g):
        gb = blocks(g)
        if v_hat.requires_grad:
            gv = np.zeros_like(v_hat.data)
            gvb = mode_matmul(gb, np.conj(weight.data).transpose(1, 0, 2, 3))
            gv[:, :, :m1, :m2] = gvb[:, :, :m1]
            gv[:, :, h - m1 :, :m2] = gvb[:, :, m1:]
            v_hat._accumulate(gv)
        if weight.requires_grad:
            n = 2 * m1 * m2
            vm = np.conj(vb).transpose(2, 3, 1, 0).reshape(n, ci, b)
            gm = gb.transpose(2, 3, 0, 1).reshape(n, b, co)
            gw = (vm @ gm).reshape(2 * m1, m2, ci, co).transpose(2, 3, 0, 1)
            weight._accumulate(gw)

    return _record(out, (v_hat, weight), backward)
