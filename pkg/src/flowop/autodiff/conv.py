"""2-d cross-correlation and its transpose, with backward rules.

Layouts follow the channels-first convention: inputs are [b, c, H, W],
conv kernels [c_out, c_in, kh, kw], transposed-conv kernels
[c_in, c_out, kh, kw].  Padding is zero padding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ShapeError
from .tensor import Tensor, _record, as_tensor


def _pair(v):
    return (v, v) if isinstance(v, int) else tuple(v)


def _pad(x, py, px):
    if py == 0 and px == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (py, py), (px, px)))


def _patch_view(x, kh, kw, sy, sx, ho, wo):
    """Strided view [b, c, ho, wo, kh, kw] of sliding windows over x."""
    b, c, _, _ = x.shape
    sb, sc, sh, sw = x.strides
    return as_strided(
        x,
        shape=(b, c, ho, wo, kh, kw),
        strides=(sb, sc, sh * sy, sw * sx, sh, sw),
        writeable=False,
    )


def _corr2d(x, k, stride, padding):
    """Plain strided cross-correlation of [b,ci,H,W] with [co,ci,kh,kw]."""
    sy, sx = stride
    py, px = padding
    co, ci, kh, kw = k.shape
    xp = _pad(x, py, px)
    ho = (xp.shape[2] - kh) // sy + 1
    wo = (xp.shape[3] - kw) // sx + 1
    view = _patch_view(xp, kh, kw, sy, sx, ho, wo)
    out = np.tensordot(view, k, axes=([1, 4, 5], [1, 2, 3]))  # [b, ho, wo, co]
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _corr2d_kernel_grad(g, x, stride, padding, kshape):
    sy, sx = stride
    py, px = padding
    co, ci, kh, kw = kshape
    xp = _pad(x, py, px)
    ho, wo = g.shape[2], g.shape[3]
    view = _patch_view(xp, kh, kw, sy, sx, ho, wo)
    return np.tensordot(g, view, axes=([0, 2, 3], [0, 2, 3]))  # [co, ci, kh, kw]


def _scatter_input_grad(g, k, stride, padding, xshape):
    """Adjoint of _corr2d w.r.t. its input: scatter g back through the kernel."""
    sy, sx = stride
    py, px = padding
    co, ci, kh, kw = k.shape
    b, _, h, w = xshape
    ho, wo = g.shape[2], g.shape[3]
    buf = np.zeros((b, ci, h + 2 * py, w + 2 * px))
    for i in range(kh):
        for j in range(kw):
            contrib = np.tensordot(g, k[:, :, i, j], axes=([1], [0]))  # [b,ho,wo,ci]
            buf[:, :, i : i + ho * sy : sy, j : j + wo * sx : sx] += contrib.transpose(
                0, 3, 1, 2
            )
    if py or px:
        buf = buf[:, :, py : py + h, px : px + w]
    return buf


def conv2d(x, kernel, stride=1, padding=0) -> Tensor:
    """Strided zero-padded cross-correlation, differentiable in both operands."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    stride, padding = _pair(stride), _pair(padding)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d operands, got {x.shape}, {kernel.shape}")
    if x.shape[1] != kernel.shape[1]:
        raise ShapeError(
            f"conv2d channel mismatch: input {x.shape[1]} vs kernel {kernel.shape[1]}"
        )
    kh, kw = kernel.shape[2], kernel.shape[3]
    ho = (x.shape[2] + 2 * padding[0] - kh) // stride[0] + 1
    wo = (x.shape[3] + 2 * padding[1] - kw) // stride[1] + 1
    if ho <= 0 or wo <= 0:
        raise ShapeError(f"conv2d output dims not positive: {(ho, wo)}")
    out = Tensor(_corr2d(x.data, kernel.data, stride, padding))

    def backward(g):
        if x.requires_grad:
            x._accumulate(_scatter_input_grad(g, kernel.data, stride, padding, x.shape))
        if kernel.requires_grad:
            kernel._accumulate(
                _corr2d_kernel_grad(g, x.data, stride, padding, kernel.shape)
            )

    return _record(out, (x, kernel), backward)


def conv_transpose2d(x, kernel, stride=1, padding=0, output_padding=0) -> Tensor:
    """Transposed convolution (adjoint of conv2d with the same geometry)."""
    x, kernel = as_tensor(x), as_tensor(kernel)
    stride, padding = _pair(stride), _pair(padding)
    opad = _pair(output_padding)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(
            f"conv_transpose2d expects 4-d operands, got {x.shape}, {kernel.shape}"
        )
    if x.shape[1] != kernel.shape[0]:
        raise ShapeError(
            f"conv_transpose2d channel mismatch: input {x.shape[1]} vs kernel "
            f"{kernel.shape[0]}"
        )
    if any(o >= s for o, s in zip(opad, stride)):
        raise ShapeError("output_padding must be smaller than stride")
    ci, co, kh, kw = kernel.shape
    b, _, h, w = x.shape
    ho = (h - 1) * stride[0] - 2 * padding[0] + kh + opad[0]
    wo = (w - 1) * stride[1] - 2 * padding[1] + kw + opad[1]
    if ho <= 0 or wo <= 0:
        raise ShapeError(f"conv_transpose2d output dims not positive: {(ho, wo)}")
    # forward pass is the input-gradient scatter of a conv over the output grid;
    # the [ci, co, kh, kw] kernel already has conv layout for that role
    out = Tensor(
        _scatter_input_grad(x.data, kernel.data, stride, padding, (b, co, ho, wo))
    )

    def backward(g):
        if x.requires_grad:
            x._accumulate(_corr2d(g, kernel.data, stride, padding))
        if kernel.requires_grad:
            gk = _corr2d_kernel_grad(x.data, g, stride, padding, (ci, co, kh, kw))
            kernel._accumulate(gk)

    return _record(out, (x, kernel), backward)
