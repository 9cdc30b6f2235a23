"""The "NOSG" self-describing binary container for field series.

Layout (all little-endian):

    magic     4s   b"NOSG"
    version   u16  1
    layout    u8   0 = unstructured, 1 = structured
    field     u8   0 = velocity, 1 = pressure
    flags     u8   bit 0: difference series, bit 1: baseline block present
    inlet     f64
    dt        f64
    T         u32  timesteps of the underlying case
    -- unstructured --            -- structured --
    N  u64                        nx u32, ny u32
    node_xy  N*2 f64              extents 4*f64
    values   frames*N f64         mask ny*nx u8
    baseline N f64 (optional)     values frames*ny*nx f64
                                  baseline ny*nx f64 (optional)

Floats are raw IEEE-754 bytes, so save/load round trips bitwise.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ContainerError
from .fields import (
    CaseMeta,
    GridSpec,
    Series,
    StructuredSeries,
    UnstructuredSeries,
)

MAGIC = b"NOSG"
VERSION = 1

_FIELDS = ("velocity", "pressure")
_HEAD = struct.Struct("<4sHBBBddI")


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.blob):
            raise ContainerError(
                f"truncated {what}: expected {n} bytes, found "
                f"{len(self.blob) - self.offset}",
                self.offset,
            )
        out = self.blob[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: struct.Struct, what: str):
        return fmt.unpack(self.take(fmt.size, what))

    def array(self, count: int, dtype, what: str) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize, what)
        return np.frombuffer(raw, dtype=dtype).copy()


def save_series(path: str | Path, series: Series) -> None:
    meta = series.meta
    flags = (1 if series.is_difference else 0) | (
        2 if series.baseline is not None else 0
    )
    layout = 0 if isinstance(series, UnstructuredSeries) else 1
    parts = [
        _HEAD.pack(
            MAGIC,
            VERSION,
            layout,
            _FIELDS.index(meta.field_kind),
            flags,
            meta.inlet_velocity,
            meta.snapshot_interval,
            meta.n_timesteps,
        )
    ]
    if isinstance(series, UnstructuredSeries):
        parts.append(struct.pack("<Q", series.n_nodes))
        parts.append(np.ascontiguousarray(series.node_xy, "<f8").tobytes())
    else:
        g = series.grid
        parts.append(struct.pack("<II", g.nx, g.ny))
        parts.append(struct.pack("<dddd", g.x_min, g.x_max, g.y_min, g.y_max))
        parts.append(np.ascontiguousarray(series.solid_mask, "u1").tobytes())
    parts.append(np.ascontiguousarray(series.values, "<f8").tobytes())
    if series.baseline is not None:
        parts.append(np.ascontiguousarray(series.baseline, "<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_series(path: str | Path) -> Series:
    rd = _Reader(Path(path).read_bytes())
    magic, version, layout, fidx, flags, inlet, dt, n_t = rd.unpack(_HEAD, "header")
    if magic != MAGIC:
        raise ContainerError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != VERSION:
        raise ContainerError(f"unsupported version {version}", 4)
    if layout not in (0, 1) or fidx not in (0, 1):
        raise ContainerError(f"bad layout/field bytes ({layout}, {fidx})", 6)
    meta = CaseMeta(inlet, _FIELDS[fidx], n_t, dt)
    is_diff = bool(flags & 1)
    has_base = bool(flags & 2)
    frames = n_t - 1 if is_diff else n_t

    if layout == 0:
        (n_nodes,) = rd.unpack(struct.Struct("<Q"), "node count")
        xy = rd.array(n_nodes * 2, "<f8", "coordinate block").reshape(n_nodes, 2)
        values = rd.array(frames * n_nodes, "<f8", "value block").reshape(
            frames, n_nodes
        )
        baseline = rd.array(n_nodes, "<f8", "baseline block") if has_base else None
        series: Series = UnstructuredSeries(meta, xy, values, is_diff, baseline)
    else:
        nx, ny = rd.unpack(struct.Struct("<II"), "grid shape")
        x0, x1, y0, y1 = rd.unpack(struct.Struct("<dddd"), "grid extents")
        grid = GridSpec(nx, ny, x0, x1, y0, y1)
        mask = rd.array(ny * nx, "u1", "mask block").reshape(ny, nx).astype(bool)
        values = rd.array(frames * ny * nx, "<f8", "value block").reshape(
            frames, ny, nx
        )
        baseline = (
            rd.array(ny * nx, "<f8", "baseline block").reshape(ny, nx)
            if has_base
            else None
        )
        series = StructuredSeries(meta, grid, mask, values, is_diff, baseline)
    if rd.offset != len(rd.blob):
        raise ContainerError(
            f"{len(rd.blob) - rd.offset} unexpected trailing bytes", rd.offset
        )
    return series


def write_signal_csv(path: str | Path, times: np.ndarray, values: np.ndarray) -> None:
    """Probe-signal export: two columns, t and value."""
    lines = ["t,value"]
    lines += [f"{t!r},{v!r}" for t, v in zip(times, values)]
    Path(path).write_text("\n".join(lines) + "\n")
