"""Model checkpoint container: NOSG-style binary with an echoed JSON config.

    magic    4s   b"NOSG"
    version  u16  1
    kind     u8   2 (model checkpoint)
    json_len u32  UTF-8 JSON header: model kind, config, block manifest
    json     ...  {"model": ..., "config": {...}, "arrays": [[name, shape, dtype], ...]}
    blocks   ...  raw little-endian arrays in manifest order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ContainerError

_MAGIC = b"NOSG"
_VERSION = 1
_KIND_MODEL = 2
_HEAD = struct.Struct("<4sHBI")
_DTYPES = {"<f8": "<f8", "<c16": "<c16"}


def save_checkpoint(path, model: str, config: dict, arrays: dict[str, np.ndarray]):
    manifest = []
    blocks = []
    for name, arr in arrays.items():
        dtype = "<c16" if np.iscomplexobj(arr) else "<f8"
        manifest.append([name, list(arr.shape), dtype])
        blocks.append(np.ascontiguousarray(arr, dtype).tobytes())
    header = json.dumps(
        {"model": model, "config": config, "arrays": manifest}, sort_keys=True
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION, _KIND_MODEL, len(header)))
        fh.write(header)
        for b in blocks:
            fh.write(b)


def load_checkpoint(path) -> tuple[str, dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if len(blob) < _HEAD.size:
        raise ContainerError("file shorter than checkpoint header", 0)
    magic, version, kind, json_len = _HEAD.unpack(blob[: _HEAD.size])
    if magic != _MAGIC:
        raise ContainerError(f"bad magic {magic!r}", 0)
    if version != _VERSION or kind != _KIND_MODEL:
        raise ContainerError(f"unsupported version/kind ({version}, {kind})", 4)
    offset = _HEAD.size
    try:
        header = json.loads(blob[offset : offset + json_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ContainerError(f"bad JSON header: {err}", offset) from None
    offset += json_len
    arrays = {}
    for name, shape, dtype in header["arrays"]:
        if dtype not in _DTYPES:
            raise ContainerError(f"unknown dtype {dtype!r} for {name}", offset)
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * np.dtype(dtype).itemsize
        if offset + nbytes > len(blob):
            raise ContainerError(
                f"truncated array {name}: expected {nbytes} bytes, found "
                f"{len(blob) - offset}",
                offset,
            )
        arrays[name] = np.frombuffer(
            blob[offset : offset + nbytes], dtype=dtype
        ).reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ContainerError(f"{len(blob) - offset} trailing bytes", offset)
    return header["model"], header["config"], arrays
