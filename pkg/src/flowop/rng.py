"""Deterministic named substreams derived from a single root seed.

Every random decision in the pipeline draws from a substream keyed by what
the numbers are for (case velocity, model name, ...), so adding a case or a
model never perturbs the streams of existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(root_seed: int, *labels: object) -> int:
    """64-bit seed derived from the root seed and a label path."""
    key = f"{root_seed}/" + "/".join(str(x) for x in labels)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(root_seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for the given label path."""
    return np.random.default_rng(substream_seed(root_seed, *labels))
