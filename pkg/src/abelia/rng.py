"""Counter-based seed splitting: every random stream is ``hash(seed, label)``."""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(seed: int, *labels) -> int:
    """Derive a 64-bit child seed from a parent seed and a label path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed).to_bytes(16, "little", signed=True))
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "little")


def generator(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(substream_seed(seed, *labels)))
