"""Counter-based random streams.

Every random decision in the package draws from a stream keyed by a
(seed, *label) tuple instead of from shared mutable RNG state.  Streams are
backed by numpy's Philox generator, whose 128-bit key we derive by hashing
the tuple, so any worker layout (or none) produces identical results: the
stream for (seed, "aug", step, image_id, block_id, branch) is the same
whether it is drawn first, last, or in parallel.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


def _pack(field) -> bytes:
    if isinstance(field, (bool, np.bool_)):
        field = int(field)
    if isinstance(field, (int, np.integer)):
        return b"i" + struct.pack("<q", int(field))
    if isinstance(field, str):
        raw = field.encode("utf-8")
        return b"s" + struct.pack("<I", len(raw)) + raw
    raise TypeError(f"unsupported stream key field: {field!r}")


def stream_key(seed: int, *fields) -> np.ndarray:
    """Derive a 128-bit Philox key from (seed, *fields), platform independent."""
    h = hashlib.blake2b(digest_size=16)
    h.update(_pack(int(seed)))
    for f in fields:
        h.update(_pack(f))
    lo, hi = struct.unpack("<QQ", h.digest())
    return np.array([lo, hi], dtype=np.uint64)


def stream(seed: int, *fields) -> np.random.Generator:
    """A fresh, deterministic generator for the given key tuple."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *fields)))
