"""Deterministic RNG derivation.

Python's salted hash() must never feed randomness here; blake2 keeps
derived streams identical across processes and platforms.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *parts) -> int:
    """Namespaced integer seed, stable across processes and platforms."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def derive_rng(seed: int, *parts) -> random.Random:
    """Independent RNG for a namespaced sub-task of a seeded run."""
    return random.Random(derive_seed(seed, *parts))
