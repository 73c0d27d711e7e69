"""Deterministic toy encoder for exercising probes without a real model.

Produces a ReprBundle from a linearized document. Three modes:

- contextual: token-identity features plus neighbor features that leak
  across node boundaries, so span endpoints can see adjacent nodes.
- atomic: the same identity features, but neighbor features stop at node
  boundaries; tokens carry no information about surrounding nodes.
- random: seed-hashed noise per position, uncorrelated with content or
  structure.

When the linearization carries active structural tracks (any nonzero
type or depth id), contextual and atomic modes additionally plant those
ids as one-hot blocks inside node spans, mimicking an encoder that
absorbed structural embeddings. All features come from blake2b digests,
so output is a pure function of (document, layer count, width, mode,
seed).
"""

from __future__ import annotations

import hashlib

import numpy as np

from .bundles import ReprBundle
from .errors import ConfigError
from .infusion import DEPTH_BUCKETS, LinearizedDocument

CONTEXTUAL = "contextual"
ATOMIC = "atomic"
RANDOM = "random"
MODES = (CONTEXTUAL, ATOMIC, RANDOM)

MIN_WIDTH = 32

# fixed coordinate blocks inside the first 32 dims
_IDENTITY = slice(0, 6)
_PREV_LEAK = slice(6, 10)
_NEXT_LEAK = slice(10, 14)
_TYPE_ONEHOT = slice(14, 19)   # type ids 0..4
_DEPTH_ONEHOT = slice(19, 29)  # depth ids 0..9; deeper collapse onto 9
_DEPTH_SCALAR = 29
_TYPE_SCALAR = 30
_BIAS = 31

_DEPTH_SLOTS = _DEPTH_ONEHOT.stop - _DEPTH_ONEHOT.start


def _hash_floats(count: int, *parts) -> np.ndarray:
    """`count` floats in [-1, 1), a pure function of the parts."""
    if count > 16:
        raise ValueError("at most 16 floats per digest")
    h = hashlib.blake2b(digest_size=4 * count)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    raw = h.digest()
    words = [int.from_bytes(raw[4 * i : 4 * i + 4], "big") for i in range(count)]
    return np.array([w / 2**31 - 1.0 for w in words], dtype=np.float64)


def _node_index(lin: LinearizedDocument) -> list[int | None]:
    """For each position, the index of its covering span, else None."""
    spans = sorted(lin.node_spans.values())
    owner: list[int | None] = [None] * len(lin.tokens)
    for k, (start, end) in enumerate(spans):
        for pos in range(start, end + 1):
            owner[pos] = k
    return owner


def toy_encode(
    lin: LinearizedDocument,
    layer_count: int,
    width: int,
    mode: str,
    seed: int,
) -> ReprBundle:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    if layer_count < 1:
        raise ConfigError("need at least one layer")
    if width < MIN_WIDTH:
        raise ConfigError(f"width must be at least {MIN_WIDTH}, got {width}")

    n = len(lin.tokens)
    base = np.zeros((n, width), dtype=np.float64)

    if mode == RANDOM:
        for pos in range(n):
            for block in range(0, width, 16):
                stop = min(block + 16, width)
                base[pos, block:stop] = _hash_floats(
                    stop - block, seed, "rand", pos, block
                )
    else:
        identity = [_hash_floats(6, "tok", t) for t in lin.tokens]
        owner = _node_index(lin)
        type_active = any(v != 0 for v in lin.type_ids)
        depth_active = any(v != 0 for v in lin.depth_ids)
        for pos in range(n):
            base[pos, _IDENTITY] = identity[pos]
            # neighbor leaks; atomic mode clips them at span boundaries
            if pos > 0 and (mode == CONTEXTUAL or owner[pos - 1] == owner[pos]):
                base[pos, _PREV_LEAK] = identity[pos - 1][:4]
            if pos + 1 < n and (mode == CONTEXTUAL or owner[pos + 1] == owner[pos]):
                base[pos, _NEXT_LEAK] = identity[pos + 1][:4]
            if owner[pos] is not None:
                if type_active:
                    base[pos, _TYPE_ONEHOT.start + lin.type_ids[pos]] = 1.0
                    base[pos, _TYPE_SCALAR] = lin.type_ids[pos] / 4.0
                if depth_active:
                    slot = min(lin.depth_ids[pos], _DEPTH_SLOTS - 1)
                    base[pos, _DEPTH_ONEHOT.start + slot] = 1.0
                    base[pos, _DEPTH_SCALAR] = lin.depth_ids[pos] / DEPTH_BUCKETS
            base[pos, _BIAS] = 1.0

    # layers share features up to a positive per-layer gain, so scalar
    # mixing cannot destroy linear separability
    layers = np.empty((layer_count, n, width), dtype=np.float32)
    for layer in range(layer_count):
        layers[layer] = (base * (1.0 + 0.05 * layer)).astype(np.float32)
    return ReprBundle(lin.doc_id, layers)
