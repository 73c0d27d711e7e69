"""Span-corruption denoising pairs.

Replaces random non-adjacent token spans with numbered sentinels and
builds the matching target sequence; reconstruct is the exact inverse.
Span placement follows the alternating-segmentation scheme: noise and
non-noise token budgets are each partitioned uniformly into equally
many non-empty segments, interleaved starting with non-noise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .errors import IntegrityError, ValidationError
from .seeding import derive_rng

DEFAULT_NOISE_DENSITY = 0.03
DEFAULT_MEAN_SPAN_LENGTHS = (4, 8, 12)

_SENTINEL_RE = re.compile(r"^<M(\d+)>$")


def sentinel(i: int) -> str:
    """Numbered mask token; the manifest reserves the <M{i}> scheme."""
    return f"<M{i}>"


def sentinel_number(token: str) -> int | None:
    m = _SENTINEL_RE.match(token)
    return int(m.group(1)) if m else None


@dataclass(frozen=True)
class CorruptionSpec:
    noise_density: float = DEFAULT_NOISE_DENSITY
    mean_span_lengths: tuple[int, ...] = DEFAULT_MEAN_SPAN_LENGTHS
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.noise_density < 1:
            raise ValidationError(
                f"noise_density must lie strictly between 0 and 1, "
                f"got {self.noise_density}"
            )
        if not self.mean_span_lengths:
            raise ValidationError("mean_span_lengths must be non-empty")
        for length in self.mean_span_lengths:
            if not isinstance(length, int) or length < 1:
                raise ValidationError(f"invalid mean span length {length!r}")


def _random_segmentation(num_items: int, num_segments: int, rng) -> list[int]:
    """Uniformly random positive segment lengths summing to num_items."""
    cuts = sorted(rng.sample(range(1, num_items), num_segments - 1))
    bounds = [0] + cuts + [num_items]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def corrupt(tokens: Sequence[str], spec: CorruptionSpec) -> tuple[list[str], list[str]]:
    """Produce (corrupted_input, target).

    The mean span length is drawn uniformly from the spec per sequence;
    the masked token count is round(density n) clamped to [1, n-1]; the
    span count is round(masked / mean length), at least 1 and never more
    than either token budget allows. Target: each sentinel followed by
    the tokens it replaced, closed by one final sentinel.
    """
    n = len(tokens)
    if n < 2:
        raise ValidationError(f"need at least 2 tokens to corrupt, got {n}")
    rng = derive_rng(spec.seed, "denoise")
    mean_length = rng.choice(sorted(spec.mean_span_lengths))
    num_noise = min(max(round(n * spec.noise_density), 1), n - 1)
    num_nonnoise = n - num_noise
    num_spans = max(round(num_noise / mean_length), 1)
    num_spans = min(num_spans, num_noise, num_nonnoise)
    noise_lengths = _random_segmentation(num_noise, num_spans, rng)
    nonnoise_lengths = _random_segmentation(num_nonnoise, num_spans, rng)

    corrupted: list[str] = []
    target: list[str] = []
    cursor = 0
    for i in range(num_spans):
        keep = nonnoise_lengths[i]
        corrupted.extend(tokens[cursor : cursor + keep])
        cursor += keep
        drop = noise_lengths[i]
        corrupted.append(sentinel(i))
        target.append(sentinel(i))
        target.extend(tokens[cursor : cursor + drop])
        cursor += drop
    target.append(sentinel(num_spans))
    return corrupted, target


def _parse_target(target: Sequence[str]) -> list[list[str]]:
    """Split the target at its sentinels; verifies numbering 0,1,...,k
    with non-empty spans and an empty trailing span."""
    if not target:
        raise IntegrityError("empty target")
    spans: list[list[str]] = []
    current: list[str] | None = None
    expected = 0
    for token in target:
        number = sentinel_number(token)
        if number is None:
            if current is None:
                raise IntegrityError("target does not start with a sentinel")
            current.append(token)
            continue
        if number != expected:
            raise IntegrityError(
                f"target sentinel out of order: expected {sentinel(expected)}, "
                f"found {token}"
            )
        expected += 1
        current = []
        spans.append(current)
    if len(spans) < 2:
        raise IntegrityError("target has no closing sentinel")
    if spans[-1]:
        raise IntegrityError("tokens after the closing sentinel")
    body = spans[:-1]
    for i, span in enumerate(body):
        if not span:
            raise IntegrityError(f"sentinel {sentinel(i)} replaced no tokens")
    return body


def reconstruct(
    corrupted: Sequence[str], target: Sequence[str]
) -> list[str]:
    """Splice the target spans back over the sentinels; exact inverse of
    corrupt for its own outputs."""
    spans = _parse_target(target)
    out: list[str] = []
    expected = 0
    for token in corrupted:
        number = sentinel_number(token)
        if number is None:
            out.append(token)
            continue
        if number != expected:
            raise IntegrityError(
                f"input sentinel out of order: expected {sentinel(expected)}, "
                f"found {token}"
            )
        if number >= len(spans):
            raise IntegrityError(f"input sentinel {token} missing from target")
        out.extend(spans[number])
        expected += 1
    if expected != len(spans):
        raise IntegrityError(
            f"target has {len(spans)} spans but input consumed {expected}"
        )
    return out
