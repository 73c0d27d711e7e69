"""Per-layer token representation bundles and their interchange formats.

Text form: header "RB1 <doc_id> <L> <d> <n_tokens>" followed by L×n_tokens
lines of d space-separated decimal floats, layer-major then token-major.
Binary form: magic "RBIN", three little-endian uint32 counts (L, d,
n_tokens), then L·n_tokens·d little-endian IEEE-754 float32 values in
the same order. Values are float32 in memory; both formats round-trip
bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError

TEXT_MAGIC = "RB1"
BINARY_MAGIC = b"RBIN"

TEXT_SUFFIX = ".rb"
BINARY_SUFFIX = ".rbin"


class ReprBundle:
    """Frozen (L, n_tokens, d) float32 stack of per-layer token vectors."""

    __slots__ = ("doc_id", "layers")

    def __init__(self, doc_id: str, layers: np.ndarray) -> None:
        layers = np.asarray(layers, dtype=np.float32)
        if layers.ndim != 3:
            raise ValidationError(
                f"bundle {doc_id!r}: expected (layers, tokens, dims) array, "
                f"got shape {layers.shape}"
            )
        if 0 in layers.shape:
            raise ValidationError(f"bundle {doc_id!r}: empty axis in {layers.shape}")
        if not np.all(np.isfinite(layers)):
            raise ValidationError(f"bundle {doc_id!r}: non-finite values")
        layers = layers.copy()
        layers.setflags(write=False)
        self.doc_id = doc_id
        self.layers = layers

    @property
    def layer_count(self) -> int:
        return self.layers.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.layers.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.layers.shape[2]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ReprBundle):
            return NotImplemented
        return self.doc_id == other.doc_id and np.array_equal(
            self.layers, other.layers
        )

    def __repr__(self) -> str:
        return (
            f"ReprBundle({self.doc_id!r}, L={self.layer_count}, "
            f"n={self.n_tokens}, d={self.hidden_size})"
        )


def check_alignment(bundle: ReprBundle, n_tokens: int) -> None:
    """The bundle must cover exactly the linearization's token count."""
    if bundle.n_tokens != n_tokens:
        raise ValidationError(
            f"bundle {bundle.doc_id!r} has {bundle.n_tokens} tokens, "
            f"linearization has {n_tokens}"
        )


# -- text format ------------------------------------------------------------------


def write_bundle_text(bundle: ReprBundle, path: str | Path) -> None:
    lines = [
        f"{TEXT_MAGIC} {bundle.doc_id} {bundle.layer_count} "
        f"{bundle.hidden_size} {bundle.n_tokens}"
    ]
    flat = bundle.layers.reshape(-1, bundle.hidden_size)
    for row in flat:
        # repr of the exact float64 value of each float32: shortest
        # string that parses back to the identical bits
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_bundle_text(path: str | Path) -> ReprBundle:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) < 5 or header[0] != TEXT_MAGIC:
            raise ValidationError(f"{path}: not a text bundle file")
        try:
            layer_count, hidden, n_tokens = (int(x) for x in header[-3:])
        except ValueError:
            raise ValidationError(f"{path}: malformed header counts") from None
        doc_id = " ".join(header[1:-3])
        rows = []
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            values = line.split()
            if len(values) != hidden:
                raise ValidationError(
                    f"{path}:{lineno}: expected {hidden} values, got {len(values)}"
                )
            rows.append([np.float32(float(v)) for v in values])
    if len(rows) != layer_count * n_tokens:
        raise ValidationError(
            f"{path}: expected {layer_count * n_tokens} vector lines, got {len(rows)}"
        )
    layers = np.array(rows, dtype=np.float32).reshape(layer_count, n_tokens, hidden)
    return ReprBundle(doc_id, layers)


# -- binary format ----------------------------------------------------------------


def write_bundle_binary(bundle: ReprBundle, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(
            struct.pack(
                "<III", bundle.layer_count, bundle.hidden_size, bundle.n_tokens
            )
        )
        fh.write(np.ascontiguousarray(bundle.layers, dtype="<f4").tobytes())


def read_bundle_binary(path: str | Path, doc_id: str | None = None) -> ReprBundle:
    """The binary form carries no id; default to the file's stem."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != BINARY_MAGIC:
        raise ValidationError(f"{path}: not a binary bundle file")
    if len(data) < 16:
        raise ValidationError(f"{path}: truncated header")
    layer_count, hidden, n_tokens = struct.unpack("<III", data[4:16])
    expected = 16 + 4 * layer_count * hidden * n_tokens
    if len(data) != expected:
        raise ValidationError(
            f"{path}: expected {expected} bytes, found {len(data)}"
        )
    layers = np.frombuffer(data, dtype="<f4", offset=16).reshape(
        layer_count, n_tokens, hidden
    )
    return ReprBundle(doc_id if doc_id is not None else path.stem, layers)


def load_bundle(path: str | Path, doc_id: str | None = None) -> ReprBundle:
    """Sniff the format from the leading bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == BINARY_MAGIC:
        return read_bundle_binary(path, doc_id)
    if head[:3] == TEXT_MAGIC.encode():
        bundle = read_bundle_text(path)
        return bundle if doc_id is None else ReprBundle(doc_id, bundle.layers)
    raise ValidationError(f"{path}: unrecognized bundle format")


def save_bundle(bundle: ReprBundle, path: str | Path) -> None:
    """Pick the format from the file suffix (.rbin binary, else text)."""
    if str(path).endswith(BINARY_SUFFIX):
        write_bundle_binary(bundle, path)
    else:
        write_bundle_text(bundle, path)


def load_bundle_dir(directory: str | Path) -> dict[str, ReprBundle]:
    """All bundle files (either format) in a directory, keyed by doc id."""
    directory = Path(directory)
    bundles: dict[str, ReprBundle] = {}
    for path in sorted(directory.iterdir()):
        if path.suffix not in (TEXT_SUFFIX, BINARY_SUFFIX):
            continue
        bundle = load_bundle(path)
        if bundle.doc_id in bundles:
            raise ValidationError(f"duplicate bundle for document {bundle.doc_id!r}")
        bundles[bundle.doc_id] = bundle
    return bundles
