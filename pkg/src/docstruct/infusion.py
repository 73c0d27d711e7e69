"""Structure-infused linearization.

Turns a document graph into a flat token stream plus aligned integer
tracks that carry structural information. Two independent pathways:
special tokens prepended to each node's text (separator, node type, or
clamped node depth), and per-token structural ID tracks meant for
additive embeddings in a downstream encoder.

The depth track stores the clamped depth itself, so a value of 0 means
either "root node" or "track inactive"; consumers must gate on
node_spans (every in-span token belongs to a node and its track values
are meaningful), not on nonzero values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigError, IntegrityError, ValidationError
from .graph import NODE_TYPES, DocumentGraph
from .tokenize import Tokenizer

TOKEN_PATHWAYS = ("none", "sep", "type", "depth")
EMBEDDING_PATHWAYS = ("none", "type", "depth")

DEPTH_BUCKETS = 20

BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"

# descriptor -> (token_pathway, embedding_pathway); the full grid minus
# the separator/embedding combinations, which are not configurations.
DESCRIPTORS: dict[str, tuple[str, str]] = {
    "vanilla": ("none", "none"),
    "tok-sep": ("sep", "none"),
    "tok-type": ("type", "none"),
    "tok-depth": ("depth", "none"),
    "emb-type": ("none", "type"),
    "emb-depth": ("none", "depth"),
    "emb-type-tok-type": ("type", "type"),
    "emb-type-tok-depth": ("depth", "type"),
    "emb-depth-tok-type": ("type", "depth"),
    "emb-depth-tok-depth": ("depth", "depth"),
}
_PAIR_TO_DESCRIPTOR = {pair: name for name, pair in DESCRIPTORS.items()}


@dataclass(frozen=True)
class InfusionConfig:
    token_pathway: str = "none"
    embedding_pathway: str = "none"

    def __post_init__(self) -> None:
        if self.token_pathway not in TOKEN_PATHWAYS:
            raise ConfigError(
                f"unknown token pathway {self.token_pathway!r}; "
                f"expected one of {TOKEN_PATHWAYS}"
            )
        if self.embedding_pathway not in EMBEDDING_PATHWAYS:
            raise ConfigError(
                f"unknown embedding pathway {self.embedding_pathway!r}; "
                f"expected one of {EMBEDDING_PATHWAYS}"
            )
        if (self.token_pathway, self.embedding_pathway) not in _PAIR_TO_DESCRIPTOR:
            raise ConfigError(
                f"pathway pair ({self.token_pathway}, {self.embedding_pathway}) "
                f"is not one of the named configurations"
            )

    @property
    def descriptor(self) -> str:
        return _PAIR_TO_DESCRIPTOR[(self.token_pathway, self.embedding_pathway)]


def parse_config(descriptor: str) -> InfusionConfig:
    """Config from its short descriptor, e.g. "emb-depth-tok-type"."""
    try:
        token_pathway, embedding_pathway = DESCRIPTORS[descriptor]
    except KeyError:
        raise ConfigError(
            f"unknown configuration {descriptor!r}; valid names: "
            + ", ".join(sorted(DESCRIPTORS))
        ) from None
    return InfusionConfig(token_pathway, embedding_pathway)


_DEFAULT_TYPE_TOKENS = {
    "article-title": "<Ti>",
    "abstract": "<Ab>",
    "section-title": "<Se>",
    "paragraph": "<Pa>",
}


@dataclass(frozen=True)
class StructuralVocabulary:
    """The 25 structural special tokens: 1 separator, 4 types, 20 depths."""

    separator: str = "<Sep>"
    type_tokens: Mapping[str, str] = field(
        default_factory=lambda: dict(_DEFAULT_TYPE_TOKENS)
    )
    depth_tokens: tuple[str, ...] = tuple(f"<D{i}>" for i in range(DEPTH_BUCKETS))

    def __post_init__(self) -> None:
        if set(self.type_tokens) != set(NODE_TYPES):
            raise ConfigError("type_tokens must cover exactly the four node types")
        if len(self.depth_tokens) != DEPTH_BUCKETS:
            raise ConfigError(f"expected {DEPTH_BUCKETS} depth tokens")
        if len(set(self.all_tokens())) != 1 + len(NODE_TYPES) + DEPTH_BUCKETS:
            raise ConfigError("special-token symbols must be distinct")

    def all_tokens(self) -> list[str]:
        """Fixed order: separator, types, depths."""
        return (
            [self.separator]
            + [self.type_tokens[t] for t in NODE_TYPES]
            + list(self.depth_tokens)
        )

    def type_token(self, node_type: str) -> str:
        return self.type_tokens[node_type]

    def depth_token(self, depth: int) -> str:
        return self.depth_tokens[clamp_depth(depth)]

    def is_special(self, token: str) -> bool:
        return token in self._special_set()

    def _special_set(self) -> frozenset:
        return frozenset(self.all_tokens())


DEFAULT_VOCABULARY = StructuralVocabulary()


def clamp_depth(depth: int) -> int:
    """Depths beyond the last bucket share it."""
    if depth < 0:
        raise ValidationError(f"negative depth {depth}")
    return min(depth, DEPTH_BUCKETS - 1)


def type_index(node_type: str) -> int:
    """1-based structural type id; 0 is reserved for 'no type'."""
    return NODE_TYPES.index(node_type) + 1


@dataclass(frozen=True)
class LinearizedDocument:
    """Token stream plus aligned structural tracks and node spans.

    node_spans maps node id to an inclusive [first, last] token range,
    in next order; the spans tile the stream back-to-back. Tokens before
    the first span (a task prefix) belong to no node and carry zero ids.
    """

    doc_id: str
    tokens: tuple[str, ...]
    type_ids: tuple[int, ...]
    depth_ids: tuple[int, ...]
    node_spans: dict[str, tuple[int, int]]

    def __post_init__(self) -> None:
        n = len(self.tokens)
        if len(self.type_ids) != n or len(self.depth_ids) != n:
            raise ValidationError(
                f"document {self.doc_id!r}: track lengths differ from token count"
            )
        if any(not 0 <= t <= len(NODE_TYPES) for t in self.type_ids):
            raise ValidationError(f"document {self.doc_id!r}: type id out of range")
        if any(not 0 <= d < DEPTH_BUCKETS for d in self.depth_ids):
            raise ValidationError(f"document {self.doc_id!r}: depth id out of range")
        spans = list(self.node_spans.values())
        if not spans:
            if n:
                raise ValidationError(f"document {self.doc_id!r}: tokens without spans")
            return
        expected_start = spans[0][0]
        if expected_start < 0:
            raise ValidationError(f"document {self.doc_id!r}: negative span start")
        for node_id, (first, last) in self.node_spans.items():
            if first != expected_start or last < first:
                raise ValidationError(
                    f"document {self.doc_id!r}: span of {node_id!r} breaks the tiling"
                )
            expected_start = last + 1
        if expected_start != n:
            raise ValidationError(
                f"document {self.doc_id!r}: spans end at {expected_start}, "
                f"stream has {n} tokens"
            )

    @property
    def prefix_length(self) -> int:
        """Tokens before the first node span."""
        for first, _ in self.node_spans.values():
            return first
        return len(self.tokens)


def linearize(
    graph: DocumentGraph,
    config: InfusionConfig,
    tokenizer: Tokenizer,
    vocabulary: StructuralVocabulary = DEFAULT_VOCABULARY,
) -> LinearizedDocument:
    """Emit nodes in next order; one special token per node when a token
    pathway is active; ID tracks populated per the embedding pathway
    (every token of a node, special token included, carries the node's
    value)."""
    tokens: list[str] = []
    type_ids: list[int] = []
    depth_ids: list[int] = []
    node_spans: dict[str, tuple[int, int]] = {}
    for node in graph.nodes:
        node_tokens = list(tokenizer(node.content))
        special: Optional[str] = None
        if config.token_pathway == "sep":
            special = vocabulary.separator
        elif config.token_pathway == "type":
            special = vocabulary.type_token(node.node_type)
        elif config.token_pathway == "depth":
            special = vocabulary.depth_token(graph.depth(node.id))
        first = len(tokens)
        if special is not None:
            tokens.append(special)
        tokens.extend(node_tokens)
        last = len(tokens) - 1
        if last < first:
            raise ValidationError(
                f"document {graph.doc_id!r}: node {node.id!r} linearizes to no tokens"
            )
        node_spans[node.id] = (first, last)
        count = last - first + 1
        tid = type_index(node.node_type) if config.embedding_pathway == "type" else 0
        did = (
            clamp_depth(graph.depth(node.id))
            if config.embedding_pathway == "depth"
            else 0
        )
        type_ids.extend([tid] * count)
        depth_ids.extend([did] * count)
    return LinearizedDocument(
        doc_id=graph.doc_id,
        tokens=tuple(tokens),
        type_ids=tuple(type_ids),
        depth_ids=tuple(depth_ids),
        node_spans=node_spans,
    )


def strip_infusion(
    lin: LinearizedDocument,
    vocabulary: StructuralVocabulary = DEFAULT_VOCABULARY,
) -> list[str]:
    """Drop each node's prepended special token, recovering the plain
    stream. Special symbols anywhere else mark a malformed input."""
    specials = frozenset(vocabulary.all_tokens())
    out: list[str] = list(lin.tokens[: lin.prefix_length])
    for node_id, (first, last) in lin.node_spans.items():
        span = lin.tokens[first : last + 1]
        if span and span[0] in specials:
            span = span[1:]
        if any(tok in specials for tok in span):
            raise IntegrityError(
                f"document {lin.doc_id!r}: special token inside node {node_id!r}"
            )
        out.extend(span)
    return out


def prepend_task_prefix(
    lin: LinearizedDocument,
    prefix_tokens: Sequence[str],
    use_bos: bool = True,
) -> LinearizedDocument:
    """Concatenate [bos?] + prefix + [eos] before the document tokens.

    Prefix tokens carry zero structural ids; node spans shift right.
    An empty prefix returns the input unchanged.
    """
    prefix_tokens = list(prefix_tokens)
    if not prefix_tokens:
        return lin
    head = ([BOS_TOKEN] if use_bos else []) + prefix_tokens + [EOS_TOKEN]
    offset = len(head)
    return LinearizedDocument(
        doc_id=lin.doc_id,
        tokens=tuple(head) + lin.tokens,
        type_ids=(0,) * offset + lin.type_ids,
        depth_ids=(0,) * offset + lin.depth_ids,
        node_spans={
            node_id: (first + offset, last + offset)
            for node_id, (first, last) in lin.node_spans.items()
        },
    )


def render_comparison_prompt(outcome: str, intervention: str, comparator: str) -> str:
    """Classification prompt text for a comparison triple."""
    return (
        f"With respect to {outcome}, characterize the reported difference "
        f"between patients receiving {intervention} and those receiving "
        f"{comparator}."
    )


# -- file formats ----------------------------------------------------------------


def linearization_to_json(lin: LinearizedDocument) -> dict:
    return {
        "doc": lin.doc_id,
        "tokens": list(lin.tokens),
        "type_ids": list(lin.type_ids),
        "depth_ids": list(lin.depth_ids),
        "node_spans": {k: list(v) for k, v in lin.node_spans.items()},
    }


def linearization_from_json(obj: Mapping) -> LinearizedDocument:
    try:
        return LinearizedDocument(
            doc_id=obj["doc"],
            tokens=tuple(obj["tokens"]),
            type_ids=tuple(int(t) for t in obj["type_ids"]),
            depth_ids=tuple(int(d) for d in obj["depth_ids"]),
            node_spans={
                k: (int(v[0]), int(v[1])) for k, v in obj["node_spans"].items()
            },
        )
    except (KeyError, TypeError, IndexError):
        raise ValidationError("malformed linearization record") from None


def write_linearizations(
    docs: Iterable[LinearizedDocument], path: str | Path
) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for lin in docs:
            fh.write(json.dumps(linearization_to_json(lin), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_linearizations(path: str | Path) -> list[LinearizedDocument]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            out.append(linearization_from_json(obj))
    return out


def write_vocabulary_manifest(
    path: str | Path, vocabulary: StructuralVocabulary = DEFAULT_VOCABULARY
) -> None:
    """Symbols in fixed order (separator, 4 types, 20 depths), plus the
    structured fields and the sentinel scheme consumers may reserve."""
    obj = {
        "schema": 1,
        "tokens": vocabulary.all_tokens(),
        "separator": vocabulary.separator,
        "types": dict(vocabulary.type_tokens),
        "depths": list(vocabulary.depth_tokens),
        "sentinel_format": "<M{i}>",
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def read_vocabulary_manifest(path: str | Path) -> StructuralVocabulary:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    vocab = StructuralVocabulary(
        separator=obj["separator"],
        type_tokens=obj["types"],
        depth_tokens=tuple(obj["depths"]),
    )
    if obj.get("tokens") != vocab.all_tokens():
        raise ValidationError(f"{path}: token order disagrees with fields")
    return vocab
