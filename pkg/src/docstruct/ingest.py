"""Ingestion of external document records.

Converts structured records (one JSON object per line) into
DocumentGraph instances plus QA/prompt annotations whose evidence spans
are resolved to node ids by exact-then-fuzzy substring matching.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence

from .errors import ConfigError, UnknownNodeError, ValidationError
from .fuzzy import substring_distance
from .graph import (
    ABSTRACT,
    PARAGRAPH,
    SECTION_TITLE,
    DocumentGraph,
    GraphBuilder,
    Node,
)
from .tokenize import Tokenizer

# Closed label set for comparison prompts.
PROMPT_LABELS = (
    "significantly increased",
    "significantly decreased",
    "no significant difference",
)

DEFAULT_MAX_EDIT_RATIO = 0.1
DEFAULT_MAX_TOKENS = 16384

# Evidence entries for figure/table content carry this marker; the
# corresponding floats are not part of the text graph.
_FLOAT_MARKER = "FLOAT SELECTED"

# QASPER flattens section nesting into the heading string.
_SECTION_PATH_SEP = " ::: "


@dataclass(frozen=True)
class QaAnnotation:
    """One question with per-annotator reference answers and evidence nodes."""

    question: str
    reference_answers: tuple[str, ...]
    evidence_node_ids: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.reference_answers:
            raise ValidationError(
                f"question {self.question!r}: no reference answers"
            )


@dataclass(frozen=True)
class PromptAnnotation:
    """One intervention/comparator/outcome prompt with per-annotator labels."""

    intervention: str
    comparator: str
    outcome: str
    labels: tuple[str, ...]
    evidence_node_ids: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        for label in self.labels:
            if label not in PROMPT_LABELS:
                raise ValidationError(
                    f"unknown prompt label {label!r}; expected one of {PROMPT_LABELS}"
                )


@dataclass(frozen=True)
class EvidenceMatchStats:
    """Per-span outcome counts; always sum to the number of input spans."""

    exact_one: int = 0
    none: int = 0
    multiple: int = 0

    @property
    def total(self) -> int:
        return self.exact_one + self.none + self.multiple

    def __add__(self, other: "EvidenceMatchStats") -> "EvidenceMatchStats":
        return EvidenceMatchStats(
            self.exact_one + other.exact_one,
            self.none + other.none,
            self.multiple + other.multiple,
        )

    def summary_line(self) -> str:
        return (
            f"spans={self.total} exact_one={self.exact_one} "
            f"none={self.none} multiple={self.multiple}"
        )


# -- generic structured records ---------------------------------------------
#
# Record schema (one JSON object per line):
#   {"id": str, "title": str, "abstract": [str, ...]?,
#    "sections": [{"title": str, "paragraphs": [str, ...]?,
#                  "sections": [...]?}, ...]?}
# Abstract paragraphs become direct children of the root until
# insert_abstract_parent groups them.


def parse_generic_doc(record: Mapping) -> DocumentGraph:
    """Build a document graph from the nested record form."""
    if not isinstance(record, Mapping):
        raise ValidationError("record must be a JSON object")
    doc_id = record.get("id")
    if not doc_id or not str(doc_id).strip():
        raise ValidationError("record missing 'id'")
    doc_id = str(doc_id)
    title = str(record.get("title") or "")
    if not title.strip():
        raise ValidationError(f"record {doc_id!r}: empty title")
    builder = GraphBuilder(doc_id, title)
    for i, para in enumerate(record.get("abstract") or ()):
        if not isinstance(para, str):
            raise ValidationError(f"record {doc_id!r}: abstract[{i}] is not text")
        if para.strip():
            builder.add(builder.root, PARAGRAPH, para)
    sections = record.get("sections") or ()
    if not isinstance(sections, (list, tuple)):
        raise ValidationError(f"record {doc_id!r}: 'sections' must be an array")
    for i, section in enumerate(sections):
        _add_section(builder, builder.root, section, f"sections[{i}]", doc_id)
    return builder.build()


def _add_section(
    builder: GraphBuilder, parent: int, section, where: str, doc_id: str
) -> None:
    if not isinstance(section, Mapping):
        raise ValidationError(f"record {doc_id!r}: {where}: not an object")
    name = str(section.get("title") or "")
    if not name.strip():
        raise ValidationError(f"record {doc_id!r}: {where}: empty section title")
    handle = builder.add(parent, SECTION_TITLE, name)
    for j, para in enumerate(section.get("paragraphs") or ()):
        if not isinstance(para, str):
            raise ValidationError(
                f"record {doc_id!r}: {where}.paragraphs[{j}] is not text"
            )
        if para.strip():
            builder.add(handle, PARAGRAPH, para)
    subsections = section.get("sections") or ()
    if not isinstance(subsections, (list, tuple)):
        raise ValidationError(f"record {doc_id!r}: {where}.sections must be an array")
    for j, sub in enumerate(subsections):
        _add_section(builder, handle, sub, f"{where}.sections[{j}]", doc_id)


def insert_abstract_parent(graph: DocumentGraph) -> DocumentGraph:
    """Group the root's leading paragraph children under a new abstract node.

    The new node has content "Abstract" and id "<doc-id>-abs"; existing
    node ids are untouched. No-op (same object) when an abstract node
    already exists under the root or there are no leading paragraphs.
    """
    root = graph.root_id
    kids = graph.children(root)
    if any(graph.node(k).node_type == ABSTRACT for k in kids):
        return graph
    leading: list[str] = []
    for kid in kids:
        if graph.node(kid).node_type != PARAGRAPH:
            break
        leading.append(kid)
    if not leading:
        return graph
    abs_id = f"{graph.doc_id}-abs"
    if any(n.id == abs_id for n in graph.nodes):
        raise ValidationError(f"node id {abs_id!r} already taken")
    abs_node = Node(abs_id, ABSTRACT, "Abstract")
    insert_at = graph.position(leading[0])  # directly before the first paragraph
    nodes = list(graph.nodes)
    nodes.insert(insert_at, abs_node)
    parent_edges = {
        n.id: p for n in graph.nodes if (p := graph.parent(n.id)) is not None
    }
    parent_edges[abs_id] = root
    for kid in leading:
        parent_edges[kid] = abs_id
    return DocumentGraph(graph.doc_id, nodes, parent_edges)


# -- evidence-span resolution --------------------------------------------------


def map_evidence_to_nodes(
    spans: Sequence[str],
    graph: DocumentGraph,
    max_edit_ratio: float = DEFAULT_MAX_EDIT_RATIO,
) -> tuple[list[Optional[str]], EvidenceMatchStats]:
    """Resolve each evidence span to at most one node id.

    Exact substring occurrences take precedence; otherwise the span is
    matched fuzzily with edit distance up to ceil(max_edit_ratio × span
    length). In either tier, two or more nodes at the minimal distance
    make the span ambiguous and it is discarded.
    """
    if not 0 <= max_edit_ratio <= 0.5:
        raise ConfigError(
            f"max_edit_ratio must lie in [0, 0.5], got {max_edit_ratio}"
        )
    results: list[Optional[str]] = []
    exact_one = none = multiple = 0
    for span in spans:
        matched = _match_span(span, graph, max_edit_ratio)
        if matched == "multiple":
            multiple += 1
            results.append(None)
        elif matched is None:
            none += 1
            results.append(None)
        else:
            exact_one += 1
            results.append(matched)
    return results, EvidenceMatchStats(exact_one, none, multiple)


def _match_span(span: str, graph: DocumentGraph, ratio: float):
    if not span:
        return None
    exact = [node.id for node in graph.nodes if span in node.content]
    if len(exact) == 1:
        return exact[0]
    if len(exact) > 1:
        return "multiple"
    limit = math.ceil(ratio * len(span))
    if limit == 0:
        return None
    best = limit
    best_nodes: list[str] = []
    for node in graph.nodes:
        dist = substring_distance(span, node.content, best)
        if dist < best:
            best = dist
            best_nodes = [node.id]
        elif dist == best:
            best_nodes.append(node.id)
    if not best_nodes:
        return None
    if len(best_nodes) > 1:
        return "multiple"
    return best_nodes[0]


# -- QASPER-style records -------------------------------------------------------


def qasper_answer_text(answer: Mapping) -> str:
    """Canonical reference-answer string for one answer annotation."""
    if answer.get("unanswerable"):
        return "Unanswerable"
    yes_no = answer.get("yes_no")
    if yes_no is not None:
        return "Yes" if yes_no else "No"
    spans = answer.get("extractive_spans") or ()
    if spans:
        return ", ".join(str(s) for s in spans)
    return str(answer.get("free_form_answer") or "")


def parse_qasper(
    record: Mapping, max_edit_ratio: float = DEFAULT_MAX_EDIT_RATIO
) -> tuple[DocumentGraph, list[QaAnnotation], EvidenceMatchStats]:
    """Parse one QA record: graph (title, abstract, ::: section paths,
    paragraphs; figures and tables dropped) plus resolved annotations."""
    for field in ("id", "title", "abstract", "full_text", "qas"):
        if field not in record:
            raise ValidationError(f"QA record missing {field!r}")
    doc_id = str(record["id"])
    title = str(record["title"])
    if not title.strip():
        raise ValidationError(f"record {doc_id!r}: empty title")
    builder = GraphBuilder(doc_id, title)
    abstract = record["abstract"]
    paragraphs = abstract if isinstance(abstract, (list, tuple)) else [abstract]
    for para in paragraphs:
        if str(para).strip():
            builder.add(builder.root, PARAGRAPH, str(para))
    section_handles: dict[tuple[str, ...], int] = {}
    for i, section in enumerate(record["full_text"]):
        if not isinstance(section, Mapping):
            raise ValidationError(f"record {doc_id!r}: full_text[{i}] not an object")
        name = section.get("section_name")
        parent = builder.root
        if name and str(name).strip():
            path: tuple[str, ...] = ()
            for part in str(name).split(_SECTION_PATH_SEP):
                part = part.strip()
                if not part:
                    continue
                path = path + (part,)
                if path not in section_handles:
                    section_handles[path] = builder.add(parent, SECTION_TITLE, part)
                parent = section_handles[path]
        for para in section.get("paragraphs") or ():
            if str(para).strip():
                builder.add(parent, PARAGRAPH, str(para))
    graph = insert_abstract_parent(builder.build())

    annotations: list[QaAnnotation] = []
    stats = EvidenceMatchStats()
    for qa in record["qas"]:
        question = str(qa.get("question") or "")
        refs: list[str] = []
        span_lists: list[list[str]] = []
        for raw in qa.get("answers") or ():
            answer = raw.get("answer", raw)  # records wrap each annotation
            refs.append(qasper_answer_text(answer))
            span_lists.append(
                [
                    str(s)
                    for s in answer.get("evidence") or ()
                    if not str(s).startswith(_FLOAT_MARKER)
                ]
            )
        if not refs:
            continue  # cannot satisfy the non-empty-references invariant
        evidence_ids = []
        for spans in span_lists:
            resolved, span_stats = map_evidence_to_nodes(spans, graph, max_edit_ratio)
            stats = stats + span_stats
            unique = list(dict.fromkeys(r for r in resolved if r is not None))
            evidence_ids.append(tuple(unique))
        annotations.append(
            QaAnnotation(
                question=question,
                reference_answers=tuple(refs),
                evidence_node_ids=tuple(evidence_ids),
            )
        )
    return graph, annotations, stats


def parse_comparison_prompts(
    record: Mapping, max_edit_ratio: float = DEFAULT_MAX_EDIT_RATIO
) -> tuple[DocumentGraph, list[PromptAnnotation], EvidenceMatchStats]:
    """Parse a pre-flattened comparison-prompt record.

    Document fields follow the generic schema; "prompts" adds
    intervention/comparator/outcome triples with per-annotator
    {"label", "evidence"} entries.
    """
    graph = insert_abstract_parent(parse_generic_doc(record))
    annotations: list[PromptAnnotation] = []
    stats = EvidenceMatchStats()
    for i, prompt in enumerate(record.get("prompts") or ()):
        if not isinstance(prompt, Mapping):
            raise ValidationError(f"record {graph.doc_id!r}: prompts[{i}] not an object")
        labels: list[str] = []
        evidence_ids: list[tuple[str, ...]] = []
        for annotation in prompt.get("annotations") or ():
            labels.append(str(annotation.get("label") or ""))
            spans = [str(s) for s in annotation.get("evidence") or ()]
            resolved, span_stats = map_evidence_to_nodes(spans, graph, max_edit_ratio)
            stats = stats + span_stats
            evidence_ids.append(
                tuple(dict.fromkeys(r for r in resolved if r is not None))
            )
        annotations.append(
            PromptAnnotation(
                intervention=str(prompt.get("intervention") or ""),
                comparator=str(prompt.get("comparator") or ""),
                outcome=str(prompt.get("outcome") or ""),
                labels=tuple(labels),
                evidence_node_ids=tuple(evidence_ids),
            )
        )
    return graph, annotations, stats


# -- corpus filtering -------------------------------------------------------------


def vanilla_token_count(graph: DocumentGraph, tokenizer: Tokenizer) -> int:
    """Length of the plain linearization: node token counts, no specials."""
    return sum(len(tokenizer(node.content)) for node in graph.nodes)


def filter_by_length(
    corpus: Sequence[DocumentGraph],
    tokenizer: Tokenizer,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> list[DocumentGraph]:
    """Drop documents whose plain linearization exceeds max_tokens."""
    if max_tokens <= 0:
        raise ConfigError(f"max_tokens must be positive, got {max_tokens}")
    return [g for g in corpus if vanilla_token_count(g, tokenizer) <= max_tokens]


# -- annotation resolution check and sidecar io -----------------------------------


def check_annotations(
    graph: DocumentGraph, annotations: Sequence[QaAnnotation | PromptAnnotation]
) -> None:
    """Verify every referenced evidence node id resolves in the graph."""
    for annotation in annotations:
        for per_annotator in annotation.evidence_node_ids:
            for node_id in per_annotator:
                if node_id not in {n.id for n in graph.nodes}:
                    raise UnknownNodeError(
                        f"annotation references unknown node {node_id!r} "
                        f"in document {graph.doc_id!r}"
                    )


def _annotation_to_json(annotation) -> dict:
    if isinstance(annotation, QaAnnotation):
        return {
            "kind": "qa",
            "question": annotation.question,
            "reference_answers": list(annotation.reference_answers),
            "evidence_node_ids": [list(e) for e in annotation.evidence_node_ids],
        }
    return {
        "kind": "prompt",
        "intervention": annotation.intervention,
        "comparator": annotation.comparator,
        "outcome": annotation.outcome,
        "labels": list(annotation.labels),
        "evidence_node_ids": [list(e) for e in annotation.evidence_node_ids],
    }


def _annotation_from_json(obj: Mapping):
    kind = obj.get("kind")
    if kind == "qa":
        return QaAnnotation(
            question=obj["question"],
            reference_answers=tuple(obj["reference_answers"]),
            evidence_node_ids=tuple(tuple(e) for e in obj["evidence_node_ids"]),
        )
    if kind == "prompt":
        return PromptAnnotation(
            intervention=obj["intervention"],
            comparator=obj["comparator"],
            outcome=obj["outcome"],
            labels=tuple(obj["labels"]),
            evidence_node_ids=tuple(tuple(e) for e in obj["evidence_node_ids"]),
        )
    raise ValidationError(f"unknown annotation kind {kind!r}")


def write_sidecar(
    annotations_by_doc: Mapping[str, Sequence[QaAnnotation | PromptAnnotation]],
    path: str | Path,
) -> None:
    """One line per document: {"doc": id, "annotations": [...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, annotations in annotations_by_doc.items():
            obj = {
                "doc": doc_id,
                "annotations": [_annotation_to_json(a) for a in annotations],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_sidecar(path: str | Path) -> dict[str, list]:
    result: dict[str, list] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            result[obj["doc"]] = [
                _annotation_from_json(a) for a in obj.get("annotations", ())
            ]
    return result


def read_records(path: str | Path) -> Iterator[dict]:
    """Yield one JSON record per non-blank line."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
