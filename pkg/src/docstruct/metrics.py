"""Downstream evaluation metrics for QA and comparison-prompt tasks.

Answer strings score token-overlap F1 after the usual normalization
(lowercase, punctuation stripped, articles removed, whitespace
collapsed), evidence scores set-F1 over node ids, and prompt labels
score unweighted macro F1 over the fixed three-way label set. Where an
item carries several references, the best-scoring one counts.
"""

from __future__ import annotations

import json
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError
from .ingest import PROMPT_LABELS

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class AnswerEval:
    predicted: str
    references: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "references", tuple(self.references))
        if not self.references:
            raise ValidationError("an answer needs at least one reference")


@dataclass(frozen=True)
class EvidenceEval:
    predicted_nodes: frozenset[str]
    reference_sets: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "predicted_nodes", frozenset(self.predicted_nodes))
        object.__setattr__(
            self,
            "reference_sets",
            tuple(frozenset(s) for s in self.reference_sets),
        )
        if not self.reference_sets:
            raise ValidationError("evidence needs at least one reference set")


def normalize_answer(text: str) -> str:
    text = text.lower().translate(_PUNCT_TABLE)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def _token_f1(predicted: str, reference: str) -> float:
    pred_tokens = normalize_answer(predicted).split()
    ref_tokens = normalize_answer(reference).split()
    if not pred_tokens or not ref_tokens:
        # nothing to overlap: exact match or zero
        return float(pred_tokens == ref_tokens)
    common = sum((Counter(pred_tokens) & Counter(ref_tokens)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred_tokens)
    recall = common / len(ref_tokens)
    return 2 * precision * recall / (precision + recall)


def answer_f1(e: AnswerEval) -> float:
    """Best token-overlap F1 of the prediction against any reference."""
    return max(_token_f1(e.predicted, ref) for ref in e.references)


def _set_f1(predicted: frozenset, reference: frozenset) -> float:
    if not predicted and not reference:
        return 1.0
    common = len(predicted & reference)
    if common == 0:
        return 0.0
    precision = common / len(predicted)
    recall = common / len(reference)
    return 2 * precision * recall / (precision + recall)


def evidence_f1(e: EvidenceEval) -> float:
    """Best set-F1 of predicted node ids against any reference set."""
    return max(_set_f1(e.predicted_nodes, ref) for ref in e.reference_sets)


def macro_f1(gold: Sequence, predictions: Sequence[str]) -> float:
    """Unweighted mean of per-class F1 over the fixed three-way labels.

    Each gold entry is a label or a list of annotator labels; with
    several, the one matching the prediction is chosen when possible,
    else the first. A class never seen in gold or predictions scores 0
    and still counts toward the mean.
    """
    if len(gold) != len(predictions):
        raise ValidationError(
            f"{len(gold)} gold entries vs {len(predictions)} predictions"
        )
    pairs = []
    for entry, predicted in zip(gold, predictions):
        annotations = (entry,) if isinstance(entry, str) else tuple(entry)
        if not annotations:
            raise ValidationError("empty annotation list")
        for label in (*annotations, predicted):
            if label not in PROMPT_LABELS:
                raise ValidationError(f"unknown label {label!r}")
        chosen = predicted if predicted in annotations else annotations[0]
        pairs.append((chosen, predicted))

    total = 0.0
    for cls in PROMPT_LABELS:
        true_pos = sum(1 for g, p in pairs if g == cls and p == cls)
        false_pos = sum(1 for g, p in pairs if g != cls and p == cls)
        false_neg = sum(1 for g, p in pairs if g == cls and p != cls)
        denom = 2 * true_pos + false_pos + false_neg
        total += 2 * true_pos / denom if denom else 0.0
    return total / len(PROMPT_LABELS)


# -- prediction files and reports --------------------------------------------------


@dataclass(frozen=True)
class PredictionRecord:
    doc_id: str
    item_id: str
    answer: str | None = None
    label: str | None = None
    evidence: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "evidence", tuple(self.evidence))
        if (self.answer is None) == (self.label is None):
            raise ValidationError(
                f"{self.doc_id}/{self.item_id}: exactly one of answer or "
                "label must be present"
            )


def write_predictions(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            row = {"doc": rec.doc_id, "item": rec.item_id}
            if rec.answer is not None:
                row["answer"] = rec.answer
            else:
                row["label"] = rec.label
            row["evidence"] = list(rec.evidence)
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                records.append(
                    PredictionRecord(
                        doc_id=row["doc"],
                        item_id=row["item"],
                        answer=row.get("answer"),
                        label=row.get("label"),
                        evidence=tuple(row.get("evidence", ())),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad prediction ({exc})")
    return records


def _pair_records(records, gold_keys):
    by_key = {}
    for rec in records:
        key = (rec.doc_id, rec.item_id)
        if key in by_key:
            raise ValidationError(f"duplicate prediction for {key}")
        by_key[key] = rec
    missing = [k for k in gold_keys if k not in by_key]
    extra = [k for k in by_key if k not in set(gold_keys)]
    if missing or extra:
        raise ValidationError(
            f"predictions do not match gold items (missing {missing[:3]}, "
            f"extra {extra[:3]})"
        )
    return by_key


def score_qa(
    records: Sequence[PredictionRecord],
    gold: Mapping[tuple[str, str], tuple[Sequence[str], Sequence[Iterable[str]]]],
) -> dict:
    """Mean answer and evidence F1 over QA items.

    gold maps (doc id, item id) to (reference answers, evidence sets).
    """
    if not gold:
        raise ValidationError("no gold QA items")
    by_key = _pair_records(records, list(gold))
    answer_total = 0.0
    evidence_total = 0.0
    for key, (references, evidence_sets) in gold.items():
        rec = by_key[key]
        if rec.answer is None:
            raise ValidationError(f"{key}: QA prediction lacks an answer")
        answer_total += answer_f1(AnswerEval(rec.answer, tuple(references)))
        evidence_total += evidence_f1(
            EvidenceEval(frozenset(rec.evidence), tuple(evidence_sets))
        )
    n = len(gold)
    return {
        "task": "qa",
        "count": n,
        "answer_f1": answer_total / n,
        "evidence_f1": evidence_total / n,
    }


def score_prompts(
    records: Sequence[PredictionRecord],
    gold: Mapping[tuple[str, str], tuple[Sequence[str], Sequence[Iterable[str]]]],
) -> dict:
    """Macro label F1 plus mean evidence F1 over comparison prompts.

    gold maps (doc id, prompt id) to (annotator labels, evidence sets).
    """
    if not gold:
        raise ValidationError("no gold prompt items")
    by_key = _pair_records(records, list(gold))
    labels_gold = []
    labels_pred = []
    evidence_total = 0.0
    for key, (annotations, evidence_sets) in gold.items():
        rec = by_key[key]
        if rec.label is None:
            raise ValidationError(f"{key}: prompt prediction lacks a label")
        labels_gold.append(tuple(annotations))
        labels_pred.append(rec.label)
        evidence_total += evidence_f1(
            EvidenceEval(frozenset(rec.evidence), tuple(evidence_sets))
        )
    n = len(gold)
    return {
        "task": "prompts",
        "count": n,
        "macro_f1": macro_f1(labels_gold, labels_pred),
        "evidence_f1": evidence_total / n,
    }


def format_report(report: Mapping) -> str:
    """Fixed-field table, one metric per row."""
    lines = [f"{'metric':<16}{'value':>10}"]
    lines.append("-" * 26)
    lines.append(f"{'items':<16}{report['count']:>10d}")
    for key in sorted(report):
        if key in ("task", "count"):
            continue
        lines.append(f"{key:<16}{report[key]:>10.4f}")
    return "\n".join(lines) + "\n"


def write_report(report: Mapping, table_path: str | Path, summary_path: str | Path) -> None:
    Path(table_path).write_text(format_report(report), encoding="utf-8")
    Path(summary_path).write_text(
        json.dumps(dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
