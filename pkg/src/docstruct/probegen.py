"""Generation of the seven structural probing datasets.

Each task derives labels purely from graph relations, balances label
counts within every document (downsampling to the rarest label present
there), and assigns whole documents to train/dev/test. Everything is a
deterministic function of (corpus, seed).
"""

from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import NotApplicableError, ValidationError
from .graph import (
    PARAGRAPH,
    POSITION_LABELS,
    SECTION_TITLE,
    DocumentGraph,
)
from .seeding import derive_rng

NODE_TYPE = "node-type"
SIBLING = "sibling"
ANCESTOR = "ancestor"
POSITION = "position"
PARENT_PREDECESSOR = "parent-predecessor"
TREE_DEPTH = "tree-depth"
STRUCTURAL = "structural"

TASKS = (NODE_TYPE, SIBLING, ANCESTOR, POSITION, PARENT_PREDECESSOR, TREE_DEPTH, STRUCTURAL)
BOOLEAN_TASKS = (SIBLING, ANCESTOR, PARENT_PREDECESSOR)
PAIR_TASKS = (SIBLING, ANCESTOR, PARENT_PREDECESSOR, STRUCTURAL)

NODE_TYPE_LABELS = ("Section", "Subsection", "Paragraph")
SPLITS = ("train", "dev", "test")
DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)

# Bounds the quadratic pair space on large documents.
MAX_PAIRS_PER_DOC = 64


@dataclass(frozen=True)
class ProbeInstance:
    """One labeled probing example over one or two nodes of a document."""

    task: str
    doc_id: str
    node_ids: tuple[str, ...]
    label: object
    split: Optional[str] = None  # assigned at corpus level

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValidationError(f"unknown probing task {self.task!r}")
        arity = 2 if self.task in PAIR_TASKS else 1
        if len(self.node_ids) != arity:
            raise ValidationError(
                f"{self.task} takes {arity} node(s), got {len(self.node_ids)}"
            )
        if not _label_ok(self.task, self.label):
            raise ValidationError(f"{self.task}: label {self.label!r} outside label set")
        if self.split is not None and self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r}")


def _label_ok(task: str, label) -> bool:
    if task in BOOLEAN_TASKS:
        return isinstance(label, bool)
    if task == NODE_TYPE:
        return label in NODE_TYPE_LABELS
    if task == POSITION:
        return label in POSITION_LABELS
    # tree-depth and structural: positive integers
    return isinstance(label, int) and not isinstance(label, bool) and label >= 1


@dataclass(frozen=True)
class ProbeDataset:
    """All instances of one task, with per-split label histograms."""

    task: str
    instances: tuple[ProbeInstance, ...]

    def __post_init__(self) -> None:
        for inst in self.instances:
            if inst.task != self.task:
                raise ValidationError(
                    f"instance task {inst.task!r} in {self.task!r} dataset"
                )

    def label_histogram(self, split: Optional[str] = None) -> dict:
        return dict(
            Counter(
                i.label
                for i in self.instances
                if split is None or i.split == split
            )
        )

    def check_balance(self) -> None:
        """Boolean tasks: equal true/false per split. Position: equal
        Begin/Inside/End per split."""
        expected = None
        if self.task in BOOLEAN_TASKS:
            expected = (True, False)
        elif self.task == POSITION:
            expected = POSITION_LABELS
        if expected is None:
            return
        for split in SPLITS:
            hist = self.label_histogram(split)
            if not hist:
                continue
            counts = {hist.get(label, 0) for label in expected}
            if len(counts) != 1:
                raise ValidationError(
                    f"{self.task}/{split}: unbalanced labels {hist}"
                )


# -- per-task generators -----------------------------------------------------


def gen_node_type(graph: DocumentGraph) -> list[ProbeInstance]:
    """Section at depth 1, Subsection below, Paragraph for paragraphs;
    title and abstract nodes yield nothing."""
    out = []
    for node in graph.nodes:
        if node.node_type == SECTION_TITLE:
            label = "Section" if graph.depth(node.id) == 1 else "Subsection"
        elif node.node_type == PARAGRAPH:
            label = "Paragraph"
        else:
            continue
        out.append(ProbeInstance(NODE_TYPE, graph.doc_id, (node.id,), label))
    return out


def gen_position(graph: DocumentGraph) -> list[ProbeInstance]:
    out = []
    for node in graph.nodes:
        if graph.parent(node.id) is None:
            continue
        try:
            label = graph.sibling_position(node.id)
        except NotApplicableError:
            continue
        out.append(ProbeInstance(POSITION, graph.doc_id, (node.id,), label))
    return out


def gen_tree_depth(graph: DocumentGraph) -> list[ProbeInstance]:
    return [
        ProbeInstance(TREE_DEPTH, graph.doc_id, (n.id,), graph.depth(n.id))
        for n in graph.nodes
        if n.id != graph.root_id
    ]


def _positive_pairs(graph: DocumentGraph, task: str) -> list[tuple[str, str]]:
    ids = [n.id for n in graph.nodes]
    if task == SIBLING:
        pairs = []
        for node in graph.nodes:
            kids = graph.children(node.id)
            pairs.extend(
                (kids[i], kids[j])
                for i in range(len(kids))
                for j in range(i + 1, len(kids))
            )
        return pairs
    if task == ANCESTOR:
        pairs = []
        for nid in ids:
            current = graph.parent(nid)
            while current is not None:
                pairs.append((current, nid))
                current = graph.parent(current)
        return pairs
    if task == PARENT_PREDECESSOR:
        return [
            (graph.parent(nid), nid) for nid in ids if graph.parent(nid) is not None
        ]
    raise ValidationError(f"not a boolean pair task: {task!r}")


def _in_relation(graph: DocumentGraph, task: str, a: str, b: str) -> bool:
    if task == SIBLING:
        return graph.are_siblings(a, b)
    if task == ANCESTOR:
        return graph.is_ancestor(a, b)
    return graph.is_parent(a, b)


def _sample_negatives(
    graph: DocumentGraph, task: str, count: int, rng: random.Random
) -> list[tuple[str, str]]:
    """Uniform without replacement over same-document pairs outside the
    relation. Small documents are enumerated; large ones use rejection
    sampling (identical distribution, bounded memory)."""
    ids = [n.id for n in graph.nodes]
    if task == SIBLING:
        # the sibling predicate is undefined for the root, so the root
        # never appears in sibling instances
        ids = [i for i in ids if graph.parent(i) is not None]
    n = len(ids)
    if n < 2 or count == 0:
        return []
    symmetric = task == SIBLING
    if n <= 200:
        if symmetric:
            space = [
                (ids[i], ids[j])
                for i in range(n)
                for j in range(i + 1, n)
                if not _in_relation(graph, task, ids[i], ids[j])
            ]
        else:
            space = [
                (a, b)
                for a in ids
                for b in ids
                if a != b and not _in_relation(graph, task, a, b)
            ]
        if len(space) <= count:
            return space
        return rng.sample(space, count)
    chosen: list[tuple[str, str]] = []
    seen = set()
    attempts = 0
    max_attempts = count * 200
    while len(chosen) < count and attempts < max_attempts:
        attempts += 1
        a, b = rng.choice(ids), rng.choice(ids)
        if a == b:
            continue
        if symmetric and a > b:
            a, b = b, a
        if (a, b) in seen or _in_relation(graph, task, a, b):
            continue
        seen.add((a, b))
        chosen.append((a, b))
    return chosen


def gen_pair_task(
    graph: DocumentGraph, task: str, rng: random.Random
) -> list[ProbeInstance]:
    """Boolean pair task: all positives (capped) plus an equal number of
    sampled negatives."""
    if task not in BOOLEAN_TASKS:
        raise ValidationError(f"not a boolean pair task: {task!r}")
    positives = _positive_pairs(graph, task)
    if not positives:
        return []
    if len(positives) > MAX_PAIRS_PER_DOC:
        positives = sorted(rng.sample(positives, MAX_PAIRS_PER_DOC))
    negatives = _sample_negatives(graph, task, len(positives), rng)
    if len(negatives) < len(positives):
        positives = sorted(rng.sample(positives, len(negatives)))
    out = [
        ProbeInstance(task, graph.doc_id, pair, True) for pair in positives
    ]
    out.extend(ProbeInstance(task, graph.doc_id, pair, False) for pair in negatives)
    return out


def gen_structural(graph: DocumentGraph, rng: random.Random) -> list[ProbeInstance]:
    """Sampled unordered node pairs labeled with their tree distance."""
    ids = [n.id for n in graph.nodes]
    n = len(ids)
    if n < 2:
        return []
    total = n * (n - 1) // 2
    if total <= MAX_PAIRS_PER_DOC:
        pairs = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
    else:
        pairs = []
        seen = set()
        while len(pairs) < MAX_PAIRS_PER_DOC:
            i, j = rng.randrange(n), rng.randrange(n)
            if i == j:
                continue
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                continue
            seen.add((i, j))
            pairs.append((ids[i], ids[j]))
    return [
        ProbeInstance(STRUCTURAL, graph.doc_id, pair, graph.tree_distance(*pair))
        for pair in pairs
    ]


def generate_task(graph: DocumentGraph, task: str, seed: int) -> list[ProbeInstance]:
    """All unbalanced instances of one task for one document."""
    rng = derive_rng(seed, graph.doc_id, task)
    if task == NODE_TYPE:
        return gen_node_type(graph)
    if task == POSITION:
        return gen_position(graph)
    if task == TREE_DEPTH:
        return gen_tree_depth(graph)
    if task == STRUCTURAL:
        return gen_structural(graph, rng)
    return gen_pair_task(graph, task, rng)


# -- balancing and splits -------------------------------------------------------


def balance(instances: Sequence[ProbeInstance], seed: int) -> list[ProbeInstance]:
    """Within each (document, task) group, downsample every label to the
    count of that group's rarest present label. Output preserves input
    order."""
    by_group: dict[tuple[str, str], dict[object, list[int]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for idx, inst in enumerate(instances):
        by_group[(inst.doc_id, inst.task)][inst.label].append(idx)
    keep: set[int] = set()
    for (doc_id, task), by_label in by_group.items():
        rng = derive_rng(seed, doc_id, task, "balance")
        floor = min(len(v) for v in by_label.values())
        for label in by_label:  # insertion order: deterministic
            indices = by_label[label]
            if len(indices) > floor:
                indices = rng.sample(indices, floor)
            keep.update(indices)
    return [inst for idx, inst in enumerate(instances) if idx in keep]


def split_corpus(
    corpus: Sequence[DocumentGraph | str],
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> dict[str, str]:
    """Assign whole documents to train/dev/test by shuffled slicing with
    largest-remainder counts (each split within one document of its
    fraction)."""
    doc_ids = [g if isinstance(g, str) else g.doc_id for g in corpus]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValidationError("duplicate document ids in corpus")
    if len(doc_ids) < 3:
        raise ValidationError(f"need at least 3 documents to split, got {len(doc_ids)}")
    if len(fractions) != len(SPLITS):
        raise ValidationError(f"expected {len(SPLITS)} fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(doc_ids)
    base = [int(f * n) for f in fractions]
    remainders = [f * n - b for f, b in zip(fractions, base)]
    for _ in range(n - sum(base)):
        i = max(range(len(SPLITS)), key=lambda k: (remainders[k], -k))
        base[i] += 1
        remainders[i] = -1.0
    ordered = sorted(doc_ids)
    derive_rng(seed, "split").shuffle(ordered)
    assignment = {}
    cursor = 0
    for split_name, count in zip(SPLITS, base):
        for doc_id in ordered[cursor : cursor + count]:
            assignment[doc_id] = split_name
        cursor += count
    return assignment


def generate_datasets(
    corpus: Sequence[DocumentGraph],
    seed: int,
    tasks: Sequence[str] = TASKS,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> dict[str, ProbeDataset]:
    """Full pipeline: generate, balance, and split every requested task.

    Documents are processed in doc-id order so the output is independent
    of corpus file order and of any parallel scheduling upstream.
    """
    for task in tasks:
        if task not in TASKS:
            raise ValidationError(f"unknown probing task {task!r}")
    graphs = sorted(corpus, key=lambda g: g.doc_id)
    assignment = split_corpus(graphs, fractions, seed)
    datasets = {}
    for task in tasks:
        instances: list[ProbeInstance] = []
        for graph in graphs:
            instances.extend(generate_task(graph, task, seed))
        balanced = balance(instances, seed)
        final = tuple(
            replace(inst, split=assignment[inst.doc_id]) for inst in balanced
        )
        datasets[task] = ProbeDataset(task=task, instances=final)
    return datasets


# -- file formats -----------------------------------------------------------------


def write_instances(dataset: ProbeDataset, path: str | Path) -> None:
    """One instance per line: {"task", "doc", "nodes", "label", "split"}."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            if inst.split is None:
                raise ValidationError("cannot write an instance without a split")
            fh.write(
                json.dumps(
                    {
                        "task": inst.task,
                        "doc": inst.doc_id,
                        "nodes": list(inst.node_ids),
                        "label": inst.label,
                        "split": inst.split,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_instances(path: str | Path) -> ProbeDataset:
    instances = []
    task = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            label = obj["label"]
            if obj["task"] in (TREE_DEPTH, STRUCTURAL):
                label = int(label)
            instances.append(
                ProbeInstance(
                    task=obj["task"],
                    doc_id=obj["doc"],
                    node_ids=tuple(obj["nodes"]),
                    label=label,
                    split=obj["split"],
                )
            )
            if task is None:
                task = obj["task"]
    if task is None:
        raise ValidationError(f"{path}: no instances")
    return ProbeDataset(task=task, instances=tuple(instances))


def write_histogram(dataset: ProbeDataset, path: str | Path) -> None:
    """Per-split label counts as one JSON object."""
    obj = {
        "task": dataset.task,
        "splits": {
            split: {str(k): v for k, v in sorted(
                dataset.label_histogram(split).items(), key=lambda kv: str(kv[0])
            )}
            for split in SPLITS
        },
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", "utf-8")
