"""Typed ordered document graph and the structural relations probed over it.

A document is a rooted tree of typed nodes (article-title root, section
titles, abstract, paragraphs) whose stored node order doubles as the
linear ``next`` order. Graphs are immutable after construction and safe
for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import NotApplicableError, UnknownNodeError, ValidationError

ARTICLE_TITLE = "article-title"
ABSTRACT = "abstract"
SECTION_TITLE = "section-title"
PARAGRAPH = "paragraph"

# Fixed order; infusion derives type indices (1-based) from it.
NODE_TYPES = (ARTICLE_TITLE, ABSTRACT, SECTION_TITLE, PARAGRAPH)

POSITION_BEGIN = "Begin"
POSITION_INSIDE = "Inside"
POSITION_END = "End"
POSITION_LABELS = (POSITION_BEGIN, POSITION_INSIDE, POSITION_END)

ITG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Node:
    """One document element: an id, a functional type, and its text."""

    id: str
    node_type: str
    content: str

    def __post_init__(self) -> None:
        if self.node_type not in NODE_TYPES:
            raise ValidationError(
                f"node {self.id!r}: unknown type {self.node_type!r}; "
                f"expected one of {', '.join(NODE_TYPES)}"
            )
        if self.node_type in (PARAGRAPH, SECTION_TITLE) and not self.content.strip():
            raise ValidationError(
                f"node {self.id!r}: empty content not allowed for {self.node_type}"
            )


@dataclass(frozen=True)
class SiblingSet:
    """Ordered children of one parent, in next order."""

    parent_id: str
    children: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.children)


class DocumentGraph:
    """Immutable rooted tree with the stored node order as next order.

    Invariants enforced at construction:
      * exactly one node (the root, type article-title) has no parent;
      * every other node has exactly one parent and no cycles exist;
      * every parent precedes all of its descendants in the node order.
    """

    __slots__ = ("doc_id", "_nodes", "_parent", "_index", "_children", "_depth")

    def __init__(
        self,
        doc_id: str,
        nodes: Sequence[Node],
        parent_edges: Mapping[str, str],
    ) -> None:
        if not nodes:
            raise ValidationError(f"document {doc_id!r}: no nodes")
        self.doc_id = doc_id
        self._nodes: tuple[Node, ...] = tuple(nodes)
        self._index: dict[str, int] = {}
        for pos, node in enumerate(self._nodes):
            if node.id in self._index:
                raise ValidationError(f"duplicate node id {node.id!r}")
            self._index[node.id] = pos
        self._parent = dict(parent_edges)
        self._validate_tree()
        self._children: dict[str, tuple[str, ...]] = self._build_children()
        self._depth: dict[str, int] = self._build_depths()

    # -- construction helpers -------------------------------------------------

    def _validate_tree(self) -> None:
        roots = [n.id for n in self._nodes if n.id not in self._parent]
        if len(roots) != 1:
            raise ValidationError(
                f"document {self.doc_id!r}: expected exactly one root, found {len(roots)}"
            )
        root = self._nodes[0]
        if roots[0] != root.id:
            raise ValidationError(
                f"document {self.doc_id!r}: root {roots[0]!r} is not the first node"
            )
        if root.node_type != ARTICLE_TITLE:
            raise ValidationError(
                f"document {self.doc_id!r}: root must be {ARTICLE_TITLE}, got {root.node_type!r}"
            )
        for child, parent in self._parent.items():
            if child not in self._index:
                raise ValidationError(f"parent edge from unknown node {child!r}")
            if parent not in self._index:
                raise ValidationError(f"node {child!r} has unknown parent {parent!r}")
            # Pre-order consistency implies acyclicity: child strictly after parent.
            if self._index[parent] >= self._index[child]:
                raise ValidationError(
                    f"node {child!r} precedes its parent {parent!r} in next order"
                )

    def _build_children(self) -> dict[str, tuple[str, ...]]:
        children: dict[str, list[str]] = {n.id: [] for n in self._nodes}
        for node in self._nodes:  # node order keeps children ordered
            parent = self._parent.get(node.id)
            if parent is not None:
                children[parent].append(node.id)
        return {k: tuple(v) for k, v in children.items()}

    def _build_depths(self) -> dict[str, int]:
        depths = {self.root_id: 0}
        for node in self._nodes[1:]:  # parents precede children
            depths[node.id] = depths[self._parent[node.id]] + 1
        return depths

    # -- basic access ----------------------------------------------------------

    @property
    def root_id(self) -> str:
        return self._nodes[0].id

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes)

    def node(self, node_id: str) -> Node:
        return self._nodes[self.position(node_id)]

    def position(self, node_id: str) -> int:
        """Index of the node in next order."""
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownNodeError(
                f"unknown node id {node_id!r} in document {self.doc_id!r}"
            ) from None

    def parent(self, node_id: str) -> Optional[str]:
        """Parent id, or None for the root."""
        self.position(node_id)
        return self._parent.get(node_id)

    def children(self, node_id: str) -> tuple[str, ...]:
        self.position(node_id)
        return self._children[node_id]

    def sibling_set(self, node_id: str) -> SiblingSet:
        """The ordered set of children of this node's parent (root excluded)."""
        parent = self.parent(node_id)
        if parent is None:
            raise NotApplicableError(f"root node {node_id!r} has no sibling set")
        return SiblingSet(parent_id=parent, children=self._children[parent])

    # -- structural relations ---------------------------------------------------

    def depth(self, node_id: str) -> int:
        """Number of parent edges on the path to the root; depth(root) = 0."""
        self.position(node_id)
        return self._depth[node_id]

    def is_ancestor(self, a: str, b: str) -> bool:
        """True iff a lies strictly on the parent path from b to the root."""
        self.position(a)
        current = self.parent(b)
        while current is not None:
            if current == a:
                return True
            current = self._parent.get(current)
        return False

    def is_parent(self, p: str, c: str) -> bool:
        self.position(p)
        return self.parent(c) == p

    def are_siblings(self, a: str, b: str) -> bool:
        """True iff two distinct non-root nodes share a parent."""
        if a == b:
            raise ValidationError(f"are_siblings requires distinct nodes, got {a!r} twice")
        pa = self.parent(a)
        pb = self.parent(b)
        if pa is None or pb is None:
            raise ValidationError("are_siblings is undefined for the root node")
        return pa == pb

    def sibling_position(self, node_id: str) -> str:
        """Begin/Inside/End within the node's sibling set (size >= 3 required).

        Smaller sets cannot realize all three labels and raise
        NotApplicableError so the caller can skip the instance.
        """
        sset = self.sibling_set(node_id)
        if len(sset) < 3:
            raise NotApplicableError(
                f"sibling set of {node_id!r} has size {len(sset)} < 3"
            )
        if node_id == sset.children[0]:
            return POSITION_BEGIN
        if node_id == sset.children[-1]:
            return POSITION_END
        return POSITION_INSIDE

    def tree_distance(self, a: str, b: str) -> int:
        """Shortest path length between a and b in the undirected parent tree."""
        da = self.depth(a)
        db = self.depth(b)
        dist = 0
        while da > db:
            a = self._parent[a]
            da -= 1
            dist += 1
        while db > da:
            b = self._parent[b]
            db -= 1
            dist += 1
        while a != b:
            a = self._parent[a]
            b = self._parent[b]
            dist += 2
        return dist


# -- ITG file format ------------------------------------------------------------
#
# One document per file (or per line in a .jsonl corpus): a JSON object
#   {"id": doc-id, "nodes": [{"id", "type", "content"}, ...],
#    "edges": [{"source", "target", "kind"}, ...]}
# "parent" edges point source=parent -> target=child. "next" edges
# (source immediately precedes target) are optional on input and checked
# against the stored node order; they are always written on output.


def graph_to_itg(graph: DocumentGraph) -> dict:
    """Serialize to the ITG object form (includes explicit next edges)."""
    nodes = [
        {"id": n.id, "type": n.node_type, "content": n.content} for n in graph.nodes
    ]
    edges = []
    for node in graph.nodes:
        parent = graph.parent(node.id)
        if parent is not None:
            edges.append({"source": parent, "target": node.id, "kind": "parent"})
    for prev, nxt in zip(graph.nodes, graph.nodes[1:]):
        edges.append({"source": prev.id, "target": nxt.id, "kind": "next"})
    return {"id": graph.doc_id, "nodes": nodes, "edges": edges}


def graph_from_itg(obj: Mapping) -> DocumentGraph:
    """Parse and validate the ITG object form."""
    try:
        raw_nodes = obj["nodes"]
        raw_edges = obj["edges"]
    except (KeyError, TypeError):
        raise ValidationError("ITG object must have 'nodes' and 'edges'") from None
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ValidationError("ITG 'nodes' must be a non-empty array")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        try:
            nodes.append(Node(id=raw["id"], node_type=raw["type"], content=raw["content"]))
        except (KeyError, TypeError):
            raise ValidationError(f"ITG node #{i} missing id/type/content") from None
    doc_id = obj.get("id", nodes[0].id)

    parent_edges: dict[str, str] = {}
    next_edges: list[tuple[str, str]] = []
    for i, raw in enumerate(raw_edges):
        try:
            source, target, kind = raw["source"], raw["target"], raw["kind"]
        except (KeyError, TypeError):
            raise ValidationError(f"ITG edge #{i} missing source/target/kind") from None
        if kind == "parent":
            if target in parent_edges:
                raise ValidationError(f"node {target!r} has more than one parent edge")
            parent_edges[target] = source
        elif kind == "next":
            next_edges.append((source, target))
        else:
            raise ValidationError(f"ITG edge #{i}: unknown kind {kind!r}")

    graph = DocumentGraph(doc_id, nodes, parent_edges)
    order = {n.id: i for i, n in enumerate(nodes)}
    for source, target in next_edges:
        if source not in order or target not in order:
            raise ValidationError(f"next edge references unknown node {source!r}/{target!r}")
        if order[target] != order[source] + 1:
            raise ValidationError(
                f"next edge {source!r} -> {target!r} contradicts the stored node order"
            )
    return graph


def dump_itg(graph: DocumentGraph, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(graph_to_itg(graph), ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_itg(path: str | Path) -> DocumentGraph:
    return graph_from_itg(json.loads(Path(path).read_text(encoding="utf-8")))


def write_corpus(graphs: Iterable[DocumentGraph], path: str | Path) -> int:
    """Write one ITG object per line; returns the document count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for graph in graphs:
            fh.write(json.dumps(graph_to_itg(graph), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[DocumentGraph]:
    graphs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                graphs.append(graph_from_itg(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
    return graphs


# -- construction ----------------------------------------------------------------


@dataclass
class _BuilderNode:
    node_type: str
    content: str
    children: list[int] = field(default_factory=list)


class GraphBuilder:
    """Accumulates a tree top-down, then emits a validated DocumentGraph.

    Node ids are assigned at build time as ``<doc-id>-<pre-order index>``,
    which keeps references stable across files.
    """

    def __init__(self, doc_id: str, title: str) -> None:
        if not title.strip():
            raise ValidationError(f"document {doc_id!r}: empty title")
        self.doc_id = doc_id
        self._nodes: list[_BuilderNode] = [_BuilderNode(ARTICLE_TITLE, title)]

    @property
    def root(self) -> int:
        return 0

    def add(self, parent: int, node_type: str, content: str) -> int:
        """Append a child under ``parent``; returns an opaque handle."""
        handle = len(self._nodes)
        self._nodes.append(_BuilderNode(node_type, content))
        self._nodes[parent].children.append(handle)
        return handle

    def build(self) -> DocumentGraph:
        order: list[int] = []
        stack = [0]
        while stack:
            handle = stack.pop()
            order.append(handle)
            stack.extend(reversed(self._nodes[handle].children))
        ids = {
            handle: f"{self.doc_id}-{pos:04d}" for pos, handle in enumerate(order)
        }
        nodes = [
            Node(id=ids[h], node_type=self._nodes[h].node_type, content=self._nodes[h].content)
            for h in order
        ]
        parent_edges = {}
        for handle, bnode in enumerate(self._nodes):
            for child in bnode.children:
                parent_edges[ids[child]] = ids[handle]
        return DocumentGraph(self.doc_id, nodes, parent_edges)
