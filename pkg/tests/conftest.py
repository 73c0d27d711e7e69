"""Shared fixtures: random tree generation and oracle implementations.

The oracles here are deliberately naive (BFS, explicit path walks) and
independent of the library's own traversal code, so agreement is evidence
rather than tautology.
"""

from __future__ import annotations

import random
from collections import deque

from docstruct.graph import (
    ABSTRACT,
    PARAGRAPH,
    SECTION_TITLE,
    DocumentGraph,
    GraphBuilder,
    POSITION_BEGIN,
    POSITION_END,
    POSITION_INSIDE,
)

_TYPES = (ABSTRACT, SECTION_TITLE, PARAGRAPH)


def make_random_tree(rng: random.Random, n_nodes: int, doc_id: str = "doc") -> DocumentGraph:
    """Arbitrary-shape tree: each new node hangs off a uniformly chosen
    existing node. Only the root type is constrained."""
    builder = GraphBuilder(doc_id, f"title of {doc_id}")
    handles = [builder.root]
    for i in range(n_nodes - 1):
        parent = rng.choice(handles)
        node_type = rng.choice(_TYPES)
        handles.append(builder.add(parent, node_type, f"content {i}"))
    return builder.build()


# -- independent oracles --------------------------------------------------------


def oracle_depth(graph: DocumentGraph, node_id: str) -> int:
    """BFS from the root over child edges."""
    queue = deque([(graph.root_id, 0)])
    while queue:
        current, dist = queue.popleft()
        if current == node_id:
            return dist
        for child in graph.children(current):
            queue.append((child, dist + 1))
    raise AssertionError(f"{node_id} not reached from root")


def oracle_path_to_root(graph: DocumentGraph, node_id: str) -> list[str]:
    """[node, parent, ..., root] via repeated parent lookups."""
    path = [node_id]
    while (parent := graph.parent(path[-1])) is not None:
        path.append(parent)
    return path


def oracle_is_ancestor(graph: DocumentGraph, a: str, b: str) -> bool:
    return a in oracle_path_to_root(graph, b)[1:]


def oracle_tree_distance(graph: DocumentGraph, a: str, b: str) -> int:
    """BFS over the undirected parent/child adjacency."""
    queue = deque([(a, 0)])
    seen = {a}
    while queue:
        current, dist = queue.popleft()
        if current == b:
            return dist
        neighbours = list(graph.children(current))
        parent = graph.parent(current)
        if parent is not None:
            neighbours.append(parent)
        for nxt in neighbours:
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, dist + 1))
    raise AssertionError(f"{b} not reachable from {a}")


def oracle_position(graph: DocumentGraph, node_id: str) -> str:
    siblings = graph.children(graph.parent(node_id))
    idx = siblings.index(node_id)
    if idx == 0:
        return POSITION_BEGIN
    if idx == len(siblings) - 1:
        return POSITION_END
    return POSITION_INSIDE
