"""Write a small document-tree corpus for cross-component tests.

Usage: python3 make_fixture.py <out_path> [n_docs]
"""

import pathlib
import sys

from docstruct.graph import GraphBuilder, write_corpus


def build(n_docs: int):
    graphs = []
    for k in range(n_docs):
        b = GraphBuilder(f"fix{k:02d}", f"Study number {k}")
        for s in range(2 + k % 2):
            section = b.add(b.root, "section-title", f"Part {s} of study {k}")
            for p in range(3):
                b.add(
                    section,
                    "paragraph",
                    f"Paragraph {p} in part {s} reports finding {k * 7 + p}.",
                )
        graphs.append(b.build())
    return graphs


if __name__ == "__main__":
    out = sys.argv[1]
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 5
    pathlib.Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_corpus(build(n), out)
