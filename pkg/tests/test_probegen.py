"""Probing datasets: label correctness vs graph predicates, balancing,
splits, determinism, io round-trips."""

import json
import random

import pytest

from conftest import make_random_tree, oracle_depth, oracle_tree_distance
from docstruct.errors import ValidationError
from docstruct.graph import PARAGRAPH, SECTION_TITLE, GraphBuilder
from docstruct.probegen import (
    ANCESTOR,
    BOOLEAN_TASKS,
    NODE_TYPE,
    PARENT_PREDECESSOR,
    POSITION,
    SIBLING,
    STRUCTURAL,
    TASKS,
    TREE_DEPTH,
    ProbeDataset,
    ProbeInstance,
    balance,
    gen_node_type,
    gen_pair_task,
    gen_position,
    gen_structural,
    gen_tree_depth,
    generate_datasets,
    read_instances,
    split_corpus,
    write_instances,
)
from docstruct.seeding import derive_rng


def doc_fixture(doc_id="d1"):
    # root -> abstract-ish paragraphs skipped; two sections, one nested
    b = GraphBuilder(doc_id, "Title")
    s1 = b.add(b.root, SECTION_TITLE, "S1")
    for i in range(4):
        b.add(s1, PARAGRAPH, f"s1 para {i}")
    s2 = b.add(b.root, SECTION_TITLE, "S2")
    sub = b.add(s2, SECTION_TITLE, "S2.1")
    for i in range(3):
        b.add(sub, PARAGRAPH, f"sub para {i}")
    return b.build()


def random_corpus(n_docs, seed=11, max_nodes=25):
    rng = random.Random(seed)
    return [
        make_random_tree(rng, rng.randint(4, max_nodes), f"doc{i:03d}")
        for i in range(n_docs)
    ]


class TestGenerators:
    def test_node_type_labels(self):
        g = doc_fixture()
        instances = gen_node_type(g)
        by_node = {i.node_ids[0]: i.label for i in instances}
        for node in g.nodes:
            if node.node_type == SECTION_TITLE:
                expected = "Section" if g.depth(node.id) == 1 else "Subsection"
                assert by_node[node.id] == expected
            elif node.node_type == PARAGRAPH:
                assert by_node[node.id] == "Paragraph"
            else:
                assert node.id not in by_node

    def test_node_type_excludes_title_and_abstract(self):
        from docstruct.ingest import insert_abstract_parent, parse_generic_doc

        g = insert_abstract_parent(
            parse_generic_doc(
                {
                    "id": "x",
                    "title": "T",
                    "abstract": ["abs para"],
                    "sections": [{"title": "S", "paragraphs": ["p"]}],
                }
            )
        )
        covered = {i.node_ids[0] for i in gen_node_type(g)}
        abstract = next(n for n in g.nodes if n.node_type == "abstract")
        assert g.root_id not in covered
        assert abstract.id not in covered

    def test_position_labels_and_small_sets(self):
        g = doc_fixture()
        instances = gen_position(g)
        labels = {i.node_ids[0]: i.label for i in instances}
        s1_kids = g.children([n.id for n in g.nodes if n.content == "S1"][0])
        assert labels[s1_kids[0]] == "Begin"
        assert labels[s1_kids[-1]] == "End"
        assert all(labels[k] == "Inside" for k in s1_kids[1:-1])
        # root has only two children: no instances from that set
        root_kids = g.children(g.root_id)
        assert all(k not in labels for k in root_kids)

    def test_tree_depth_matches_oracle(self):
        for g in random_corpus(5):
            for inst in gen_tree_depth(g):
                assert inst.label == oracle_depth(g, inst.node_ids[0])
                assert inst.label >= 1

    def test_pair_labels_match_predicates(self):
        rng = random.Random(0)
        for g in random_corpus(6):
            for task in BOOLEAN_TASKS:
                for inst in gen_pair_task(g, task, rng):
                    a, b = inst.node_ids
                    if task == SIBLING:
                        assert g.are_siblings(a, b) == inst.label
                    elif task == ANCESTOR:
                        assert g.is_ancestor(a, b) == inst.label
                    else:
                        assert g.is_parent(a, b) == inst.label

    def test_pair_task_true_false_parity(self):
        rng = random.Random(1)
        for g in random_corpus(6):
            for task in BOOLEAN_TASKS:
                instances = gen_pair_task(g, task, rng)
                trues = sum(1 for i in instances if i.label is True)
                assert trues * 2 == len(instances)

    def test_sibling_positives_enumerated(self):
        b = GraphBuilder("s", "t")
        sec = b.add(b.root, SECTION_TITLE, "S")
        for i in range(3):
            b.add(sec, PARAGRAPH, f"p{i}")
        g = b.build()
        instances = gen_pair_task(g, SIBLING, random.Random(0))
        positives = {frozenset(i.node_ids) for i in instances if i.label}
        kids = g.children(sec_id := [n.id for n in g.nodes if n.content == "S"][0])
        expected = {
            frozenset((kids[i], kids[j]))
            for i in range(3)
            for j in range(i + 1, 3)
        }
        del sec_id
        assert positives == expected

    def test_structural_matches_bfs_oracle(self):
        rng = random.Random(2)
        for g in random_corpus(6):
            for inst in gen_structural(g, rng):
                a, b = inst.node_ids
                assert inst.label == oracle_tree_distance(g, a, b)
                assert inst.label >= 1

    def test_sibling_pair_of_three_children(self):
        g = doc_fixture()
        # distance between two siblings is 2
        instances = gen_structural(g, random.Random(0))
        for inst in instances:
            a, b = inst.node_ids
            if g.parent(a) == g.parent(b):
                assert inst.label == 2

    def test_empty_relation_gives_empty_list(self):
        b = GraphBuilder("tiny", "t")
        b.add(b.root, PARAGRAPH, "only child")
        g = b.build()
        assert gen_pair_task(g, SIBLING, random.Random(0)) == []

    def test_pair_cap(self):
        rng = random.Random(3)
        b = GraphBuilder("big", "t")
        for s in range(2):  # two 40-paragraph sections: ample negatives
            sec = b.add(b.root, SECTION_TITLE, f"S{s}")
            for i in range(40):
                b.add(sec, PARAGRAPH, f"p{s}.{i}")
        g = b.build()
        instances = gen_pair_task(g, SIBLING, rng)
        trues = [i for i in instances if i.label]
        assert len(trues) == 64
        assert len(instances) == 128


class TestBalance:
    def test_boolean_downsample(self):
        g = doc_fixture()
        instances = [
            ProbeInstance(SIBLING, g.doc_id, (g.nodes[2].id, g.nodes[3].id), True)
            for _ in range(5)
        ] + [
            ProbeInstance(SIBLING, g.doc_id, (g.nodes[1].id, g.nodes[2].id), False)
            for _ in range(3)
        ]
        out = balance(instances, seed=0)
        labels = [i.label for i in out]
        assert labels.count(True) == 3 and labels.count(False) == 3

    def test_absent_labels_stay_absent(self):
        g = doc_fixture()
        instances = [
            ProbeInstance(TREE_DEPTH, g.doc_id, (g.nodes[1].id,), d)
            for d in [1, 1, 1, 1, 2, 2, 2, 2, 3]
        ]
        out = balance(instances, seed=1)
        hist = {}
        for inst in out:
            hist[inst.label] = hist.get(inst.label, 0) + 1
        assert hist == {1: 1, 2: 1, 3: 1}

    def test_per_document_not_global(self):
        a = doc_fixture("a")
        b = doc_fixture("b")
        instances = [
            ProbeInstance(TREE_DEPTH, a.doc_id, (a.nodes[1].id,), 1),
            ProbeInstance(TREE_DEPTH, a.doc_id, (a.nodes[2].id,), 1),
            ProbeInstance(TREE_DEPTH, b.doc_id, (b.nodes[1].id,), 1),
            ProbeInstance(TREE_DEPTH, b.doc_id, (b.nodes[2].id,), 2),
        ]
        out = balance(instances, seed=2)
        # doc a has only label 1 present: keeps both; doc b keeps one of each
        assert sum(1 for i in out if i.doc_id == "a") == 2
        assert sum(1 for i in out if i.doc_id == "b") == 2

    def test_preserves_order_and_determinism(self):
        g = doc_fixture()
        rng = random.Random(5)
        instances = gen_pair_task(g, ANCESTOR, rng) + gen_tree_depth(g)
        out1 = balance(instances, seed=3)
        out2 = balance(instances, seed=3)
        assert out1 == out2
        positions = [instances.index(i) for i in out1]
        assert positions == sorted(positions)


class TestSplit:
    def test_fraction_counts(self):
        docs = [f"doc{i}" for i in range(10)]
        assignment = split_corpus(docs, (0.6, 0.2, 0.2), seed=0)
        from collections import Counter

        counts = Counter(assignment.values())
        assert counts == {"train": 6, "dev": 2, "test": 2}

    def test_deterministic_and_disjoint(self):
        docs = [f"doc{i}" for i in range(23)]
        a1 = split_corpus(docs, seed=9)
        a2 = split_corpus(list(reversed(docs)), seed=9)
        assert a1 == a2  # input order irrelevant
        assert set(a1) == set(docs)  # total function, no doc in two splits

    def test_fraction_within_one_doc(self):
        for n in (3, 7, 11, 40):
            docs = [f"d{i}" for i in range(n)]
            assignment = split_corpus(docs, seed=1)
            from collections import Counter

            counts = Counter(assignment.values())
            for frac, split in zip((0.6, 0.2, 0.2), ("train", "dev", "test")):
                assert abs(counts.get(split, 0) - frac * n) <= 1

    def test_too_few_documents(self):
        with pytest.raises(ValidationError, match="3 documents"):
            split_corpus(["a", "b"], seed=0)

    def test_bad_fractions(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            split_corpus(["a", "b", "c"], (0.5, 0.2, 0.2), seed=0)


class TestGenerateDatasets:
    def test_all_tasks_present_and_valid(self):
        corpus = random_corpus(12)
        datasets = generate_datasets(corpus, seed=7)
        assert set(datasets) == set(TASKS)
        for task, ds in datasets.items():
            ds.check_balance()
            for inst in ds.instances:
                assert inst.split in ("train", "dev", "test")

    def test_boolean_per_split_exact_parity(self):
        datasets = generate_datasets(random_corpus(12), seed=7)
        for task in BOOLEAN_TASKS:
            for split in ("train", "dev", "test"):
                hist = datasets[task].label_histogram(split)
                assert hist.get(True, 0) == hist.get(False, 0)

    def test_position_three_way_parity(self):
        datasets = generate_datasets(random_corpus(12), seed=7)
        for split in ("train", "dev", "test"):
            hist = datasets[POSITION].label_histogram(split)
            values = set(hist.values())
            assert len(values) <= 1

    def test_no_cross_document_pairs(self):
        datasets = generate_datasets(random_corpus(8), seed=3)
        graphs = {g.doc_id: g for g in random_corpus(8)}
        for ds in datasets.values():
            for inst in ds.instances:
                g = graphs[inst.doc_id]
                for nid in inst.node_ids:
                    assert any(n.id == nid for n in g.nodes)

    def test_regeneration_byte_identical(self, tmp_path):
        corpus = random_corpus(10)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_instances(generate_datasets(corpus, seed=5)[SIBLING], p1)
        write_instances(generate_datasets(list(reversed(corpus)), seed=5)[SIBLING], p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self):
        corpus = random_corpus(10)
        d1 = generate_datasets(corpus, seed=5)[STRUCTURAL]
        d2 = generate_datasets(corpus, seed=6)[STRUCTURAL]
        assert d1.instances != d2.instances

    def test_labels_recomputable_from_graph(self):
        corpus = random_corpus(6)
        graphs = {g.doc_id: g for g in corpus}
        datasets = generate_datasets(corpus, seed=2)
        for inst in datasets[TREE_DEPTH].instances:
            assert graphs[inst.doc_id].depth(inst.node_ids[0]) == inst.label
        for inst in datasets[PARENT_PREDECESSOR].instances:
            a, b = inst.node_ids
            assert graphs[inst.doc_id].is_parent(a, b) == inst.label


class TestInstanceValidation:
    def test_arity_enforced(self):
        with pytest.raises(ValidationError, match="node"):
            ProbeInstance(SIBLING, "d", ("a",), True)
        with pytest.raises(ValidationError, match="node"):
            ProbeInstance(NODE_TYPE, "d", ("a", "b"), "Section")

    def test_label_domain_enforced(self):
        with pytest.raises(ValidationError):
            ProbeInstance(NODE_TYPE, "d", ("a",), "Chapter")
        with pytest.raises(ValidationError):
            ProbeInstance(TREE_DEPTH, "d", ("a",), 0)
        with pytest.raises(ValidationError):
            ProbeInstance(SIBLING, "d", ("a", "b"), 1)  # int, not bool

    def test_unknown_task(self):
        with pytest.raises(ValidationError):
            ProbeInstance("depth", "d", ("a",), 1)


class TestInstanceIO:
    def test_round_trip(self, tmp_path):
        datasets = generate_datasets(random_corpus(8), seed=4)
        for task, ds in datasets.items():
            path = tmp_path / f"{task}.jsonl"
            write_instances(ds, path)
            loaded = read_instances(path)
            assert loaded == ds

    def test_histogram_file(self, tmp_path):
        from docstruct.probegen import write_histogram

        ds = generate_datasets(random_corpus(8), seed=4)[NODE_TYPE]
        path = tmp_path / "hist.json"
        write_histogram(ds, path)
        obj = json.loads(path.read_text())
        assert obj["task"] == NODE_TYPE
        total = sum(sum(v.values()) for v in obj["splits"].values())
        assert total == len(ds.instances)


def test_derive_rng_stable_across_processes():
    # namespaced streams must not depend on interpreter hash salting
    assert derive_rng(7, "docA", SIBLING).random() == derive_rng(7, "docA", SIBLING).random()
    assert derive_rng(7, "docA", SIBLING).random() != derive_rng(7, "docA", ANCESTOR).random()
