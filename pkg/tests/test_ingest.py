"""Record parsing, abstract grouping, evidence mapping, corpus filtering."""

import pytest

from docstruct.errors import ConfigError, UnknownNodeError, ValidationError
from docstruct.graph import (
    ABSTRACT,
    PARAGRAPH,
    SECTION_TITLE,
    graph_from_itg,
    graph_to_itg,
)
from docstruct.ingest import (
    EvidenceMatchStats,
    PromptAnnotation,
    QaAnnotation,
    check_annotations,
    filter_by_length,
    insert_abstract_parent,
    map_evidence_to_nodes,
    parse_comparison_prompts,
    parse_generic_doc,
    parse_qasper,
    qasper_answer_text,
    read_sidecar,
    vanilla_token_count,
    write_sidecar,
)
from docstruct.tokenize import simple_tokenize


def generic_record(**overrides):
    record = {
        "id": "g1",
        "title": "A Study",
        "abstract": ["First abstract paragraph.", "Second abstract paragraph."],
        "sections": [
            {
                "title": "Introduction",
                "paragraphs": ["The quick brown fox jumps over the lazy dog."],
                "sections": [
                    {"title": "Background", "paragraphs": ["Deep background text."]}
                ],
            },
            {"title": "Methods", "paragraphs": ["We measured things.", "Twice."]},
        ],
    }
    record.update(overrides)
    return record


class TestParseGenericDoc:
    def test_small_doc_shape(self):
        g = parse_generic_doc(
            {
                "id": "d",
                "title": "T",
                "sections": [{"title": "S", "paragraphs": ["p one", "p two"]}],
            }
        )
        assert len(g) == 4
        types = [n.node_type for n in g.nodes]
        assert types == ["article-title", SECTION_TITLE, PARAGRAPH, PARAGRAPH]
        assert [g.depth(n.id) for n in g.nodes] == [0, 1, 2, 2]

    def test_nested_subsection_depth(self):
        g = parse_generic_doc(generic_record())
        subs = [
            n for n in g.nodes if n.node_type == SECTION_TITLE and n.content == "Background"
        ]
        assert len(subs) == 1
        assert g.depth(subs[0].id) == 2

    def test_round_trip_through_itg(self):
        g = parse_generic_doc(generic_record())
        assert graph_to_itg(graph_from_itg(graph_to_itg(g))) == graph_to_itg(g)

    def test_empty_title_rejected(self):
        with pytest.raises(ValidationError, match="title"):
            parse_generic_doc({"id": "d", "title": "  "})

    def test_missing_id_rejected(self):
        with pytest.raises(ValidationError, match="id"):
            parse_generic_doc({"title": "T"})

    def test_malformed_nesting_reports_position(self):
        record = {
            "id": "d",
            "title": "T",
            "sections": [
                {"title": "S", "sections": [{"title": " ", "paragraphs": []}]}
            ],
        }
        with pytest.raises(ValidationError, match=r"sections\[0\].sections\[0\]"):
            parse_generic_doc(record)

    def test_blank_paragraphs_skipped(self):
        g = parse_generic_doc(
            {"id": "d", "title": "T", "sections": [{"title": "S", "paragraphs": ["", "x"]}]}
        )
        assert sum(1 for n in g.nodes if n.node_type == PARAGRAPH) == 1


class TestInsertAbstractParent:
    def test_groups_leading_paragraphs(self):
        g = parse_generic_doc(generic_record())
        g2 = insert_abstract_parent(g)
        abs_nodes = [n for n in g2.nodes if n.node_type == ABSTRACT]
        assert len(abs_nodes) == 1
        assert abs_nodes[0].content == "Abstract"
        assert abs_nodes[0].id == "g1-abs"
        kids = g2.children(abs_nodes[0].id)
        assert len(kids) == 2
        assert all(g2.node(k).node_type == PARAGRAPH for k in kids)
        # prior ids survive
        assert {n.id for n in g.nodes} <= {n.id for n in g2.nodes}

    def test_no_abstract_is_identity(self):
        g = parse_generic_doc(generic_record(abstract=[]))
        assert insert_abstract_parent(g) is g

    def test_idempotent(self):
        g = insert_abstract_parent(parse_generic_doc(generic_record()))
        assert insert_abstract_parent(g) is g

    def test_sections_keep_parent(self):
        g2 = insert_abstract_parent(parse_generic_doc(generic_record()))
        sections = [n.id for n in g2.nodes if n.node_type == SECTION_TITLE]
        top = [s for s in sections if g2.depth(s) == 1]
        assert all(g2.parent(s) == g2.root_id for s in top)


class TestMapEvidence:
    def graph(self):
        return parse_generic_doc(generic_record())

    def test_exact_match(self):
        g = self.graph()
        spans = ["The quick brown fox jumps over the lazy dog."]
        resolved, stats = map_evidence_to_nodes(spans, g)
        assert stats == EvidenceMatchStats(exact_one=1)
        node = g.node(resolved[0])
        assert node.content == spans[0]

    def test_fuzzy_single_edit_on_40_chars(self):
        g = self.graph()
        # node content prefix, 44 chars; flip one character
        span = "The quick brown fox jumps over the lazy hog."
        assert len(span) == 44
        resolved, stats = map_evidence_to_nodes([span], g, max_edit_ratio=0.1)
        assert stats == EvidenceMatchStats(exact_one=1)
        assert "fox" in g.node(resolved[0]).content

    def test_absent_span_counts_none(self):
        resolved, stats = map_evidence_to_nodes(["zzz completely unrelated"], self.graph())
        assert resolved == [None]
        assert stats == EvidenceMatchStats(none=1)

    def test_verbatim_in_two_nodes_is_multiple(self):
        record = generic_record(
            sections=[
                {"title": "S1", "paragraphs": ["shared sentence here."]},
                {"title": "S2", "paragraphs": ["shared sentence here."]},
            ]
        )
        resolved, stats = map_evidence_to_nodes(
            ["shared sentence here."], parse_generic_doc(record)
        )
        assert resolved == [None]
        assert stats == EvidenceMatchStats(multiple=1)

    def test_fuzzy_tie_is_multiple(self):
        record = generic_record(
            sections=[
                {"title": "S1", "paragraphs": ["alpha beta gamma delta epsilon"]},
                {"title": "S2", "paragraphs": ["alpha beta gamma delta epsilen"]},
            ]
        )
        # one edit from each paragraph
        span = "alpha beta gamma delta epsilan"
        resolved, stats = map_evidence_to_nodes([span], parse_generic_doc(record), 0.1)
        assert resolved == [None]
        assert stats == EvidenceMatchStats(multiple=1)

    def test_empty_span_counted_none(self):
        resolved, stats = map_evidence_to_nodes(["", "Twice."], self.graph())
        assert resolved[0] is None
        assert resolved[1] is not None
        assert stats == EvidenceMatchStats(exact_one=1, none=1)

    def test_stats_sum_equals_span_count(self):
        spans = ["Twice.", "", "nope nothing", "We measured things."]
        _, stats = map_evidence_to_nodes(spans, self.graph())
        assert stats.total == len(spans)

    def test_ratio_out_of_range(self):
        with pytest.raises(ConfigError):
            map_evidence_to_nodes(["x"], self.graph(), max_edit_ratio=0.6)

    def test_deterministic(self):
        g = self.graph()
        spans = ["Twice.", "We measured thing"]
        assert map_evidence_to_nodes(spans, g) == map_evidence_to_nodes(spans, g)


def qasper_record():
    return {
        "id": "q1",
        "title": "Probing Paper",
        "abstract": "We probe many things. It works.",
        "full_text": [
            {
                "section_name": "Introduction",
                "paragraphs": ["Intro paragraph about probing methods."],
            },
            {
                "section_name": "Experiments ::: Setup",
                "paragraphs": ["Setup paragraph with details.", ""],
            },
            {
                "section_name": "Experiments ::: Results",
                "paragraphs": ["Results paragraph with numbers."],
            },
        ],
        "qas": [
            {
                "question": "What is probed?",
                "answers": [
                    {
                        "answer": {
                            "unanswerable": False,
                            "yes_no": None,
                            "extractive_spans": ["many things"],
                            "free_form_answer": "",
                            "evidence": ["Intro paragraph about probing methods."],
                        }
                    },
                    {
                        "answer": {
                            "unanswerable": False,
                            "yes_no": None,
                            "extractive_spans": [],
                            "free_form_answer": "structure",
                            "evidence": [
                                "FLOAT SELECTED: Table 1: stuff",
                                "not present in the document at all",
                            ],
                        }
                    },
                ],
            }
        ],
    }


class TestParseQasper:
    def test_graph_shape_and_nesting(self):
        g, _, _ = parse_qasper(qasper_record())
        by_content = {n.content: n for n in g.nodes}
        assert by_content["Experiments"].node_type == SECTION_TITLE
        assert g.depth(by_content["Experiments"].id) == 1
        assert g.depth(by_content["Setup"].id) == 2
        assert g.depth(by_content["Results"].id) == 2
        assert g.parent(by_content["Setup"].id) == by_content["Experiments"].id
        # abstract grouped under an abstract node
        assert by_content["Abstract"].node_type == ABSTRACT

    def test_annotations_and_stats(self):
        g, annotations, stats = parse_qasper(qasper_record())
        assert len(annotations) == 1
        ann = annotations[0]
        assert ann.reference_answers == ("many things", "structure")
        # annotator 1: exact evidence; annotator 2: float dropped, other absent
        assert len(ann.evidence_node_ids[0]) == 1
        matched = g.node(ann.evidence_node_ids[0][0])
        assert matched.content == "Intro paragraph about probing methods."
        assert ann.evidence_node_ids[1] == ()
        assert stats == EvidenceMatchStats(exact_one=1, none=1)
        check_annotations(g, annotations)

    def test_missing_field_rejected(self):
        record = qasper_record()
        del record["full_text"]
        with pytest.raises(ValidationError, match="full_text"):
            parse_qasper(record)

    def test_answer_text_priority(self):
        assert qasper_answer_text({"unanswerable": True}) == "Unanswerable"
        assert qasper_answer_text({"yes_no": True}) == "Yes"
        assert qasper_answer_text({"yes_no": False}) == "No"
        assert qasper_answer_text({"extractive_spans": ["a", "b"]}) == "a, b"
        assert qasper_answer_text({"free_form_answer": "x"}) == "x"


class TestComparisonPrompts:
    def test_parse_and_labels(self):
        record = generic_record(
            prompts=[
                {
                    "intervention": "drug A",
                    "comparator": "placebo",
                    "outcome": "mortality",
                    "annotations": [
                        {
                            "label": "significantly decreased",
                            "evidence": ["We measured things."],
                        }
                    ],
                }
            ]
        )
        g, prompts, stats = parse_comparison_prompts(record)
        assert len(prompts) == 1
        assert prompts[0].labels == ("significantly decreased",)
        assert len(prompts[0].evidence_node_ids[0]) == 1
        assert stats.exact_one == 1
        check_annotations(g, prompts)

    def test_bad_label_rejected(self):
        with pytest.raises(ValidationError, match="label"):
            PromptAnnotation("i", "c", "o", ("increased a lot",), ((),))


class TestAnnotationInvariants:
    def test_empty_references_rejected(self):
        with pytest.raises(ValidationError):
            QaAnnotation("q", (), ())

    def test_unresolved_evidence_id_rejected(self):
        g = parse_generic_doc(generic_record())
        ann = QaAnnotation("q", ("a",), (("missing-node",),))
        with pytest.raises(UnknownNodeError):
            check_annotations(g, [ann])


class TestFilterByLength:
    def test_overlong_doc_removed(self):
        big = parse_generic_doc(
            {
                "id": "big",
                "title": "T",
                "sections": [{"title": "S", "paragraphs": ["tok " * 20000]}],
            }
        )
        small = parse_generic_doc(generic_record())
        kept = filter_by_length([big, small], simple_tokenize, max_tokens=16384)
        assert kept == [small]

    def test_empty_corpus(self):
        assert filter_by_length([], simple_tokenize) == []

    def test_generous_limit_is_identity(self):
        docs = [parse_generic_doc(generic_record())]
        assert filter_by_length(docs, simple_tokenize, max_tokens=10**9) == docs

    def test_boundary_inclusive(self):
        g = parse_generic_doc(generic_record())
        n = vanilla_token_count(g, simple_tokenize)
        assert filter_by_length([g], simple_tokenize, max_tokens=n) == [g]
        assert filter_by_length([g], simple_tokenize, max_tokens=n - 1) == []

    def test_bad_limit(self):
        with pytest.raises(ConfigError):
            filter_by_length([], simple_tokenize, max_tokens=0)


class TestSidecarIO:
    def test_round_trip(self, tmp_path):
        g, annotations, _ = parse_qasper(qasper_record())
        record = generic_record(
            prompts=[
                {
                    "intervention": "i",
                    "comparator": "c",
                    "outcome": "o",
                    "annotations": [{"label": "no significant difference", "evidence": []}],
                }
            ]
        )
        g2, prompts, _ = parse_comparison_prompts(record)
        path = tmp_path / "annotations.jsonl"
        write_sidecar({g.doc_id: annotations, g2.doc_id: prompts}, path)
        loaded = read_sidecar(path)
        assert loaded[g.doc_id] == annotations
        assert loaded[g2.doc_id] == prompts
