"""Clause parsing and box/graph conversion, anchored on the worked example."""

import random

import pytest

import worked_example as ex
from dagrammar.boxes import (Condition, Operator, Presupposition,
                             boxes_to_graph, dumps_clause_corpus,
                             graph_to_boxes, loads_clause_corpus, parse_clauses,
                             render_clauses)
from dagrammar.errors import ConversionError, ParseError
from dagrammar.graph import parse_penman, print_penman, to_triples
from util import random_clause_doc


def test_parse_worked_clauses():
    bs = parse_clauses(ex.CLAUSES)
    assert [b.name for b in bs.boxes] == ["b4", "b2", "b3", "b1"]
    assert bs.box("b3").referents == ["e1", "s1", "x3"]
    assert bs.operators == [Operator("b1", "IMP", ("b2", "b3"))]
    assert bs.presuppositions == [Presupposition("b4", "b2")]
    assert bs.box("b2").conditions[1] == Condition("PartOf", ("x1", "x2"))


def test_worked_clauses_to_graph():
    g = boxes_to_graph(parse_clauses(ex.CLAUSES))
    assert g == parse_penman(ex.GRAPH)
    assert print_penman(g) == ex.GRAPH


def test_worked_graph_to_clauses():
    bs = graph_to_boxes(parse_penman(ex.GRAPH))
    assert render_clauses(bs) == ex.CLAUSES_CANONICAL


def test_clause_emission_fixpoint():
    bs = parse_clauses(ex.CLAUSES_CANONICAL)
    g = boxes_to_graph(bs)
    assert g == parse_penman(ex.GRAPH)
    assert render_clauses(graph_to_boxes(g)) == ex.CLAUSES_CANONICAL


def test_presupposition_survives_round_trip():
    g = boxes_to_graph(parse_clauses(ex.CLAUSES))
    assert g.node("x2").label.presupposed
    bs = graph_to_boxes(g)
    pbox = bs.box("b4")
    assert pbox.referents == ["x2"]
    assert pbox.conditions == [Condition("dock", ("x2",))]
    assert bs.presuppositions == [Presupposition("b4", "b2")]


def test_fresh_presup_box_continues_numbering():
    # the only main box is b2, so the regenerated presup box is named b3
    text = "b2 REF x1\nb2 COND cat x1\nb5 REF x2\nb5 COND dog x2\n" \
           "b2 COND Near x1 x2\nb5 PRESUP b2\n"
    g = boxes_to_graph(parse_clauses(text))
    assert g.root == "b2" and g.node("x2").label.presupposed
    bs = graph_to_boxes(g)
    assert bs.presuppositions == [Presupposition("b3", "b2")]


def test_sense_round_trip():
    text = "b1 REF x1 x2\nb1 COND ship~n.02 x1\nb1 COND sea~n.01 x2\n" \
           "b1 COND Location x1 x2\n"
    g = boxes_to_graph(parse_clauses(text))
    assert g.node("x1").label.sense == "n.02"
    bs = graph_to_boxes(g)
    assert Condition("ship", ("x1",), "n.02") in bs.box("b1").conditions


def test_reversal_repair_two_states():
    text = ("b1 REF x1 s1 s2\nb1 COND cat x1\nb1 COND fast s1\n"
            "b1 COND Topic s1 x1\nb1 COND big s2\nb1 COND Topic s2 x1\n")
    g = boxes_to_graph(parse_clauses(text))
    assert print_penman(g) == \
        "(b1/□ :Drs (s1/fast :Topic (x1/cat :TopicOf (s2/big))))"
    g2 = boxes_to_graph(graph_to_boxes(g))
    assert to_triples(g2).as_set() == to_triples(g).as_set()


def test_unreversal_blocked_by_second_incoming():
    # s1 is targeted twice, so TopicOf must stay reversed in clause form
    g = parse_penman("(b1/□ :Drs (e1/run :Agent (x1/cat :TopicOf (s1/big))"
                     " :Manner s1))")
    bs = graph_to_boxes(g)
    conds = [c for c in bs.box("b1").conditions if not c.unary]
    assert Condition("TopicOf", ("x1", "s1")) in conds
    assert to_triples(boxes_to_graph(bs)).as_set() == to_triples(g).as_set()


def test_head_with_only_reversed_modifier_round_trips():
    g = parse_penman("(b1/□ :Drs (x1/cat :TopicOf (s1/big)))")
    bs = graph_to_boxes(g)
    # folding TopicOf would hand the head rule to s1, so it must stay
    assert Condition("TopicOf", ("x1", "s1")) in bs.box("b1").conditions
    g2 = boxes_to_graph(bs)
    assert to_triples(g2).as_set() == to_triples(g).as_set()


@pytest.mark.parametrize("text", [
    "b1 FOO x1",
    "x1 REF x1",
    "b1 REF b2",
    "b1 COND cat",
    "b1 REF x1\nb1 COND cat^p x1",
    "b1 REF x1\nb1 COND cat x1\nb1 OP IMP b2 b9",
    "b1 PRESUP b9",
    "b1 PRESUP b2 b3",
    "b1 REF x1\nb2 REF x1",
    "b1 REF x1\nb1 COND cat x1\nb1 COND Agent x1 x9",
    "b1 OP IMP b2 x1",
    "b1",
])
def test_parse_clause_errors(text):
    with pytest.raises(ParseError):
        parse_clauses(text)


@pytest.mark.parametrize("text", [
    # two unary conditions on one variable
    "b1 REF x1\nb1 COND cat x1\nb1 COND dog x1",
    # variable without a label
    "b1 REF x1 x2\nb1 COND cat x1\nb1 COND Agent x1 x2",
    # two root boxes
    "b1 REF x1\nb1 COND cat x1\nb2 REF x2\nb2 COND dog x2",
    # operator inside a presuppositional box
    "b1 REF x1\nb1 COND cat x1\nb2 OP NOT b1\nb3 REF x2\nb3 COND dog x2\n"
    "b2 PRESUP b1\nb1 COND Agent x1 x2",
    # isolated variable that no reversal can attach
    "b1 REF x1 x2\nb1 COND cat x1\nb1 COND dog x2",
    # operator targeting a presuppositional box
    "b1 OP NOT b2\nb2 REF x1\nb2 COND cat x1\nb2 PRESUP b1",
])
def test_conversion_errors(text):
    with pytest.raises(ConversionError):
        boxes_to_graph(parse_clauses(text))


def test_unrecoverable_head_is_reported():
    # a presupposed head leaves its box without referents or conditions
    g = parse_penman("(b1/□ :Drs (x1/cat^p))")
    with pytest.raises(ConversionError):
        graph_to_boxes(g)


def test_random_documents_round_trip():
    rng = random.Random(20240811)
    checked = 0
    for _ in range(300):
        doc = random_clause_doc(rng)
        reparsed = parse_clauses(render_clauses(doc))
        g = boxes_to_graph(reparsed)
        doc2 = graph_to_boxes(g)
        g2 = boxes_to_graph(parse_clauses(render_clauses(doc2)))
        assert to_triples(g2).as_set() == to_triples(g).as_set()
        checked += 1
    assert checked == 300


def test_clause_corpus_io():
    docs = [parse_clauses(ex.CLAUSES), parse_clauses(ex.CLAUSES_CANONICAL)]
    text = dumps_clause_corpus(docs)
    back = loads_clause_corpus(text)
    assert [render_clauses(d) for d in back] == [render_clauses(d) for d in docs]
