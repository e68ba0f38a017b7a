"""Matching evaluator: alignment search, oracle agreement, breakdowns."""

import random

import pytest

import worked_example as ex
from dagrammar import _climb_py
from dagrammar.errors import EvalError
from dagrammar.evaluate import (CATEGORIES, _Problem, brute_force_match,
                                corpus_eval, fine_grained, kernel_name,
                                match)
from dagrammar.graph import (Edge, Graph, Node, NodeLabel, parse_penman,
                             to_triples, validate)
from util import random_graph

SENSED = ("(b1/□ :Drs (e1/need~v.01 :Pivot (x1/ship~n.01) "
          ":Theme (x2/anchor~n.02 :TopicOf (s1/big~a.01))))")


def test_identity_match_is_exact():
    g = parse_penman(ex.GRAPH)
    r = match(g, g)
    total = len(to_triples(g).as_set())
    assert (r.matched, r.pred_triples, r.gold_triples) == (total,) * 3
    assert r.precision == r.recall == r.f1 == 1.0
    assert not r.ill_formed


def test_identity_match_on_random_graphs():
    rng = random.Random(7)
    for _ in range(30):
        g = random_graph(rng)
        assert validate(g).ok
        assert match(g, g).f1 == 1.0


def test_single_relabel_drops_one_triple():
    gold = parse_penman(ex.GRAPH)
    pred = parse_penman(ex.GRAPH.replace("ship", "boat"))
    total = len(to_triples(gold).as_set())
    r = match(pred, gold)
    assert r.matched == total - 1
    assert r.recall == pytest.approx((total - 1) / total)
    assert r.precision == pytest.approx((total - 1) / total)


def test_small_pred_against_larger_gold():
    pred = parse_penman("(x1/cat)")
    gold = parse_penman("(x1/cat :Near (x2/dog))")
    r = brute_force_match(pred, gold)
    # pred offers instance + TOP; both land under the identity mapping
    assert (r.matched, r.pred_triples, r.gold_triples) == (2, 2, 4)
    assert r.precision == 1.0
    assert r.recall == 0.5
    assert r.mapping == {"x1": "x1"}


def test_hill_climb_agrees_with_brute_force():
    rng = random.Random(11)
    equal = 0
    for _ in range(100):
        pred = random_graph(rng, max_nodes=6)
        gold = random_graph(rng, max_nodes=6)
        climbed = match(pred, gold, restarts=20, seed=3)
        exact = brute_force_match(pred, gold)
        assert climbed.matched <= exact.matched
        equal += climbed.matched == exact.matched
    assert equal >= 95


def test_more_restarts_never_hurt():
    rng = random.Random(5)
    pred = random_graph(rng, max_nodes=10)
    gold = random_graph(rng, max_nodes=10)
    scores = [match(pred, gold, restarts=r, seed=0).matched
              for r in (1, 3, 5, 10, 20)]
    assert scores == sorted(scores)


def test_match_is_deterministic():
    rng = random.Random(13)
    pred = random_graph(rng, max_nodes=8)
    gold = random_graph(rng, max_nodes=8)
    a = match(pred, gold, restarts=20, seed=42)
    b = match(pred, gold, restarts=20, seed=42)
    assert a == b
    assert a.mapping == b.mapping


def test_ill_formed_prediction_scores_zero():
    cyclic = Graph("b1", (
        Node("b1", NodeLabel("□"), (Edge("b1", "Drs", "x1"),)),
        Node("x1", NodeLabel("cat"), (Edge("x1", "Agent", "x1"),))))
    r = match(cyclic, parse_penman(ex.GRAPH))
    assert r.ill_formed
    assert r.matched == 0 and r.f1 == 0.0


def test_restart_count_must_be_positive():
    g = parse_penman(ex.GRAPH)
    with pytest.raises(EvalError, match="restarts"):
        match(g, g, restarts=0)


def test_brute_force_size_guard():
    rng = random.Random(3)
    big = random_graph(rng, max_nodes=12)
    while len(big.nodes) <= 8:
        big = random_graph(rng, max_nodes=12)
    with pytest.raises(EvalError, match="brute force"):
        brute_force_match(big, big)


def test_fine_grained_identity_is_perfect():
    g = parse_penman(SENSED)
    scores = fine_grained(g, g, match(g, g).mapping)
    assert set(scores) == set(CATEGORIES) | {"-sense"}
    assert all(s.f1 == 1.0 for s in scores.values())


def test_sense_perturbation_only_moves_one_row():
    gold = parse_penman(SENSED)
    pred = parse_penman(SENSED.replace("ship~n.01", "ship~n.03"))
    scores = fine_grained(pred, gold, match(pred, gold).mapping)
    assert scores["synsets-nouns"].f1 == pytest.approx(0.5)
    for cat in set(scores) - {"synsets-nouns"}:
        assert scores[cat].f1 == 1.0, cat


def test_sense_blind_row_ignores_sense_edits():
    gold = parse_penman(SENSED)
    pred = parse_penman(SENSED.replace("~v.01", "~v.09")
                        .replace("~a.01", "~a.02"))
    scores = fine_grained(pred, gold, match(pred, gold).mapping)
    assert scores["-sense"].f1 == 1.0
    assert scores["synsets-verbs"].f1 == 0.0
    assert scores["synsets-adjectives"].f1 == 0.0


def test_categories_partition_the_triples():
    rng = random.Random(23)
    for _ in range(50):
        g = random_graph(rng)
        scores = fine_grained(g, g, match(g, g).mapping)
        total = len(to_triples(g).as_set()) - 1  # TOP stays outside
        assert sum(scores[c].pred_count for c in CATEGORIES) == total
        assert sum(scores[c].gold_count for c in CATEGORIES) == total


def test_corpus_eval_identity():
    rng = random.Random(31)
    graphs = [random_graph(rng) for _ in range(10)]
    agg = corpus_eval(graphs, graphs)
    assert agg.f1 == 1.0
    assert agg.ill_formed == 0 and agg.ill_formed_rate == 0.0


def test_corpus_eval_micro_average():
    gold = parse_penman(ex.GRAPH)
    pred = parse_penman(ex.GRAPH.replace("ship", "boat"))
    single = parse_penman("(x1/cat)")
    agg = corpus_eval([single, pred], [single, gold])
    total = len(to_triples(gold).as_set())
    assert agg.matched == 2 + total - 1
    assert agg.pred_triples == agg.gold_triples == 2 + total
    assert agg.precision == pytest.approx((total + 1) / (total + 2))


def test_corpus_eval_length_mismatch():
    g = parse_penman("(x1/cat)")
    with pytest.raises(EvalError, match="length mismatch"):
        corpus_eval([g, g], [g])


def test_kernel_twins_agree():
    try:
        from dagrammar import _climb_cy
    except ImportError:
        pytest.skip("compiled kernel not built")
    rng = random.Random(17)
    for _ in range(40):
        prob = _Problem(random_graph(rng, max_nodes=9),
                        random_graph(rng, max_nodes=9))
        inits = [prob.informed_init(), prob.random_init(rng),
                 prob.random_init(rng)]
        for init in inits:
            args = (prob.n_gold, prob.unary, prob.pi1, prob.pi2,
                    prob.pj1, prob.pj2)
            assert _climb_py.climb(init, *args) == _climb_cy.climb(init, *args)
            assert (_climb_py.score_mapping(init, *args)
                    == _climb_cy.score_mapping(init, *args))


def test_kernel_selected_at_import():
    assert kernel_name() in ("cython", "pure-python")
