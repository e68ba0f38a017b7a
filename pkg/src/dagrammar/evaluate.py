"""Graph matching and scoring: best variable alignment, F1, breakdowns.

Two graphs are compared on their triple views (instances, attributes,
relations, plus the TOP marker).  The alignment search is a restarted
hill climb over one-to-one partial mappings between the variable sets;
the inner loop lives in a small kernel that exists twice, compiled and
pure Python, selected at import (set ``DAGRAMMAR_PURE=1`` to force the
fallback).  A brute-force oracle over all injective mappings backs the
climber in tests.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from itertools import permutations

from .errors import EvalError
from .graph import BOX_SORT, Graph, to_triples, validate, var_sort

if os.environ.get("DAGRAMMAR_PURE"):
    from . import _climb_py as _kernel
else:
    try:
        from . import _climb_cy as _kernel  # type: ignore[no-redef]
    except ImportError:
        from . import _climb_py as _kernel  # type: ignore[no-redef]


def kernel_name() -> str:
    return _kernel.KERNEL_NAME


DEFAULT_RESTARTS = 20


@dataclass(frozen=True)
class MatchResult:
    matched: int
    pred_triples: int
    gold_triples: int
    precision: float
    recall: float
    f1: float
    mapping: dict[str, str] = field(compare=False)
    restarts_used: int = 0
    ill_formed: bool = False


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _result(matched: int, n_pred: int, n_gold: int, mapping: dict[str, str],
            restarts_used: int, ill_formed: bool = False) -> MatchResult:
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_gold if n_gold else 0.0
    return MatchResult(matched, n_pred, n_gold, precision, recall,
                       _f1(precision, recall), mapping, restarts_used,
                       ill_formed)


class _Problem:
    """Integer encoding of one graph pair for the climb kernel."""

    def __init__(self, pred: Graph, gold: Graph):
        self.pred_ts = to_triples(pred).as_set()
        self.gold_ts = to_triples(gold).as_set()
        self.pred_vars = [n.id for n in pred.nodes]
        self.gold_vars = [n.id for n in gold.nodes]
        pindex = {v: i for i, v in enumerate(self.pred_vars)}
        gindex = {v: j for j, v in enumerate(self.gold_vars)}
        n, m = len(self.pred_vars), len(self.gold_vars)

        def unary_features(ts, index):
            feats: list[set] = [set() for _ in range(len(index))]
            rels = []
            for s, r, t in ts:
                if s == "TOP":
                    feats[index[t]].add(("top",))
                elif r == "instance" or t not in index:
                    feats[index[s]].add((r, t))
                else:
                    rels.append((index[s], r, index[t]))
            return feats, rels

        pfeat, prel = unary_features(self.pred_ts, pindex)
        gfeat, grel = unary_features(self.gold_ts, gindex)
        self.unary = [0] * (n * m)
        for i in range(n):
            for j in range(m):
                self.unary[i * m + j] = len(pfeat[i] & gfeat[j])
        by_label: dict[str, list[tuple[int, int]]] = {}
        for j1, r, j2 in grel:
            by_label.setdefault(r, []).append((j1, j2))
        self.pi1: list[int] = []
        self.pi2: list[int] = []
        self.pj1: list[int] = []
        self.pj2: list[int] = []
        for i1, r, i2 in prel:
            for j1, j2 in by_label.get(r, ()):
                self.pi1.append(i1)
                self.pi2.append(i2)
                self.pj1.append(j1)
                self.pj2.append(j2)
        self.n_pred = n
        self.n_gold = m
        self.pred_total = len(self.pred_ts)
        self.gold_total = len(self.gold_ts)

    def informed_init(self) -> list[int]:
        # pair up variables by shared local triples before any climbing,
        # greedy per pred variable, smallest gold index on ties
        mapping = [-1] * self.n_pred
        taken = [False] * self.n_gold
        for i in range(self.n_pred):
            best, best_j = 0, -1
            for j in range(self.n_gold):
                if not taken[j] and self.unary[i * self.n_gold + j] > best:
                    best, best_j = self.unary[i * self.n_gold + j], j
            if best_j >= 0:
                mapping[i] = best_j
                taken[best_j] = True
        return mapping

    def random_init(self, rng: random.Random) -> list[int]:
        mapping = [-1] * self.n_pred
        k = min(self.n_pred, self.n_gold)
        rows = (range(self.n_pred) if self.n_pred <= self.n_gold
                else sorted(rng.sample(range(self.n_pred), k)))
        for i, j in zip(rows, rng.sample(range(self.n_gold), k)):
            mapping[i] = j
        return mapping

    def climb(self, init: list[int]) -> tuple[list[int], int]:
        return _kernel.climb(init, self.n_gold, self.unary,
                             self.pi1, self.pi2, self.pj1, self.pj2)

    def score(self, mapping: list[int]) -> int:
        return _kernel.score_mapping(mapping, self.n_gold, self.unary,
                                     self.pi1, self.pi2, self.pj1, self.pj2)

    def to_names(self, mapping: list[int]) -> dict[str, str]:
        return {self.pred_vars[i]: self.gold_vars[j]
                for i, j in enumerate(mapping) if j >= 0}


def match(pred: Graph, gold: Graph, restarts: int = DEFAULT_RESTARTS,
          seed: int = 0) -> MatchResult:
    """Best triple overlap over restarted hill climbs; higher is better.

    One start pairs variables by local-triple overlap, the rest are
    random injections; the best climbed score wins.  An ill-formed
    prediction scores zero and is flagged rather than raised.
    """
    if restarts < 1:
        raise EvalError("restarts must be >= 1")
    if not validate(pred).ok:
        return _result(0, len(to_triples(pred).as_set()),
                       len(to_triples(gold).as_set()), {}, 0,
                       ill_formed=True)
    prob = _Problem(pred, gold)
    rng = random.Random(seed)
    cap = min(prob.pred_total, prob.gold_total)
    best_score = -1
    best_map: list[int] = []
    used = 0
    for r in range(restarts):
        init = prob.informed_init() if r == 0 else prob.random_init(rng)
        mapping, score = prob.climb(init)
        used += 1
        if score > best_score:
            best_score, best_map = score, mapping
        if best_score >= cap:
            break
    return _result(best_score, prob.pred_total, prob.gold_total,
                   prob.to_names(best_map), used)


BRUTE_FORCE_LIMIT = 8


def brute_force_match(pred: Graph, gold: Graph) -> MatchResult:
    """Exact best mapping by enumeration; factorial in the smaller side."""
    prob = _Problem(pred, gold)
    small = min(prob.n_pred, prob.n_gold)
    if small > BRUTE_FORCE_LIMIT:
        raise EvalError("brute force limited to %d variables on the smaller "
                        "side, got %d" % (BRUTE_FORCE_LIMIT, small))
    best_score = -1
    best_map = [-1] * prob.n_pred
    if prob.n_pred <= prob.n_gold:
        for perm in permutations(range(prob.n_gold), prob.n_pred):
            score = prob.score(list(perm))
            if score > best_score:
                best_score, best_map = score, list(perm)
    else:
        for perm in permutations(range(prob.n_pred), prob.n_gold):
            mapping = [-1] * prob.n_pred
            for j, i in enumerate(perm):
                mapping[i] = j
            score = prob.score(mapping)
            if score > best_score:
                best_score, best_map = score, mapping
    return _result(best_score, prob.pred_total, prob.gold_total,
                   prob.to_names(best_map), 0)


# ---------------------------------------------------------------------------
# Fine-grained breakdown

@dataclass(frozen=True)
class CategoryScore:
    matched: int
    pred_count: int
    gold_count: int
    precision: float
    recall: float
    f1: float


def _category_score(matched: int, n_pred: int, n_gold: int) -> CategoryScore:
    if n_pred == 0 and n_gold == 0:
        # nothing to get wrong on either side counts as full agreement
        return CategoryScore(0, 0, 0, 1.0, 1.0, 1.0)
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_gold if n_gold else 0.0
    return CategoryScore(matched, n_pred, n_gold, precision, recall,
                         _f1(precision, recall))


_POS_BUCKET = {"n": "synsets-nouns", "v": "synsets-verbs",
               "a": "synsets-adjectives", "r": "synsets-adverbs"}

CATEGORIES = ("operators", "roles", "concepts", "synsets-nouns",
              "synsets-verbs", "synsets-adjectives", "synsets-adverbs",
              "synsets-other", "presupposition")


def _category(triple: tuple[str, str, str]) -> str | None:
    s, r, t = triple
    if s == "TOP":
        return None
    if r == "instance":
        return "concepts"
    if r == "sense":
        return _POS_BUCKET.get(t.partition(".")[0], "synsets-other")
    if r == "presupposed":
        return "presupposition"
    if var_sort(s) == BOX_SORT:
        return "operators"
    return "roles"


def fine_grained(pred: Graph, gold: Graph,
                 mapping: dict[str, str]) -> dict[str, CategoryScore]:
    """Per-category scores under a fixed variable mapping.

    The named categories partition all non-TOP triples; the extra
    "-sense" row rescores the whole triple sets with sense attributes
    removed.
    """
    pred_ts = to_triples(pred).as_set()
    gold_ts = to_triples(gold).as_set()

    def image(triple):
        s, r, t = triple
        if s == "TOP":
            return (s, r, mapping.get(t, t))
        mapped_t = mapping.get(t, t) if r not in ("instance", "sense",
                                                  "presupposed") else t
        return (mapping.get(s, s), r, mapped_t)

    gold_by_cat: dict[str | None, set] = {}
    for triple in gold_ts:
        gold_by_cat.setdefault(_category(triple), set()).add(triple)
    pred_by_cat: dict[str | None, list] = {}
    for triple in pred_ts:
        pred_by_cat.setdefault(_category(triple), []).append(triple)

    out: dict[str, CategoryScore] = {}
    for cat in CATEGORIES:
        pred_c = pred_by_cat.get(cat, [])
        gold_c = gold_by_cat.get(cat, set())
        matched = sum(image(t) in gold_c for t in pred_c)
        out[cat] = _category_score(matched, len(pred_c), len(gold_c))

    no_sense_pred = [t for t in pred_ts if t[1] != "sense"]
    no_sense_gold = {t for t in gold_ts if t[1] != "sense"}
    matched = sum(image(t) in no_sense_gold for t in no_sense_pred)
    out["-sense"] = _category_score(matched, len(no_sense_pred),
                                    len(no_sense_gold))
    return out


# ---------------------------------------------------------------------------
# Corpus aggregation

@dataclass(frozen=True)
class CorpusResult:
    pairs: int
    matched: int
    pred_triples: int
    gold_triples: int
    precision: float
    recall: float
    f1: float
    ill_formed: int
    results: tuple[MatchResult, ...] = field(compare=False)

    @property
    def ill_formed_rate(self) -> float:
        return self.ill_formed / self.pairs if self.pairs else 0.0


def corpus_eval(preds: list[Graph], golds: list[Graph],
                restarts: int = DEFAULT_RESTARTS,
                seed: int = 0) -> CorpusResult:
    """Micro-averaged match over aligned prediction/gold lists."""
    if len(preds) != len(golds):
        raise EvalError("prediction/gold length mismatch: %d vs %d"
                        % (len(preds), len(golds)))
    results = tuple(match(p, g, restarts, seed)
                    for p, g in zip(preds, golds))
    matched = sum(r.matched for r in results)
    n_pred = sum(r.pred_triples for r in results)
    n_gold = sum(r.gold_triples for r in results)
    precision = matched / n_pred if n_pred else 0.0
    recall = matched / n_gold if n_gold else 0.0
    return CorpusResult(len(results), matched, n_pred, n_gold, precision,
                        recall, _f1(precision, recall),
                        sum(r.ill_formed for r in results), results)
