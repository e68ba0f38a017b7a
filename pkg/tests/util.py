"""Random graph and clause-document generators used by several test modules."""

import random

from dagrammar.boxes import Box, BoxStructure, Condition, Operator, Presupposition
from dagrammar.graph import BOX, Graph, NodeLabel, from_edges

LEMMAS = ["ship", "dock", "anchor", "need", "big", "cat", "dog", "chase",
          "sleep", "red", "house", "give", "book", "old", "run", "sea"]
RELATIONS = ["Agent", "Theme", "Pivot", "Patient", "Topic", "PartOf",
             "Attribute", "Location", "Time"]
BOX_RELATIONS = ["Drs", "Imp1", "Imp2", "Not", "Result1", "Result2"]
SENSES = [None, None, "n.01", "n.02", "v.01", "a.01", "r.01"]


def random_label(rng: random.Random, sort: str) -> NodeLabel:
    if sort == "b":
        return NodeLabel(BOX)
    return NodeLabel(rng.choice(LEMMAS), rng.choice(SENSES),
                     rng.random() < 0.15)


def random_graph(rng: random.Random, max_nodes: int = 12,
                 reentrancy: float = 0.3) -> Graph:
    """Random rooted DAG: a random tree plus extra edges into earlier nodes.

    Extra edges always point from a later tree node to a strictly earlier
    one outside its own subtree path, so the result stays acyclic.
    """
    n = rng.randint(1, max_nodes)
    sorts = ["b"] + [rng.choice("bxest") for _ in range(n - 1)]
    counters: dict[str, int] = {}
    names = []
    for sort in sorts:
        counters[sort] = counters.get(sort, 0) + 1
        names.append("%s%d" % (sort, counters[sort]))
    labels = {name: random_label(rng, name[0]) for name in names}

    # every edge runs from a smaller to a larger index, so the result is a DAG
    edges = []
    for i in range(1, n):
        parent = names[rng.randrange(i)]
        rel = rng.choice(BOX_RELATIONS if parent[0] == "b" else RELATIONS)
        edges.append((parent, rel, names[i]))
    for i in range(1, n):
        if rng.random() < reentrancy:
            src = names[rng.randrange(i)]
            rel = rng.choice(BOX_RELATIONS if src[0] == "b" else RELATIONS)
            edges.append((src, rel, names[i]))

    # group edges by source, keeping insertion order within each source
    by_src: dict[str, list[tuple[str, str, str]]] = {}
    for e in edges:
        by_src.setdefault(e[0], []).append(e)
    flat = [e for name in names for e in by_src.get(name, [])]
    return from_edges(names[0], labels, flat)


OPERATORS = [("IMP", 2), ("RESULT", 2), ("NOT", 1), ("POS", 1), ("NEC", 1)]
VAR_SORTS = "xxxees"  # weighted draw


def random_clause_doc(rng: random.Random, max_boxes: int = 4,
                      max_vars: int = 5,
                      relations: list[str] | None = None) -> BoxStructure:
    """Random well-formed clause document.

    Box tree built with operators, each box holding a small variable tree
    headed by its first referent, occasional cross-box reentrant edges,
    presupposed definites, and rootless state modifiers that exercise the
    edge-reversal repair.  Conversion to a graph always succeeds.

    A small `relations` vocabulary keeps the extracted grammar narrow:
    fragment types are told apart by relation names, not labels.
    """
    if relations is None:
        relations = RELATIONS
    bs = BoxStructure()
    n_boxes = rng.randint(1, max_boxes)
    boxes = [Box("b1")]
    while len(boxes) < n_boxes:
        parent = rng.choice(boxes)
        name, arity = rng.choice(OPERATORS)
        kids = []
        for _ in range(arity):
            kid = Box("b%d" % (len(boxes) + 1))
            boxes.append(kid)
            kids.append(kid.name)
        bs.operators.append(Operator(parent.name, name, tuple(kids)))
    bs.boxes.extend(boxes)

    var_count: dict[str, int] = {}

    def fresh(sort: str) -> str:
        var_count[sort] = var_count.get(sort, 0) + 1
        return "%s%d" % (sort, var_count[sort])

    presup_counter = [len(boxes)]
    defined_per_box: list[list[str]] = []

    def presuppose(var: str, anchor: str, label: NodeLabel) -> None:
        presup_counter[0] += 1
        pbox = Box("b%d" % presup_counter[0], [var],
                   [Condition(label.lemma, (var,), label.sense)])
        bs.boxes.append(pbox)
        bs.presuppositions.append(Presupposition(pbox.name, anchor))

    for box in boxes:
        local: list[str] = []
        if rng.random() < 0.85 or len(boxes) == 1:
            n_vars = rng.randint(1, max_vars)
            head = fresh(rng.choice("xe"))
            box.referents.append(head)
            box.conditions.append(
                Condition(rng.choice(LEMMAS), (head,), rng.choice(SENSES)))
            local.append(head)
            for _ in range(n_vars - 1):
                parent = rng.choice(local)
                var = fresh(rng.choice(VAR_SORTS))
                label = NodeLabel(rng.choice(LEMMAS), rng.choice(SENSES))
                if rng.random() < 0.2:
                    presuppose(var, box.name, label)
                else:
                    box.referents.append(var)
                    box.conditions.append(
                        Condition(label.lemma, (var,), label.sense))
                box.conditions.append(
                    Condition(rng.choice(relations), (parent, var)))
                local.append(var)
            # cross-box reentrancy into earlier boxes only, so no cycles
            earlier = [v for vs in defined_per_box for v in vs]
            if earlier and rng.random() < 0.4:
                box.conditions.append(Condition(
                    rng.choice(relations),
                    (rng.choice(local), rng.choice(earlier))))
            # rootless state modifier, repaired by edge reversal
            if rng.random() < 0.3:
                state = fresh("s")
                box.referents.append(state)
                box.conditions.append(
                    Condition(rng.choice(LEMMAS), (state,), None))
                box.conditions.append(
                    Condition("Topic", (state, rng.choice(local))))
                local.append(state)
        defined_per_box.append(local)
    return bs
