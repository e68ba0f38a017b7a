"""Box structures (clause files) and their conversion to and from graphs.

A document is a list of clauses, one per line::

    b2 REF x1            referent declaration (zero or more variables)
    b2 COND ship x1      unary condition: node label (sense as ship~n.02)
    b2 COND PartOf x1 x2 binary condition: edge between variables
    b1 OP IMP b2 b3      operator between boxes (unary or binary)
    b4 PRESUP b2         b4 is presuppositional, anchored at b2

Conversion rules: main boxes become □ nodes; each box with content gets a
Drs edge to its head variable (head of its first binary condition, else
its first referent); binary operators are split into numbered edges to
preserve operand order; unary conditions label nodes; binary conditions
become edges; variables of presuppositional boxes are marked ^p and their
box disappears.  Non-box nodes left without an incoming edge are repaired
by reversing their first outgoing edge and suffixing the label with "Of".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ConversionError, ParseError
from .graph import (BOX, BOX_SORT, DEFAULT_SORTS, Graph, NodeLabel,
                    check_var, from_edges, split_blocks, validate, var_sort)

_OP_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9]*$")
_NUMBERED_RE = re.compile(r"^([A-Za-z][A-Za-z0-9-]*?)([0-9]+)$")

DRS_EDGE = "Drs"
REVERSAL_SUFFIX = "Of"


@dataclass
class Condition:
    predicate: str
    args: tuple[str, ...]
    sense: str | None = None

    @property
    def unary(self) -> bool:
        return len(self.args) == 1


@dataclass
class Box:
    name: str
    referents: list[str] = field(default_factory=list)
    conditions: list[Condition] = field(default_factory=list)


@dataclass
class Operator:
    box: str
    name: str
    args: tuple[str, ...]


@dataclass
class Presupposition:
    box: str
    anchor: str


@dataclass
class BoxStructure:
    boxes: list[Box] = field(default_factory=list)
    operators: list[Operator] = field(default_factory=list)
    presuppositions: list[Presupposition] = field(default_factory=list)

    def box(self, name: str) -> Box:
        for box in self.boxes:
            if box.name == name:
                return box
        raise KeyError(name)

    def presupposed_boxes(self) -> set[str]:
        return {p.box for p in self.presuppositions}


# ---------------------------------------------------------------------------
# Clause text

def parse_clauses(text: str, sorts: str = DEFAULT_SORTS) -> BoxStructure:
    """Parse one clause document.  Declaration order is preserved."""
    bs = BoxStructure()
    by_name: dict[str, Box] = {}

    def declare(name: str) -> Box:
        if name not in by_name:
            box = Box(name)
            by_name[name] = box
            bs.boxes.append(box)
        return by_name[name]

    lines = [ln for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    for line in lines:
        tokens = line.split()
        if len(tokens) < 2:
            raise ParseError("malformed clause %r" % line)
        box_name = check_var(tokens[0], sorts)
        if var_sort(box_name) != BOX_SORT:
            raise ParseError("clause subject %r is not a box" % box_name)
        keyword, args = tokens[1], tokens[2:]
        box = declare(box_name)
        if keyword == "REF":
            for var in args:
                check_var(var, sorts)
                if var_sort(var) == BOX_SORT:
                    raise ParseError("box-sorted referent %r" % var)
                box.referents.append(var)
        elif keyword == "COND":
            if not 2 <= len(args) <= 3:
                raise ParseError("COND arity in %r" % line)
            pred = args[0]
            label = NodeLabel.parse(pred)
            if label.presupposed:
                raise ParseError(
                    "presupposition marks belong on boxes, not %r" % pred)
            for var in args[1:]:
                check_var(var, sorts)
                if var_sort(var) == BOX_SORT:
                    raise ParseError("box-sorted condition argument %r" % var)
            box.conditions.append(
                Condition(label.lemma, tuple(args[1:]), label.sense))
        elif keyword == "OP":
            if not 2 <= len(args) <= 3:
                raise ParseError("OP arity in %r" % line)
            name = args[0]
            if not _OP_NAME_RE.match(name):
                raise ParseError("malformed operator name %r" % name)
            for arg in args[1:]:
                check_var(arg, sorts)
                if var_sort(arg) != BOX_SORT:
                    raise ParseError("operator argument %r is not a box" % arg)
            bs.operators.append(Operator(box_name, name.upper(), tuple(args[1:])))
        elif keyword == "PRESUP":
            if len(args) != 1:
                raise ParseError("PRESUP arity in %r" % line)
            anchor = check_var(args[0], sorts)
            if var_sort(anchor) != BOX_SORT:
                raise ParseError("PRESUP anchor %r is not a box" % anchor)
            bs.presuppositions.append(Presupposition(box_name, anchor))
        else:
            raise ParseError("unknown keyword %r in %r" % (keyword, line))

    declared = set(by_name)
    for op in bs.operators:
        for arg in op.args:
            if arg not in declared:
                raise ParseError("undeclared box %r in operator %s" % (arg, op.name))
    for pre in bs.presuppositions:
        if pre.anchor not in declared:
            raise ParseError("undeclared anchor box %r" % pre.anchor)

    homes: dict[str, str] = {}
    for box in bs.boxes:
        for var in box.referents:
            if var in homes:
                raise ParseError(
                    "variable %r declared in %s and %s" % (var, homes[var], box.name))
            homes[var] = box.name
    for box in bs.boxes:
        for cond in box.conditions:
            for var in cond.args:
                if var not in homes:
                    raise ParseError("variable %r is not declared by any REF" % var)
    return bs


def render_clauses(bs: BoxStructure) -> str:
    lines: list[str] = []
    for box in bs.boxes:
        emitted = False
        if box.referents:
            lines.append("%s REF %s" % (box.name, " ".join(box.referents)))
            emitted = True
        for cond in box.conditions:
            pred = cond.predicate
            if cond.sense is not None:
                pred += "~" + cond.sense
            lines.append("%s COND %s %s" % (box.name, pred, " ".join(cond.args)))
            emitted = True
        for op in bs.operators:
            if op.box == box.name:
                lines.append("%s OP %s %s" % (box.name, op.name, " ".join(op.args)))
                emitted = True
        for pre in bs.presuppositions:
            if pre.box == box.name:
                lines.append("%s PRESUP %s" % (box.name, pre.anchor))
                emitted = True
        if not emitted:
            lines.append("%s REF" % box.name)  # bare declaration
    return "\n".join(lines) + "\n"


def loads_clause_corpus(text: str, sorts: str = DEFAULT_SORTS) -> list[BoxStructure]:
    return [parse_clauses(block, sorts) for block in split_blocks(text)]


def load_clause_corpus(path: str, sorts: str = DEFAULT_SORTS) -> list[BoxStructure]:
    with open(path, encoding="utf-8") as fh:
        return loads_clause_corpus(fh.read(), sorts)


def dumps_clause_corpus(docs: list[BoxStructure]) -> str:
    return "\n".join(render_clauses(doc) for doc in docs)


def dump_clause_corpus(docs: list[BoxStructure], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_clause_corpus(docs))


# ---------------------------------------------------------------------------
# Boxes -> graph

def _head_variable(box: Box) -> str | None:
    for cond in box.conditions:
        if not cond.unary:
            return cond.args[0]
    if box.referents:
        return box.referents[0]
    return None


def boxes_to_graph(bs: BoxStructure, sorts: str = DEFAULT_SORTS) -> Graph:
    """Convert one box structure to a rooted DAG.

    Raises ConversionError when no single-rooted acyclic fully-labeled
    graph can be built (the failure modes the corpus statistics count).
    """
    presup_boxes = bs.presupposed_boxes()
    main_boxes = [b for b in bs.boxes if b.name not in presup_boxes]
    for op in bs.operators:
        if op.box in presup_boxes:
            raise ConversionError(
                "operator %s inside presuppositional box %r" % (op.name, op.box))

    presup_vars: set[str] = set()
    for box in bs.boxes:
        if box.name in presup_boxes:
            presup_vars.update(box.referents)

    labels: dict[str, NodeLabel] = {}
    for box in bs.boxes:
        for cond in box.conditions:
            if cond.unary:
                var = cond.args[0]
                if var in labels:
                    raise ConversionError(
                        "multiple labels for variable %r" % var)
                labels[var] = NodeLabel(cond.predicate, cond.sense,
                                        var in presup_vars)
    all_vars = [v for box in bs.boxes for v in box.referents]
    for var in all_vars:
        if var not in labels:
            raise ConversionError("variable %r has no unary condition" % var)
    for box in main_boxes:
        labels[box.name] = NodeLabel(BOX)

    # per-source ordered edge lists; per box: Drs first, then conditions
    # in clause order, then operator edges in document order
    outgoing: dict[str, list[tuple[str, str]]] = {v: [] for v in labels}
    for box in main_boxes:
        head = _head_variable(box)
        if head is not None:
            outgoing[box.name].append((DRS_EDGE, head))
        for op in bs.operators:
            if op.box != box.name:
                continue
            for arg in op.args:
                if arg in presup_boxes:
                    raise ConversionError(
                        "operator %s targets presuppositional box %r"
                        % (op.name, arg))
            if len(op.args) == 1:
                outgoing[box.name].append((op.name.capitalize(), op.args[0]))
            else:
                outgoing[box.name].append((op.name.capitalize() + "1", op.args[0]))
                outgoing[box.name].append((op.name.capitalize() + "2", op.args[1]))
    for box in bs.boxes:
        for cond in box.conditions:
            if not cond.unary:
                if cond.sense is not None:
                    raise ConversionError(
                        "sense on binary condition %r" % cond.predicate)
                src, tgt = cond.args
                outgoing[src].append((cond.predicate, tgt))

    _repair_extra_roots(outgoing, labels)

    indeg = {v: 0 for v in labels}
    for src, targets in outgoing.items():
        for _, tgt in targets:
            indeg[tgt] += 1
    roots = [b.name for b in main_boxes if indeg[b.name] == 0]
    if len(roots) != 1:
        raise ConversionError("expected one root box, found %r" % roots)

    flat = [(src, rel, tgt)
            for src in labels for rel, tgt in outgoing[src]]
    g = from_edges(roots[0], labels, flat)
    report = validate(g)
    if not report.ok:
        raise ConversionError("conversion produced ill-formed graph (%s)" % report)
    return g


def _repair_extra_roots(outgoing: dict[str, list[tuple[str, str]]],
                        labels: dict[str, NodeLabel]) -> None:
    """Reverse edges out of rootless non-box nodes, in place.

    Deterministic: always the lexicographically first rootless variable,
    always its first not-yet-reversed outgoing edge.  Reversed edges are
    appended to the new source's list with an "Of"-suffixed label.
    """
    reversed_edges: set[int] = set()
    marks: dict[str, list[bool]] = {v: [False] * len(outgoing[v]) for v in outgoing}

    def indegrees() -> dict[str, int]:
        deg = {v: 0 for v in outgoing}
        for targets in outgoing.values():
            for _, tgt in targets:
                deg[tgt] += 1
        return deg

    for _ in range(sum(len(v) for v in outgoing.values()) + 1):
        deg = indegrees()
        rootless = sorted(v for v, d in deg.items()
                          if d == 0 and labels[v].lemma != BOX)
        if not rootless:
            return
        var = rootless[0]
        pick = next((i for i, m in enumerate(marks[var]) if not m), None)
        if pick is None:
            raise ConversionError(
                "no orientation gives %r an incoming edge" % var)
        rel, tgt = outgoing[var].pop(pick)
        marks[var].pop(pick)
        outgoing[tgt].append((rel + REVERSAL_SUFFIX, var))
        marks[tgt].append(True)
    raise ConversionError("edge reversal did not converge")


# ---------------------------------------------------------------------------
# Graph -> boxes

def graph_to_boxes(g: Graph) -> BoxStructure:
    """Inverse of boxes_to_graph up to condition ordering.

    Drs edges are dropped (the head rule restores them), numbered operator
    edges are merged back into operator clauses, presupposed nodes are
    emitted into fresh presupposition boxes anchored at their defining
    box, and reversed "...Of" edges onto state variables are folded back
    into forward conditions unless that would change the box's head.
    """
    report = validate(g)
    if not report.ok:
        raise ConversionError("cannot convert ill-formed graph (%s)" % report)
    if var_sort(g.root) != BOX_SORT or g.node(g.root).label.lemma != BOX:
        raise ConversionError("root %r is not a box" % g.root)

    defined: set[str] = set()
    bs = BoxStructure()
    presup_nodes: list[tuple[str, str]] = []  # (variable, anchor box)
    box_queue: list[str] = []

    incoming: dict[str, int] = {v: 0 for v in g.var_names()}
    for node in g.nodes:
        for edge in node.edges:
            incoming[edge.target] += 1

    def is_box(var: str) -> bool:
        return g.node(var).label.lemma == BOX

    def foldable(edge) -> bool:
        # safe to fold back only onto a leaf state with no other incoming
        # edge: reconversion then re-reverses exactly this edge
        return (edge.label.endswith(REVERSAL_SUFFIX)
                and len(edge.label) > len(REVERSAL_SUFFIX)
                and var_sort(edge.target) == "s"
                and incoming[edge.target] == 1
                and not g.node(edge.target).edges)

    def walk(var: str, box: Box, unreverse_here: bool) -> None:
        """Emit conditions for var's defining subtree into box."""
        defined.add(var)
        node = g.node(var)
        if node.label.lemma == BOX:
            raise ConversionError(
                "box %r reached through a condition edge" % var)
        if node.label.presupposed:
            presup_nodes.append((var, box.name))
        else:
            box.referents.append(var)
            box.conditions.append(
                Condition(node.label.lemma, (var,), node.label.sense))
        for edge in node.edges:
            if is_box(edge.target):
                raise ConversionError(
                    "edge %s from variable %r to box %r is not expressible"
                    % (edge.label, var, edge.target))
            fold = unreverse_here and foldable(edge)
            if not fold:
                box.conditions.append(Condition(edge.label, (var, edge.target)))
            if edge.target not in defined:
                walk(edge.target, box, True)
            if fold:
                stem = edge.label[:-len(REVERSAL_SUFFIX)]
                box.conditions.append(Condition(stem, (edge.target, var)))

    def visit_box(var: str) -> None:
        defined.add(var)
        node = g.node(var)
        box = Box(var)
        bs.boxes.append(box)
        ops: list[Operator] = []
        pending = 0  # edges of a half-seen binary operator
        for edge in node.edges:
            if edge.label == DRS_EDGE:
                if is_box(edge.target):
                    raise ConversionError("box-valued %s edge" % DRS_EDGE)
                if edge.target in defined:
                    raise ConversionError(
                        "%s target %r defined twice" % (DRS_EDGE, edge.target))
                head = edge.target
                walk(head, box, unreverse_here=False)
                _try_unreverse_head(g, box, head)
            elif is_box(edge.target):
                m = _NUMBERED_RE.match(edge.label)
                if m and m.group(2) == "1":
                    ops.append(Operator(var, m.group(1).upper(), (edge.target,)))
                    pending = 1
                elif (m and m.group(2) == "2" and pending
                        and m.group(1).upper() == ops[-1].name):
                    prev = ops[-1]
                    ops[-1] = Operator(var, prev.name, prev.args + (edge.target,))
                    pending = 0
                elif m:
                    raise ConversionError(
                        "operator edge numbering broken at %r" % edge.label)
                else:
                    ops.append(Operator(var, edge.label.upper(), (edge.target,)))
                    pending = 0
                if edge.target not in defined:
                    box_queue.append(edge.target)
            else:
                raise ConversionError(
                    "edge %s from box %r to variable %r without %s"
                    % (edge.label, var, edge.target, DRS_EDGE))
        if pending:
            raise ConversionError("operator edge numbering broken at %r" % var)
        bs.operators.extend(ops)

    box_queue.append(g.root)
    while box_queue:
        nxt = box_queue.pop(0)
        if nxt not in {b.name for b in bs.boxes}:
            visit_box(nxt)

    counter = _next_box_counter(g)
    for var, anchor in presup_nodes:
        name = "b%d" % counter
        counter += 1
        node = g.node(var)
        pbox = Box(name, [var],
                   [Condition(node.label.lemma, (var,), node.label.sense)])
        bs.boxes.append(pbox)
        bs.presuppositions.append(Presupposition(name, anchor))
    return bs


def _try_unreverse_head(g: Graph, box: Box, head: str) -> None:
    """Fold head-level "...Of" edges forward unless the head rule breaks."""
    incoming: dict[str, int] = {v: 0 for v in g.var_names()}
    for node in g.nodes:
        for edge in node.edges:
            incoming[edge.target] += 1
    folded: list[Condition] = []
    for cond in box.conditions:
        if (not cond.unary and cond.args[0] == head
                and cond.predicate.endswith(REVERSAL_SUFFIX)
                and len(cond.predicate) > len(REVERSAL_SUFFIX)
                and var_sort(cond.args[1]) == "s"
                and incoming[cond.args[1]] == 1
                and not g.node(cond.args[1]).edges):
            folded.append(Condition(cond.predicate[:-len(REVERSAL_SUFFIX)],
                                    (cond.args[1], cond.args[0])))
        else:
            folded.append(cond)
    trial = Box(box.name, box.referents, folded)
    if _head_variable(trial) == head:
        box.conditions = folded
    elif _head_variable(box) != head:
        raise ConversionError(
            "head variable of box %r is not recoverable" % box.name)


def _next_box_counter(g: Graph) -> int:
    highest = 0
    for var in g.var_names():
        if var_sort(var) == BOX_SORT and var[1:].isdigit():
            highest = max(highest, int(var[1:]))
    return highest + 1
