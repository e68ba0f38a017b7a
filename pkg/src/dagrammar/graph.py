"""Rooted, ordered, node-labeled DAGs with a PENMAN-style text form.

Nodes are variables whose first character is a sort letter (b for boxes,
x/e/s/t for individuals, events, states and times).  Boxes carry the label
□; other nodes carry a lemma, an optional word sense and an optional
presupposition mark, written ``lemma~sense^p``.  Edge order is significant
and is preserved by parsing, printing and conversion.

Reentrancy is explicit: every node except the root has exactly one
incoming edge with ``reentrant=False`` (its defining occurrence); any
further incoming edges are marked reentrant.  ``from_edges`` normalizes
the flags so that the defining occurrence is the first one reached in a
depth-first walk from the root following edge order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import GraphError, ParseError

BOX = "□"
BOX_SORT = "b"
DEFAULT_SORTS = "bxest"

_VAR_RE = re.compile(r"^([a-z])([0-9]+)$")
_RELATION_RE = re.compile(r"^[A-Za-z][A-Za-z0-9-]*$")
_LEMMA_RE = re.compile(r"^[^\s()/:~^]+$")


@dataclass(frozen=True)
class NodeLabel:
    """Node decoration: lemma, optional sense, presupposition mark."""

    lemma: str
    sense: str | None = None
    presupposed: bool = False

    def render(self) -> str:
        text = self.lemma
        if self.sense is not None:
            text += "~" + self.sense
        if self.presupposed:
            text += "^p"
        return text

    @staticmethod
    def parse(token: str) -> "NodeLabel":
        presup = token.endswith("^p")
        if presup:
            token = token[:-2]
        lemma, sep, sense = token.partition("~")
        if not lemma or not _LEMMA_RE.match(lemma):
            raise ParseError("malformed label %r" % token)
        if sep and not sense:
            raise ParseError("empty sense in label %r" % token)
        return NodeLabel(lemma, sense if sep else None, presup)


@dataclass(frozen=True)
class Edge:
    source: str
    label: str
    target: str
    reentrant: bool = False


@dataclass(frozen=True)
class Node:
    id: str
    label: NodeLabel
    edges: tuple[Edge, ...] = ()


def var_sort(var: str) -> str:
    return var[0]


def check_var(var: str, sorts: str = DEFAULT_SORTS) -> str:
    m = _VAR_RE.match(var)
    if not m:
        raise ParseError("malformed variable %r" % var)
    if m.group(1) not in sorts:
        raise ParseError("unknown sort letter %r in variable %r" % (var[0], var))
    return var


class Graph:
    """Immutable rooted ordered DAG.  Treat nodes and edges as read-only."""

    def __init__(self, root: str, nodes: tuple[Node, ...] | list[Node]):
        self.root = root
        self.nodes = tuple(nodes)
        self._by_id: dict[str, Node] = {}
        for node in self.nodes:
            if node.id not in self._by_id:
                self._by_id[node.id] = node
            if node.label.lemma == BOX and var_sort(node.id) != BOX_SORT:
                raise GraphError("box label on non-box variable %r" % node.id)
        if root not in self._by_id:
            raise GraphError("root %r is not a node" % root)

    def node(self, var: str) -> Node:
        return self._by_id[var]

    def has_node(self, var: str) -> bool:
        return var in self._by_id

    def edges(self) -> list[Edge]:
        return [e for n in self.nodes for e in n.edges]

    def var_names(self) -> list[str]:
        return [n.id for n in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Graph) and self.root == other.root
                and self.nodes == other.nodes)

    def __hash__(self) -> int:
        return hash((self.root, self.nodes))

    def __repr__(self) -> str:
        return "Graph(root=%r, nodes=%d, edges=%d)" % (
            self.root, len(self.nodes), len(self.edges()))


def from_edges(root: str,
               labels: dict[str, NodeLabel],
               edges: list[tuple[str, str, str]]) -> Graph:
    """Build a graph from labels plus (source, relation, target) triples.

    Edge order per source is kept as given.  Reentrant flags are assigned
    so that each node's defining occurrence is the first edge reaching it
    in a depth-first walk from the root; node order is that visit order.
    """
    outgoing: dict[str, list[tuple[str, str]]] = {v: [] for v in labels}
    for src, rel, tgt in edges:
        if src not in labels:
            raise GraphError("edge source %r has no label" % src)
        if tgt not in labels:
            raise GraphError("edge target %r has no label" % tgt)
        outgoing[src].append((rel, tgt))
    if root not in labels:
        raise GraphError("root %r has no label" % root)

    order: list[str] = []
    defined: set[str] = set()
    node_edges: dict[str, list[Edge]] = {v: [] for v in labels}

    def visit(var: str) -> None:
        defined.add(var)
        order.append(var)
        for rel, tgt in outgoing[var]:
            first = tgt not in defined
            node_edges[var].append(Edge(var, rel, tgt, reentrant=not first))
            if first:
                visit(tgt)

    visit(root)
    for var in labels:  # unreachable nodes still become nodes; validate flags them
        if var not in defined:
            order.append(var)
            for rel, tgt in outgoing[var]:
                node_edges[var].append(Edge(var, rel, tgt, reentrant=tgt in defined))
                defined.add(tgt)
    nodes = tuple(Node(v, labels[v], tuple(node_edges[v])) for v in order)
    return Graph(root, nodes)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


@dataclass
class WellFormednessReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "well-formed"
        return "; ".join("%s: %s" % (v.code, v.detail) for v in self.violations)


def validate(g: Graph) -> WellFormednessReport:
    """Well-formedness report; never raises.

    Codes: multiple-roots, cycle, disconnected, unlabeled-node, duplicate-id.
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for node in g.nodes:
        if node.id in seen:
            out.append(Violation("duplicate-id", node.id))
        seen.add(node.id)
        if not node.label.lemma:
            out.append(Violation("unlabeled-node", node.id))

    dangling = False
    for edge in g.edges():
        if not g.has_node(edge.target):
            out.append(Violation("disconnected",
                                 "edge target %r undefined" % edge.target))
            dangling = True
    if dangling:
        return WellFormednessReport(out)

    indeg: dict[str, int] = {n.id: 0 for n in g.nodes}
    for edge in g.edges():
        indeg[edge.target] += 1
    roots = [v for v, d in indeg.items() if d == 0]
    if len(roots) > 1:
        out.append(Violation("multiple-roots", " ".join(sorted(roots))))
    if g.root not in roots:
        out.append(Violation("multiple-roots",
                             "declared root %r has an incoming edge" % g.root))

    # iterative three-color DFS over every node catches cycles off the root
    color: dict[str, int] = {n.id: 0 for n in g.nodes}
    for start in g.var_names():
        if color[start]:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = 1
        while stack:
            var, i = stack[-1]
            kids = g.node(var).edges
            if i < len(kids):
                stack[-1] = (var, i + 1)
                tgt = kids[i].target
                if color[tgt] == 1:
                    out.append(Violation("cycle", "%s -> %s" % (var, tgt)))
                elif color[tgt] == 0:
                    color[tgt] = 1
                    stack.append((tgt, 0))
            else:
                color[var] = 2
                stack.pop()

    reach: set[str] = set()
    frontier = [g.root]
    while frontier:
        var = frontier.pop()
        if var in reach:
            continue
        reach.add(var)
        frontier.extend(e.target for e in g.node(var).edges)
    unreachable = [n.id for n in g.nodes if n.id not in reach]
    if unreachable:
        out.append(Violation("disconnected", " ".join(sorted(set(unreachable)))))
    return WellFormednessReport(out)


# ---------------------------------------------------------------------------
# PENMAN text form

def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text:
        if ch in "()/":
            if buf:
                tokens.append("".join(buf))
                buf = []
            tokens.append(ch)
        elif ch.isspace():
            if buf:
                tokens.append("".join(buf))
                buf = []
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    return tokens


def parse_penman(text: str, sorts: str = DEFAULT_SORTS) -> Graph:
    """Parse one PENMAN block into a graph.

    References may precede their definition; reentrant flags are
    normalized by ``from_edges``.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty graph text")
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expect: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unbalanced parentheses: unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if expect is not None and tok != expect:
            raise ParseError("expected %r, found %r" % (expect, tok))
        return tok

    labels: dict[str, NodeLabel] = {}
    edges: list[tuple[str, str, str]] = []
    referenced: list[str] = []

    def parse_node() -> str:
        take("(")
        var = check_var(take(), sorts)
        take("/")
        label_tok = take()
        if label_tok in "()/":
            raise ParseError("missing label after %r /" % var)
        if var in labels:
            raise ParseError("duplicate definition of %r" % var)
        labels[var] = (NodeLabel(BOX) if label_tok == BOX
                       else NodeLabel.parse(label_tok))
        while peek() != ")":
            tok = take()
            if not tok.startswith(":") or len(tok) < 2:
                raise ParseError("expected relation, found %r" % tok)
            rel = tok[1:]
            if not _RELATION_RE.match(rel):
                raise ParseError("malformed relation %r" % rel)
            if peek() == "(":
                tgt = parse_node()
            else:
                val = take()
                if val in "()/":
                    raise ParseError("empty relation :%s" % rel)
                tgt = check_var(val, sorts)
                referenced.append(tgt)
            edges.append((var, rel, tgt))
        take(")")
        return var

    root = parse_node()
    if pos != len(tokens):
        raise ParseError("trailing tokens after graph: %r" % tokens[pos])
    for var in referenced:
        if var not in labels:
            raise ParseError("reference to undefined variable %r" % var)
    return from_edges(root, labels, edges)


def print_penman(g: Graph) -> str:
    """Canonical single-line PENMAN form; inverse of parse_penman.

    The subtree of each node is emitted at its first depth-first
    occurrence (by edge order); later occurrences are bare references.
    """
    report = validate(g)
    if not report.ok:
        raise GraphError("cannot print ill-formed graph (%s)" % report)
    printed: set[str] = set()

    def emit(var: str) -> str:
        printed.add(var)
        node = g.node(var)
        parts = ["(%s/%s" % (var, node.label.render())]
        for edge in node.edges:
            if edge.target in printed:
                parts.append(":%s %s" % (edge.label, edge.target))
            else:
                parts.append(":%s %s" % (edge.label, emit(edge.target)))
        return " ".join(parts) + ")"

    return emit(g.root)


# ---------------------------------------------------------------------------
# Triples and canonical renaming

@dataclass(frozen=True)
class TripleSet:
    """Triple view used by the evaluator.

    instances: (var, "instance", lemma); attributes: (var, name, value)
    for senses and presupposition marks; relations: (src, label, tgt);
    plus one ("TOP", "top", root) triple exposed via ``all()``.
    """

    top: str
    instances: tuple[tuple[str, str, str], ...]
    attributes: tuple[tuple[str, str, str], ...]
    relations: tuple[tuple[str, str, str], ...]

    def all(self) -> list[tuple[str, str, str]]:
        return [("TOP", "top", self.top), *self.instances,
                *self.attributes, *self.relations]

    def as_set(self) -> frozenset[tuple[str, str, str]]:
        return frozenset(self.all())

    def __len__(self) -> int:
        return 1 + len(self.instances) + len(self.attributes) + len(self.relations)


def to_triples(g: Graph) -> TripleSet:
    instances = []
    attributes = []
    relations = []
    for node in g.nodes:
        instances.append((node.id, "instance", node.label.lemma))
        if node.label.sense is not None:
            attributes.append((node.id, "sense", node.label.sense))
        if node.label.presupposed:
            attributes.append((node.id, "presupposed", "true"))
        for edge in node.edges:
            relations.append((edge.source, edge.label, edge.target))
    return TripleSet(g.root, tuple(instances), tuple(attributes), tuple(relations))


def canonical_rename(g: Graph) -> Graph:
    """Rename variables to per-sort counters in depth-first visit order."""
    counters: dict[str, int] = {}
    mapping: dict[str, str] = {}
    seen: set[str] = set()

    def visit(var: str) -> None:
        seen.add(var)
        sort = var_sort(var)
        counters[sort] = counters.get(sort, 0) + 1
        mapping[var] = "%s%d" % (sort, counters[sort])
        for edge in g.node(var).edges:
            if edge.target not in seen:
                visit(edge.target)

    visit(g.root)
    for node in g.nodes:  # unreachable nodes keep deterministic names too
        if node.id not in seen:
            visit(node.id)
    nodes = tuple(
        Node(mapping[n.id], n.label,
             tuple(Edge(mapping[e.source], e.label, mapping[e.target], e.reentrant)
                   for e in n.edges))
        for n in g.nodes)
    return Graph(mapping[g.root], nodes)


def is_isomorphic(g1: Graph, g2: Graph) -> bool:
    """Identity up to canonical renaming (edge order significant)."""
    a, b = canonical_rename(g1), canonical_rename(g2)
    return a.root == b.root and a.nodes == b.nodes


# ---------------------------------------------------------------------------
# Corpus files: blank-line-separated blocks, '#' comment lines

def split_blocks(text: str) -> list[str]:
    blocks: list[str] = []
    current: list[str] = []
    for line in text.splitlines():
        if line.lstrip().startswith("#"):
            continue
        if line.strip():
            current.append(line)
        elif current:
            blocks.append("\n".join(current))
            current = []
    if current:
        blocks.append("\n".join(current))
    return blocks


def loads_corpus(text: str, sorts: str = DEFAULT_SORTS) -> list[Graph]:
    return [parse_penman(block, sorts) for block in split_blocks(text)]


def load_corpus(path: str, sorts: str = DEFAULT_SORTS) -> list[Graph]:
    with open(path, encoding="utf-8") as fh:
        return loads_corpus(fh.read(), sorts)


def dumps_corpus(graphs: list[Graph]) -> str:
    return "\n\n".join(print_penman(g) for g in graphs) + "\n"


def dump_corpus(graphs: list[Graph], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_corpus(graphs))
