"""Production templates and their extraction from graphs.

A production rewrites a ranked nonterminal into one fragment: a root node
plus its outgoing edges, written like a one-level graph::

    T0 -> (b/□ :Imp1 T1($1) :Imp2 T1($1))
    T1($1) -> (e/L :Pivot $1 :Theme T0)
    T1(x) -> (x/L :PartOf T0)

Slots ($1, $2, ...) are shared-variable placeholders: a nonterminal call
passes slot instances down, a bare slot mention becomes a reentrant edge
to whatever node the slot is bound to, and an LHS written with the root
sort letter instead of a slot binds the passed slot to the fragment root.
L marks an open label to be filled by a separate label action; □ is kept
verbatim.  Extraction produces one production per node, introducing each
shared variable's slot at the lowest fragment whose subtree does not
enclose all of its mentions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GrammarExtractionError, ParseError
from .graph import (BOX, BOX_SORT, DEFAULT_SORTS, Graph, NodeLabel,
                    _RELATION_RE, _tokenize, validate)


@dataclass(frozen=True)
class NonterminalCall:
    rank: int
    args: tuple[int, ...] = ()


@dataclass(frozen=True)
class Reference:
    slot: int


@dataclass(frozen=True)
class Item:
    relation: str
    target: NonterminalCall | Reference


@dataclass(frozen=True)
class Production:
    """One fragment template.  Instances are canonical: construction
    fails unless slots are numbered by first mention, every slot is
    eventually bindable, and call ranks match their argument counts."""

    lhs_rank: int
    root_binds: bool
    root_sort: str
    root_label: str | None  # None: open label; otherwise the constant □
    items: tuple[Item, ...] = ()

    def __post_init__(self):
        if self.lhs_rank < 0:
            raise ParseError("negative rank")
        if self.root_binds and self.lhs_rank < 1:
            raise ParseError("root binding needs at least one slot")
        if len(self.root_sort) != 1 or self.root_sort not in DEFAULT_SORTS:
            raise ParseError("unknown root sort %r" % self.root_sort)
        if self.root_label is not None and self.root_label != BOX:
            raise ParseError("constant root label must be %s" % BOX)
        if self.root_label == BOX and self.root_sort != BOX_SORT:
            raise ParseError("%s requires sort %s" % (BOX, BOX_SORT))
        lhs_slots = self.lhs_rank - (1 if self.root_binds else 0)
        seen: list[int] = []
        passed: set[int] = set()
        for item in self.items:
            if not _RELATION_RE.match(item.relation):
                raise ParseError("malformed relation %r" % item.relation)
            if isinstance(item.target, NonterminalCall):
                call = item.target
                if call.rank != len(call.args):
                    raise ParseError("call rank %d with %d arguments"
                                     % (call.rank, len(call.args)))
                if len(set(call.args)) != len(call.args):
                    raise ParseError("duplicate slot in call arguments")
                for slot in call.args:
                    if slot < 1:
                        raise ParseError("slot numbers start at $1")
                    if slot not in seen:
                        seen.append(slot)
                    passed.add(slot)
            else:
                slot = item.target.slot
                if slot < 1:
                    raise ParseError("slot numbers start at $1")
                if slot not in seen:
                    seen.append(slot)
        total = max(seen, default=0)
        if lhs_slots > total:
            raise ParseError("unused left-hand slot")
        if sorted(seen) != list(range(1, total + 1)):
            raise ParseError("slot numbering has gaps")
        lhs_part = [s for s in seen if s <= lhs_slots]
        fresh_part = [s for s in seen if s > lhs_slots]
        if lhs_part != sorted(lhs_part) or fresh_part != sorted(fresh_part):
            raise ParseError("slots are not numbered by first mention")
        for slot in range(1, total + 1):
            if slot > lhs_slots and slot not in passed:
                raise ParseError("slot $%d is never bindable" % slot)

    @property
    def open_label(self) -> bool:
        return self.root_label is None

    @property
    def fresh_slots(self) -> int:
        lhs_slots = self.lhs_rank - (1 if self.root_binds else 0)
        total = lhs_slots
        for item in self.items:
            if isinstance(item.target, NonterminalCall):
                total = max(total, max(item.target.args, default=0))
            else:
                total = max(total, item.target.slot)
        return total - lhs_slots

    def __str__(self) -> str:
        return production_to_text(self)


def production_to_text(p: Production) -> str:
    lhs_slots = p.lhs_rank - (1 if p.root_binds else 0)
    args = ([p.root_sort] if p.root_binds else []) \
        + ["$%d" % i for i in range(1, lhs_slots + 1)]
    lhs = "T%d" % p.lhs_rank + ("(%s)" % " ".join(args) if args else "")
    parts = ["(%s/%s" % (p.root_sort, p.root_label or "L")]
    for item in p.items:
        if isinstance(item.target, NonterminalCall):
            call = item.target
            text = "T%d" % call.rank
            if call.args:
                text += "(%s)" % " ".join("$%d" % a for a in call.args)
        else:
            text = "$%d" % item.target.slot
        parts.append(":%s %s" % (item.relation, text))
    return "%s -> %s)" % (lhs, " ".join(parts))


def production_from_text(text: str) -> Production:
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("truncated production %r" % text)
        tok = tokens[pos]
        pos += 1
        if expected is not None and tok != expected:
            raise ParseError("expected %r, found %r in %r" % (expected, tok, text))
        return tok

    def rank_of(tok: str) -> int:
        if not tok.startswith("T") or not tok[1:].isdigit():
            raise ParseError("malformed nonterminal %r" % tok)
        return int(tok[1:])

    def slot_of(tok: str) -> int:
        if not tok.startswith("$") or not tok[1:].isdigit() or int(tok[1:]) < 1:
            raise ParseError("malformed slot %r" % tok)
        return int(tok[1:])

    lhs_rank = rank_of(take())
    root_binds = False
    lhs_args: list[str] = []
    if peek() == "(":
        take("(")
        while peek() != ")":
            lhs_args.append(take())
        take(")")
    if lhs_rank != len(lhs_args):
        raise ParseError("rank %d with %d left-hand arguments"
                         % (lhs_rank, len(lhs_args)))
    take("->")
    take("(")
    root_sort = take()
    take("/")
    label_tok = take()
    if label_tok == "L":
        root_label = None
    elif label_tok == BOX:
        root_label = BOX
    else:
        raise ParseError("root label must be L or %s, found %r" % (BOX, label_tok))
    if lhs_args:
        if lhs_args[0] == root_sort:
            root_binds = True
            lhs_args = lhs_args[1:]
        for i, arg in enumerate(lhs_args, start=1):
            if slot_of(arg) != i:
                raise ParseError("left-hand slots must read $1..$n in %r" % text)
    items: list[Item] = []
    while peek() != ")":
        rel = take()
        if not rel.startswith(":") or len(rel) < 2:
            raise ParseError("expected relation, found %r in %r" % (rel, text))
        target_tok = take()
        if target_tok.startswith("$"):
            target: NonterminalCall | Reference = Reference(slot_of(target_tok))
        else:
            rank = rank_of(target_tok)
            args: list[int] = []
            if peek() == "(":
                take("(")
                while peek() != ")":
                    args.append(slot_of(take()))
                take(")")
            target = NonterminalCall(rank, tuple(args))
        items.append(Item(rel[1:], target))
    take(")")
    if pos != len(tokens):
        raise ParseError("trailing tokens in %r" % text)
    return Production(lhs_rank, root_binds, root_sort, root_label, tuple(items))


# ---------------------------------------------------------------------------
# Extraction

@dataclass(frozen=True)
class GenFrag:
    production: Production


@dataclass(frozen=True)
class GenLabel:
    label: NodeLabel


def extract_actions(g: Graph) -> list[GenFrag | GenLabel]:
    """Decompose a graph into its leftmost derivation.

    One fragment per node, visited in defining pre-order; every node with
    an open label contributes a label action right after its fragment.
    Shared nodes become slots introduced at the lowest fragment whose
    subtree sees only part of their mentions.
    """
    report = validate(g)
    if not report.ok:
        raise GrammarExtractionError("cannot decompose ill-formed graph (%s)"
                                     % report)

    order: list[str] = []
    subtree: dict[str, set[str]] = {}
    mentions: dict[str, list[tuple[int, str]]] = {v: [] for v in g.var_names()}
    defining: dict[str, list[bool]] = {}
    clock = [0]

    def tick() -> int:
        clock[0] += 1
        return clock[0]

    def walk(v: str) -> set[str]:
        order.append(v)
        mentions[v].append((tick(), v))
        sub = {v}
        flags = []
        for edge in g.node(v).edges:
            if mentions[edge.target]:
                # already defined elsewhere: reentrant occurrence at v
                flags.append(False)
                mentions[edge.target].append((tick(), v))
            else:
                flags.append(True)
                sub |= walk(edge.target)
        defining[v] = flags
        subtree[v] = sub
        return sub

    walk(g.root)

    shared = {v for v, ms in mentions.items() if len(ms) > 1}

    def refs(w: str) -> list[str]:
        found = []
        for v in shared:
            inside = [p for p, at in mentions[v] if at in subtree[w]]
            outside = any(at not in subtree[w] for _, at in mentions[v])
            if inside and outside:
                found.append((min(inside), v))
        return [v for _, v in sorted(found)]

    actions: list[GenFrag | GenLabel] = []
    for v in order:
        node = g.node(v)
        own_refs = refs(v)
        root_binds = v in own_refs
        if root_binds and own_refs[0] != v:
            raise GrammarExtractionError(
                "defining occurrence of %r is not its first mention" % v)
        slot_of: dict[str, int] = {}
        for u in own_refs:
            if u != v:
                slot_of[u] = len(slot_of) + 1
        items: list[Item] = []
        for edge, is_def in zip(node.edges, defining[v]):
            if is_def:
                child_refs = refs(edge.target)
                arg_nums = []
                for u in child_refs:
                    if u not in slot_of:
                        slot_of[u] = len(slot_of) + 1
                    arg_nums.append(slot_of[u])
                items.append(Item(edge.label,
                                  NonterminalCall(len(child_refs),
                                                  tuple(arg_nums))))
            else:
                if edge.target not in slot_of:
                    raise GrammarExtractionError(
                        "reference to %r precedes its slot" % edge.target)
                items.append(Item(edge.label, Reference(slot_of[edge.target])))
        constant = node.label.lemma == BOX
        production = Production(len(own_refs), root_binds, v[0],
                                BOX if constant else None, tuple(items))
        actions.append(GenFrag(production))
        if not constant:
            actions.append(GenLabel(node.label))
    return actions


# ---------------------------------------------------------------------------
# Grammars

@dataclass
class GrammarStats:
    graphs: int
    tokens: int
    types: int
    avg_rank_types: float
    avg_rank_tokens: float
    max_rank: int
    open_label_types: int


@dataclass
class Grammar:
    counts: dict[Production, int] = field(default_factory=dict)
    graphs: int = 0

    @property
    def productions(self) -> list[Production]:
        return sorted(self.counts,
                      key=lambda p: (-self.counts[p], production_to_text(p)))

    def by_rank(self, rank: int) -> list[Production]:
        return [p for p in self.productions if p.lhs_rank == rank]

    def add(self, production: Production, count: int = 1) -> None:
        self.counts[production] = self.counts.get(production, 0) + count

    def stats(self) -> GrammarStats:
        types = len(self.counts)
        tokens = sum(self.counts.values())
        rank_sum_types = sum(p.lhs_rank for p in self.counts)
        rank_sum_tokens = sum(p.lhs_rank * c for p, c in self.counts.items())
        return GrammarStats(
            graphs=self.graphs,
            tokens=tokens,
            types=types,
            avg_rank_types=rank_sum_types / types if types else 0.0,
            avg_rank_tokens=rank_sum_tokens / tokens if tokens else 0.0,
            max_rank=max((p.lhs_rank for p in self.counts), default=0),
            open_label_types=sum(1 for p in self.counts if p.open_label),
        )


def build_grammar(graphs: list[Graph]) -> Grammar:
    grammar = Grammar()
    for g in graphs:
        for action in extract_actions(g):
            if isinstance(action, GenFrag):
                grammar.add(action.production)
        grammar.graphs += 1
    return grammar


def dumps_grammar(grammar: Grammar) -> str:
    lines = ["%d %s" % (grammar.counts[p], production_to_text(p))
             for p in grammar.productions]
    return "\n".join(lines) + "\n"


def loads_grammar(text: str) -> Grammar:
    grammar = Grammar()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        count_tok, _, prod_text = line.partition(" ")
        if not count_tok.isdigit() or not prod_text:
            raise ParseError("malformed grammar line %r" % line)
        grammar.add(production_from_text(prod_text), int(count_tok))
    return grammar


def dump_grammar(grammar: Grammar, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_grammar(grammar))


def load_grammar(path: str) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return loads_grammar(fh.read())
