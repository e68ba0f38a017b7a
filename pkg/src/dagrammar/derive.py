"""Stepwise derivation engine: replaying, rendering, and sampling.

A derivation starts from one rank-0 nonterminal and rewrites the leftmost
pending nonterminal with a production (GEN-FRAG), fills open labels
(GEN-LABEL), and emits a REDUCE event automatically whenever a fragment
and all of its children are complete.  Slot instances are shared between
the calls they are passed to; binding one (through a root-binding
production) names every other mention of it at once.

Soundness is enforced at application time: rank mismatches, rebinding an
already bound slot, and references to a slot that is neither bound nor
passed onward by the same production are all errors.  A completed
derivation always yields a well-formed graph.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import product

from .errors import DeriveError, ParseError
from .graph import BOX, Graph, NodeLabel, from_edges, validate
from .grammar import (GenFrag, GenLabel, Grammar, NonterminalCall, Production,
                      production_from_text, production_to_text)


@dataclass(frozen=True)
class Reduce:
    pass


Event = GenFrag | GenLabel | Reduce
Action = GenFrag | GenLabel


class _Slot:
    """A shared-variable instance; identity matters, name comes later."""

    __slots__ = ("bound",)

    def __init__(self):
        self.bound: str | None = None


class _Frame:
    """A pending nonterminal occurrence in the partial string."""

    __slots__ = ("rank", "slots", "parent", "depth", "edge", "root")

    def __init__(self, rank: int, slots: tuple[_Slot, ...],
                 parent: str | None, depth: int, edge: str | None = None):
        self.rank = rank
        self.slots = slots
        self.parent = parent
        self.depth = depth
        self.edge = edge  # label of the incoming edge, None at the root
        self.root: str | None = None


class Derivation:
    """Mutable derivation state."""

    def __init__(self):
        root = _Frame(0, (), None, 0)
        self._root_frame = root
        self._stack: list[tuple[str, object]] = [("frame", root)]
        self._order: list[str] = []
        self._labels: dict[str, NodeLabel | None] = {}
        self._edges: dict[str, list[tuple[str, object]]] = {}
        self._remaining: dict[str, int] = {}
        self._parent: dict[str, str | None] = {}
        self._counters: dict[str, int] = {}
        self._events: list[Event] = []

    @staticmethod
    def start() -> "Derivation":
        return Derivation()

    # -- inspection ---------------------------------------------------------

    def done(self) -> bool:
        return not self._stack

    def needs_label(self) -> bool:
        return bool(self._stack) and self._stack[-1][0] == "label"

    def next_frame(self) -> _Frame | None:
        if self._stack and self._stack[-1][0] == "frame":
            return self._stack[-1][1]
        return None

    def next_rank(self) -> int | None:
        frame = self.next_frame()
        return frame.rank if frame is not None else None

    def events(self) -> list[Event]:
        return list(self._events)

    # -- actions ------------------------------------------------------------

    def _fresh_var(self, sort: str) -> str:
        self._counters[sort] = self._counters.get(sort, 0) + 1
        return "%s%d" % (sort, self._counters[sort])

    def apply(self, production: Production) -> None:
        if self.done():
            raise DeriveError("derivation is already complete")
        if self.needs_label():
            raise DeriveError("a label action is required here")
        frame: _Frame = self._stack[-1][1]
        if production.lhs_rank != frame.rank:
            raise DeriveError("rank mismatch: nonterminal has rank %d, "
                              "production needs %d"
                              % (frame.rank, production.lhs_rank))

        if production.root_binds:
            if frame.slots[0].bound is not None:
                raise DeriveError("slot already bound to %r"
                                  % frame.slots[0].bound)
            lhs_instances = frame.slots[1:]
        else:
            lhs_instances = frame.slots

        env: dict[int, _Slot] = {}
        for i, inst in enumerate(lhs_instances, start=1):
            env[i] = inst
        m = len(lhs_instances)
        for k in range(m + 1, m + production.fresh_slots + 1):
            env[k] = _Slot()

        passed = {a for item in production.items
                  if isinstance(item.target, NonterminalCall)
                  for a in item.target.args}
        for item in production.items:
            if not isinstance(item.target, NonterminalCall):
                slot = item.target.slot
                if env[slot].bound is None and slot not in passed:
                    raise DeriveError("unbound reference $%d" % slot)

        var = self._fresh_var(production.root_sort)
        if production.root_binds:
            frame.slots[0].bound = var
        frame.root = var
        self._order.append(var)
        self._labels[var] = (NodeLabel(BOX) if production.root_label == BOX
                             else None)
        self._edges[var] = []
        self._parent[var] = frame.parent

        children: list[tuple[str, object]] = []
        remaining = 0
        for item in production.items:
            if isinstance(item.target, NonterminalCall):
                call = item.target
                child = _Frame(call.rank,
                               tuple(env[a] for a in call.args),
                               var, frame.depth + 1, item.relation)
                self._edges[var].append((item.relation, child))
                children.append(("frame", child))
                remaining += 1
            else:
                self._edges[var].append((item.relation, env[item.target.slot]))
        if production.open_label:
            children.insert(0, ("label", var))
            remaining += 1
        self._remaining[var] = remaining

        self._stack.pop()
        self._stack.extend(reversed(children))
        self._events.append(GenFrag(production))
        if remaining == 0:
            self._cascade(var)

    def set_label(self, label: NodeLabel) -> None:
        if self.done() or self._stack[-1][0] != "label":
            raise DeriveError("no label is expected here")
        if label.lemma == BOX:
            raise DeriveError("%s is not an open label" % BOX)
        var: str = self._stack[-1][1]
        self._labels[var] = label
        self._stack.pop()
        self._events.append(GenLabel(label))
        self._remaining[var] -= 1
        if self._remaining[var] == 0:
            self._cascade(var)

    def _cascade(self, var: str) -> None:
        while self._remaining.get(var) == 0:
            self._events.append(Reduce())
            self._remaining[var] = -1  # completed
            parent = self._parent[var]
            if parent is None:
                return
            self._remaining[parent] -= 1
            var = parent

    # -- output -------------------------------------------------------------

    def render(self) -> str:
        numbers: dict[int, int] = {}

        def slot_text(inst: _Slot) -> str:
            if inst.bound is not None:
                return inst.bound
            if id(inst) not in numbers:
                numbers[id(inst)] = len(numbers) + 1
            return "$%d" % numbers[id(inst)]

        def frame_text(frame: _Frame) -> str:
            if frame.root is not None:
                return node_text(frame.root)
            text = "T%d" % frame.rank
            if frame.slots:
                text += "(%s)" % " ".join(slot_text(s) for s in frame.slots)
            return text

        def node_text(var: str) -> str:
            label = self._labels[var]
            parts = ["%s/%s" % (var, "L" if label is None else label.render())]
            for relation, target in self._edges[var]:
                if isinstance(target, _Frame):
                    text = frame_text(target)
                else:
                    text = slot_text(target)
                parts.append(":%s %s" % (relation, text))
            return "(%s)" % " ".join(parts)

        return frame_text(self._root_frame)

    def graph(self) -> Graph:
        if not self.done():
            raise DeriveError("derivation is not complete")
        root = self._root_frame.root
        assert root is not None
        labels: dict[str, NodeLabel] = {}
        for var in self._order:
            label = self._labels[var]
            if label is None:
                raise DeriveError("node %r has no label" % var)
            labels[var] = label
        flat: list[tuple[str, str, str]] = []
        for var in self._order:
            for relation, target in self._edges[var]:
                if isinstance(target, _Frame):
                    tgt = target.root
                else:
                    tgt = target.bound
                if tgt is None:
                    raise DeriveError("dangling slot in completed derivation")
                flat.append((var, relation, tgt))
        g = from_edges(root, labels, flat)
        report = validate(g)
        if not report.ok:
            raise DeriveError("derivation produced an ill-formed graph (%s)"
                              % report)
        return g


def replay(actions: list[Action]) -> Derivation:
    d = Derivation.start()
    for action in actions:
        if isinstance(action, GenFrag):
            d.apply(action.production)
        elif isinstance(action, GenLabel):
            d.set_label(action.label)
        else:
            raise DeriveError("cannot replay %r" % (action,))
    return d


def applicable_actions(d: Derivation, grammar: Grammar,
                       restrict: bool = True) -> list[Production]:
    """Productions offered at the current step, masked by rank only.

    Finer soundness (binding state) is the business of apply(), the
    sampler, and the parser; an empty list means a label action is due or
    the derivation is complete.
    """
    rank = d.next_rank()
    if rank is None:
        return []
    if restrict:
        return [p for p in grammar.productions if p.lhs_rank == rank]
    return grammar.productions


# ---------------------------------------------------------------------------
# Sampling

def _sound(production: Production, bound_mask: tuple[bool, ...]) -> bool:
    if production.root_binds:
        if bound_mask[0]:
            return False
        offset = 1
    else:
        offset = 0
    m = len(bound_mask) - offset
    passed = {a for item in production.items
              if isinstance(item.target, NonterminalCall)
              for a in item.target.args}
    for item in production.items:
        if isinstance(item.target, NonterminalCall):
            continue
        slot = item.target.slot
        if slot in passed:
            continue
        if slot > m or not bound_mask[slot - 1 + offset]:
            return False
    return True


def _child_masks(production: Production,
                 bound_mask: tuple[bool, ...]) -> list[tuple[int, tuple[bool, ...]]]:
    offset = 1 if production.root_binds else 0
    m = len(bound_mask) - offset

    def arg_bound(slot: int) -> bool:
        if slot <= m:
            return bound_mask[slot - 1 + offset]
        return False

    out = []
    for item in production.items:
        if isinstance(item.target, NonterminalCall):
            call = item.target
            out.append((call.rank, tuple(arg_bound(a) for a in call.args)))
    return out


def completion_depths(grammar: Grammar) -> dict[tuple[int, tuple[bool, ...]], float]:
    """Least derivation height per (rank, slot-bound mask) signature.

    math.inf marks signatures no production sequence can ever complete.
    Child masks are taken at call creation time, so the table is an upper
    bound on what a live derivation (where earlier siblings may bind
    slots) actually needs.
    """
    ranks = {p.lhs_rank for p in grammar.counts}
    for p in grammar.counts:
        for item in p.items:
            if isinstance(item.target, NonterminalCall):
                ranks.add(item.target.rank)
    sigs = [(r, mask) for r in sorted(ranks)
            for mask in product([False, True], repeat=r)]
    depth: dict[tuple[int, tuple[bool, ...]], float] = {s: math.inf for s in sigs}
    changed = True
    while changed:
        changed = False
        for rank, mask in sigs:
            best = depth[(rank, mask)]
            for p in grammar.by_rank(rank):
                if not _sound(p, mask):
                    continue
                kids = _child_masks(p, mask)
                h = 1 + max((depth.get(sig, math.inf) for sig in kids),
                            default=0)
                if h < best:
                    best = h
            if best < depth[(rank, mask)]:
                depth[(rank, mask)] = best
                changed = True
    return depth


DEFAULT_LABELS = ("alpha", "beta", "gamma", "delta", "epsilon")


def sample(grammar: Grammar, rng: random.Random, depth_cap: int = 20,
           labels: tuple[str, ...] = DEFAULT_LABELS,
           depths: dict | None = None) -> Derivation:
    """Draw one complete derivation, uniform over admissible productions.

    Productions are admissible when they are sound for the live binding
    state and keep the estimated finished height within depth_cap; if the
    cap leaves nothing, the production with the least completion height
    is forced, and a signature with no finite height at all is an error.
    """
    if depths is None:
        depths = completion_depths(grammar)
    cache: dict[tuple, list[tuple[Production, float]]] = {}
    d = Derivation.start()
    while not d.done():
        if d.needs_label():
            d.set_label(NodeLabel(rng.choice(labels)))
            continue
        d.apply(rng.choice(sound_productions(d, grammar, depth_cap,
                                             depths, cache)))
    return d


def sound_productions(d: Derivation, grammar: Grammar, depth_cap: int = 20,
                      depths: dict | None = None,
                      cache: dict | None = None) -> list[Production]:
    """Productions the next frame can take and still finish.

    Sound for the live binding state, finitely completable, and within
    depth_cap; when the cap excludes everything the single least-height
    production is offered instead, so decoding always terminates.  A
    signature with no finite completion at all is an error.
    """
    frame = d.next_frame()
    if frame is None:
        return []
    if depths is None:
        depths = completion_depths(grammar)
    mask = tuple(s.bound is not None for s in frame.slots)
    key = (frame.rank, mask)
    if cache is None or key not in cache:
        scored = []
        for p in grammar.by_rank(frame.rank):
            if not _sound(p, mask):
                continue
            kids = _child_masks(p, mask)
            h = 1 + max((depths.get(sig, math.inf) for sig in kids),
                        default=0)
            if h < math.inf:
                scored.append((p, h))
        if cache is not None:
            cache[key] = scored
    else:
        scored = cache[key]
    if not scored:
        raise DeriveError(
            "no terminating production for rank %d with binding %s"
            % (frame.rank, "".join("x" if b else "$" for b in mask)))
    admissible = [p for p, h in scored if frame.depth + h <= depth_cap]
    if admissible:
        return admissible
    return [min(scored, key=lambda ph: (ph[1], production_to_text(ph[0])))[0]]


def sample_graph(grammar: Grammar, seed: int, depth_cap: int = 20,
                 labels: tuple[str, ...] = DEFAULT_LABELS,
                 depths: dict | None = None) -> Graph:
    """Sample one graph; deterministic for a given seed."""
    rng = random.Random(seed)
    return sample(grammar, rng, depth_cap, labels, depths).graph()


# ---------------------------------------------------------------------------
# Trace files

def dumps_trace(events: list[Event]) -> str:
    lines = []
    for event in events:
        if isinstance(event, GenFrag):
            lines.append("FRAG %s" % production_to_text(event.production))
        elif isinstance(event, GenLabel):
            lines.append("LABEL %s" % event.label.render())
        elif isinstance(event, Reduce):
            lines.append("REDUCE")
        else:
            raise DeriveError("cannot serialize %r" % (event,))
    return "\n".join(lines) + "\n"


def loads_trace(text: str) -> list[Event]:
    events: list[Event] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        if keyword == "FRAG":
            events.append(GenFrag(production_from_text(rest)))
        elif keyword == "LABEL":
            events.append(GenLabel(NodeLabel.parse(rest)))
        elif keyword == "REDUCE" and not rest:
            events.append(Reduce())
        else:
            raise ParseError("malformed trace line %r" % line)
    return events


def replay_trace(events: list[Event]) -> Derivation:
    """Replay a trace; recorded REDUCE events must match the automatic ones."""
    actions = [e for e in events if not isinstance(e, Reduce)]
    d = replay(actions)
    if any(isinstance(e, Reduce) for e in events) and d.events() != list(events):
        raise DeriveError("trace REDUCE events do not match the derivation")
    return d
