"""Trainable action scorer: encoder, attention, copy gate, stack state.

The scorer assigns probabilities to derivation actions.  Sentences are
encoded by a bidirectional recurrence over projected token features; a
decoder state advances through a stack recurrence fed with fragment,
terminal, and composed-subtree embeddings; fragment choices attend over
the encoder states and mix in the incoming edge label; label choices mix
a generation softmax with a copy pointer over input lemmas through a
binary gate.  Everything runs in float64 on one thread so training is
bit-reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Iterable

import torch
from torch import nn

from .derive import (Derivation, GenFrag, GenLabel, Reduce,
                     applicable_actions, completion_depths, replay,
                     sound_productions)
from .errors import DeriveError, ParseError
from .grammar import (Grammar, build_grammar, dumps_grammar,
                      extract_actions, loads_grammar)
from .graph import BOX, Graph, NodeLabel, parse_penman, print_penman

UNK = "<unk>"
NO_SENSE = "<none>"
START_EDGE = "<start>"


# ---------------------------------------------------------------------------
# Sentences and vocabularies

@dataclass(frozen=True)
class Token:
    word: str
    lemma: str
    pos: str
    semtag: str
    dep: str

    def fields(self) -> tuple[str, ...]:
        return (self.word, self.lemma, self.pos, self.semtag, self.dep)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    graph: Graph | None = None


def loads_sentences(text: str) -> list[Sentence]:
    """Blocks of `word lemma pos semtag dep` lines, then a graph line."""
    sentences = []
    for block in text.split("\n\n"):
        lines = [ln.strip() for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        tokens = []
        graph_lines = []
        for ln in lines:
            if graph_lines or ln.startswith("("):
                graph_lines.append(ln)
                continue
            cols = ln.split()
            if len(cols) != 5:
                raise ParseError("token line needs 5 columns, got %r" % ln)
            tokens.append(Token(*cols))
        if not tokens:
            raise ParseError("sentence block without token lines")
        graph = parse_penman(" ".join(graph_lines)) if graph_lines else None
        sentences.append(Sentence(tuple(tokens), graph))
    return sentences


def dumps_sentences(sentences: Iterable[Sentence]) -> str:
    blocks = []
    for sent in sentences:
        lines = []
        for tok in sent.tokens:
            if any((" " in f or not f) for f in tok.fields()):
                raise ParseError("token fields must be non-empty and "
                                 "space-free: %r" % (tok,))
            if tok.word.startswith("("):
                raise ParseError("token %r would be read back as a graph "
                                 "line" % tok.word)
            lines.append(" ".join(tok.fields()))
        if sent.graph is not None:
            lines.append(print_penman(sent.graph))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def load_sentences(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as handle:
        return loads_sentences(handle.read())


def dump_sentences(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_sentences(sentences))


class Vocab:
    """String-to-index table with index 0 reserved for unknowns."""

    def __init__(self, items: Iterable[str] = ()):
        self.items: list[str] = [UNK]
        self.index: dict[str, int] = {UNK: 0}
        for item in items:
            self.add(item)

    def add(self, item: str) -> int:
        if item not in self.index:
            self.index[item] = len(self.items)
            self.items.append(item)
        return self.index[item]

    def encode(self, item: str) -> int:
        return self.index.get(item, 0)

    def decode(self, idx: int) -> str:
        return self.items[idx]

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: str) -> bool:
        return item in self.index


@dataclass(frozen=True)
class TokenFeatures:
    word: int
    pretrained: int
    lemma: int
    pos: int
    semtag: int
    dep: int


FEATURE_NAMES = tuple(f.name for f in fields(TokenFeatures))


class FeatureVocabs:
    """All lookup tables the scorer needs, frozen from a corpus."""

    def __init__(self):
        self.word = Vocab()
        self.pretrained = Vocab()
        self.lemma = Vocab()
        self.pos = Vocab()
        self.semtag = Vocab()
        self.dep = Vocab()
        self.constants = Vocab()
        self.senses = Vocab([NO_SENSE])

    @staticmethod
    def build(corpus: Iterable[Sentence]) -> "FeatureVocabs":
        v = FeatureVocabs()
        for sent in corpus:
            for tok in sent.tokens:
                v.word.add(tok.word)
                v.pretrained.add(tok.word.lower())
                v.lemma.add(tok.lemma)
                v.pos.add(tok.pos)
                v.semtag.add(tok.semtag)
                v.dep.add(tok.dep)
            if sent.graph is not None:
                for node in sent.graph.nodes:
                    if node.label.lemma != BOX:
                        v.constants.add(node.label.lemma)
                    if node.label.sense is not None:
                        v.senses.add(node.label.sense)
        return v

    def encode_token(self, tok: Token) -> TokenFeatures:
        return TokenFeatures(self.word.encode(tok.word),
                             self.pretrained.encode(tok.word.lower()),
                             self.lemma.encode(tok.lemma),
                             self.pos.encode(tok.pos),
                             self.semtag.encode(tok.semtag),
                             self.dep.encode(tok.dep))

    def encode_tokens(self, tokens: Iterable[Token]) -> torch.Tensor:
        rows = [[getattr(self.encode_token(t), name)
                 for name in FEATURE_NAMES] for t in tokens]
        return torch.tensor(rows, dtype=torch.long)

    _PARTS = ("word", "pretrained", "lemma", "pos", "semtag", "dep",
              "constants", "senses")

    def to_dict(self) -> dict:
        return {name: list(getattr(self, name).items)
                for name in self._PARTS}

    @staticmethod
    def from_dict(data: dict) -> "FeatureVocabs":
        v = FeatureVocabs()
        for name in FeatureVocabs._PARTS:
            vocab = Vocab()
            vocab.items = list(data[name])
            vocab.index = {s: i for i, s in enumerate(vocab.items)}
            setattr(v, name, vocab)
        return v


# ---------------------------------------------------------------------------
# Configuration

@dataclass(frozen=True)
class TrainConfig:
    dim_word: int = 128
    dim_pretrained: int = 100
    dim_feature: int = 50      # lemma, pos, semtag, dependency label
    dim_hidden: int = 150      # recurrent size, encoder per direction
    dim_symbol: int = 50       # fragment, terminal, and edge embeddings
    learning_rate: float = 0.001
    decay: float = 0.1
    decay_every: int = 10
    epochs: int = 30
    seed: int = 0
    feature_gates: bool = False

    def __post_init__(self):
        dims = (self.dim_word, self.dim_pretrained, self.dim_feature,
                self.dim_hidden, self.dim_symbol)
        if any(d <= 0 for d in dims):
            raise ValueError("dimensions must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


# ---------------------------------------------------------------------------
# The scorer

class ActionScorer(nn.Module):
    """Probability model over derivation actions for one grammar."""

    def __init__(self, vocabs: FeatureVocabs, grammar: Grammar,
                 config: TrainConfig):
        super().__init__()
        torch.manual_seed(config.seed)
        self.vocabs = vocabs
        self.grammar = grammar
        self.config = config
        self.productions = list(grammar.productions)
        self.prod_index = {p: i for i, p in enumerate(self.productions)}
        edges = sorted({item.relation for p in self.productions
                        for item in p.items})
        self.edge_vocab = Vocab([START_EDGE, *edges])

        c = config
        self.emb_word = nn.Embedding(len(vocabs.word), c.dim_word)
        self.emb_pretrained = nn.Embedding(len(vocabs.pretrained),
                                           c.dim_pretrained)
        self.emb_lemma = nn.Embedding(len(vocabs.lemma), c.dim_feature)
        self.emb_pos = nn.Embedding(len(vocabs.pos), c.dim_feature)
        self.emb_semtag = nn.Embedding(len(vocabs.semtag), c.dim_feature)
        self.emb_dep = nn.Embedding(len(vocabs.dep), c.dim_feature)
        self.emb_frag = nn.Embedding(len(self.productions), c.dim_symbol)
        self.emb_term = nn.Embedding(len(vocabs.constants), c.dim_symbol)
        self.emb_edge = nn.Embedding(len(self.edge_vocab), c.dim_symbol)
        self.feature_gate = nn.Parameter(torch.ones(6))

        feat_total = (c.dim_word + c.dim_pretrained + 4 * c.dim_feature)
        self.project = nn.Linear(feat_total, c.dim_hidden)
        self.encoder = nn.LSTM(c.dim_hidden, c.dim_hidden,
                               bidirectional=True)
        enc_dim = 2 * c.dim_hidden

        self.att_frag = nn.Parameter(torch.empty(c.dim_hidden, enc_dim))
        self.out_context = nn.Linear(enc_dim, len(self.productions),
                                     bias=False)
        self.out_edge = nn.Linear(c.dim_symbol, len(self.productions),
                                  bias=False)
        self.att_label = nn.Parameter(torch.empty(c.dim_hidden, enc_dim))
        self.out_generate = nn.Linear(enc_dim, len(vocabs.constants) - 1,
                                      bias=False)
        self.copy_bilinear = nn.Parameter(torch.empty(c.dim_hidden, enc_dim))
        self.copy_gate = nn.Linear(c.dim_hidden, 1)
        for tensor in (self.att_frag, self.att_label, self.copy_bilinear):
            nn.init.xavier_uniform_(tensor)

        self.stack_cell = nn.LSTMCell(c.dim_symbol, c.dim_hidden)
        self.compose_cell = nn.LSTMCell(c.dim_symbol, c.dim_symbol)
        self.state0_h = nn.Parameter(torch.zeros(c.dim_hidden))
        self.state0_c = nn.Parameter(torch.zeros(c.dim_hidden))

        self.sense_head = nn.Linear(c.dim_hidden + c.dim_symbol,
                                    len(vocabs.senses))
        self.presup_head = nn.Linear(c.dim_hidden + c.dim_symbol, 1)
        self.double()

    # -- building blocks ----------------------------------------------------

    def encode(self, features: torch.Tensor) -> torch.Tensor:
        """Token feature rows -> one encoder state per token."""
        if features.ndim != 2 or features.shape[0] == 0:
            raise ValueError("expected a non-empty (tokens, 6) index matrix")
        tables = (self.emb_word, self.emb_pretrained, self.emb_lemma,
                  self.emb_pos, self.emb_semtag, self.emb_dep)
        parts = [table(features[:, k]) for k, table in enumerate(tables)]
        if self.config.feature_gates:
            parts = [p * self.feature_gate[k] for k, p in enumerate(parts)]
        x = torch.tanh(self.project(torch.cat(parts, dim=1)))
        out, _ = self.encoder(x.unsqueeze(1))
        return out.squeeze(1)

    def initial_state(self) -> tuple[torch.Tensor, torch.Tensor]:
        return self.state0_h, self.state0_c

    def _attend(self, h: torch.Tensor, enc: torch.Tensor,
                bilinear: torch.Tensor) -> torch.Tensor:
        scores = enc @ (bilinear.T @ h)
        return torch.softmax(scores, dim=0) @ enc

    def score_frag(self, state, enc: torch.Tensor, edge_id: int,
                   mask: list[int]) -> torch.Tensor:
        """Distribution over the full production list, zero off-mask."""
        if not mask:
            raise DeriveError("empty production mask")
        h = state[0]
        context = self._attend(h, enc, self.att_frag)
        edge = self.emb_edge(torch.tensor(edge_id))
        logits = self.out_context(context) + self.out_edge(edge)
        masked = torch.full_like(logits, -torch.inf)
        idx = torch.tensor(mask)
        masked[idx] = logits[idx]
        return torch.softmax(masked, dim=0)

    def score_label(self, state, enc: torch.Tensor,
                    n_copyable: int) -> torch.Tensor:
        """Distribution over generating constants then copying positions.

        Layout: entry k < n_constants-1 generates vocabulary item k+1 (the
        unknown slot is never a valid realization); the remaining entries
        copy input positions 0..n_copyable-1.
        """
        h = state[0]
        n_generate = len(self.vocabs.constants) - 1
        if n_generate == 0 and n_copyable == 0:
            raise DeriveError("no way to realize a label: empty constant "
                              "vocabulary and nothing to copy")
        branches = []
        if n_generate:
            context = self._attend(h, enc, self.att_label)
            branches.append(torch.softmax(self.out_generate(context), dim=0))
        else:
            branches.append(torch.zeros(0, dtype=enc.dtype))
        if n_copyable:
            scores = enc[:n_copyable] @ (self.copy_bilinear.T @ h)
            branches.append(torch.softmax(scores, dim=0))
        else:
            branches.append(torch.zeros(0, dtype=enc.dtype))
        if n_generate and n_copyable:
            gate = torch.sigmoid(self.copy_gate(h).squeeze())
            return torch.cat([gate * branches[0], (1 - gate) * branches[1]])
        return torch.cat(branches)

    def update_stack(self, state, emb: torch.Tensor):
        h, c = self.stack_cell(emb.unsqueeze(0),
                               (state[0].unsqueeze(0), state[1].unsqueeze(0)))
        return h.squeeze(0), c.squeeze(0)

    def reduce_compose(self, children: list[torch.Tensor],
                       parent: torch.Tensor, state):
        """Summarize a finished subtree and push it through the stack.

        Returns the advanced decoder state and the composed embedding,
        which also becomes a child of the enclosing subtree.
        """
        dim = self.config.dim_symbol
        h = parent.new_zeros(1, dim)
        c = parent.new_zeros(1, dim)
        for emb in [*children, parent]:
            h, c = self.compose_cell(emb.unsqueeze(0), (h, c))
        composed = h.squeeze(0)
        return self.update_stack(state, composed), composed

    def _label_embedding(self, lemma: str) -> torch.Tensor:
        return self.emb_term(torch.tensor(self.vocabs.constants.encode(lemma)))

    def _sense_presup(self, h: torch.Tensor, term: torch.Tensor):
        joint = torch.cat([h, term])
        return (torch.log_softmax(self.sense_head(joint), dim=0),
                self.presup_head(joint).squeeze())

    # -- teacher-forced pass --------------------------------------------------

    def _forced_decisions(self, sentence: Sentence) -> list[dict]:
        """Replay the gold derivation, recording every scored decision."""
        if sentence.graph is None:
            raise DeriveError("sentence has no gold graph")
        enc = self.encode(self.vocabs.encode_tokens(sentence.tokens))
        events = replay(extract_actions(sentence.graph)).events()
        lemmas = [t.lemma for t in sentence.tokens]
        d = Derivation.start()
        state = self.initial_state()
        compose: list[dict] = []
        records: list[dict] = []
        for event in events:
            if isinstance(event, GenFrag):
                frame = d.next_frame()
                edge_id = self.edge_vocab.encode(frame.edge or START_EDGE)
                mask = [self.prod_index[p]
                        for p in applicable_actions(d, self.grammar)]
                probs = self.score_frag(state, enc, edge_id, mask)
                gold = self.prod_index[event.production]
                records.append({"kind": "frag", "prob": probs[gold],
                                "correct": int(torch.argmax(probs)) == gold})
                d.apply(event.production)
                emb = self.emb_frag(torch.tensor(gold))
                compose.append({"parent": emb, "children": []})
                state = self.update_stack(state, emb)
            elif isinstance(event, GenLabel):
                label = event.label
                probs = self.score_label(state, enc, len(lemmas))
                prob, realized = self._realization(probs, label.lemma, lemmas)
                term = self._label_embedding(label.lemma)
                sense_logp, presup_logit = self._sense_presup(state[0], term)
                gold_sense = self.vocabs.senses.encode(label.sense or NO_SENSE)
                sense_ok = int(torch.argmax(sense_logp)) == gold_sense
                presup_ok = (presup_logit > 0).item() == label.presupposed
                records.append({
                    "kind": "label", "prob": prob,
                    "sense_logp": sense_logp[gold_sense],
                    "presup_logit": presup_logit,
                    "presup_gold": label.presupposed,
                    "correct": realized and sense_ok and presup_ok})
                d.set_label(label)
                compose[-1]["children"].append(term)
                state = self.update_stack(state, term)
            else:
                done = compose.pop()
                state, composed = self.reduce_compose(
                    done["children"], done["parent"], state)
                if compose:
                    compose[-1]["children"].append(composed)
        return records

    def _realization(self, probs: torch.Tensor, lemma: str,
                     lemmas: list[str]):
        """Total probability of producing `lemma`, and argmax correctness."""
        n_generate = len(self.vocabs.constants) - 1
        ways = []
        gold_id = self.vocabs.constants.encode(lemma)
        if gold_id > 0:
            ways.append(gold_id - 1)
        ways.extend(n_generate + i
                    for i, lem in enumerate(lemmas) if lem == lemma)
        if not ways:
            raise DeriveError("label %r is neither in the constant "
                              "vocabulary nor copyable" % lemma)
        best = int(torch.argmax(probs))
        realized = (self.vocabs.constants.decode(best + 1)
                    if best < n_generate else lemmas[best - n_generate])
        return probs[ways].sum(), realized == lemma

    def loss(self, sentence: Sentence) -> torch.Tensor:
        """Cross-entropy of the gold actions plus label-side classifiers."""
        total = torch.zeros((), dtype=torch.float64)
        for rec in self._forced_decisions(sentence):
            total = total - torch.log(rec["prob"])
            if rec["kind"] == "label":
                total = total - rec["sense_logp"]
                target = torch.tensor(float(rec["presup_gold"]),
                                      dtype=torch.float64)
                total = total + nn.functional.binary_cross_entropy_with_logits(
                    rec["presup_logit"], target)
        return total

    def action_accuracy(self, corpus: Iterable[Sentence]) -> float:
        hits = []
        with torch.no_grad():
            for sentence in corpus:
                hits.extend(rec["correct"]
                            for rec in self._forced_decisions(sentence))
        return sum(hits) / len(hits) if hits else 0.0

    # -- decoding -------------------------------------------------------------

    def parse(self, tokens: Iterable[Token], depth_cap: int = 20,
              restrict: bool = True) -> Graph:
        """Greedy decode; structurally guaranteed to validate."""
        tokens = tuple(tokens)
        lemmas = [t.lemma for t in tokens]
        with torch.no_grad():
            enc = self.encode(self.vocabs.encode_tokens(tokens))
            depths = completion_depths(self.grammar)
            cache: dict = {}
            d = Derivation.start()
            state = self.initial_state()
            compose: list[dict] = []
            seen = 0
            while not d.done():
                if d.needs_label():
                    probs = self.score_label(state, enc, len(lemmas))
                    n_generate = len(self.vocabs.constants) - 1
                    best = int(torch.argmax(probs))
                    lemma = (self.vocabs.constants.decode(best + 1)
                             if best < n_generate
                             else lemmas[best - n_generate])
                    term = self._label_embedding(lemma)
                    sense_logp, presup_logit = self._sense_presup(state[0],
                                                                  term)
                    sense = self.vocabs.senses.decode(
                        int(torch.argmax(sense_logp)))
                    d.set_label(NodeLabel(
                        lemma, None if sense in (NO_SENSE, UNK) else sense,
                        bool(presup_logit > 0)))
                    compose[-1]["children"].append(term)
                    state = self.update_stack(state, term)
                else:
                    frame = d.next_frame()
                    edge_id = self.edge_vocab.encode(frame.edge or START_EDGE)
                    choices = sound_productions(d, self.grammar, depth_cap,
                                                depths, cache)
                    if restrict:
                        mask = [self.prod_index[p] for p in choices]
                        probs = self.score_frag(state, enc, edge_id, mask)
                        pick = self.productions[int(torch.argmax(probs))]
                    else:
                        # normalize over everything, but land on a sound
                        # action so decoding still terminates and validates
                        probs = self.score_frag(state, enc, edge_id,
                                                list(range(len(self.productions))))
                        pick = max(choices,
                                   key=lambda p: float(probs[self.prod_index[p]]))
                    d.apply(pick)
                    emb = self.emb_frag(torch.tensor(self.prod_index[pick]))
                    compose.append({"parent": emb, "children": []})
                    state = self.update_stack(state, emb)
                for event in d.events()[seen:]:
                    if isinstance(event, Reduce):
                        done = compose.pop()
                        state, composed = self.reduce_compose(
                            done["children"], done["parent"], state)
                        if compose:
                            compose[-1]["children"].append(composed)
                seen = len(d.events())
            return d.graph()


# ---------------------------------------------------------------------------
# Training and checkpoints

def train(corpus: list[Sentence], config: TrainConfig,
          grammar: Grammar | None = None,
          stop_accuracy: float | None = None,
          check_every: int = 10) -> ActionScorer:
    """Fit a scorer on gold sentences; deterministic per config seed.

    The grammar defaults to the one extracted from the corpus graphs.
    Per-epoch mean losses are left on the returned model as `history`.
    With `stop_accuracy` set, teacher-forced action accuracy is polled
    every `check_every` epochs and training stops once it is reached.
    """
    torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    if grammar is None:
        grammar = build_grammar([s.graph for s in corpus
                                 if s.graph is not None])
    model = ActionScorer(FeatureVocabs.build(corpus), grammar, config)
    optimizer = torch.optim.Adam(model.parameters(),
                                 lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=config.decay_every, gamma=config.decay)
    history = []
    for epoch in range(config.epochs):
        total = 0.0
        for sentence in corpus:
            optimizer.zero_grad()
            loss = model.loss(sentence)
            loss.backward()
            optimizer.step()
            total += loss.item()
        scheduler.step()
        history.append(total / len(corpus))
        if (stop_accuracy is not None and (epoch + 1) % check_every == 0
                and model.action_accuracy(corpus) >= stop_accuracy):
            break
    model.history = history
    return model


CHECKPOINT_VERSION = 1


def save_model(model: ActionScorer, path) -> None:
    from dataclasses import asdict

    torch.save({"version": CHECKPOINT_VERSION,
                "config": asdict(model.config),
                "vocabs": model.vocabs.to_dict(),
                "grammar": dumps_grammar(model.grammar),
                "state": model.state_dict()}, path)


def load_model(path) -> ActionScorer:
    data = torch.load(path, weights_only=False)
    if data.get("version") != CHECKPOINT_VERSION:
        raise ParseError("unsupported checkpoint version %r"
                         % data.get("version"))
    model = ActionScorer(FeatureVocabs.from_dict(data["vocabs"]),
                         loads_grammar(data["grammar"]),
                         TrainConfig(**data["config"]))
    model.load_state_dict(data["state"])
    return model
