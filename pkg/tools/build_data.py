"""Regenerate everything under data/ deterministically.

Usage: python3 tools/build_data.py [data-dir]

Outputs:
  corpus.penman     graph corpus, 200+ graphs, deduplicated, includes the
                    two-implication worked example
  corpus.clauses    clause-document corpus exercising operators,
                    presuppositions, reentrancies, and rootless modifiers
  toy_train.corpus  20 annotated sentences for the overfitting checks
"""

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from dagrammar.boxes import boxes_to_graph, dump_clause_corpus
from dagrammar.graph import (canonical_rename, dump_corpus, parse_penman,
                             print_penman, validate)
from dagrammar.model import Sentence, Token, dump_sentences
from util import random_clause_doc

import worked_example

SEED = 20260814

# (count, max_boxes, max_vars, relation vocabulary or None for the default)
DOC_RECIPES = [
    (120, 2, 2, ["Agent", "Theme", "Part"]),
    (60, 3, 3, None),
    (40, 4, 5, None),
]


def build_documents(rng: random.Random):
    docs = [None]  # placeholder for the worked example, graphs[0]
    for count, boxes, variables, relations in DOC_RECIPES:
        for _ in range(count):
            docs.append(random_clause_doc(rng, max_boxes=boxes,
                                          max_vars=variables,
                                          relations=relations))
    return docs


def build(data_dir: Path) -> None:
    rng = random.Random(SEED)
    docs = build_documents(rng)
    graphs = [parse_penman(worked_example.GRAPH)]
    graphs.extend(boxes_to_graph(doc) for doc in docs[1:])

    seen = set()
    unique_graphs = []
    unique_docs = []
    for doc, graph in zip(docs, graphs):
        assert validate(graph).ok
        key = print_penman(canonical_rename(graph))
        if key in seen:
            continue
        seen.add(key)
        unique_graphs.append(graph)
        unique_docs.append(doc)
    assert len(unique_graphs) >= 200, len(unique_graphs)

    data_dir.mkdir(parents=True, exist_ok=True)
    dump_corpus(unique_graphs, data_dir / "corpus.penman")
    dump_clause_corpus([d for d in unique_docs if d is not None],
                       data_dir / "corpus.clauses")
    dump_sentences(toy_sentences(), data_dir / "toy_train.corpus")
    print("wrote %d graphs, %d clause documents, %d sentences to %s"
          % (len(unique_graphs), len(unique_docs) - 1, len(toy_sentences()),
             data_dir))


def _sentence(spec: str, penman: str) -> Sentence:
    tokens = tuple(Token(*t.split("/")) for t in spec.split())
    return Sentence(tokens, parse_penman(penman))


def toy_sentences() -> list[Sentence]:
    """Twenty small annotated sentences; lemmas align with graph labels
    so the copy pointer has work to do, and a few labels (person, be)
    are reachable only through the generation branch."""
    return [
        _sentence("a/a/DT/DEF/det cat/cat/NN/CON/nsubj sleeps/sleep/VB/EVE/root",
                  "(b1/□ :Drs (e1/sleep~v.01 :Agent (x1/cat~n.01)))"),
        _sentence("a/a/DT/DEF/det dog/dog/NN/CON/nsubj runs/run/VB/EVE/root",
                  "(b1/□ :Drs (e1/run~v.01 :Agent (x1/dog~n.01)))"),
        _sentence("the/the/DT/DEF/det old/old/JJ/ATT/amod ship/ship/NN/CON/root",
                  "(b1/□ :Drs (x1/ship~n.01^p :Attribute (s1/old~a.01)))"),
        _sentence("cats/cat/NN/CON/nsubj chase/chase/VB/EVE/root dogs/dog/NN/CON/obj",
                  "(b1/□ :Drs (e1/chase~v.01 :Agent (x1/cat~n.01) "
                  ":Patient (x2/dog~n.01)))"),
        _sentence("it/it/PR/PRO/nsubj rains/rain/VB/EVE/root",
                  "(b1/□ :Drs (e1/rain~v.01))"),
        _sentence("birds/bird/NN/CON/nsubj sing/sing/VB/EVE/root",
                  "(b1/□ :Drs (e1/sing~v.01 :Agent (x1/bird~n.01)))"),
        _sentence("the/the/DT/DEF/det sea/sea/NN/CON/nsubj is/be/VB/EVE/cop "
                  "big/big/JJ/ATT/root",
                  "(b1/□ :Drs (x1/sea~n.01^p :Attribute (s1/big~a.01)))"),
        _sentence("no/no/DT/NEG/det man/man/NN/CON/nsubj walks/walk/VB/EVE/root",
                  "(b1/□ :Not (b2/□ :Drs (e1/walk~v.01 :Agent (x1/man~n.01))))"),
        _sentence("she/she/PR/PRO/nsubj reads/read/VB/EVE/root books/book/NN/CON/obj",
                  "(b1/□ :Drs (e1/read~v.01 :Agent (x1/person~n.01) "
                  ":Theme (x2/book~n.01)))"),
        _sentence("he/he/PR/PRO/nsubj writes/write/VB/EVE/root",
                  "(b1/□ :Drs (e1/write~v.01 :Agent (x1/person~n.01)))"),
        _sentence("wind/wind/NN/CON/nsubj blows/blow/VB/EVE/root",
                  "(b1/□ :Drs (e1/blow~v.01 :Agent (x1/wind~n.01)))"),
        _sentence("fish/fish/NN/CON/nsubj swim/swim/VB/EVE/root",
                  "(b1/□ :Drs (e1/swim~v.01 :Agent (x1/fish~n.01)))"),
        _sentence("a/a/DT/DEF/det red/red/JJ/ATT/amod house/house/NN/CON/root",
                  "(b1/□ :Drs (x1/house~n.01 :Attribute (s1/red~a.01)))"),
        _sentence("stars/star/NN/CON/nsubj shine/shine/VB/EVE/root",
                  "(b1/□ :Drs (e1/shine~v.01 :Agent (x1/star~n.01)))"),
        _sentence("the/the/DT/DEF/det moon/moon/NN/CON/nsubj glows/glow/VB/EVE/root",
                  "(b1/□ :Drs (e1/glow~v.01 :Agent (x1/moon~n.01^p)))"),
        _sentence("dogs/dog/NN/CON/nsubj bark/bark/VB/EVE/root",
                  "(b1/□ :Drs (e1/bark~v.01 :Agent (x1/dog~n.01)))"),
        _sentence("kids/kid/NN/CON/nsubj play/play/VB/EVE/root",
                  "(b1/□ :Drs (e1/play~v.01 :Agent (x1/kid~n.01)))"),
        _sentence("snow/snow/NN/CON/nsubj falls/fall/VB/EVE/root",
                  "(b1/□ :Drs (e1/fall~v.01 :Agent (x1/snow~n.01)))"),
        _sentence("bells/bell/NN/CON/nsubj ring/ring/VB/EVE/root",
                  "(b1/□ :Drs (e1/ring~v.01 :Agent (x1/bell~n.01)))"),
        _sentence("owls/owl/NN/CON/nsubj hunt/hunt/VB/EVE/root mice/mouse/NN/CON/obj",
                  "(b1/□ :Drs (e1/hunt~v.01 :Agent (x1/owl~n.01) "
                  ":Patient (x2/mouse~n.01)))"),
    ]


if __name__ == "__main__":
    build(Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "data")
