"""Command-line entry point wiring the modules into file pipelines.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed assertion
(the roundtrip identity check).  Set DAGRAMMAR_LOG=debug for diagnostics.
"""

import argparse
import json
import logging
import os
import random
import sys
from dataclasses import fields

from .boxes import (boxes_to_graph, dumps_clause_corpus, graph_to_boxes,
                    load_clause_corpus)
from .derive import dumps_trace, replay, sample
from .errors import DagrammarError
from .evaluate import DEFAULT_RESTARTS, corpus_eval, fine_grained
from .grammar import build_grammar, dump_grammar, extract_actions, load_grammar
from .graph import dumps_corpus, load_corpus, print_penman
from .model import (TrainConfig, load_model, load_sentences, save_model,
                    train)

log = logging.getLogger("dagrammar")

DEFAULT_SEED = 0
DEFAULT_DEPTH_CAP = 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_convert(args) -> int:
    if args.to_graph:
        docs = load_clause_corpus(args.input)
        graphs, failures = [], 0
        for i, doc in enumerate(docs):
            try:
                graphs.append(boxes_to_graph(doc))
            except DagrammarError as exc:
                failures += 1
                print("document %d: %s" % (i, exc), file=sys.stderr)
        _write(dumps_corpus(graphs), args.out)
        print("converted %d/%d documents" % (len(graphs), len(docs)),
              file=sys.stderr)
        return 0 if graphs else 2
    graphs = load_corpus(args.input)
    docs, failures = [], 0
    for i, graph in enumerate(graphs):
        try:
            docs.append(graph_to_boxes(graph))
        except DagrammarError as exc:
            failures += 1
            print("graph %d: %s" % (i, exc), file=sys.stderr)
    _write(dumps_clause_corpus(docs), args.out)
    print("converted %d/%d graphs" % (len(docs), len(graphs)),
          file=sys.stderr)
    return 0 if docs else 2


def cmd_extract(args) -> int:
    graphs = load_corpus(args.corpus)
    grammar = build_grammar(graphs)
    dump_grammar(grammar, args.out)
    stats = grammar.stats()
    print("extracted %d production types (%d tokens) from %d graphs"
          % (stats.types, stats.tokens, stats.graphs))
    return 0


def cmd_stats(args) -> int:
    stats = load_grammar(args.grammar).stats()
    avg = stats.avg_rank_tokens if args.per_token else stats.avg_rank_types
    print("#frags\tavg. rank")
    print("%d\t%.2f" % (stats.types, avg))
    return 0


def cmd_roundtrip(args) -> int:
    golds = load_corpus(args.corpus)
    preds = [replay(extract_actions(g)).graph() for g in golds]
    result = corpus_eval(preds, golds, restarts=args.restarts,
                         seed=args.seed)
    print("F1=%.3f" % result.f1)
    if result.f1 == 1.0:
        return 0
    for i, pair in enumerate(result.results):
        if pair.f1 < 1.0:
            print("graph %d: F1=%.3f" % (i, pair.f1), file=sys.stderr)
    return 3


def cmd_sample(args) -> int:
    grammar = load_grammar(args.grammar)
    blocks = []
    for i in range(args.count):
        derivation = sample(grammar, random.Random(args.seed + i),
                            args.depth_cap)
        if args.format == "penman":
            blocks.append(print_penman(derivation.graph()))
        else:
            blocks.append(dumps_trace(derivation.events()).rstrip("\n"))
    _write("\n\n".join(blocks) + "\n", args.out)
    return 0


def _load_config(args) -> TrainConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            values = json.load(handle)
        unknown = set(values) - {f.name for f in fields(TrainConfig)}
        if unknown:
            raise UsageError("unknown config keys: %s"
                             % ", ".join(sorted(unknown)))
    for name in ("epochs", "seed", "learning_rate"):
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    return TrainConfig(**values)


def cmd_train(args) -> int:
    corpus = load_sentences(args.corpus)
    config = _load_config(args)
    model = train(corpus, config)
    save_model(model, args.out)
    print("trained %d epochs, final mean loss %.4f, action accuracy %.4f"
          % (len(model.history), model.history[-1],
             model.action_accuracy(corpus)))
    return 0


def cmd_parse(args) -> int:
    model = load_model(args.model)
    sentences = load_sentences(args.input)
    graphs = [model.parse(s.tokens, depth_cap=args.depth_cap,
                          restrict=not args.no_restrict)
              for s in sentences]
    _write(dumps_corpus(graphs), args.out)
    return 0


def _print_table(rows: list[tuple[str, int, int, int, float, float, float]]):
    header = ("", "matched", "pred", "gold", "precision", "recall", "f1")
    widths = [max(len(str(row[i])) for row in [header, *rows])
              for i in range(len(header))]
    for row in [header, *rows]:
        cells = []
        for i, cell in enumerate(row):
            text = "%.4f" % cell if isinstance(cell, float) else str(cell)
            cells.append(text.ljust(widths[i] + 2))
        print("".join(cells).rstrip())


def cmd_eval(args) -> int:
    preds = load_corpus(args.pred)
    golds = load_corpus(args.gold)
    result = corpus_eval(preds, golds, restarts=args.restarts,
                         seed=args.seed)
    rows = [("corpus", result.matched, result.pred_triples,
             result.gold_triples, result.precision, result.recall,
             result.f1)]
    records = {"pairs": result.pairs, "matched": result.matched,
               "pred_triples": result.pred_triples,
               "gold_triples": result.gold_triples,
               "precision": "%.4f" % result.precision,
               "recall": "%.4f" % result.recall,
               "f1": "%.4f" % result.f1,
               "ill_formed": result.ill_formed}
    if args.fine_grained:
        sums: dict[str, list[int]] = {}
        for pred, gold, pair in zip(preds, golds, result.results):
            for name, score in fine_grained(pred, gold, pair.mapping).items():
                bucket = sums.setdefault(name, [0, 0, 0])
                bucket[0] += score.matched
                bucket[1] += score.pred_count
                bucket[2] += score.gold_count
        for name, (matched, n_pred, n_gold) in sums.items():
            precision = matched / n_pred if n_pred else 1.0
            recall = matched / n_gold if n_gold else 1.0
            f1 = (2 * precision * recall / (precision + recall)
                  if precision + recall else 0.0)
            rows.append((name, matched, n_pred, n_gold, precision, recall,
                         f1))
            records[name.replace("-", "_") + "_f1"] = "%.4f" % f1
    _print_table(rows)
    print()
    for key, value in records.items():
        print("%s=%s" % (key, value))
    return 0


# ---------------------------------------------------------------------------
# Wiring

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dagrammar",
                     description="Graph grammars for scoped meaning "
                                 "representations: conversion, extraction, "
                                 "derivation, training, evaluation.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("convert", help="clause documents <-> graph corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    direction = p.add_mutually_exclusive_group(required=True)
    direction.add_argument("--to-graph", action="store_true")
    direction.add_argument("--to-boxes", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("extract", help="build a grammar from a graph corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stats", help="summarize a grammar file")
    p.add_argument("grammar")
    p.add_argument("--per-token", action="store_true",
                   help="weight ranks by production counts")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("roundtrip",
                       help="assert extract/replay identity over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("sample", help="derive random graphs from a grammar")
    p.add_argument("--grammar", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
    p.add_argument("--format", choices=("trace", "penman"), default="trace")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="fit an action scorer on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None,
                   help="JSON file of training hyperparameters")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="decode graphs for token blocks")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
    p.add_argument("--no-restrict", action="store_true",
                   help="normalize scores over all productions")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="match predictions against gold graphs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fine-grained", action="store_true")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("DAGRAMMAR_LOG", "warning").upper(),
                      logging.WARNING))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except (DagrammarError, OSError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
