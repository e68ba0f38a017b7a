"""End-to-end pipelines through the command-line interface."""

import json

import pytest

from dagrammar.cli import main
from dagrammar.graph import loads_corpus, parse_penman, print_penman, validate
from dagrammar.grammar import load_grammar
from dagrammar.derive import loads_trace, replay_trace

import worked_example

TOY = """\
(b1/□ :Drs (e1/sleep~v.01 :Agent (x1/cat~n.01)))

(b1/□ :Not (b2/□ :Drs (e1/run~v.01 :Agent (x1/dog~n.01))))
"""

SENTENCES = """\
a a DT DEF det
cat cat NN CON nsubj
sleeps sleep VB EVE root
(b1/□ :Drs (e1/sleep~v.01 :Agent (x1/cat~n.01)))

a a DT DEF det
dog dog NN CON nsubj
runs run VB EVE root
(b1/□ :Drs (e1/run~v.01 :Agent (x1/dog~n.01)))
"""


@pytest.fixture
def toy_corpus(tmp_path):
    path = tmp_path / "toy.penman"
    path.write_text(TOY, encoding="utf-8")
    return path


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_required_flag_is_usage_error(capsys):
    assert main(["extract", "--corpus", "x.penman"]) == 1


def test_unreadable_file_is_data_error(tmp_path, capsys):
    assert main(["extract", "--corpus", str(tmp_path / "nope.penman"),
                 "--out", str(tmp_path / "g.txt")]) == 2
    assert "error" in capsys.readouterr().err


def test_extract_then_stats(toy_corpus, tmp_path, capsys):
    out = tmp_path / "grammar.txt"
    assert main(["extract", "--corpus", str(toy_corpus),
                 "--out", str(out)]) == 0
    grammar = load_grammar(out)
    assert len(grammar.productions) >= 3
    assert main(["stats", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    header = lines[-2].split("\t")
    values = lines[-1].split("\t")
    assert header == ["#frags", "avg. rank"]
    assert int(values[0]) == len(grammar.productions)
    assert main(["stats", str(out), "--per-token"]) == 0


def test_roundtrip_reports_perfect_identity(toy_corpus, capsys):
    assert main(["roundtrip", "--corpus", str(toy_corpus)]) == 0
    assert "F1=1.000" in capsys.readouterr().out


def test_roundtrip_over_bundled_corpus(capsys):
    assert main(["roundtrip", "--corpus", "data/corpus.penman"]) == 0
    assert "F1=1.000" in capsys.readouterr().out


def test_sample_traces_replay_into_valid_graphs(toy_corpus, tmp_path, capsys):
    grammar_path = tmp_path / "grammar.txt"
    main(["extract", "--corpus", str(toy_corpus), "--out", str(grammar_path)])
    trace_path = tmp_path / "samples.trace"
    assert main(["sample", "--grammar", str(grammar_path), "--count", "5",
                 "--seed", "7", "--depth-cap", "8",
                 "--out", str(trace_path)]) == 0
    blocks = trace_path.read_text(encoding="utf-8").strip().split("\n\n")
    assert len(blocks) == 5
    for block in blocks:
        derivation = replay_trace(loads_trace(block))
        assert validate(derivation.graph()).ok


def test_sample_is_deterministic_per_seed(toy_corpus, tmp_path, capsys):
    grammar_path = tmp_path / "grammar.txt"
    main(["extract", "--corpus", str(toy_corpus), "--out", str(grammar_path)])
    capsys.readouterr()
    outputs = []
    for _ in range(2):
        assert main(["sample", "--grammar", str(grammar_path), "--count",
                     "3", "--format", "penman"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    for text in outputs[0].strip().split("\n\n"):
        assert validate(parse_penman(text)).ok


def test_convert_both_directions(tmp_path, capsys):
    graphs_path = tmp_path / "toy.penman"
    graphs_path.write_text(TOY, encoding="utf-8")
    clauses_path = tmp_path / "toy.clauses"
    assert main(["convert", "--input", str(graphs_path), "--to-boxes",
                 "--out", str(clauses_path)]) == 0
    back_path = tmp_path / "back.penman"
    assert main(["convert", "--input", str(clauses_path), "--to-graph",
                 "--out", str(back_path)]) == 0
    capsys.readouterr()
    assert main(["eval", "--pred", str(back_path), "--gold",
                 str(graphs_path)]) == 0
    assert "f1=1.0000" in capsys.readouterr().out


def test_eval_identity_with_fine_grained_records(toy_corpus, capsys):
    assert main(["eval", "--pred", str(toy_corpus), "--gold",
                 str(toy_corpus), "--fine-grained"]) == 0
    out = capsys.readouterr().out
    assert "f1=1.0000" in out
    assert "concepts" in out
    assert "operators_f1=1.0000" in out


def test_eval_detects_differences(tmp_path, toy_corpus, capsys):
    other = tmp_path / "other.penman"
    other.write_text(TOY.replace("cat", "dog"), encoding="utf-8")
    assert main(["eval", "--pred", str(other), "--gold",
                 str(toy_corpus)]) == 0
    out = capsys.readouterr().out
    assert "f1=1.0000" not in out


def test_train_then_parse_round_trip(tmp_path, capsys):
    corpus_path = tmp_path / "train.corpus"
    corpus_path.write_text(SENTENCES, encoding="utf-8")
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "dim_word": 16, "dim_pretrained": 12, "dim_feature": 8,
        "dim_hidden": 24, "dim_symbol": 12, "learning_rate": 0.01,
        "decay_every": 200, "epochs": 30, "seed": 0}), encoding="utf-8")
    model_path = tmp_path / "model.pt"
    assert main(["train", "--corpus", str(corpus_path), "--out",
                 str(model_path), "--config", str(config_path)]) == 0
    assert "trained 30 epochs" in capsys.readouterr().out
    parsed_path = tmp_path / "parsed.penman"
    assert main(["parse", "--model", str(model_path), "--input",
                 str(corpus_path), "--out", str(parsed_path)]) == 0
    parsed = loads_corpus(parsed_path.read_text(encoding="utf-8"))
    assert len(parsed) == 2 and all(validate(g).ok for g in parsed)
    gold_path = tmp_path / "gold.penman"
    gold_path.write_text(
        "(b1/□ :Drs (e1/sleep~v.01 :Agent (x1/cat~n.01)))\n\n"
        "(b1/□ :Drs (e1/run~v.01 :Agent (x1/dog~n.01)))\n", encoding="utf-8")
    capsys.readouterr()
    assert main(["eval", "--pred", str(parsed_path), "--gold",
                 str(gold_path)]) == 0
    assert "f1=1.0000" in capsys.readouterr().out


def test_train_rejects_unknown_config_keys(tmp_path, capsys):
    corpus_path = tmp_path / "train.corpus"
    corpus_path.write_text(SENTENCES, encoding="utf-8")
    config_path = tmp_path / "config.json"
    config_path.write_text('{"banana": 1}', encoding="utf-8")
    assert main(["train", "--corpus", str(corpus_path), "--out",
                 str(tmp_path / "m.pt"), "--config", str(config_path)]) == 1


def test_worked_example_grammar_statistics(tmp_path, capsys):
    corpus_path = tmp_path / "one.penman"
    corpus_path.write_text(worked_example.GRAPH + "\n", encoding="utf-8")
    grammar_path = tmp_path / "grammar.txt"
    assert main(["extract", "--corpus", str(corpus_path), "--out",
                 str(grammar_path)]) == 0
    capsys.readouterr()
    assert main(["stats", str(grammar_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].split("\t") == ["7", "0.43"]
