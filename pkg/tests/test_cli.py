import json

import pytest

from lexcat.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from lexcat.corpus import load_corpus


@pytest.fixture(scope="module")
def synth_corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "corpus.jsonl"
    rc = main(["synth", "--docs", "80", "--classes", "3", "--seed", "5", "--out", str(path)])
    assert rc == EXIT_OK
    return path


@pytest.fixture(scope="module")
def fast_config_path(tmp_path_factory, synth_corpus_path):
    path = tmp_path_factory.mktemp("cli") / "config.json"
    path.write_text(
        json.dumps(
            {
                "corpus": str(synth_corpus_path),
                "n_estimators": 5,
                "min_samples_leaf": 1,
                "folds": 3,
                "seed": 5,
                "relevance_samples": 60,
            }
        ),
        encoding="utf-8",
    )
    return path


def test_unknown_command_usage_exit():
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_missing_corpus_is_data_error(tmp_path):
    assert main(["entities", "--corpus", str(tmp_path / "nope.jsonl")]) == EXIT_DATA
    assert main(["entities"]) == EXIT_DATA


def test_bad_config_is_data_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"model": "boost"}', encoding="utf-8")
    assert main(["train", "--config", str(cfg)]) == EXIT_DATA
    cfg.write_text("not json", encoding="utf-8")
    assert main(["train", "--config", str(cfg)]) == EXIT_DATA


def test_synth_corpus_loads(synth_corpus_path):
    corpus = load_corpus(synth_corpus_path)
    assert corpus.n == 80


def test_preprocess_entities_featurize(synth_corpus_path, tmp_path):
    tokens = tmp_path / "tokens.jsonl"
    assert main(["preprocess", "--corpus", str(synth_corpus_path), "--out", str(tokens)]) == EXIT_OK
    lines = tokens.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 80
    assert json.loads(lines[0])["id"] == "synth-00000"

    entities = tmp_path / "entities.tsv"
    assert main(["entities", "--corpus", str(synth_corpus_path), "--out", str(entities)]) == EXIT_OK
    rows = entities.read_text(encoding="utf-8").splitlines()
    assert rows[0].startswith("id\tcase_type")
    assert len(rows) == 81

    features = tmp_path / "features.tsv"
    assert main(["featurize", "--corpus", str(synth_corpus_path), "--out", str(features)]) == EXIT_OK
    assert len(features.read_text(encoding="utf-8").splitlines()) == 81


def test_anonymize_command(tmp_path):
    corpus = tmp_path / "c.jsonl"
    record = {
        "id": "a",
        "text": "el Magistrado D. Juan Pérez falló",
        "labels": [{"order": "civil", "categories": ["a", "b", "c"]}],
    }
    corpus.write_text(json.dumps(record, ensure_ascii=False) + "\n", encoding="utf-8")
    out = tmp_path / "anon.jsonl"
    assert main(["anonymize", "--corpus", str(corpus), "--out", str(out)]) == EXIT_OK
    anonymized = load_corpus(out)
    assert "Juan" not in anonymized.documents[0].raw_text
    report = (tmp_path / "anon.jsonl.report.tsv").read_text(encoding="utf-8")
    assert "@Judge\t1" in report


def test_train_evaluate_explain_export(fast_config_path, synth_corpus_path, tmp_path):
    model_file = tmp_path / "model.json"
    rc = main(["train", "--config", str(fast_config_path), "--model-file", str(model_file)])
    assert rc == EXIT_OK
    assert model_file.is_file()

    report = tmp_path / "evaluation.tsv"
    rc = main(["evaluate", "--config", str(fast_config_path), "--out", str(report)])
    assert rc == EXIT_OK
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[0].split("\t")[0] == "strategy"
    assert lines[1].split("\t")[0] == "MTS"
    assert len(lines[1].split("\t")) == 12

    out_text = tmp_path / "expl.txt"
    graph = tmp_path / "tree.dot"
    rc = main(
        [
            "explain",
            "--config", str(fast_config_path),
            "--sample", "synth-00003",
            "--model-file", str(model_file),
            "--out", str(out_text),
            "--graph", str(graph),
        ]
    )
    assert rc == EXIT_OK
    text = out_text.read_text(encoding="utf-8")
    assert text.startswith("For sample synth-00003 ")
    assert "confidence of" in text
    assert graph.read_text(encoding="utf-8").startswith("digraph")

    dot = tmp_path / "t.dot"
    rc = main(["export-tree", "--model-file", str(model_file), "--tree", "0", "--out", str(dot)])
    assert rc == EXIT_OK
    assert dot.read_text(encoding="utf-8").startswith("digraph")

    rc = main(["explain", "--config", str(fast_config_path), "--sample", "missing",
               "--model-file", str(model_file)])
    assert rc == EXIT_DATA


def test_gridsearch_command(synth_corpus_path, tmp_path):
    cfg = tmp_path / "grid.json"
    cfg.write_text(
        json.dumps(
            {
                "corpus": str(synth_corpus_path),
                "n_estimators": 3,
                "min_samples_leaf": 1,
                "folds": 2,
                "grid": {"criterion": ["gini", "entropy"]},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "grid.tsv"
    assert main(["gridsearch", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "params\tscore"
    assert lines[-1].startswith("best\t")


def test_evaluate_deterministic_artifacts(fast_config_path, tmp_path):
    a = tmp_path / "a.tsv"
    b = tmp_path / "b.tsv"
    assert main(["evaluate", "--config", str(fast_config_path), "--out", str(a)]) == EXIT_OK
    assert main(["evaluate", "--config", str(fast_config_path), "--out", str(b)]) == EXIT_OK
    # identical up to the wall-clock training-time column
    row_a = a.read_text(encoding="utf-8").splitlines()[1].split("\t")[:-1]
    row_b = b.read_text(encoding="utf-8").splitlines()[1].split("\t")[:-1]
    assert row_a == row_b


def test_train_twice_byte_identical(fast_config_path, tmp_path):
    m1 = tmp_path / "m1.json"
    m2 = tmp_path / "m2.json"
    assert main(["train", "--config", str(fast_config_path), "--model-file", str(m1)]) == EXIT_OK
    assert main(["train", "--config", str(fast_config_path), "--model-file", str(m2)]) == EXIT_OK
    assert m1.read_bytes() == m2.read_bytes()
