"""Command-line surface wiring the pipeline end to end.

Exit codes: 0 success, 1 usage, 2 data/config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile

from . import evaluation
from .anonymiser import anonymize
from .corpus import Corpus, CorpusError, corpus_stats, corpus_to_text, load_corpus
from .entities import extract_entities
from .explain import (
    build_explanation,
    class_display_names,
    export_tree_graph,
    render_explanation,
)
from .features import (
    CATEGORICAL_FIELDS,
    FeatureError,
    build_feature_matrix,
    encode_categoricals,
    feature_matrix_to_text,
    fit_vectorizer,
    transform,
)
from .labels import LabelError
from .lexica import ConfigurationError, load_lexica
from .pipeline import (
    ConfigError,
    PipelineConfig,
    config_from_json,
    fit_pipeline,
    load_pipeline,
    pipeline_to_json,
    preprocess_corpus,
)
from .synth import SynthSpec, generate_corpus
from .trees import ModelError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_DATA_ERRORS = (
    CorpusError,
    ConfigError,
    ConfigurationError,
    FeatureError,
    LabelError,
    ModelError,
    evaluation.EvaluationError,
)

COMMANDS = (
    "preprocess",
    "anonymize",
    "entities",
    "featurize",
    "train",
    "evaluate",
    "gridsearch",
    "explain",
    "export-tree",
    "synth",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract says 1
        raise UsageError(message)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lexcat-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _build_parser() -> _Parser:
    parser = _Parser(prog="lexcat", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--corpus", help="corpus file (overrides config)")
        p.add_argument("--lexica-dir", help="lexica directory (overrides config)")
        p.add_argument("--seed", type=int)
        p.add_argument("--strategy", choices=("bts", "mts"))
        p.add_argument("--model", choices=("dt", "etc", "eetc", "rf"))
        p.add_argument("--folds", type=int)
        p.add_argument("--out", help="output path")
        if name == "explain":
            p.add_argument("--sample", required=True, help="document id to explain")
            p.add_argument("--model-file", help="trained pipeline artifact")
            p.add_argument("--graph", help="also write a DOT graph of one tree here")
            p.add_argument("--graph-depth", type=int, default=3)
            p.add_argument("--tree", type=int, default=0)
        if name == "export-tree":
            p.add_argument("--model-file", required=True)
            p.add_argument("--tree", type=int, default=0)
            p.add_argument("--max-depth", type=int, default=None)
        if name == "train":
            p.add_argument("--model-file", help="where to write the pipeline artifact")
        if name == "synth":
            p.add_argument("--docs", type=int)
            p.add_argument("--classes", type=int)
    return parser


def _load_config(args) -> PipelineConfig:
    config = config_from_json(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.corpus:
        overrides["corpus"] = args.corpus
    if getattr(args, "lexica_dir", None):
        overrides["lexica_dir"] = args.lexica_dir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.strategy:
        overrides["strategy"] = args.strategy
    if args.model:
        overrides["model"] = args.model
    if args.folds is not None:
        overrides["folds"] = args.folds
    if args.out:
        overrides["out"] = args.out
    return config.with_overrides(overrides)


def _require_corpus(config: PipelineConfig) -> Corpus:
    if not config.corpus:
        raise ConfigError("no corpus file given (config field 'corpus' or --corpus)")
    return load_corpus(config.corpus)


def _out_path(config: PipelineConfig, default: str) -> str:
    return config.out if config.out else default


def _per_document(doc_id: str, fn):
    try:
        return fn()
    except _DATA_ERRORS as exc:
        raise type(exc)(f"document {doc_id!r}: {exc}") from None


def _cmd_preprocess(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    prep = preprocess_corpus(corpus, lexica)
    lines = [
        json.dumps({"id": s.source_id, "tokens": list(s.tokens)}, ensure_ascii=False)
        for s in prep.streams
    ]
    path = _out_path(config, "tokens.jsonl")
    _write_atomic(path, "\n".join(lines) + "\n")
    print(f"wrote {len(lines)} token streams to {path}")
    return EXIT_OK


def _cmd_anonymize(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    out_docs = []
    total_counts: dict[str, int] = {}
    pairs: set[tuple[str, str]] = set()
    for doc in corpus.documents:
        text, report = _per_document(doc.id, lambda: anonymize(doc.raw_text, lexica.anonymiser))
        out_docs.append(dataclasses.replace(doc, raw_text=text))
        for tag, c in report.counts.items():
            total_counts[tag] = total_counts.get(tag, 0) + c
        pairs.update(report.replaced_names)
    path = _out_path(config, "anonymized.jsonl")
    _write_atomic(path, corpus_to_text(Corpus(tuple(out_docs))))
    report_path = path + ".report.tsv"
    lines = [f"{tag}\t{total_counts[tag]}" for tag in sorted(total_counts)]
    lines += [f"{orig}\t{canon}" for orig, canon in sorted(pairs)]
    _write_atomic(report_path, "\n".join(lines) + "\n" if lines else "")
    print(f"wrote anonymized corpus to {path} (report: {report_path})")
    return EXIT_OK


def _cmd_entities(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    lines = ["\t".join(("id",) + CATEGORICAL_FIELDS)]
    for doc in corpus.documents:
        record = _per_document(doc.id, lambda: extract_entities(doc, lexica.entities))
        lines.append("\t".join((doc.id,) + record.values()))
    path = _out_path(config, "entities.tsv")
    _write_atomic(path, "\n".join(lines) + "\n")
    print(f"wrote {corpus.n} entity records to {path}")
    return EXIT_OK


def _cmd_featurize(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    prep = preprocess_corpus(corpus, lexica)
    vec = fit_vectorizer(
        prep.streams, config.max_df, config.min_df, (config.ngram_lo, config.ngram_hi)
    )
    counts = transform(vec, prep.streams)
    codes, _ = encode_categoricals(prep.records)
    matrix = build_feature_matrix(counts, vec.names, codes)
    path = _out_path(config, "features.tsv")
    _write_atomic(path, feature_matrix_to_text(matrix, [d.id for d in corpus.documents]))
    print(f"wrote {matrix.X.shape[0]}x{matrix.X.shape[1]} feature matrix to {path}")
    return EXIT_OK


def _cmd_train(config: PipelineConfig, model_file: str | None) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    fitted = fit_pipeline(corpus, config, lexica)
    path = model_file or _out_path(config, "model.json")
    _write_atomic(path, pipeline_to_json(fitted))
    n_trees = len(fitted.model.trees)
    print(f"trained {config.strategy}/{config.model} ({n_trees} trees) -> {path}")
    return EXIT_OK


def _cmd_evaluate(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    report = evaluation.cross_validate(
        corpus, config, k=config.folds, seed=config.seed, lexica=lexica
    )
    row = evaluation.report_row(config.strategy, config.model, report)
    text = evaluation.REPORT_HEADER + "\n" + row + "\n"
    path = _out_path(config, "evaluation.tsv")
    _write_atomic(path, text)
    print(text, end="")
    print(f"wrote report to {path}")
    return EXIT_OK


def _cmd_gridsearch(config: PipelineConfig) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    if not config.grid:
        raise ConfigError("config field 'grid' must map parameter names to value lists")
    result = evaluation.grid_search(
        corpus,
        config.grid,
        k=config.folds,
        base_config=config,
        seed=config.seed,
        lexica=lexica,
    )
    lines = ["params\tscore"]
    for params, score in result.scores:
        lines.append(f"{json.dumps(params, sort_keys=True)}\t{score:.6f}")
    lines.append(f"best\t{json.dumps(result.best_params, sort_keys=True)}")
    path = _out_path(config, "gridsearch.tsv")
    _write_atomic(path, "\n".join(lines) + "\n")
    print(f"best params: {result.best_params} (score {result.best_score:.4f})")
    return EXIT_OK


def _cmd_explain(config: PipelineConfig, args) -> int:
    corpus = _require_corpus(config)
    lexica = load_lexica(config.lexica_dir)
    if args.model_file:
        fitted = load_pipeline(args.model_file)
    else:
        fitted = fit_pipeline(corpus, config, lexica)
    matches = [d for d in corpus.documents if d.id == args.sample]
    if not matches:
        raise CorpusError(f"document id not found in corpus: {args.sample!r}")
    doc = matches[0]
    explanation = build_explanation(fitted, doc, lexica)
    text = render_explanation(explanation)
    if config.out:
        _write_atomic(config.out, text)
    print(text, end="")
    if args.graph:
        model = fitted.model
        trees = model.trees
        if not 0 <= args.tree < len(trees):
            raise ConfigError(f"tree index out of range [0,{len(trees)}): {args.tree}")
        forest_index = args.tree // max(1, len(trees) // len(model.class_forests))
        dot = export_tree_graph(
            trees[args.tree],
            args.graph_depth,
            model.feature_names,
            class_display_names(model, min(forest_index, len(model.class_forests) - 1)),
        )
        _write_atomic(args.graph, dot)
        print(f"wrote tree graph to {args.graph}")
    return EXIT_OK


def _cmd_export_tree(config: PipelineConfig, args) -> int:
    fitted = load_pipeline(args.model_file)
    model = fitted.model
    trees = model.trees
    if not 0 <= args.tree < len(trees):
        raise ConfigError(f"tree index out of range [0,{len(trees)}): {args.tree}")
    forest_index = args.tree // max(1, len(trees) // len(model.class_forests))
    dot = export_tree_graph(
        trees[args.tree],
        args.max_depth,
        model.feature_names,
        class_display_names(model, min(forest_index, len(model.class_forests) - 1)),
    )
    path = _out_path(config, "tree.dot")
    _write_atomic(path, dot)
    print(f"wrote tree graph to {path}")
    return EXIT_OK


def _cmd_synth(config: PipelineConfig, args) -> int:
    params = dict(config.synth)
    if args.docs is not None:
        params["n_docs"] = args.docs
    if args.classes is not None:
        params["n_classes"] = args.classes
    params.setdefault("seed", config.seed)
    try:
        spec = SynthSpec(**params)
    except TypeError as exc:
        raise ConfigError(f"bad synth parameters: {exc}") from None
    corpus = generate_corpus(spec)
    path = _out_path(config, "synthetic.jsonl")
    _write_atomic(path, corpus_to_text(corpus))
    stats = corpus_stats(corpus)
    print(
        f"wrote {corpus.n} documents to {path} "
        f"(cardinality {stats.label_cardinality:.3f}, {stats.class_count} classes)"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("missing command")
        config = _load_config(args)
        if args.command == "preprocess":
            return _cmd_preprocess(config)
        if args.command == "anonymize":
            return _cmd_anonymize(config)
        if args.command == "entities":
            return _cmd_entities(config)
        if args.command == "featurize":
            return _cmd_featurize(config)
        if args.command == "train":
            return _cmd_train(config, args.model_file)
        if args.command == "evaluate":
            return _cmd_evaluate(config)
        if args.command == "gridsearch":
            return _cmd_gridsearch(config)
        if args.command == "explain":
            return _cmd_explain(config, args)
        if args.command == "export-tree":
            return _cmd_export_tree(config, args)
        if args.command == "synth":
            return _cmd_synth(config, args)
        raise UsageError(f"unknown command: {args.command}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
