"""Declarative configuration and the end-to-end fit/predict pipeline used
by the CLI, cross-validation and grid search."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .corpus import Corpus, Judgement
from .entities import extract_entities
from .features import (
    CategoricalEncoder,
    VectorizerModel,
    build_feature_matrix,
    fit_vectorizer,
    select_by_correlation,
    select_by_importance,
    transform,
)
from .labels import canonicalize, mts_encode
from .lexica import Lexica, load_lexica
from .textproc import TokenStream, to_token_stream
from .trees import (
    EnsembleModel,
    Hyperparams,
    ModelError,
    STRATEGIES,
    VARIANTS,
    fit_ensemble,
    model_from_json,
    model_to_json,
    predict_batch,
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    corpus: str = ""
    lexica_dir: str | None = None
    out: str | None = None
    # vectorizer (defaults: the optimal grid values)
    max_df: float = 0.5
    min_df: float = 0.01
    ngram_lo: int = 1
    ngram_hi: int = 2
    # selection
    correlation_threshold: float = 0.05
    importance_selection: bool = True
    importance_estimators: int = 20
    # model (defaults: the tuned multi-class random forest row)
    strategy: str = "mts"
    model: str = "rf"
    class_weight: str | None = None
    max_depth: int | None = 100
    min_samples_split: int = 2
    min_samples_leaf: int = 10
    criterion: str = "gini"
    splitter: str = "best"
    n_estimators: int = 200
    bts_threshold: float = 0.5
    # evaluation / explanation
    folds: int = 10
    seed: int = 0
    relevance_samples: int = 500
    synth: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}: {self.strategy!r}")
        if self.model not in VARIANTS:
            raise ConfigError(f"model must be one of {VARIANTS}: {self.model!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")

    def hyperparams(self) -> Hyperparams:
        try:
            return Hyperparams(
                class_weight=self.class_weight,
                max_depth=self.max_depth,
                min_samples_split=self.min_samples_split,
                min_samples_leaf=self.min_samples_leaf,
                criterion=self.criterion,
                splitter=self.splitter,
                n_estimators=self.n_estimators,
                seed=self.seed,
            )
        except ModelError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        overrides = dict(overrides)
        if "ngram_range" in overrides:
            lo, hi = overrides.pop("ngram_range")
            overrides["ngram_lo"] = int(lo)
            overrides["ngram_hi"] = int(hi)
        known = set(asdict(self))
        bad = [k for k in overrides if k not in known]
        if bad:
            raise ConfigError(f"unknown config field: {bad[0]!r}")
        try:
            return replace(self, **overrides)
        except (TypeError, ModelError) as exc:
            raise ConfigError(str(exc)) from None


def config_from_json(path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    return PipelineConfig().with_overrides(raw)


@dataclass
class PreparedCorpus:
    """Per-document token streams and entity records; deterministic given
    the lexica, so they are computed once and shared across folds."""

    streams: list[TokenStream]
    records: list
    label_sets: list


def preprocess_corpus(corpus: Corpus, lexica: Lexica) -> PreparedCorpus:
    streams = [
        to_token_stream(d.id, d.raw_text, lexica.text.stopwords, lexica.text.lemmas)
        for d in corpus.documents
    ]
    records = [extract_entities(d, lexica.entities) for d in corpus.documents]
    label_sets = [canonicalize(d.annotations) for d in corpus.documents]
    return PreparedCorpus(streams, records, label_sets)


@dataclass
class FittedPipeline:
    config: PipelineConfig
    vectorizer: VectorizerModel
    encoder: CategoricalEncoder
    kept_names: list[str]
    kept_kinds: list[str]
    model: EnsembleModel

    def _matrix_for(self, streams, records) -> np.ndarray:
        counts = transform(self.vectorizer, streams)
        codes = self.encoder.transform(records)
        full = build_feature_matrix(counts, self.vectorizer.names, codes)
        return full.subset(self.kept_names).X

    def row_for(self, stream: TokenStream, record) -> np.ndarray:
        return self._matrix_for([stream], [record])[0]

    def predict_prepared(self, prep: PreparedCorpus, indices) -> list:
        streams = [prep.streams[i] for i in indices]
        records = [prep.records[i] for i in indices]
        X = self._matrix_for(streams, records)
        return predict_batch(self.model, X, self.config.bts_threshold)

    def predict_document(self, doc: Judgement, lexica: Lexica):
        stream = to_token_stream(
            doc.id, doc.raw_text, lexica.text.stopwords, lexica.text.lemmas
        )
        record = extract_entities(doc, lexica.entities)
        row = self.row_for(stream, record)
        return predict_batch(self.model, row[None, :], self.config.bts_threshold)[0]


def fit_pipeline(
    corpus: Corpus,
    config: PipelineConfig,
    lexica: Lexica | None = None,
    prep: PreparedCorpus | None = None,
    doc_indices=None,
) -> FittedPipeline:
    """Fit vectorizer, encoders, the two-stage feature selection and the
    model on the given documents (all of them by default)."""
    if lexica is None:
        lexica = load_lexica(config.lexica_dir)
    if prep is None:
        prep = preprocess_corpus(corpus, lexica)
    if doc_indices is None:
        doc_indices = range(corpus.n)
    idx = list(doc_indices)
    streams = [prep.streams[i] for i in idx]
    records = [prep.records[i] for i in idx]
    label_sets = [prep.label_sets[i] for i in idx]

    vectorizer = fit_vectorizer(
        streams, config.max_df, config.min_df, (config.ngram_lo, config.ngram_hi)
    )
    counts = transform(vectorizer, streams)
    encoder = CategoricalEncoder().fit(records)
    codes = encoder.transform(records)
    matrix = build_feature_matrix(counts, vectorizer.names, codes)

    _, alphas = mts_encode(label_sets)
    target = np.asarray(alphas)
    multiclass = len(set(alphas)) >= 2

    textual = matrix.subset([n for n, k in zip(matrix.names, matrix.kinds) if k == "textual"])
    categorical = matrix.subset(
        [n for n, k in zip(matrix.names, matrix.kinds) if k == "categorical"]
    )
    if multiclass:
        kept_cat, _ = select_by_correlation(categorical, target, config.correlation_threshold)
    else:
        kept_cat = []
    if config.importance_selection and multiclass:
        kept_text, _ = select_by_importance(
            textual, target, config.importance_estimators, seed=config.seed
        )
    else:
        if config.importance_selection and not multiclass:
            warnings.warn("single-class corpus: feature selection skipped", stacklevel=2)
        kept_text = list(textual.names)
    kept = kept_text + kept_cat
    if not kept:
        kept = list(textual.names)
    selected = matrix.subset(kept)

    model = fit_ensemble(
        selected.X,
        label_sets,
        config.hyperparams(),
        variant=config.model,
        strategy=config.strategy,
        feature_names=selected.names,
    )
    return FittedPipeline(
        config=config,
        vectorizer=vectorizer,
        encoder=encoder,
        kept_names=selected.names,
        kept_kinds=selected.kinds,
        model=model,
    )


_PIPELINE_FORMAT = "lexcat-pipeline-v1"


def pipeline_to_json(fp: FittedPipeline) -> str:
    obj = {
        "format": _PIPELINE_FORMAT,
        "config": asdict(fp.config),
        "vectorizer": {
            "vocabulary": fp.vectorizer.vocabulary,
            "max_df": fp.vectorizer.max_df,
            "min_df": fp.vectorizer.min_df,
            "ngram_range": list(fp.vectorizer.ngram_range),
        },
        "encoder": fp.encoder.tables,
        "kept_names": fp.kept_names,
        "kept_kinds": fp.kept_kinds,
        "model": json.loads(model_to_json(fp.model)),
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pipeline_from_json(text: str) -> FittedPipeline:
    obj = json.loads(text)
    if obj.get("format") != _PIPELINE_FORMAT:
        raise ConfigError(f"unsupported pipeline format: {obj.get('format')!r}")
    vec = obj["vectorizer"]
    return FittedPipeline(
        config=PipelineConfig().with_overrides(obj["config"]),
        vectorizer=VectorizerModel(
            vocabulary=dict(vec["vocabulary"]),
            max_df=vec["max_df"],
            min_df=vec["min_df"],
            ngram_range=tuple(vec["ngram_range"]),
        ),
        encoder=CategoricalEncoder(tables=obj["encoder"]),
        kept_names=list(obj["kept_names"]),
        kept_kinds=list(obj["kept_kinds"]),
        model=model_from_json(json.dumps(obj["model"])),
    )


def save_pipeline(fp: FittedPipeline, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(pipeline_to_json(fp))


def load_pipeline(path) -> FittedPipeline:
    try:
        with open(path, encoding="utf-8") as fh:
            return pipeline_from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read model file: {exc}") from None
