"""Per-decision explanations: decision-path extraction, perturbation-based
term relevance, natural-language rendering and tree-graph export."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import LabelAssignment
from .entities import extract_entities
from .textproc import to_token_stream
from .trees import EnsembleModel, Tree, predict_proba, predict_proba_batch, predict


class ExplainError(ValueError):
    pass


class TemplateError(KeyError):
    pass


@dataclass(frozen=True)
class PathStep:
    feature: str
    value: float
    direction: str  # "less" | "more"
    threshold: float

    def __post_init__(self) -> None:
        if self.direction not in ("less", "more"):
            raise ExplainError(f"bad direction: {self.direction!r}")
        if (self.value <= self.threshold) != (self.direction == "less"):
            raise ExplainError("direction contradicts the value/threshold comparison")


def extract_path(tree: Tree, row, feature_names) -> list[PathStep]:
    """Root-to-leaf walk recording (feature, value, direction, threshold) at
    every split: value <= threshold goes left as 'less', otherwise right as
    'more'."""
    row = np.asarray(row, dtype=float)
    steps: list[PathStep] = []
    node = 0
    seen = set()
    while tree.feature[node] >= 0:
        if node in seen:
            raise ExplainError("malformed tree: cycle in decision path")
        seen.add(node)
        f = int(tree.feature[node])
        thr = float(tree.threshold[node])
        value = float(row[f])
        if value <= thr:
            steps.append(PathStep(feature_names[f], value, "less", thr))
            node = int(tree.left[node])
        else:
            steps.append(PathStep(feature_names[f], value, "more", thr))
            node = int(tree.right[node])
        if not 0 <= node < tree.n_nodes:
            raise ExplainError("malformed tree: missing child node")
    return steps


def aggregate_terms(paths, textual_names) -> list[str]:
    """N-gram features appearing in any path step, ordered by descending
    occurrence count across all trees (ties alphabetical)."""
    textual = set(textual_names)
    counts = Counter(
        step.feature for path in paths for step in path if step.feature in textual
    )
    return sorted(counts, key=lambda t: (-counts[t], t))


def _surrogate_coefficients(
    model: EnsembleModel,
    row: np.ndarray,
    active: np.ndarray,
    class_index: int,
    n_samples: int,
    seed: int,
) -> np.ndarray:
    """Proximity-weighted least-squares fit of the explained class
    probability on term-presence indicators."""
    k = len(active)
    rng = np.random.default_rng(seed)
    keep = rng.random((n_samples, k)) >= 0.5
    X = np.tile(row, (n_samples, 1))
    X[:, active] = row[active] * keep
    y = predict_proba_batch(model, X)[:, class_index]
    distances = k - keep.sum(axis=1)
    sigma = 0.75 * np.sqrt(k)
    w = np.exp(-(distances.astype(float) ** 2) / sigma**2)
    sqrt_w = np.sqrt(w)[:, None]
    A = np.hstack([np.ones((n_samples, 1)), keep.astype(float)]) * sqrt_w
    b = y * sqrt_w[:, 0]
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return coef[1:]


def perturbation_relevance(
    model: EnsembleModel,
    row,
    n_samples: int = 500,
    seed: int = 0,
    textual_indices=None,
    threshold: float = 0.5,
) -> dict[str, float]:
    """Term relevance from random perturbations of the document's n-gram
    counts: each nonzero count is zeroed with probability 0.5, the explained
    class probability of every perturbed copy is queried, and a
    proximity-weighted linear surrogate is fitted on presence indicators.

    Returns absolute surrogate coefficients; the signed values are exposed
    through signed_relevance(). For multi-label predictions each predicted
    assignment is explained separately and the coefficients are averaged.
    """
    rel, _ = signed_relevance(model, row, n_samples, seed, textual_indices, threshold)
    return {t: abs(v) for t, v in rel.items()}


def signed_relevance(
    model: EnsembleModel,
    row,
    n_samples: int = 500,
    seed: int = 0,
    textual_indices=None,
    threshold: float = 0.5,
) -> tuple[dict[str, float], tuple[LabelAssignment, ...]]:
    if n_samples < 10:
        raise ExplainError("n_samples must be >= 10")
    row = np.asarray(row, dtype=float)
    if textual_indices is None:
        textual_indices = range(len(row))
    textual_indices = np.asarray(sorted(textual_indices), dtype=np.int64)
    active = textual_indices[row[textual_indices] != 0]
    predicted = predict(model, row, threshold)
    if len(active) == 0:
        return {}, predicted
    probs = predict_proba(model, row)
    if model.strategy == "mts":
        class_indices = [int(np.argmax(probs))]
    else:
        class_indices = [model.class_catalog.index(a) for a in predicted]
    coefs = np.zeros(len(active))
    for ci in class_indices:
        coefs += _surrogate_coefficients(model, row, active, ci, n_samples, seed)
    coefs /= len(class_indices)
    names = [model.feature_names[i] for i in active]
    return dict(zip(names, coefs)), predicted


def select_top_terms(freq_ordered, relevances, limit: int = 7) -> list[tuple[str, float]]:
    """First `limit` frequency-ordered terms that carry a relevance, then
    sorted by relevance descending."""
    chosen = [t for t in freq_ordered if t in relevances][:limit]
    return sorted(((t, relevances[t]) for t in chosen), key=lambda kv: (-kv[1], kv[0]))


def confidence(model: EnsembleModel, row, threshold: float = 0.5) -> int:
    """Rounded percentage of the mean class probability behind the
    prediction (mean over assignments for multi-positive BTS output)."""
    row = np.asarray(row, dtype=float)
    probs = predict_proba(model, row)
    if model.strategy == "mts":
        value = probs[int(np.argmax(probs))]
    else:
        predicted = predict(model, row, threshold)
        idx = [model.class_catalog.index(a) for a in predicted]
        value = float(np.mean(probs[idx]))
    return int(round(100 * value))


@dataclass(frozen=True)
class Explanation:
    sample_id: str
    case_type: str
    court: str
    decision: str
    decision_type: str
    instance_type: str
    jurisdiction: str
    resolution_type: str
    assignments: tuple[LabelAssignment, ...]
    confidence: int
    top_terms: tuple[tuple[str, float], ...]
    paths: tuple = ()
    signed_relevance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.top_terms) > 7:
            raise ExplainError("at most 7 top terms")
        if not 0 <= self.confidence <= 100:
            raise ExplainError("confidence must be a percentage")


@dataclass(frozen=True)
class ExplanationTemplate:
    header: str = "For sample {id} the features' values and model decision are:\n"
    entity_block: str = (
        "- Case type: {case_type}\n"
        "- Court: {court}\n"
        "- Decision: {decision}\n"
        "- Decision type: {decision_type}\n"
        "- Instance type: {instance_type}\n"
        "- Jurisdiction: {jurisdiction}\n"
        "- Resolution type: {resolution_type}\n"
    )
    assignment_block: str = (
        "- Substantive order: {order}\n- Law categories: {cat1}, {cat2} y {cat3}\n"
    )
    confidence_line: str = "This decision has a confidence of {pct}\n"
    terms_header: str = "The most representative terms (ngrams) and their relevance are:\n"
    term_line: str = "- {term} -- {relevance:.3f}\n"


DEFAULT_TEMPLATE = ExplanationTemplate()


def _fmt(template: str, **fields) -> str:
    try:
        return template.format(**fields)
    except (KeyError, IndexError) as exc:
        raise TemplateError(f"missing template field: {exc}") from None


def render_explanation(explanation: Explanation, template: ExplanationTemplate = DEFAULT_TEMPLATE) -> str:
    """Deterministic natural-language rendering; identical explanations
    produce identical bytes."""
    e = explanation
    parts = [_fmt(template.header, id=e.sample_id), "\n"]
    parts.append(
        _fmt(
            template.entity_block,
            case_type=e.case_type,
            court=e.court,
            decision=e.decision,
            decision_type=e.decision_type,
            instance_type=e.instance_type,
            jurisdiction=e.jurisdiction,
            resolution_type=e.resolution_type,
        )
    )
    parts.append("\n")
    blocks = [
        _fmt(
            template.assignment_block,
            order=a.substantive_order,
            cat1=a.law_categories[0],
            cat2=a.law_categories[1],
            cat3=a.law_categories[2],
        )
        for a in e.assignments
    ]
    parts.append("\n".join(blocks))
    parts.append("\n")
    parts.append(_fmt(template.confidence_line, pct=e.confidence))
    parts.append("\n")
    parts.append(template.terms_header)
    for term, rel in e.top_terms:
        parts.append(_fmt(template.term_line, term=term, relevance=rel))
    return "".join(parts)


def build_explanation(fitted, doc, lexica, n_samples: int | None = None, seed: int | None = None) -> Explanation:
    """Assemble the full explanation of one document under a fitted
    pipeline: entities, prediction, confidence, decision paths and the
    top relevance-bearing terms."""
    config = fitted.config
    n_samples = config.relevance_samples if n_samples is None else n_samples
    seed = config.seed if seed is None else seed
    stream = to_token_stream(doc.id, doc.raw_text, lexica.text.stopwords, lexica.text.lemmas)
    record = extract_entities(doc, lexica.entities)
    row = fitted.row_for(stream, record)
    model = fitted.model
    textual_idx = [i for i, k in enumerate(fitted.kept_kinds) if k == "textual"]
    textual_names = {fitted.kept_names[i] for i in textual_idx}

    signed, predicted = signed_relevance(
        model, row, n_samples, seed, textual_idx, config.bts_threshold
    )
    relevances = {t: abs(v) for t, v in signed.items()}
    paths = tuple(extract_path(t, row, model.feature_names) for t in model.trees)
    freq_ordered = aggregate_terms(paths, textual_names)
    top = select_top_terms(freq_ordered, relevances)
    display = record.display_values()
    return Explanation(
        sample_id=doc.id,
        case_type=display[0],
        court=display[1],
        decision=display[2],
        decision_type=display[3],
        instance_type=display[4],
        jurisdiction=display[5],
        resolution_type=display[6],
        assignments=tuple(predicted),
        confidence=confidence(model, row, config.bts_threshold),
        top_terms=tuple(top),
        paths=paths,
        signed_relevance=signed,
    )


def class_display_names(model: EnsembleModel, forest_index: int = 0) -> list[str]:
    """Human-readable class labels for a tree's leaves."""
    if model.strategy == "mts":
        return [
            " | ".join(
                "; ".join((a.substantive_order, *a.law_categories)) for a in combo
            )
            for combo in model.mts_catalog.combos
        ]
    target = model.class_catalog.classes[forest_index]
    name = "; ".join((target.substantive_order, *target.law_categories))
    return [f"not {name}", name]


def export_tree_graph(tree: Tree, max_depth: int | None, feature_names, class_names) -> str:
    """DOT description of the tree truncated at max_depth; split nodes are
    labelled 'feature ≤ threshold', leaves with their decoded class."""

    def esc(s: str) -> str:
        return s.replace("\\", "\\\\").replace('"', '\\"')

    lines = [
        "digraph decision_tree {",
        '  node [shape=box, fontname="helvetica"];',
    ]
    stack = [0]
    while stack:
        node = stack.pop()
        depth = int(tree.depth[node])
        truncated = max_depth is not None and depth >= max_depth
        if tree.feature[node] < 0:
            label = class_names[int(np.argmax(tree.counts[node]))]
            lines.append(f'  n{node} [label="{esc(label)}"];')
        elif truncated:
            lines.append(f'  n{node} [label="..." shape=plaintext];')
        else:
            name = feature_names[int(tree.feature[node])]
            label = f"{name} ≤ {float(tree.threshold[node]):g}"
            lines.append(f'  n{node} [label="{esc(label)}"];')
            left, right = int(tree.left[node]), int(tree.right[node])
            lines.append(f'  n{node} -> n{left} [label="true"];')
            lines.append(f'  n{node} -> n{right} [label="false"];')
            stack.append(right)
            stack.append(left)
    lines.append("}")
    return "\n".join(lines) + "\n"
