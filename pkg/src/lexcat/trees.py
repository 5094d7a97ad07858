"""Decision-tree and tree-ensemble learners built directly on numpy arrays.

Trees are stored as flat parallel arrays (feature, threshold, children,
depth, class counts) so decision paths can be replayed and models can be
serialized without touching live objects. Split semantics are fixed
everywhere: value <= threshold goes left, value > threshold goes right.

Randomness comes from numpy's default PCG64 generator; every tree in an
ensemble owns a generator seeded with base_seed + tree_index, so ensembles
are reproducible and trees could be grown in parallel.

Variant behaviour:
  rf    bootstrap resampling, sqrt(d) feature subsampling, best splits
  eetc  full sample, sqrt(d) feature subsampling, random splits
  etc   single tree, all features, splitter from the hyperparameters
  dt    single tree, all features, splitter from the hyperparameters
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .corpus import LabelAssignment
from .labels import (
    ClassCatalog,
    MtsCatalog,
    bts_decode,
    bts_encode,
    build_class_catalog,
    mts_decode,
    mts_encode,
)

VARIANTS = ("dt", "etc", "eetc", "rf")
CRITERIA = ("gini", "entropy")
SPLITTERS = ("best", "random")
STRATEGIES = ("bts", "mts")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    class_weight: str | None = None
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    criterion: str = "gini"
    splitter: str = "best"
    n_estimators: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.class_weight not in (None, "balanced"):
            raise ModelError(f"class_weight must be None or 'balanced': {self.class_weight!r}")
        if self.min_samples_split < 2:
            raise ModelError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ModelError("min_samples_leaf must be >= 1")
        if self.criterion not in CRITERIA:
            raise ModelError(f"criterion must be one of {CRITERIA}: {self.criterion!r}")
        if self.splitter not in SPLITTERS:
            raise ModelError(f"splitter must be one of {SPLITTERS}: {self.splitter!r}")
        if self.n_estimators < 1:
            raise ModelError("n_estimators must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ModelError("max_depth must be None or >= 0")


def gini(class_counts) -> float:
    """1 - sum(p_k^2) over the class proportions."""
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ModelError("impurity of an empty node is undefined")
    p = counts / total
    return float(1.0 - (p * p).sum())


def entropy(class_counts) -> float:
    """-sum(p_k log2 p_k) with 0 log 0 = 0."""
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ModelError("impurity of an empty node is undefined")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _impurity_rows(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of each row of a (k, n_classes) weighted count matrix."""
    totals = counts.sum(axis=1)
    p = counts / totals[:, None]
    if criterion == "gini":
        return 1.0 - (p * p).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logs).sum(axis=1)


def compute_class_weights(y: np.ndarray, n_classes: int, mode: str | None) -> np.ndarray:
    """Per-class weights; 'balanced' gives total / (present_classes * count)."""
    weights = np.ones(n_classes, dtype=float)
    if mode == "balanced":
        counts = np.bincount(y, minlength=n_classes).astype(float)
        present = counts > 0
        weights[present] = len(y) / (present.sum() * counts[present])
        weights[~present] = 0.0
    return weights


def find_split(
    X: np.ndarray,
    y: np.ndarray,
    hyperparams: Hyperparams,
    rng: np.random.Generator,
    sample_weight: np.ndarray | None = None,
    candidate_features=None,
    n_classes: int | None = None,
):
    """Best (feature, threshold) for the given node samples, or None.

    'best' scans the midpoints between consecutive distinct sorted values of
    each candidate feature; 'random' draws one uniform threshold per
    candidate feature and keeps the best of those. Both only allow splits
    whose children satisfy min_samples_leaf. Ties break on the lowest
    feature index, then the lowest threshold.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, d = X.shape
    if n_classes is None:
        n_classes = int(y.max()) + 1
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if candidate_features is None:
        candidate_features = range(d)
    candidate_features = sorted(int(f) for f in candidate_features)
    leaf = hyperparams.min_samples_leaf
    criterion = hyperparams.criterion

    base = np.zeros(n_classes)
    np.add.at(base, y, w)
    total_w = base.sum()
    parent_imp = _impurity_rows(base[None, :], criterion)[0]

    best_dec = -1.0
    best: tuple[int, float] | None = None

    for f in candidate_features:
        v = X[:, f]
        if hyperparams.splitter == "best":
            order = np.argsort(v, kind="mergesort")
            sv = v[order]
            if sv[0] == sv[-1]:
                continue
            sy = y[order]
            sw = w[order]
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), sy] = sw
            cum = np.cumsum(onehot, axis=0)
            pos = np.nonzero(sv[:-1] != sv[1:])[0]
            sizes = pos + 1
            feasible = (sizes >= leaf) & (n - sizes >= leaf)
            pos = pos[feasible]
            if pos.size == 0:
                continue
            left_counts = cum[pos]
            right_counts = base - left_counts
            wl = left_counts.sum(axis=1)
            wr = total_w - wl
            ok = (wl > 0) & (wr > 0)
            if not ok.any():
                continue
            dec = np.full(pos.size, -np.inf)
            dec[ok] = (
                parent_imp
                - (wl[ok] / total_w) * _impurity_rows(left_counts[ok], criterion)
                - (wr[ok] / total_w) * _impurity_rows(right_counts[ok], criterion)
            )
            k = int(np.argmax(dec))
            if dec[k] > best_dec:
                best_dec = float(dec[k])
                thr = (sv[pos[k]] + sv[pos[k] + 1]) / 2.0
                best = (f, float(thr))
        else:
            lo, hi = v.min(), v.max()
            if lo == hi:
                continue
            thr = float(rng.uniform(lo, hi))
            left_mask = v <= thr
            nl = int(left_mask.sum())
            if nl < leaf or n - nl < leaf:
                continue
            lc = np.zeros(n_classes)
            np.add.at(lc, y[left_mask], w[left_mask])
            rc = base - lc
            wl, wr = lc.sum(), rc.sum()
            if wl <= 0 or wr <= 0:
                continue
            dec = (
                parent_imp
                - (wl / total_w) * _impurity_rows(lc[None, :], criterion)[0]
                - (wr / total_w) * _impurity_rows(rc[None, :], criterion)[0]
            )
            if dec > best_dec:
                best_dec = float(dec)
                best = (f, thr)
    return best


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    depth: np.ndarray
    counts: np.ndarray  # raw per-class sample counts at each node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.zeros(len(X), dtype=np.int64)
        active = self.feature[idx] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            nid = idx[rows]
            go_left = X[rows, self.feature[nid]] <= self.threshold[nid]
            idx[rows] = np.where(go_left, self.left[nid], self.right[nid])
            active[rows] = self.feature[idx[rows]] >= 0
        return idx


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    hyperparams: Hyperparams,
    rng: np.random.Generator | None = None,
    n_classes: int | None = None,
    class_weights: np.ndarray | None = None,
    max_features: int | None = None,
) -> Tree:
    """Grow one tree on integer class labels.

    Nodes are created in preorder, which fixes both the node ids and the
    order of random draws, so the same seed always yields the same tree.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ModelError("training data must be a nonempty matrix with one label per row")
    if rng is None:
        rng = np.random.default_rng(hyperparams.seed)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if class_weights is None:
        class_weights = compute_class_weights(y, n_classes, hyperparams.class_weight)
    w = class_weights[y]
    n, d = X.shape

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    depth_arr: list[int] = []
    counts_arr: list[np.ndarray] = []

    # frames: (sample indices, depth, parent id, is_left_child)
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node_id
            else:
                right[parent] = node_id
        counts = np.bincount(y[idx], minlength=n_classes).astype(float)
        feature.append(-1)
        threshold.append(float("nan"))
        left.append(-1)
        right.append(-1)
        depth_arr.append(depth)
        counts_arr.append(counts)

        if len(idx) < hyperparams.min_samples_split:
            continue
        if hyperparams.max_depth is not None and depth >= hyperparams.max_depth:
            continue
        if (counts > 0).sum() <= 1:
            continue
        if max_features is not None and max_features < d:
            cands = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            cands = None
        split = find_split(
            X[idx],
            y[idx],
            hyperparams,
            rng,
            sample_weight=w[idx],
            candidate_features=cands,
            n_classes=n_classes,
        )
        if split is None:
            continue
        f, thr = split
        feature[node_id] = f
        threshold[node_id] = thr
        mask = X[idx, f] <= thr
        # right pushed first so the left subtree is built (and numbered) first
        stack.append((idx[~mask], depth + 1, node_id, False))
        stack.append((idx[mask], depth + 1, node_id, True))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        depth=np.asarray(depth_arr, dtype=np.int32),
        counts=np.vstack(counts_arr),
    )


@dataclass
class EnsembleModel:
    variant: str
    strategy: str
    hyperparams: Hyperparams
    feature_names: tuple[str, ...]
    class_catalog: ClassCatalog
    mts_catalog: MtsCatalog
    class_forests: list[list[Tree]]
    class_weight_vectors: list[np.ndarray]

    @property
    def trees(self) -> list[Tree]:
        return [t for forest in self.class_forests for t in forest]

    @property
    def n_outputs(self) -> int:
        return self.mts_catalog.p if self.strategy == "mts" else self.class_catalog.m


def _variant_knobs(variant: str, hp: Hyperparams, d: int, bootstrap, max_features):
    if variant not in VARIANTS:
        raise ModelError(f"unknown variant: {variant!r}")
    sqrt_d = max(1, int(math.sqrt(d)))
    if variant == "rf":
        hp = replace(hp, splitter="best")
        boot = True if bootstrap is None else bootstrap
        mf = sqrt_d if max_features is None else max_features
        n_trees = hp.n_estimators
    elif variant == "eetc":
        hp = replace(hp, splitter="random")
        boot = False if bootstrap is None else bootstrap
        mf = sqrt_d if max_features is None else max_features
        n_trees = hp.n_estimators
    else:  # single-tree variants
        boot = False if bootstrap is None else bootstrap
        mf = None if max_features is None else max_features
        n_trees = 1
    if mf is not None and mf >= d:
        mf = None
    return hp, boot, mf, n_trees


def _fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    hp: Hyperparams,
    n_trees: int,
    bootstrap: bool,
    max_features: int | None,
    base_seed: int,
    tree_offset: int,
) -> tuple[list[Tree], np.ndarray]:
    weights = compute_class_weights(y, n_classes, hp.class_weight)
    forest = []
    for t in range(n_trees):
        rng = np.random.default_rng(base_seed + tree_offset + t)
        if bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        forest.append(
            fit_tree(
                Xt,
                yt,
                hp,
                rng=rng,
                n_classes=n_classes,
                class_weights=weights,
                max_features=max_features,
            )
        )
    return forest, weights


def fit_ensemble(
    X: np.ndarray,
    label_sets,
    hyperparams: Hyperparams,
    variant: str,
    strategy: str,
    feature_names=None,
    bootstrap: bool | None = None,
    max_features: int | None = None,
) -> EnsembleModel:
    """Fit the requested model variant under the BTS or MTS strategy.

    BTS trains one forest per catalog class on its binary indicator column;
    MTS trains a single forest on the integer combination labels. Per-tree
    seeds are hyperparams.seed + global tree index.
    """
    X = np.asarray(X, dtype=float)
    if strategy not in STRATEGIES:
        raise ModelError(f"unknown strategy: {strategy!r}")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    feature_names = tuple(feature_names)
    if len(feature_names) != X.shape[1]:
        raise ModelError("feature_names length must match the matrix width")

    hp, boot, mf, n_trees = _variant_knobs(
        variant, hyperparams, X.shape[1], bootstrap, max_features
    )
    class_catalog = build_class_catalog(label_sets)
    mts_catalog, alphas = mts_encode(label_sets)

    forests: list[list[Tree]] = []
    weight_vectors: list[np.ndarray] = []
    if strategy == "mts":
        y = np.asarray(alphas, dtype=np.int64) - 1
        forest, weights = _fit_forest(
            X, y, mts_catalog.p, hp, n_trees, boot, mf, hp.seed, 0
        )
        forests.append(forest)
        weight_vectors.append(weights)
    else:
        beta = bts_encode(label_sets, class_catalog)
        for j in range(class_catalog.m):
            forest, weights = _fit_forest(
                X,
                beta[:, j].astype(np.int64),
                2,
                hp,
                n_trees,
                boot,
                mf,
                hp.seed,
                j * n_trees,
            )
            forests.append(forest)
            weight_vectors.append(weights)
    return EnsembleModel(
        variant=variant,
        strategy=strategy,
        hyperparams=hp,
        feature_names=feature_names,
        class_catalog=class_catalog,
        mts_catalog=mts_catalog,
        class_forests=forests,
        class_weight_vectors=weight_vectors,
    )


def _leaf_distributions(tree: Tree, weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    leaves = tree.apply(X)
    weighted = tree.counts[leaves] * weights
    totals = weighted.sum(axis=1, keepdims=True)
    return weighted / totals


def _check_row(model: EnsembleModel, row) -> np.ndarray:
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or len(row) != len(model.feature_names):
        raise ModelError(
            f"row has {row.shape} values, model expects {len(model.feature_names)} columns"
        )
    return row


def predict_proba_batch(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    """MTS: (n, p) class probabilities (rows sum to 1). BTS: (n, m) per-class
    positive probabilities. Mean of the trees' leaf distributions."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != len(model.feature_names):
        raise ModelError(
            f"matrix has {X.shape[1]} columns, model expects {len(model.feature_names)}"
        )
    if model.strategy == "mts":
        forest = model.class_forests[0]
        weights = model.class_weight_vectors[0]
        acc = np.zeros((len(X), model.mts_catalog.p))
        for tree in forest:
            acc += _leaf_distributions(tree, weights, X)
        return acc / len(forest)
    out = np.zeros((len(X), model.class_catalog.m))
    for j, forest in enumerate(model.class_forests):
        weights = model.class_weight_vectors[j]
        acc = np.zeros((len(X), 2))
        for tree in forest:
            acc += _leaf_distributions(tree, weights, X)
        out[:, j] = acc[:, 1] / len(forest)
    return out


def predict_proba(model: EnsembleModel, row) -> np.ndarray:
    return predict_proba_batch(model, _check_row(model, row)[None, :])[0]


def predict_batch(model: EnsembleModel, X: np.ndarray, threshold: float = 0.5):
    probs = predict_proba_batch(model, X)
    out = []
    if model.strategy == "mts":
        for p in probs:
            out.append(mts_decode(int(np.argmax(p)) + 1, model.mts_catalog))
    else:
        for p in probs:
            out.append(bts_decode(p, model.class_catalog, threshold))
    return out


def predict(model: EnsembleModel, row, threshold: float = 0.5) -> tuple[LabelAssignment, ...]:
    """Predicted label set: MTS argmax decoded through the combination
    catalog, BTS positives above the threshold with abstention repair."""
    return predict_batch(model, _check_row(model, row)[None, :], threshold)[0]


def _forest_importances(class_forests, weight_vectors, criterion: str, d: int) -> np.ndarray:
    per_tree = []
    for forest, weights in zip(class_forests, weight_vectors):
        for tree in forest:
            contrib = np.zeros(d)
            weighted = tree.counts * weights
            node_w = weighted.sum(axis=1)
            imp = _impurity_rows(
                np.where(weighted.sum(axis=1, keepdims=True) > 0, weighted, 1.0),
                criterion,
            )
            for node in range(tree.n_nodes):
                f = tree.feature[node]
                if f < 0:
                    continue
                l, r = tree.left[node], tree.right[node]
                contrib[f] += (
                    node_w[node] * imp[node]
                    - node_w[l] * imp[l]
                    - node_w[r] * imp[r]
                )
            total = contrib.sum()
            per_tree.append(contrib / total if total > 0 else contrib)
    mean = np.mean(per_tree, axis=0)
    total = mean.sum()
    return mean / total if total > 0 else mean


def feature_importances(model: EnsembleModel) -> np.ndarray:
    """Normalized total impurity decrease per feature, averaged over trees."""
    return _forest_importances(
        model.class_forests,
        model.class_weight_vectors,
        model.hyperparams.criterion,
        len(model.feature_names),
    )


# --- serialization ---------------------------------------------------------

_FORMAT = "lexcat-model-v1"


def _assignment_to_obj(a: LabelAssignment) -> list:
    return [a.substantive_order, list(a.law_categories)]


def _assignment_from_obj(obj) -> LabelAssignment:
    return LabelAssignment(obj[0], tuple(obj[1]))


def _tree_to_obj(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "depth": tree.depth.tolist(),
        "counts": tree.counts.tolist(),
    }


def _tree_from_obj(obj) -> Tree:
    return Tree(
        feature=np.asarray(obj["feature"], dtype=np.int32),
        threshold=np.asarray(obj["threshold"], dtype=float),
        left=np.asarray(obj["left"], dtype=np.int32),
        right=np.asarray(obj["right"], dtype=np.int32),
        depth=np.asarray(obj["depth"], dtype=np.int32),
        counts=np.asarray(obj["counts"], dtype=float),
    )


def model_to_json(model: EnsembleModel) -> str:
    hp = model.hyperparams
    obj = {
        "format": _FORMAT,
        "variant": model.variant,
        "strategy": model.strategy,
        "hyperparams": {
            "class_weight": hp.class_weight,
            "max_depth": hp.max_depth,
            "min_samples_split": hp.min_samples_split,
            "min_samples_leaf": hp.min_samples_leaf,
            "criterion": hp.criterion,
            "splitter": hp.splitter,
            "n_estimators": hp.n_estimators,
            "seed": hp.seed,
        },
        "feature_names": list(model.feature_names),
        "classes": [_assignment_to_obj(a) for a in model.class_catalog.classes],
        "combos": [
            [model.class_catalog.index(a) for a in combo]
            for combo in model.mts_catalog.combos
        ],
        "class_weight_vectors": [w.tolist() for w in model.class_weight_vectors],
        "forests": [[_tree_to_obj(t) for t in forest] for forest in model.class_forests],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> EnsembleModel:
    obj = json.loads(text)
    if obj.get("format") != _FORMAT:
        raise ModelError(f"unsupported model format: {obj.get('format')!r}")
    classes = tuple(_assignment_from_obj(o) for o in obj["classes"])
    class_catalog = ClassCatalog(classes)
    combos = tuple(tuple(classes[i] for i in combo) for combo in obj["combos"])
    return EnsembleModel(
        variant=obj["variant"],
        strategy=obj["strategy"],
        hyperparams=Hyperparams(**obj["hyperparams"]),
        feature_names=tuple(obj["feature_names"]),
        class_catalog=class_catalog,
        mts_catalog=MtsCatalog(combos),
        class_forests=[[_tree_from_obj(t) for t in forest] for forest in obj["forests"]],
        class_weight_vectors=[np.asarray(w, dtype=float) for w in obj["class_weight_vectors"]],
    )


def save_model(model: EnsembleModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> EnsembleModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())
