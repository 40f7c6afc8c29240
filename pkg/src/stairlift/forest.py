"""Random-forest classifier: bagged CART trees grown from scratch.

Trees split on Gini impurity decrease over ceil(sqrt(d)) randomly drawn
candidate features per node, with thresholds at midpoints between
consecutive distinct sorted values. Bootstrap samples are size-n draws with
replacement over the presented row order, seeded per tree. Growth stops at
purity, the depth cap, or node weight < 2.

Grid search scores every (max_depth, n_estimators) cell by stratified
k-fold cross-validation mean accuracy, oversampling each fold's training
part. Because per-node randomness is derived from (tree seed, node path),
one set of uncapped trees per fold evaluates every cell exactly (see
_grower); this is what keeps the full default grid tractable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _grower
from .balance import Dataset, random_oversample
from .domain import CLASS_NAMES, N_CLASSES, ActivityLabel
from .errors import (
    ArityMismatchError,
    DegenerateDataError,
    EmptyDatasetError,
    InsufficientDataError,
)
from .features import FeatureVector

FOREST_FORMAT = "stairlift-forest"
FOREST_VERSION = 1

GRID_DEPTHS = (15, 20, None)
GRID_ESTIMATORS = (200, 225, 250, 275, 300, 325, 350)


@dataclass(frozen=True)
class ForestHyperparams:
    """max_depth None means unbounded growth."""

    max_depth: Optional[int]
    n_estimators: int

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth}")

    @property
    def depth_cap(self) -> int:
        return _grower.NO_DEPTH_LIMIT if self.max_depth is None else self.max_depth


def default_grid() -> list[ForestHyperparams]:
    return [ForestHyperparams(d, n) for d in GRID_DEPTHS for n in GRID_ESTIMATORS]


@dataclass
class TrainedForest:
    """Forest as flat node arrays, one block per tree via ``tree_offsets``.

    Node layout: ``feature < 0`` marks a leaf; internal nodes route
    value <= threshold to ``left``. ``pred`` is the argmax of
    ``class_counts`` with ties to the lowest ordinal; every node carries
    its prediction so depth-truncated traversal is well defined.
    """

    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    hyperparams: ForestHyperparams
    seed: int
    tree_offsets: np.ndarray
    node_feature: np.ndarray
    node_threshold: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_pred: np.ndarray
    node_counts: np.ndarray

    @property
    def n_trees(self) -> int:
        return len(self.tree_offsets) - 1

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


class _TrainingMatrix:
    """Distinct-row view of a training matrix with presorted feature lists."""

    def __init__(self, X: np.ndarray, y: np.ndarray):
        n, d = X.shape
        key = np.column_stack([X, y.astype(np.float64)])
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        self.Xu = np.ascontiguousarray(uniq[:, :d])
        self.yu = uniq[:, d].astype(np.uint8)
        self.slot_rows = inverse.astype(np.int32)
        self.n_slots = n
        m = len(self.yu)
        self.sort_idx = np.empty((d, m), dtype=np.int32)
        for f in range(d):
            self.sort_idx[f] = np.argsort(self.Xu[:, f], kind="stable")

    @property
    def m(self) -> int:
        return len(self.yu)


def _grow(
    tm: _TrainingMatrix,
    n_trees: int,
    depth_cap: int,
    seed: int,
    keep_counts: bool,
):
    d = tm.Xu.shape[1]
    m_try = math.ceil(math.sqrt(d))
    cap = 2 * tm.m + 2
    seeds = _grower.derive_tree_seeds(seed, n_trees)
    feat = np.empty((n_trees, cap), dtype=np.int16)
    thr = np.zeros((n_trees, cap), dtype=np.float64)
    left = np.empty((n_trees, cap), dtype=np.int32)
    right = np.empty((n_trees, cap), dtype=np.int32)
    pred = np.empty((n_trees, cap), dtype=np.uint8)
    counts_cap = cap if keep_counts else 1
    counts = np.zeros((n_trees, counts_cap, N_CLASSES), dtype=np.float32)
    n_nodes = np.empty(n_trees, dtype=np.int64)
    _grower.grow_forest(
        tm.Xu,
        tm.yu,
        tm.sort_idx,
        tm.slot_rows,
        tm.n_slots,
        seeds,
        depth_cap,
        N_CLASSES,
        m_try,
        keep_counts,
        feat,
        thr,
        left,
        right,
        pred,
        counts,
        n_nodes,
    )
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    np.cumsum(n_nodes, out=offsets[1:])
    total = int(offsets[-1])
    cat_feat = np.empty(total, dtype=np.int16)
    cat_thr = np.empty(total, dtype=np.float64)
    cat_left = np.empty(total, dtype=np.int32)
    cat_right = np.empty(total, dtype=np.int32)
    cat_pred = np.empty(total, dtype=np.uint8)
    cat_counts = np.empty((total if keep_counts else 0, N_CLASSES), dtype=np.float32)
    for t in range(n_trees):
        s, e = offsets[t], offsets[t + 1]
        k = int(n_nodes[t])
        cat_feat[s:e] = feat[t, :k]
        cat_thr[s:e] = thr[t, :k]
        cat_left[s:e] = left[t, :k]
        cat_right[s:e] = right[t, :k]
        cat_pred[s:e] = pred[t, :k]
        if keep_counts:
            cat_counts[s:e] = counts[t, :k]
    return offsets, cat_feat, cat_thr, cat_left, cat_right, cat_pred, cat_counts


def _validate_training_data(data: Dataset) -> None:
    if len(data) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if len(np.unique(data.y)) < 2:
        raise DegenerateDataError("training data contains a single class")


def train_forest(data: Dataset, params: ForestHyperparams, seed: int) -> TrainedForest:
    """Fit ``params.n_estimators`` bagged trees on the presented rows."""
    _validate_training_data(data)
    tm = _TrainingMatrix(data.X, data.y)
    offsets, feat, thr, left, right, pred, counts = _grow(
        tm, params.n_estimators, params.depth_cap, seed, keep_counts=True
    )
    return TrainedForest(
        feature_names=data.feature_names,
        class_names=CLASS_NAMES,
        hyperparams=params,
        seed=seed,
        tree_offsets=offsets,
        node_feature=feat,
        node_threshold=thr,
        node_left=left,
        node_right=right,
        node_pred=pred,
        node_counts=counts,
    )


def _votes(forest: TrainedForest, X: np.ndarray, depth_cap: Optional[int] = None) -> np.ndarray:
    if depth_cap is None:
        depth_cap = forest.hyperparams.depth_cap
    out = np.empty((forest.n_trees, len(X)), dtype=np.uint8)
    _grower.predict_votes(
        forest.node_feature,
        forest.node_threshold,
        forest.node_left,
        forest.node_right,
        forest.node_pred,
        forest.tree_offsets,
        np.ascontiguousarray(X, dtype=np.float64),
        depth_cap,
        out,
    )
    return out


def _majority(votes: np.ndarray) -> np.ndarray:
    # Plurality over trees; np.argmax keeps the first maximum, i.e. the
    # lowest class ordinal on ties.
    q = votes.shape[1]
    counts = np.zeros((q, N_CLASSES), dtype=np.int32)
    rows = np.arange(q)
    for t in range(votes.shape[0]):
        counts[rows, votes[t]] += 1
    return np.argmax(counts, axis=1).astype(np.int16)


def predict_many(forest: TrainedForest, X: np.ndarray) -> np.ndarray:
    """Majority-vote class ordinals for each row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ArityMismatchError(
            f"expected (n, {forest.n_features}) features, got {X.shape}"
        )
    return _majority(_votes(forest, X))


def predict(forest: TrainedForest, v: Union[FeatureVector, np.ndarray, Sequence[float]]) -> ActivityLabel:
    values = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    if values.ndim != 1 or len(values) != forest.n_features:
        raise ArityMismatchError(
            f"expected {forest.n_features} feature values, got shape {values.shape}"
        )
    return ActivityLabel(int(predict_many(forest, values.reshape(1, -1))[0]))


def feature_importances(forest: TrainedForest) -> np.ndarray:
    """Mean decrease in Gini impurity, node-weighted, averaged over trees
    in index order and normalized to sum to 1."""
    d = forest.n_features
    counts = forest.node_counts.astype(np.float64)
    W = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        gini = 1.0 - np.einsum("ij,ij->i", counts, counts) / (W * W)
    total = np.zeros(d, dtype=np.float64)
    for t in range(forest.n_trees):
        s, e = int(forest.tree_offsets[t]), int(forest.tree_offsets[t + 1])
        feat = forest.node_feature[s:e]
        internal = np.flatnonzero(feat >= 0)
        if len(internal) == 0:
            continue
        w = W[s:e]
        g = gini[s:e]
        li = forest.node_left[s:e][internal]
        ri = forest.node_right[s:e][internal]
        contrib = w[internal] * g[internal] - w[li] * g[li] - w[ri] * g[ri]
        vec = np.zeros(d, dtype=np.float64)
        np.add.at(vec, feat[internal], contrib)
        total += vec / w[0]
    imp = total / forest.n_trees
    s = imp.sum()
    if s > 0:
        imp = imp / s
    return imp


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per sample; every present class is spread across all folds."""
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x666F6C64]))
    fold_of = np.empty(len(y), dtype=np.int64)
    for cls in range(N_CLASSES):
        members = np.flatnonzero(y == cls)
        if len(members) == 0:
            continue
        rng.shuffle(members)
        fold_of[members] = np.arange(len(members)) % k
    return fold_of


def _fold_seed(seed: int, fold: int, purpose: int) -> int:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, purpose, fold])
    return int(ss.generate_state(1, np.uint64)[0])


def _cell_sort_key(cell: ForestHyperparams):
    bounded = 0 if cell.max_depth is not None else 1
    return (cell.n_estimators, bounded, cell.max_depth or 0)


def grid_search(
    data: Dataset,
    grid: Optional[Iterable[ForestHyperparams]] = None,
    k: int = 10,
    seed: int = 0,
) -> ForestHyperparams:
    """Pick the grid cell with the highest stratified k-fold CV mean accuracy.

    Each fold's training part is oversampled before fitting; the validation
    part is left untouched. Ties break to fewer trees, then to the smaller
    depth with bounded depths before unbounded.
    """
    cells = list(grid) if grid is not None else default_grid()
    if not cells:
        raise ValueError("empty hyperparameter grid")
    if len(data) == 0:
        raise EmptyDatasetError("cannot grid-search an empty dataset")
    counts = data.class_counts()
    low = [(CLASS_NAMES[c], int(n)) for c, n in enumerate(counts) if 0 < n < k]
    if low:
        raise InsufficientDataError(
            f"classes with fewer than k={k} samples: {low}"
        )

    depth_caps = sorted({c.depth_cap for c in cells})
    ests = sorted({c.n_estimators for c in cells})
    n_grow = max(ests)
    grow_cap = max(depth_caps)

    acc_sum: dict[ForestHyperparams, float] = {c: 0.0 for c in cells}
    fold_of = _stratified_folds(data.y, k, seed)
    for fold in range(k):
        val_idx = np.flatnonzero(fold_of == fold)
        train_idx = np.flatnonzero(fold_of != fold)
        if len(val_idx) == 0 or len(train_idx) == 0:
            raise InsufficientDataError(f"fold {fold} is empty with k={k}")
        balanced = random_oversample(data.select(train_idx), seed=_fold_seed(seed, fold, 1))
        tm = _TrainingMatrix(balanced.X, balanced.y)
        offsets, feat, thr, left, right, pred, _ = _grow(
            tm, n_grow, grow_cap, _fold_seed(seed, fold, 2), keep_counts=False
        )
        X_val = np.ascontiguousarray(data.X[val_idx])
        y_val = data.y[val_idx]
        for cap in depth_caps:
            votes = np.empty((n_grow, len(val_idx)), dtype=np.uint8)
            _grower.predict_votes(feat, thr, left, right, pred, offsets, X_val, cap, votes)
            tally = np.zeros((len(val_idx), N_CLASSES), dtype=np.int32)
            rows = np.arange(len(val_idx))
            t = 0
            for ne in ests:
                while t < ne:
                    tally[rows, votes[t]] += 1
                    t += 1
                acc = float(np.mean(np.argmax(tally, axis=1) == y_val))
                for cell in cells:
                    if cell.depth_cap == cap and cell.n_estimators == ne:
                        acc_sum[cell] += acc

    best = max(cells, key=lambda c: (acc_sum[c] / k, tuple(-v for v in _cell_sort_key(c))))
    return best


def save_forest(forest: TrainedForest, path) -> None:
    """Write the forest as a versioned JSON flat file (exact round trip)."""
    trees = []
    for t in range(forest.n_trees):
        s, e = int(forest.tree_offsets[t]), int(forest.tree_offsets[t + 1])
        trees.append(
            {
                "feature": forest.node_feature[s:e].tolist(),
                "threshold": forest.node_threshold[s:e].tolist(),
                "left": forest.node_left[s:e].tolist(),
                "right": forest.node_right[s:e].tolist(),
                "pred": forest.node_pred[s:e].tolist(),
                "class_counts": forest.node_counts[s:e].astype(np.int64).tolist(),
            }
        )
    doc = {
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "feature_names": list(forest.feature_names),
        "classes": [[name, i] for i, name in enumerate(forest.class_names)],
        "hyperparams": {
            "max_depth": forest.hyperparams.max_depth,
            "n_estimators": forest.hyperparams.n_estimators,
        },
        "seed": forest.seed,
        "trees": trees,
    }
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, separators=(",", ":"))


def load_forest(path) -> TrainedForest:
    with open(path, "r", encoding="utf-8") as fp:
        doc = json.load(fp)
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError(f"not a {FOREST_FORMAT} file: {path}")
    if doc.get("version") != FOREST_VERSION:
        raise ValueError(f"unsupported forest version {doc.get('version')}")
    trees = doc["trees"]
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    for t, tree in enumerate(trees):
        offsets[t + 1] = offsets[t] + len(tree["feature"])
    total = int(offsets[-1])
    feat = np.empty(total, dtype=np.int16)
    thr = np.empty(total, dtype=np.float64)
    left = np.empty(total, dtype=np.int32)
    right = np.empty(total, dtype=np.int32)
    pred = np.empty(total, dtype=np.uint8)
    counts = np.empty((total, N_CLASSES), dtype=np.float32)
    for t, tree in enumerate(trees):
        s, e = int(offsets[t]), int(offsets[t + 1])
        feat[s:e] = tree["feature"]
        thr[s:e] = tree["threshold"]
        left[s:e] = tree["left"]
        right[s:e] = tree["right"]
        pred[s:e] = tree["pred"]
        counts[s:e] = tree["class_counts"]
    hp = doc["hyperparams"]
    return TrainedForest(
        feature_names=tuple(doc["feature_names"]),
        class_names=tuple(name for name, _ in doc["classes"]),
        hyperparams=ForestHyperparams(hp["max_depth"], hp["n_estimators"]),
        seed=int(doc["seed"]),
        tree_offsets=offsets,
        node_feature=feat,
        node_threshold=thr,
        node_left=left,
        node_right=right,
        node_pred=pred,
        node_counts=counts,
    )
