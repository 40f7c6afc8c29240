"""Leave-one-subject-out evaluation, metrics, and report aggregation.

Per held-out participant: grid-search hyperparameters on the 19 training
participants (stratified 10-fold CV with oversampled fold-training parts),
oversample the full training set, fit, predict the held-out windows, and
score. Aggregate numbers are unweighted means over participants; confusion
matrices are summed; feature importances are averaged.

Test-fold vectors never enter oversampling or grid search; this is asserted
on participant ids for every fold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .balance import Dataset, random_oversample
from .domain import N_CLASSES, ActivityLabel
from .errors import EmptyInputError, LengthMismatchError, SingleParticipantError
from .features import PRESSURE_FEATURES
from .forest import (
    ForestHyperparams,
    default_grid,
    feature_importances,
    grid_search,
    predict_many,
    train_forest,
)

logger = logging.getLogger(__name__)

AGGREGATE_KEYS = ("accuracy", "f1_micro", "f1_macro", "f1_weighted")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1_micro: float
    f1_macro: float
    f1_weighted: float
    confusion: np.ndarray  # (5, 5); rows = truth, columns = prediction
    support: np.ndarray  # truth count per class

    def as_dict(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "f1_micro": self.f1_micro,
            "f1_macro": self.f1_macro,
            "f1_weighted": self.f1_weighted,
        }


def _to_codes(labels: Sequence) -> np.ndarray:
    arr = np.asarray(
        [int(v) if isinstance(v, (int, np.integer, ActivityLabel)) else int(v) for v in labels],
        dtype=np.int64,
    )
    return arr


def compute_metrics(truth: Sequence, predicted: Sequence) -> Metrics:
    """Accuracy plus micro/macro/weighted F1 over the five classes.

    Per-class F1 maps 0/0 to 0; macro averages over all five classes even
    when a class is absent from the truth, keeping folds comparable.
    """
    t = _to_codes(truth)
    p = _to_codes(predicted)
    if len(t) != len(p):
        raise LengthMismatchError(f"truth has {len(t)} labels, predictions {len(p)}")
    if len(t) == 0:
        raise EmptyInputError("cannot compute metrics on empty sequences")

    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(conf, (t, p), 1)
    total = len(t)
    tp = np.diag(conf)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    support = conf.sum(axis=1)

    accuracy = int(tp.sum()) / total
    denom = 2 * tp + fp + fn
    f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1), 0.0)
    f1_macro = float(f1.mean())
    sup_total = int(support.sum())
    f1_weighted = float((f1 * support).sum() / sup_total)
    f1_micro = int(2 * tp.sum()) / int(2 * tp.sum() + fp.sum() + fn.sum())

    return Metrics(
        accuracy=accuracy,
        f1_micro=f1_micro,
        f1_macro=f1_macro,
        f1_weighted=f1_weighted,
        confusion=conf,
        support=support,
    )


def loso_splits(data: Dataset) -> list[tuple[Dataset, Dataset, str]]:
    """One (train, test, held_out_id) split per participant, id-ordered."""
    ids = sorted(set(str(p) for p in data.participant_ids))
    if len(ids) < 2:
        raise SingleParticipantError(f"LOSO needs >=2 participants, got {len(ids)}")
    pid_arr = np.asarray([str(p) for p in data.participant_ids], dtype=object)
    splits = []
    for pid in ids:
        mask = pid_arr == pid
        splits.append((data.select(np.flatnonzero(~mask)), data.select(np.flatnonzero(mask)), pid))
    return splits


@dataclass
class FoldResult:
    participant_id: str
    metrics: Metrics
    hyperparams: ForestHyperparams


@dataclass
class EvaluationReport:
    window_s: float
    stride_s: float
    imu_only: bool
    seed: int
    feature_names: tuple[str, ...]
    folds: list[FoldResult]
    aggregate: dict[str, float]
    total_confusion: np.ndarray
    mean_importances: np.ndarray
    grid: list[ForestHyperparams] = field(default_factory=list)


def drop_pressure_features(data: Dataset) -> Dataset:
    """Project a dataset onto the 20 IMU-only features."""
    keep = [i for i, n in enumerate(data.feature_names) if n not in PRESSURE_FEATURES]
    if len(keep) == len(data.feature_names):
        return data
    return Dataset(
        feature_names=tuple(data.feature_names[i] for i in keep),
        X=np.ascontiguousarray(data.X[:, keep]),
        y=data.y,
        participant_ids=data.participant_ids,
        start_ms=data.start_ms,
    )


def _derived_seed(seed: int, fold: int, purpose: int) -> int:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x6C6F736F, fold, purpose])
    return int(ss.generate_state(1, np.uint64)[0])


def run_loso(
    data: Dataset,
    grid: Optional[Sequence[ForestHyperparams]] = None,
    window_s: float = 8.0,
    stride_s: Optional[float] = None,
    seed: int = 42,
    imu_only: bool = False,
    cv_folds: int = 10,
) -> EvaluationReport:
    """Full leave-one-subject-out evaluation over a featurized dataset."""
    cells = list(grid) if grid is not None else default_grid()
    if imu_only:
        data = drop_pressure_features(data)
    splits = loso_splits(data)

    folds: list[FoldResult] = []
    importances = []
    total_conf = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for fold_idx, (train, test, pid) in enumerate(splits):
        held_out = set(str(p) for p in test.participant_ids)
        assert held_out == {pid} and pid not in set(str(p) for p in train.participant_ids)
        best = grid_search(train, cells, k=cv_folds, seed=_derived_seed(seed, fold_idx, 1))
        balanced = random_oversample(train, seed=_derived_seed(seed, fold_idx, 2))
        forest = train_forest(balanced, best, seed=_derived_seed(seed, fold_idx, 3))
        preds = predict_many(forest, test.X)
        metrics = compute_metrics(test.y, preds)
        folds.append(FoldResult(participant_id=pid, metrics=metrics, hyperparams=best))
        importances.append(feature_importances(forest))
        total_conf += metrics.confusion
        logger.info(
            "fold %s: acc=%.3f macroF1=%.3f depth=%s trees=%d",
            pid,
            metrics.accuracy,
            metrics.f1_macro,
            best.max_depth,
            best.n_estimators,
        )

    aggregate = {
        key: float(np.mean([f.metrics.as_dict()[key] for f in folds]))
        for key in AGGREGATE_KEYS
    }
    mean_imp = np.mean(np.stack(importances), axis=0)
    return EvaluationReport(
        window_s=window_s,
        stride_s=stride_s if stride_s is not None else window_s,
        imu_only=imu_only,
        seed=seed,
        feature_names=data.feature_names,
        folds=folds,
        aggregate=aggregate,
        total_confusion=total_conf,
        mean_importances=mean_imp,
        grid=cells,
    )
