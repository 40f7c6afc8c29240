"""Training-set container and minority-class random oversampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .domain import N_CLASSES, ActivityLabel
from .errors import EmptyDatasetError
from .features import FeatureVector


@dataclass
class Dataset:
    """Feature vectors stacked into a matrix, labels and provenance alongside.

    ``X`` is (n, d) float64, one row per window in presentation order;
    ``y`` holds class ordinals. All rows share ``feature_names`` order.
    """

    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    participant_ids: np.ndarray
    start_ms: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    @property
    def vectors(self) -> list[FeatureVector]:
        return [
            FeatureVector(
                participant_id=str(self.participant_ids[i]),
                start_ms=int(self.start_ms[i]),
                values=self.X[i].copy(),
                label=ActivityLabel(int(self.y[i])),
            )
            for i in range(len(self))
        ]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=N_CLASSES)

    def select(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            feature_names=self.feature_names,
            X=self.X[idx],
            y=self.y[idx],
            participant_ids=self.participant_ids[idx],
            start_ms=self.start_ms[idx],
        )

    @classmethod
    def from_vectors(
        cls, vectors: Sequence[FeatureVector], feature_names: Iterable[str]
    ) -> "Dataset":
        names = tuple(feature_names)
        n = len(vectors)
        X = np.empty((n, len(names)), dtype=np.float64)
        y = np.empty(n, dtype=np.int16)
        pids = np.empty(n, dtype=object)
        starts = np.empty(n, dtype=np.int64)
        for i, v in enumerate(vectors):
            if len(v.values) != len(names):
                raise ValueError(
                    f"vector {i} has {len(v.values)} values, expected {len(names)}"
                )
            X[i] = v.values
            y[i] = int(v.label)
            pids[i] = v.participant_id
            starts[i] = v.start_ms
        return cls(feature_names=names, X=X, y=y, participant_ids=pids, start_ms=starts)


def random_oversample(data: Dataset, seed: int) -> Dataset:
    """Duplicate random minority-class rows until every class present in the
    input reaches the majority-class count ('not majority' strategy).

    All originals are retained in order; duplicates are appended per class in
    ordinal order, drawn uniformly with replacement. Deterministic per seed.
    """
    if len(data) == 0:
        raise EmptyDatasetError("cannot oversample an empty dataset")
    counts = data.class_counts()
    majority = int(counts.max())
    rng = np.random.default_rng(seed)

    extra: list[np.ndarray] = []
    for cls in range(N_CLASSES):
        c = int(counts[cls])
        if c == 0 or c == majority:
            continue
        members = np.flatnonzero(data.y == cls)
        extra.append(rng.choice(members, size=majority - c, replace=True))

    if not extra:
        return data.select(np.arange(len(data)))
    idx = np.concatenate([np.arange(len(data))] + extra)
    return data.select(idx)
