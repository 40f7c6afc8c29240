import numpy as np
import pytest

from stairlift.domain import Recording
from stairlift.windowing import Window


def make_recording(
    n: int = 400,
    rate_hz: float = 50.0,
    participant_id: str = "p01",
    labels=None,
    pressure=None,
    seed: int = 0,
) -> Recording:
    rng = np.random.default_rng(seed)
    ts = (np.arange(n) * (1000.0 / rate_hz)).astype(np.int64)
    acc = rng.normal(0.0, 0.3, size=(n, 3))
    if labels is None:
        lab = np.zeros(n, dtype=np.int16)
    else:
        lab = np.asarray(labels, dtype=np.int16)
    if pressure is None:
        pressure = 1000.0 + rng.normal(0.0, 0.05, size=n)
    return Recording(
        participant_id=participant_id,
        timestamps_ms=ts,
        acc=acc,
        magnitude=np.sqrt((acc * acc).sum(axis=1)),
        pressure=np.asarray(pressure, dtype=np.float64),
        labels=lab,
        nominal_rate_hz=rate_hz,
    )


def make_window(
    n: int = 400,
    rate_hz: float = 50.0,
    seed: int = 0,
    label=0,
    pressure=None,
    acc=None,
) -> Window:
    from stairlift.domain import ActivityLabel

    rng = np.random.default_rng(seed)
    ts = (np.arange(n) * (1000.0 / rate_hz)).astype(np.int64)
    if acc is None:
        acc = rng.normal(0.0, 0.5, size=(n, 3))
    acc = np.asarray(acc, dtype=np.float64)
    if pressure is None:
        pressure = 1000.0 + rng.normal(0.0, 0.1, size=n)
    return Window(
        participant_id="p01",
        start_ms=0,
        end_ms=int(ts[-1]) + int(1000 / rate_hz),
        timestamps_ms=ts,
        acc=acc,
        magnitude=np.sqrt((acc * acc).sum(axis=1)),
        pressure=np.asarray(pressure, dtype=np.float64),
        labels=np.full(n, int(label), dtype=np.int16),
        label=ActivityLabel(int(label)),
    )


def make_dataset(class_counts: dict[int, int], d: int = 4, seed: int = 0):
    """Synthetic Dataset whose rows carry a class-dependent offset."""
    from stairlift.balance import Dataset
    from stairlift.domain import ActivityLabel
    from stairlift.features import FeatureVector

    rng = np.random.default_rng(seed)
    vectors = []
    i = 0
    for cls, count in class_counts.items():
        for _ in range(count):
            values = rng.normal(0.0, 1.0, size=d)
            values[0] += 4.0 * cls
            vectors.append(
                FeatureVector(
                    participant_id=f"p{1 + i % 5:02d}",
                    start_ms=i * 1000,
                    values=values,
                    label=ActivityLabel(cls),
                )
            )
            i += 1
    names = tuple(f"f{k}" for k in range(d))
    return Dataset.from_vectors(vectors, names)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
