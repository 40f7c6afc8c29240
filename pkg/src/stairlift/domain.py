"""Shared vocabulary: activity labels, sample/recording types, elementary signal math.

Acceleration and pressure values are unit-agnostic pass-throughs: every
downstream feature is covariant under a global unit change, so the pipeline
never needs to know whether acceleration is in g or m/s².
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import NonFiniteInputError, NonMonotonicTimeError, UnknownLabelError

#: Sentinel in label code arrays for "no label".
NO_LABEL = -1


class ActivityLabel(IntEnum):
    """The five activity classes. Ordinals are fixed and define all
    tie-breaking downstream; never reorder."""

    NULL = 0
    LIFT_UP = 1
    LIFT_DOWN = 2
    STAIRS_UP = 3
    STAIRS_DOWN = 4

    @property
    def canonical_name(self) -> str:
        return _CANONICAL_NAMES[self.value]


# Externally visible label vocabulary (sensor CSV Label column), verbatim
# including its inconsistent casing; parsing is case-insensitive.
_CANONICAL_NAMES = ("Null", "Lift up", "Lift down", "Stairs Up", "Stairs down")

_LOOKUP = {name.lower(): ActivityLabel(i) for i, name in enumerate(_CANONICAL_NAMES)}

CLASS_NAMES = _CANONICAL_NAMES
N_CLASSES = len(_CANONICAL_NAMES)


def parse_label(text: str) -> ActivityLabel:
    """Match ``text`` against the five canonical label names.

    Matching is case-insensitive and ignores surrounding whitespace.
    Raises UnknownLabelError for anything else (corrupt ground truth).
    """
    key = text.strip().lower()
    try:
        return _LOOKUP[key]
    except KeyError:
        raise UnknownLabelError(f"not an activity label: {text!r}") from None


def compute_magnitude(acc_x: float, acc_y: float, acc_z: float) -> float:
    """Euclidean norm of the acceleration vector."""
    if not (math.isfinite(acc_x) and math.isfinite(acc_y) and math.isfinite(acc_z)):
        raise NonFiniteInputError(f"non-finite acceleration: ({acc_x}, {acc_y}, {acc_z})")
    return math.sqrt(acc_x * acc_x + acc_y * acc_y + acc_z * acc_z)


@dataclass(frozen=True)
class SensorSample:
    """One 50 Hz reading. ``magnitude`` must equal the norm of (x, y, z)."""

    timestamp_ms: int
    acc_x: float
    acc_y: float
    acc_z: float
    magnitude: float
    pressure: float
    label: Optional[ActivityLabel] = None
    gap_filled: bool = False


class _SampleView(Sequence[SensorSample]):
    """Lazy sequence of SensorSample records over a Recording's arrays."""

    def __init__(self, rec: "Recording"):
        self._rec = rec

    def __len__(self) -> int:
        return len(self._rec.timestamps_ms)

    def __getitem__(self, i) -> SensorSample:
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        r = self._rec
        code = int(r.labels[i])
        return SensorSample(
            timestamp_ms=int(r.timestamps_ms[i]),
            acc_x=float(r.acc[i, 0]),
            acc_y=float(r.acc[i, 1]),
            acc_z=float(r.acc[i, 2]),
            magnitude=float(r.magnitude[i]),
            pressure=float(r.pressure[i]),
            label=None if code == NO_LABEL else ActivityLabel(code),
            gap_filled=bool(r.gap_filled[i]),
        )

    def __iter__(self) -> Iterator[SensorSample]:
        for i in range(len(self)):
            yield self[i]


@dataclass
class Recording:
    """A participant's ordered sample sequence, stored column-wise.

    Columns are numpy arrays of equal length; ``labels`` holds class
    ordinals with NO_LABEL (-1) for unlabeled samples. Timestamps are
    integer milliseconds since the recording epoch, strictly increasing.
    """

    participant_id: str
    timestamps_ms: np.ndarray
    acc: np.ndarray  # (n, 3) float64
    magnitude: np.ndarray
    pressure: np.ndarray
    labels: np.ndarray
    nominal_rate_hz: float = 50.0
    gap_filled: np.ndarray = field(default=None)  # type: ignore[assignment]
    magnitude_mismatches: int = 0  # parse-time warning counter

    def __post_init__(self):
        n = len(self.timestamps_ms)
        if self.gap_filled is None:
            self.gap_filled = np.zeros(n, dtype=bool)
        if self.nominal_rate_hz <= 0:
            raise ValueError("nominal_rate_hz must be positive")
        if n > 1 and not np.all(np.diff(self.timestamps_ms) > 0):
            raise NonMonotonicTimeError(
                f"timestamps of {self.participant_id!r} are not strictly increasing"
            )

    def __len__(self) -> int:
        return len(self.timestamps_ms)

    @property
    def samples(self) -> Sequence[SensorSample]:
        return _SampleView(self)

    @property
    def duration_ms(self) -> int:
        if len(self) == 0:
            return 0
        return int(self.timestamps_ms[-1] - self.timestamps_ms[0])

    @classmethod
    def from_samples(
        cls,
        participant_id: str,
        samples: Sequence[SensorSample],
        nominal_rate_hz: float = 50.0,
        magnitude_mismatches: int = 0,
    ) -> "Recording":
        n = len(samples)
        ts = np.fromiter((s.timestamp_ms for s in samples), dtype=np.int64, count=n)
        acc = np.empty((n, 3), dtype=np.float64)
        mag = np.empty(n, dtype=np.float64)
        prs = np.empty(n, dtype=np.float64)
        lab = np.empty(n, dtype=np.int16)
        gap = np.empty(n, dtype=bool)
        for i, s in enumerate(samples):
            acc[i, 0] = s.acc_x
            acc[i, 1] = s.acc_y
            acc[i, 2] = s.acc_z
            mag[i] = s.magnitude
            prs[i] = s.pressure
            lab[i] = NO_LABEL if s.label is None else int(s.label)
            gap[i] = s.gap_filled
        return cls(
            participant_id=participant_id,
            timestamps_ms=ts,
            acc=acc,
            magnitude=mag,
            pressure=prs,
            labels=lab,
            nominal_rate_hz=nominal_rate_hz,
            gap_filled=gap,
            magnitude_mismatches=magnitude_mismatches,
        )
