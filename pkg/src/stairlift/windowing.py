"""Fixed-duration window segmentation and majority-vote label resolution.

A window is kept only if it
  * lies entirely inside the recorded span,
  * contains at least ``min_fill`` of the expected sample count,
  * has no internal timestamp gap longer than ``gap_max_ms``, and
  * resolves a label: the modal label must cover at least
    ``coverage_threshold`` of all samples in the window (inclusive).

Gap-filled samples (from resampling) are treated as missing throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import NO_LABEL, N_CLASSES, ActivityLabel, Recording, SensorSample
from .errors import InvalidParamsError

DEFAULT_COVERAGE = 0.80
DEFAULT_MIN_FILL = 0.95
DEFAULT_GAP_MAX_MS = 200.0


@dataclass
class Window:
    """A fixed-duration slice of a recording with a resolved label."""

    participant_id: str
    start_ms: int
    end_ms: int
    timestamps_ms: np.ndarray
    acc: np.ndarray
    magnitude: np.ndarray
    pressure: np.ndarray
    labels: np.ndarray
    label: Optional[ActivityLabel]

    def __len__(self) -> int:
        return len(self.timestamps_ms)

    @property
    def sample_count(self) -> int:
        return len(self.timestamps_ms)


def resolve_label(
    samples: Sequence[SensorSample],
    coverage_threshold: float = DEFAULT_COVERAGE,
) -> Optional[ActivityLabel]:
    """Majority-vote label for a run of samples.

    Returns the modal label if it covers at least ``coverage_threshold`` of
    all samples (unlabeled samples count toward the denominator only),
    otherwise None. Modal ties resolve to the lowest ordinal.
    """
    if len(samples) == 0:
        raise InvalidParamsError("resolve_label needs a non-empty sample sequence")
    if not 0 < coverage_threshold <= 1:
        raise InvalidParamsError(f"coverage threshold out of (0, 1]: {coverage_threshold}")
    codes = np.fromiter(
        (NO_LABEL if s.label is None else int(s.label) for s in samples),
        dtype=np.int16,
        count=len(samples),
    )
    code = _resolve_codes(codes, coverage_threshold)
    return None if code == NO_LABEL else ActivityLabel(code)


def _resolve_codes(codes: np.ndarray, coverage_threshold: float) -> int:
    labeled = codes[codes != NO_LABEL]
    if len(labeled) == 0:
        return NO_LABEL
    counts = np.bincount(labeled, minlength=N_CLASSES)
    modal = int(np.argmax(counts))  # first max = lowest ordinal
    # Ratio comparison keeps the boundary inclusive: 320/400 >= 0.80 holds.
    if counts[modal] / len(codes) >= coverage_threshold:
        return modal
    return NO_LABEL


def segment(
    recording: Recording,
    window_s: float,
    stride_s: Optional[float] = None,
    coverage_threshold: float = DEFAULT_COVERAGE,
    min_fill: float = DEFAULT_MIN_FILL,
    gap_max_ms: float = DEFAULT_GAP_MAX_MS,
) -> list[Window]:
    """Cut a recording into labeled windows starting at t0 + k*stride.

    ``stride_s`` defaults to the window length (non-overlapping windows).
    Windows that are short, under-filled, gappy, or fail label coverage are
    discarded.
    """
    if window_s <= 0:
        raise InvalidParamsError(f"window_s must be positive, got {window_s}")
    if stride_s is None:
        stride_s = window_s
    if stride_s <= 0:
        raise InvalidParamsError(f"stride_s must be positive, got {stride_s}")

    keep = ~recording.gap_filled
    ts = recording.timestamps_ms[keep]
    if len(ts) == 0:
        return []
    acc = recording.acc[keep]
    mag = recording.magnitude[keep]
    prs = recording.pressure[keep]
    lab = recording.labels[keep]

    window_ms = int(round(window_s * 1000))
    stride_ms = int(round(stride_s * 1000))
    period_ms = 1000.0 / recording.nominal_rate_hz
    expected = int(round(window_s * recording.nominal_rate_hz))
    t0 = int(ts[0])
    end_limit = float(ts[-1]) + period_ms

    out: list[Window] = []
    k = 0
    while True:
        start = t0 + k * stride_ms
        end = start + window_ms
        if end > end_limit:
            break
        k += 1
        lo = int(np.searchsorted(ts, start, side="left"))
        hi = int(np.searchsorted(ts, end, side="left"))
        count = hi - lo
        if count < 2 or expected == 0 or count / expected < min_fill:
            continue
        if count > 1 and np.max(np.diff(ts[lo:hi])) > gap_max_ms:
            continue
        code = _resolve_codes(lab[lo:hi], coverage_threshold)
        if code == NO_LABEL:
            continue
        out.append(
            Window(
                participant_id=recording.participant_id,
                start_ms=start,
                end_ms=end,
                timestamps_ms=ts[lo:hi],
                acc=acc[lo:hi],
                magnitude=mag[lo:hi],
                pressure=prs[lo:hi],
                labels=lab[lo:hi],
                label=ActivityLabel(code),
            )
        )
    return out


def count_candidates(recording: Recording, window_s: float, stride_s: Optional[float] = None) -> int:
    """Number of grid-aligned window positions inside the recorded span."""
    if stride_s is None:
        stride_s = window_s
    keep = ~recording.gap_filled
    ts = recording.timestamps_ms[keep]
    if len(ts) == 0:
        return 0
    window_ms = int(round(window_s * 1000))
    stride_ms = int(round(stride_s * 1000))
    period_ms = 1000.0 / recording.nominal_rate_hz
    span = float(ts[-1]) + period_ms - float(ts[0]) - window_ms
    if span < 0:
        return 0
    return int(span // stride_ms) + 1
