"""Sensor and annotation CSV parsing, plus uniform-grid resampling.

Sensor CSV interface (default column names, remappable via ``columns``):

    Time,Timestamp,X,Y,Z,Magnitude,Pressure,Label

``Timestamp`` is integer milliseconds; ``Label`` is one of the five
canonical strings or empty; ``Time`` is ignored. The Magnitude column is
never trusted: magnitude is recomputed from X/Y/Z and rows whose stored
value disagrees by more than 1e-3 relative only bump a warning counter.

Annotation CSV interface:

    Elapsedtime,Comment
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import BinaryIO, Mapping, Optional, Sequence, Union

import numpy as np

from .domain import NO_LABEL, ActivityLabel, Recording, compute_magnitude, parse_label
from .errors import (
    MalformedRowError,
    MissingColumnError,
    NonMonotonicTimeError,
    TooFewSamplesError,
)

DEFAULT_COLUMNS = {
    "timestamp": "Timestamp",
    "acc_x": "X",
    "acc_y": "Y",
    "acc_z": "Z",
    "magnitude": "Magnitude",
    "pressure": "Pressure",
    "label": "Label",
}

#: Relative disagreement between the stored and recomputed magnitude that
#: counts as a warning.
MAGNITUDE_WARN_REL = 1e-3

#: Resampled grid points further than this from any source sample are
#: flagged as gap-filled and left unlabeled.
DEFAULT_GAP_MAX_MS = 200.0


@dataclass(frozen=True)
class AnnotationEvent:
    """One annotation row: elapsed ms since recording start + raw comment."""

    elapsed_ms: int
    comment: str


def _open_text(source: Union[bytes, BinaryIO, io.TextIOBase, str]) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


def parse_sensor_csv(
    source: Union[bytes, BinaryIO, str],
    participant_id: str,
    columns: Optional[Mapping[str, str]] = None,
    nominal_rate_hz: float = 50.0,
) -> Recording:
    """Parse one sensor CSV into a Recording.

    Rows with unparseable numeric fields are rejected (skipped); rows with
    the wrong field count raise MalformedRowError with the data-row index.
    """
    colmap = dict(DEFAULT_COLUMNS)
    if columns:
        colmap.update(columns)

    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumnError("empty file: no header row") from None
    header = [h.strip() for h in header]
    pos = {name: i for i, name in enumerate(header)}

    required = ("timestamp", "acc_x", "acc_y", "acc_z", "pressure")
    for key in required:
        if colmap[key] not in pos:
            raise MissingColumnError(f"required column {colmap[key]!r} not in header {header}")
    i_ts = pos[colmap["timestamp"]]
    i_x = pos[colmap["acc_x"]]
    i_y = pos[colmap["acc_y"]]
    i_z = pos[colmap["acc_z"]]
    i_p = pos[colmap["pressure"]]
    i_m = pos.get(colmap["magnitude"])
    i_l = pos.get(colmap["label"])
    ncols = len(header)

    ts_l: list[int] = []
    acc_l: list[tuple[float, float, float]] = []
    prs_l: list[float] = []
    lab_l: list[int] = []
    stored_mag: list[float] = []
    rejected = 0

    for row_index, row in enumerate(reader):
        if len(row) != ncols:
            raise MalformedRowError(row_index, f"expected {ncols} fields, got {len(row)}")
        try:
            t = int(float(row[i_ts]))
            x = float(row[i_x])
            y = float(row[i_y])
            z = float(row[i_z])
            p = float(row[i_p])
            m = float(row[i_m]) if i_m is not None and row[i_m].strip() else float("nan")
        except ValueError:
            rejected += 1
            continue
        label_text = row[i_l].strip() if i_l is not None else ""
        code = int(parse_label(label_text)) if label_text else NO_LABEL
        ts_l.append(t)
        acc_l.append((x, y, z))
        prs_l.append(p)
        lab_l.append(code)
        stored_mag.append(m)

    n = len(ts_l)
    ts = np.array(ts_l, dtype=np.int64)
    acc = np.array(acc_l, dtype=np.float64).reshape(n, 3)
    prs = np.array(prs_l, dtype=np.float64)
    lab = np.array(lab_l, dtype=np.int16)

    if n > 1 and not np.all(np.diff(ts) > 0):
        bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
        raise NonMonotonicTimeError(
            f"{participant_id}: timestamp at data row {bad} does not increase"
        )

    mag = np.sqrt(np.einsum("ij,ij->i", acc, acc))
    stored = np.array(stored_mag, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        rel = np.abs(stored - mag) / np.maximum(np.abs(mag), 1e-30)
    mismatches = int(np.count_nonzero(~np.isnan(stored) & (rel > MAGNITUDE_WARN_REL)))

    return Recording(
        participant_id=participant_id,
        timestamps_ms=ts,
        acc=acc,
        magnitude=mag,
        pressure=prs,
        labels=lab,
        nominal_rate_hz=nominal_rate_hz,
        magnitude_mismatches=mismatches,
    )


def parse_annotation_csv(source: Union[bytes, BinaryIO, str]) -> list[AnnotationEvent]:
    """Parse an annotation CSV into ordered events; comments kept verbatim."""
    reader = csv.reader(_open_text(source))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumnError("empty file: no header row") from None
    header = [h.strip() for h in header]
    pos = {name: i for i, name in enumerate(header)}
    for col in ("Elapsedtime", "Comment"):
        if col not in pos:
            raise MissingColumnError(f"required column {col!r} not in header {header}")
    i_t, i_c = pos["Elapsedtime"], pos["Comment"]

    events: list[AnnotationEvent] = []
    for row_index, row in enumerate(reader):
        if len(row) != len(header):
            raise MalformedRowError(row_index, f"expected {len(header)} fields, got {len(row)}")
        try:
            elapsed = int(float(row[i_t]))
        except ValueError:
            raise MalformedRowError(row_index, f"bad elapsed time {row[i_t]!r}") from None
        events.append(AnnotationEvent(elapsed_ms=elapsed, comment=row[i_c]))

    times = [e.elapsed_ms for e in events]
    if any(b < a for a, b in zip(times, times[1:])) or any(t < 0 for t in times):
        raise NonMonotonicTimeError("annotation events are not ordered by elapsed time")
    return events


def apply_annotations(recording: Recording, events: Sequence[AnnotationEvent]) -> Recording:
    """Label samples from annotation events (best effort).

    Each event whose comment parses as an activity label governs the span
    from its elapsed time to the next event; comments that fail to parse
    leave that span's existing labels untouched. Elapsed time is measured
    from the first sample's timestamp.
    """
    labels = recording.labels.copy()
    if len(recording) > 0:
        elapsed = recording.timestamps_ms - recording.timestamps_ms[0]
        bounds = [e.elapsed_ms for e in events] + [np.iinfo(np.int64).max]
        for i, event in enumerate(events):
            try:
                code = int(parse_label(event.comment))
            except Exception:
                continue
            lo = np.searchsorted(elapsed, bounds[i], side="left")
            hi = np.searchsorted(elapsed, bounds[i + 1], side="left")
            labels[lo:hi] = code

    return Recording(
        participant_id=recording.participant_id,
        timestamps_ms=recording.timestamps_ms.copy(),
        acc=recording.acc.copy(),
        magnitude=recording.magnitude.copy(),
        pressure=recording.pressure.copy(),
        labels=labels,
        nominal_rate_hz=recording.nominal_rate_hz,
        gap_filled=recording.gap_filled.copy(),
        magnitude_mismatches=recording.magnitude_mismatches,
    )


def resample_uniform(
    recording: Recording,
    rate_hz: float,
    gap_max_ms: float = DEFAULT_GAP_MAX_MS,
) -> Recording:
    """Linearly interpolate all channels onto a uniform grid at ``rate_hz``.

    The grid spans [first, last] source timestamp with spacing 1000/rate_hz.
    Labels are copied from the nearest source sample. Grid points that fall
    inside a source gap longer than ``gap_max_ms`` get interpolated (NaN-free)
    values but no label, and are flagged gap-filled so windowing treats them
    as missing. Magnitude is recomputed from the interpolated axes to keep
    the sample invariant.
    """
    n = len(recording)
    if n < 2:
        raise TooFewSamplesError(f"resampling needs >=2 samples, got {n}")
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")

    src_t = recording.timestamps_ms.astype(np.float64)
    period = 1000.0 / rate_hz
    t0, t1 = src_t[0], src_t[-1]
    n_out = int(np.floor((t1 - t0) / period)) + 1
    grid = t0 + period * np.arange(n_out)

    acc = np.column_stack(
        [np.interp(grid, src_t, recording.acc[:, k]) for k in range(3)]
    )
    pressure = np.interp(grid, src_t, recording.pressure)
    magnitude = np.sqrt(np.einsum("ij,ij->i", acc, acc))

    # Nearest source sample per grid point (ties resolve to the earlier one).
    right = np.searchsorted(src_t, grid, side="left")
    right = np.clip(right, 1, n - 1)
    left = right - 1
    nearest = np.where(grid - src_t[left] <= src_t[right] - grid, left, right)
    labels = recording.labels[nearest].copy()

    # A grid point is gap-filled when its bracketing source samples are
    # further apart than gap_max_ms (exact hits on a source sample exempt).
    span = src_t[right] - src_t[left]
    on_sample = (grid == src_t[left]) | (grid == src_t[right])
    gap_filled = (span > gap_max_ms) & ~on_sample
    labels[gap_filled] = NO_LABEL

    ts_out = np.rint(grid).astype(np.int64)
    return Recording(
        participant_id=recording.participant_id,
        timestamps_ms=ts_out,
        acc=acc,
        magnitude=magnitude,
        pressure=pressure,
        labels=labels,
        nominal_rate_hz=rate_hz,
        gap_filled=gap_filled,
        magnitude_mismatches=recording.magnitude_mismatches,
    )


def write_sensor_csv(recording: Recording, fp: io.TextIOBase, base_epoch_ms: int = 0) -> None:
    """Write a Recording in the sensor CSV interface format.

    ``Time`` is rendered from a fixed epoch so output is deterministic.
    """
    fp.write("Time,Timestamp,X,Y,Z,Magnitude,Pressure,Label\n")
    for i in range(len(recording)):
        t = int(recording.timestamps_ms[i])
        total_s, ms = divmod(base_epoch_ms + t, 1000)
        mins, sec = divmod(total_s, 60)
        hrs, mins = divmod(mins, 60)
        code = int(recording.labels[i])
        label = "" if code == NO_LABEL else ActivityLabel(code).canonical_name
        fp.write(
            f"{hrs:02d}:{mins:02d}:{sec:02d}.{ms:03d},{t},"
            f"{recording.acc[i, 0]:.6f},{recording.acc[i, 1]:.6f},{recording.acc[i, 2]:.6f},"
            f"{recording.magnitude[i]:.6f},{recording.pressure[i]:.6f},{label}\n"
        )
