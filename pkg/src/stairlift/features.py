"""The 26-statistic feature vector computed per window.

Per channel for acc X, acc Y, acc Z and magnitude: avg, min, max, var, std
(population variance, divisor n). For pressure: std, var, range, slope,
kurtosis, skew. Slope is the ordinary-least-squares gradient of pressure
against time in seconds. Skew and kurtosis are the biased moment estimators
g1 = m3/m2^1.5 and g2 = m4/m2^2 - 3; both are defined as 0 on constant
signals so every feature is total.

The IMU-only ablation drops exactly the six pressure statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import ActivityLabel
from .errors import TooFewSamplesError
from .windowing import Window

_CHANNELS = ("accX", "accY", "accZ", "magnitude")
_MOMENT_STATS = ("avg", "min", "max", "var", "std")
_PRESSURE_STATS = ("std", "var", "range", "slope", "kurtosis", "skew")

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{stat}_{chan}" for chan in _CHANNELS for stat in _MOMENT_STATS
) + tuple(f"{stat}_pressure" for stat in _PRESSURE_STATS)

PRESSURE_FEATURES: tuple[str, ...] = tuple(f"{stat}_pressure" for stat in _PRESSURE_STATS)

IMU_FEATURE_NAMES: tuple[str, ...] = tuple(
    name for name in FEATURE_NAMES if name not in PRESSURE_FEATURES
)

N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureVector:
    """One window's feature values plus its provenance and label."""

    participant_id: str
    start_ms: int
    values: np.ndarray
    label: ActivityLabel


def slope(values: Sequence[float], timestamps_ms: Sequence[int]) -> float:
    """OLS slope of value against time in seconds (value units per second)."""
    v = np.asarray(values, dtype=np.float64)
    t = np.asarray(timestamps_ms, dtype=np.float64) / 1000.0
    if len(v) < 2 or len(t) != len(v):
        raise TooFewSamplesError("slope needs >=2 aligned points")
    t_c = t - t.mean()
    denom = np.dot(t_c, t_c)
    return float(np.dot(t_c, v - v.mean()) / denom)


def skewness(values: Sequence[float]) -> float:
    """Biased sample skewness g1; 0 for constant input."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        raise TooFewSamplesError("skewness needs >=2 values")
    d = v - v.mean()
    m2 = np.mean(d * d)
    if m2 == 0.0:
        return 0.0
    m3 = np.mean(d * d * d)
    return float(m3 / m2**1.5)


def kurtosis(values: Sequence[float]) -> float:
    """Biased excess kurtosis g2; 0 for constant input."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        raise TooFewSamplesError("kurtosis needs >=2 values")
    d = v - v.mean()
    m2 = np.mean(d * d)
    if m2 == 0.0:
        return 0.0
    m4 = np.mean(d**4)
    return float(m4 / (m2 * m2) - 3.0)


def extract_features(window: Window) -> FeatureVector:
    """Compute the 26 statistics for one labeled window."""
    if window.label is None:
        raise ValueError("window has no resolved label")
    if len(window) < 2:
        raise TooFewSamplesError(f"feature extraction needs >=2 samples, got {len(window)}")

    out = np.empty(N_FEATURES, dtype=np.float64)
    channels = (window.acc[:, 0], window.acc[:, 1], window.acc[:, 2], window.magnitude)
    i = 0
    for ch in channels:
        mean = ch.mean()
        d = ch - mean
        var = np.mean(d * d)
        out[i : i + 5] = (mean, ch.min(), ch.max(), var, np.sqrt(var))
        i += 5

    p = window.pressure
    mean = p.mean()
    d = p - mean
    m2 = np.mean(d * d)
    std_p = np.sqrt(m2)
    rng_p = p.max() - p.min()
    t = window.timestamps_ms.astype(np.float64) / 1000.0
    t_c = t - t.mean()
    slope_p = float(np.dot(t_c, d) / np.dot(t_c, t_c))
    if m2 == 0.0:
        kurt_p = 0.0
        skew_p = 0.0
    else:
        kurt_p = float(np.mean(d**4) / (m2 * m2) - 3.0)
        skew_p = float(np.mean(d**3) / m2**1.5)
    out[i : i + 6] = (std_p, m2, rng_p, slope_p, kurt_p, skew_p)

    return FeatureVector(
        participant_id=window.participant_id,
        start_ms=window.start_ms,
        values=out,
        label=window.label,
    )


def feature_names(imu_only: bool = False) -> tuple[str, ...]:
    return IMU_FEATURE_NAMES if imu_only else FEATURE_NAMES


def ablate_pressure(
    vectors: Sequence[FeatureVector],
    names: Sequence[str] = FEATURE_NAMES,
) -> tuple[list[FeatureVector], tuple[str, ...]]:
    """Drop the six pressure features, preserving the order of the rest.

    Idempotent: ablating an already-ablated vector set is a no-op.
    """
    keep = [i for i, name in enumerate(names) if name not in PRESSURE_FEATURES]
    kept_names = tuple(names[i] for i in keep)
    if len(keep) == len(names):
        return list(vectors), kept_names
    reduced = [
        FeatureVector(
            participant_id=v.participant_id,
            start_ms=v.start_ms,
            values=v.values[keep].copy(),
            label=v.label,
        )
        for v in vectors
    ]
    return reduced, kept_names
