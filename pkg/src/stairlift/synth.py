"""Physics-grounded synthetic cohort generator.

Sessions mirror the recording protocol: a participant dwells (idle or
pacing), a random number generator picks the next floor among 2..8
excluding the current one, a fair coin picks stairs or lift, and the
transition is synthesized per class:

* stairs up: stepwise pressure decrease with landing plateaus between
  flights, gait-frequency acceleration oscillation, occasional pressure
  spikes from arm swing;
* stairs down: mirrored, with higher oscillation amplitude and frequency;
* lift up/down: near-still acceleration and a smooth linear pressure ramp,
  bracketed by short door dwells that stay in the Null class.

Pressure follows a linear local barometric model: gradient units per meter
times altitude, subtracted from a per-participant baseline. Every channel
carries seeded Gaussian noise; every sample is labeled; the returned
segment list tiles the timeline exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .domain import ActivityLabel, Recording
from .errors import InvalidConfigError

Span = tuple[float, float]


@dataclass(frozen=True)
class SynthConfig:
    floor_min: int = 2
    floor_max: int = 8
    floor_height_m: float = 3.5
    pressure_gradient: float = 0.12  # pressure units per meter of altitude
    rate_hz: float = 50.0
    session_minutes: float = 30.0
    dwell_seconds: Span = (18.0, 62.0)
    walk_prob: float = 0.5  # fraction of dwells spent pacing instead of idling
    walk_gait_hz: Span = (1.5, 2.1)
    walk_amp: float = 0.28
    stairs_floor_seconds: Span = (15.0, 35.0)
    stairs_up_gait_hz: Span = (1.5, 2.1)
    stairs_down_gait_hz: Span = (1.9, 2.6)
    stairs_up_amp: float = 0.35
    stairs_down_amp: float = 0.5
    flights_per_floor: int = 2
    landing_fraction: float = 0.18  # share of per-floor time spent on landings
    lift_speed_ms: Span = (0.44, 0.875)
    door_seconds: Span = (3.0, 8.0)
    exit_seconds: Span = (1.0, 3.0)
    noise_acc: float = 0.02
    noise_pressure: float = 0.015
    spike_rate_hz: float = 0.15  # arm-swing pressure spikes while walking
    spike_amp: Span = (0.05, 0.2)
    spike_seconds: Span = (0.2, 0.8)
    base_pressure: Span = (995.0, 1025.0)
    seed: int = 42

    def validate(self) -> None:
        if self.floor_max < self.floor_min:
            raise InvalidConfigError(
                f"empty floor range {self.floor_min}..{self.floor_max}"
            )
        if self.floor_max == self.floor_min:
            raise InvalidConfigError("floor range needs at least two floors")
        positive = {
            "floor_height_m": self.floor_height_m,
            "pressure_gradient": self.pressure_gradient,
            "rate_hz": self.rate_hz,
            "session_minutes": self.session_minutes,
            "flights_per_floor": self.flights_per_floor,
        }
        for name, value in positive.items():
            if value <= 0:
                raise InvalidConfigError(f"{name} must be positive, got {value}")
        for name in (
            "dwell_seconds",
            "stairs_floor_seconds",
            "lift_speed_ms",
            "door_seconds",
            "exit_seconds",
        ):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise InvalidConfigError(f"bad range {name}={lo, hi}")
        if not 0 <= self.walk_prob <= 1:
            raise InvalidConfigError(f"walk_prob out of [0,1]: {self.walk_prob}")
        if not 0 < self.landing_fraction < 1:
            raise InvalidConfigError(
                f"landing_fraction out of (0,1): {self.landing_fraction}"
            )


@dataclass(frozen=True)
class Segment:
    label: ActivityLabel
    start_ms: int
    end_ms: int


@dataclass
class _Piece:
    """One homogeneous stretch of signal before rasterization."""

    label: ActivityLabel
    duration_s: float
    alt_from: float
    alt_to: float
    gait_hz: float = 0.0
    gait_amp: float = 0.0
    spikes: bool = False


def _uniform(rng: np.random.Generator, span: Span) -> float:
    lo, hi = span
    return float(rng.uniform(lo, hi))


def _plan_stairs(
    rng: np.random.Generator, cfg: SynthConfig, floor_from: int, floor_to: int
) -> list[_Piece]:
    """Flights and landings, one block per floor traversed."""
    up = floor_to > floor_from
    label = ActivityLabel.STAIRS_UP if up else ActivityLabel.STAIRS_DOWN
    gait = _uniform(rng, cfg.stairs_up_gait_hz if up else cfg.stairs_down_gait_hz)
    amp = cfg.stairs_up_amp if up else cfg.stairs_down_amp
    amp *= float(rng.uniform(0.85, 1.15))
    pieces = []
    step = 1 if up else -1
    h = cfg.floor_height_m
    flights = cfg.flights_per_floor
    for floor in range(floor_from, floor_to, step):
        per_floor = _uniform(rng, cfg.stairs_floor_seconds)
        flight_t = per_floor * (1.0 - cfg.landing_fraction) / flights
        landing_t = per_floor * cfg.landing_fraction / flights
        alt = floor * h
        d_alt = step * h / flights
        for k in range(flights):
            pieces.append(
                _Piece(label, flight_t, alt + k * d_alt, alt + (k + 1) * d_alt,
                       gait_hz=gait, gait_amp=amp, spikes=True)
            )
            pieces.append(
                _Piece(label, landing_t, alt + (k + 1) * d_alt, alt + (k + 1) * d_alt,
                       gait_hz=gait, gait_amp=amp * 0.7, spikes=True)
            )
    return pieces


def _plan_lift(
    rng: np.random.Generator, cfg: SynthConfig, floor_from: int, floor_to: int
) -> list[_Piece]:
    up = floor_to > floor_from
    label = ActivityLabel.LIFT_UP if up else ActivityLabel.LIFT_DOWN
    h = cfg.floor_height_m
    alt0, alt1 = floor_from * h, floor_to * h
    speed = _uniform(rng, cfg.lift_speed_ms)
    ride_t = abs(alt1 - alt0) / speed
    return [
        _Piece(ActivityLabel.NULL, _uniform(rng, cfg.door_seconds), alt0, alt0),
        _Piece(label, ride_t, alt0, alt1),
        _Piece(ActivityLabel.NULL, _uniform(rng, cfg.exit_seconds), alt1, alt1),
    ]


def _plan_dwell(rng: np.random.Generator, cfg: SynthConfig, altitude: float) -> _Piece:
    pacing = rng.random() < cfg.walk_prob
    gait = _uniform(rng, cfg.walk_gait_hz) if pacing else 0.0
    amp = cfg.walk_amp * float(rng.uniform(0.8, 1.2)) if pacing else 0.0
    return _Piece(
        ActivityLabel.NULL,
        _uniform(rng, cfg.dwell_seconds),
        altitude,
        altitude,
        gait_hz=gait,
        gait_amp=amp,
        spikes=pacing,
    )


def generate_session(
    participant_id: str, config: SynthConfig
) -> tuple[Recording, list[Segment]]:
    """One labeled session following the randomized floor/mode protocol."""
    config.validate()
    cfg = config
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, 0x73657373])
    )
    duration_s = cfg.session_minutes * 60.0

    floor = int(rng.integers(cfg.floor_min, cfg.floor_max + 1))
    pieces: list[_Piece] = []
    t = 0.0
    while t < duration_s:
        dwell = _plan_dwell(rng, cfg, floor * cfg.floor_height_m)
        pieces.append(dwell)
        t += dwell.duration_s
        # Next floor: uniform over the range excluding the current floor.
        choices = [f for f in range(cfg.floor_min, cfg.floor_max + 1) if f != floor]
        nxt = int(choices[rng.integers(0, len(choices))])
        take_stairs = rng.random() < 0.5  # fair coin
        plan = (
            _plan_stairs(rng, cfg, floor, nxt)
            if take_stairs
            else _plan_lift(rng, cfg, floor, nxt)
        )
        pieces.extend(plan)
        t += sum(p.duration_s for p in plan)
        floor = nxt

    period_ms = 1000.0 / cfg.rate_hz
    n = int(round(duration_s * cfg.rate_hz))
    timestamps = (np.arange(n) * period_ms).astype(np.int64)

    altitude = np.empty(n, dtype=np.float64)
    osc = np.zeros(n, dtype=np.float64)
    labels = np.empty(n, dtype=np.int16)
    spike_mask = np.zeros(n, dtype=bool)

    # Per-session watch orientation. The oscillation direction keeps a
    # dominant gravity-aligned component so movement always shows up in the
    # magnitude channel, whatever the orientation draw.
    g_dir = rng.normal(size=3)
    g_dir /= np.linalg.norm(g_dir)
    w_perp = rng.normal(size=3)
    w_perp -= np.dot(w_perp, g_dir) * g_dir
    w_perp /= np.linalg.norm(w_perp)
    osc_dir = float(rng.uniform(0.6, 1.0)) * g_dir + float(rng.uniform(0.2, 0.6)) * w_perp

    t_s = timestamps.astype(np.float64) / 1000.0
    cursor = 0.0
    boundaries: list[tuple[int, int, ActivityLabel]] = []
    for piece in pieces:
        start_s = cursor
        lo = int(np.searchsorted(t_s, cursor, side="left"))
        cursor += piece.duration_s
        hi = min(int(np.searchsorted(t_s, cursor, side="left")), n)
        if lo >= n:
            break
        if hi > lo:
            seg_t = t_s[lo:hi]
            frac = np.clip((seg_t - start_s) / piece.duration_s, 0.0, 1.0)
            altitude[lo:hi] = piece.alt_from + (piece.alt_to - piece.alt_from) * frac
            labels[lo:hi] = int(piece.label)
            if piece.gait_amp > 0.0:
                osc[lo:hi] = piece.gait_amp * np.sin(2 * math.pi * piece.gait_hz * seg_t)
                osc[lo:hi] += 0.35 * piece.gait_amp * np.sin(
                    4 * math.pi * piece.gait_hz * seg_t + 1.3
                )
            if piece.spikes:
                spike_mask[lo:hi] = True
        boundaries.append((lo, hi, piece.label))

    acc = g_dir[None, :] * 1.0 + osc[:, None] * osc_dir[None, :]
    acc += rng.normal(0.0, cfg.noise_acc, size=(n, 3))
    magnitude = np.sqrt(np.einsum("ij,ij->i", acc, acc))

    base_p = _uniform(rng, cfg.base_pressure)
    pressure = base_p - cfg.pressure_gradient * altitude
    pressure += rng.normal(0.0, cfg.noise_pressure, size=n)

    # Arm-swing pressure spikes wherever the arm is moving.
    expected = cfg.spike_rate_hz * duration_s
    n_spikes = int(rng.poisson(expected)) if expected > 0 else 0
    for _ in range(n_spikes):
        center = _uniform(rng, (0.0, duration_s))
        width = _uniform(rng, cfg.spike_seconds)
        amp = _uniform(rng, cfg.spike_amp) * (1 if rng.random() < 0.5 else -1)
        lo = int(np.searchsorted(t_s, center - width / 2))
        hi = int(np.searchsorted(t_s, center + width / 2))
        if hi <= lo or not spike_mask[lo:hi].any():
            continue
        bump = amp * np.sin(np.linspace(0.0, math.pi, hi - lo))
        pressure[lo:hi] += np.where(spike_mask[lo:hi], bump, 0.0)

    recording = Recording(
        participant_id=participant_id,
        timestamps_ms=timestamps,
        acc=acc,
        magnitude=magnitude,
        pressure=pressure,
        labels=labels,
        nominal_rate_hz=cfg.rate_hz,
    )

    segments: list[Segment] = []
    for lo, hi, label in boundaries:
        if hi <= lo:
            continue
        start = int(timestamps[lo])
        end = int(timestamps[hi - 1]) + int(period_ms)
        if segments and segments[-1].label == label and segments[-1].end_ms == start:
            segments[-1] = Segment(label, segments[-1].start_ms, end)
        else:
            segments.append(Segment(label, start, end))
    return recording, segments


def _jittered(cfg: SynthConfig, rng: np.random.Generator, seed: int) -> SynthConfig:
    """Per-participant parameter jitter for inter-subject variability."""

    def scale(span: Span, s: float) -> Span:
        return (span[0] * s, span[1] * s)

    gait = float(rng.normal(1.0, 0.07))
    amp = float(rng.normal(1.0, 0.10))
    pace = float(rng.normal(1.0, 0.12))
    speed = float(rng.normal(1.0, 0.10))
    gait = min(max(gait, 0.75), 1.25)
    amp = min(max(amp, 0.7), 1.3)
    pace = min(max(pace, 0.7), 1.3)
    speed = min(max(speed, 0.75), 1.25)
    return replace(
        cfg,
        seed=seed,
        walk_gait_hz=scale(cfg.walk_gait_hz, gait),
        stairs_up_gait_hz=scale(cfg.stairs_up_gait_hz, gait),
        stairs_down_gait_hz=scale(cfg.stairs_down_gait_hz, gait),
        walk_amp=cfg.walk_amp * amp,
        stairs_up_amp=cfg.stairs_up_amp * amp,
        stairs_down_amp=cfg.stairs_down_amp * amp,
        stairs_floor_seconds=scale(cfg.stairs_floor_seconds, pace),
        lift_speed_ms=scale(cfg.lift_speed_ms, speed),
    )


def participant_name(index: int) -> str:
    return f"p{index + 1:02d}"


def generate_cohort(
    n_participants: int,
    config: Optional[SynthConfig] = None,
    seed: Optional[int] = None,
) -> list[Recording]:
    """n sessions with per-participant seeds and jittered gait parameters."""
    cfg = config if config is not None else SynthConfig()
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if n_participants < 1:
        raise InvalidConfigError(f"n_participants must be >= 1, got {n_participants}")
    cfg.validate()
    recordings = []
    for i in range(n_participants):
        ss = np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, 0x636F686F, i])
        jit_rng = np.random.default_rng(ss)
        session_seed = int(ss.generate_state(3, np.uint64)[2])
        personal = _jittered(cfg, jit_rng, session_seed)
        rec, _ = generate_session(participant_name(i), personal)
        recordings.append(rec)
    return recordings
