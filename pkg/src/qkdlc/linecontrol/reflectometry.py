"""Synthetic reflectograms, baseline fitting and new-event detection.

Traces use the OTDR display convention: backscatter power in dB against
position, with the Rayleigh background falling at the fibre loss
``10 * mu`` dB/km (0.2 dB/km for ``mu = 1/50``). A loss step lowers every
sample from its position on; a reflective spike lifts a single sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .. import _rng
from ..channel import DEFAULT_MU
from ..errors import DomainError, GeometryError, InsufficientDataError

SMOOTH_WINDOW = 5
LEVEL_WINDOW = 25
MIN_FIT_SAMPLES = 10

_NOISE_STREAM = 2


class EventKind(str, Enum):
    REFLECTIVE_SPIKE = "spike"
    LOSS_STEP = "step"


@dataclass(frozen=True)
class FiberEvent:
    position_km: float
    kind: EventKind
    magnitude_db: float

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if not (math.isfinite(self.magnitude_db) and self.magnitude_db > 0.0):
            raise DomainError(f"event magnitude must be > 0 dB, got {self.magnitude_db}")
        if not (math.isfinite(self.position_km) and self.position_km >= 0.0):
            raise DomainError(f"event position must be >= 0 km, got {self.position_km}")


@dataclass(eq=False)
class Reflectogram:
    sample_spacing_km: float
    samples: np.ndarray
    noise_sigma_db: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.sample_spacing_km > 0.0:
            raise DomainError(f"sample spacing must be > 0, got {self.sample_spacing_km}")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DomainError("samples must be a non-empty 1-d array")
        if self.noise_sigma_db < 0.0:
            raise DomainError("noise_sigma_db must be >= 0")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_spacing_km

    @property
    def length_km(self) -> float:
        return (self.samples.size - 1) * self.sample_spacing_km

    def index_of(self, position_km: float) -> int:
        return int(round(position_km / self.sample_spacing_km))

    def same_geometry(self, other: "Reflectogram") -> bool:
        return len(self) == len(other) and math.isclose(
            self.sample_spacing_km, other.sample_spacing_km, rel_tol=1e-12
        )


def _event_profile(n: int, spacing: float, events: Iterable[FiberEvent]) -> np.ndarray:
    out = np.zeros(n)
    length = (n - 1) * spacing
    for ev in events:
        if ev.position_km > length * (1 + 1e-12):
            raise DomainError(f"event at {ev.position_km} km lies beyond the fibre end ({length} km)")
        k = int(round(ev.position_km / spacing))
        if ev.kind is EventKind.LOSS_STEP:
            out[k:] -= ev.magnitude_db
        else:
            out[k] += ev.magnitude_db
    return out


def synthesize_reflectogram(
    length_km: float,
    mu: float = DEFAULT_MU,
    events: Sequence[FiberEvent] = (),
    spacing_km: float = 0.1,
    noise_sigma_db: float = 0.0,
    seed: int = 0,
    start_db: float = 0.0,
) -> Reflectogram:
    """Build a trace: linear Rayleigh background, events, Gaussian noise."""
    if not (length_km > 0.0 and spacing_km > 0.0):
        raise DomainError("length_km and spacing_km must be > 0")
    if not mu > 0.0:
        raise DomainError(f"mu must be > 0, got {mu}")
    if noise_sigma_db < 0.0:
        raise DomainError("noise_sigma_db must be >= 0")
    n = int(round(length_km / spacing_km)) + 1
    x = np.arange(n) * spacing_km
    trace = start_db - 10.0 * mu * x
    if noise_sigma_db > 0.0:
        trace = trace + noise_sigma_db * _rng.block_rng(seed, 0, stream=_NOISE_STREAM).standard_normal(n)
    trace = trace + _event_profile(n, spacing_km, events)
    return Reflectogram(spacing_km, trace, noise_sigma_db)


def inject_events(trace: Reflectogram, events: Sequence[FiberEvent]) -> Reflectogram:
    """Add events to an existing trace (events superpose linearly in dB)."""
    profile = _event_profile(len(trace), trace.sample_spacing_km, events)
    return Reflectogram(trace.sample_spacing_km, trace.samples + profile, trace.noise_sigma_db)


@dataclass(frozen=True)
class BaselineFit:
    slope_db_per_km: float
    intercept_db: float
    residual_sigma_db: float


def fit_baseline(
    trace: Reflectogram,
    exclusion: Sequence[float] = (),
    window_samples: int = 2,
) -> BaselineFit:
    """Least-squares Rayleigh slope, shared by all segments between events.

    Samples within ``window_samples`` of a known event position are dropped.
    The known events split the trace into segments, each with its own
    offset but one common slope. ``intercept_db`` is the first segment's.
    """
    n = len(trace)
    x = trace.positions
    keep = np.ones(n, dtype=bool)
    cuts = sorted(trace.index_of(p) for p in exclusion)
    for k in cuts:
        keep[max(k - window_samples, 0): k + window_samples + 1] = False
    segment = np.searchsorted(np.asarray(cuts), np.arange(n), side="right")
    if keep.sum() < MIN_FIT_SAMPLES:
        raise InsufficientDataError(f"only {int(keep.sum())} usable samples, need {MIN_FIT_SAMPLES}")

    seg_ids = np.unique(segment[keep])
    design = np.column_stack([x[keep]] + [(segment[keep] == s).astype(float) for s in seg_ids])
    y = trace.samples[keep]
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(len(y) - design.shape[1], 1)
    sigma = math.sqrt(float(resid @ resid) / dof)
    return BaselineFit(float(coef[0]), float(coef[1]), sigma)


@dataclass(frozen=True)
class Detection:
    events: tuple[FiberEvent, ...]
    alarm: bool
    difference_sigma_db: float = field(default=0.0)


def _running_median3(v: np.ndarray, side: str) -> np.ndarray:
    """Median of the three samples strictly left (or right) of each index."""
    n = v.size
    pad = np.pad(v, 3, mode="edge")
    if side == "left":
        stack = np.stack([pad[i: i + n] for i in range(0, 3)])
    else:
        stack = np.stack([pad[i: i + n] for i in range(4, 7)])
    return np.median(stack, axis=0)


def moving_average(v: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    kernel = np.ones(window) / window
    return np.convolve(np.pad(v, window // 2, mode="edge"), kernel, mode="valid")


def _best_split(v: np.ndarray) -> int:
    """Index splitting ``v`` into two constant levels with least squared error."""
    n = v.size
    c = np.cumsum(v)
    c2 = np.cumsum(v * v)
    k = np.arange(1, n)
    left = c2[k - 1] - c[k - 1] ** 2 / k
    right = (c2[-1] - c2[k - 1]) - (c[-1] - c[k - 1]) ** 2 / (n - k)
    return int(k[np.argmin(left + right)])


def detect_new_events(
    current: Reflectogram,
    baseline: Reflectogram,
    threshold_db: float,
    *,
    level_window: int = LEVEL_WINDOW,
) -> Detection:
    """Compare a fresh trace with the documented baseline and report new events.

    The loss trace ``baseline - current`` is cleaned of single-sample spikes,
    smoothed with a 5-sample moving average, and scanned for level shifts:
    the mean loss over ``level_window`` samples after a point minus the mean
    over the same number before it. Shifts of at least ``threshold_db`` are
    reported as loss steps, localised by a two-level least-squares split.
    A spike is a single sample rising above both neighbourhoods by more
    than ``threshold_db + 3 sigma``, where sigma is the noise of the
    difference trace. Steps closer than ``level_window`` samples to either
    end of the trace are not resolved.
    """
    if not current.same_geometry(baseline):
        raise GeometryError(
            f"trace geometry differs: {len(current)} samples @ {current.sample_spacing_km} km "
            f"vs {len(baseline)} @ {baseline.sample_spacing_km} km"
        )
    if not threshold_db > 0.0:
        raise DomainError(f"threshold_db must be > 0, got {threshold_db}")

    spacing = current.sample_spacing_km
    rise = current.samples - baseline.samples
    sigma = math.hypot(current.noise_sigma_db, baseline.noise_sigma_db)
    n = rise.size
    events: list[FiberEvent] = []

    # reflective spikes
    left = _running_median3(rise, "left")
    right = _running_median3(rise, "right")
    excursion = rise - np.maximum(left, right)
    spike_idx = np.flatnonzero(excursion > threshold_db + 3.0 * sigma)
    for k in spike_idx:
        events.append(FiberEvent(k * spacing, EventKind.REFLECTIVE_SPIKE, float(excursion[k])))

    # loss steps
    loss = -rise.copy()
    if spike_idx.size:
        loss[spike_idx] = -np.minimum(left, right)[spike_idx]
    smooth = moving_average(loss)
    w = level_window
    if n >= 2 * w + 1:
        c = np.concatenate([[0.0], np.cumsum(smooth)])
        k = np.arange(w, n - w + 1)
        shift = (c[k + w] - c[k]) / w - (c[k] - c[k - w]) / w
        above = shift >= threshold_db
        edges = np.flatnonzero(np.diff(np.concatenate([[0], above.astype(int), [0]])))
        for start, stop in zip(edges[::2], edges[1::2]):
            peak = int(k[start + np.argmax(shift[start:stop])])
            lo, hi = max(peak - w, 0), min(peak + w, n)
            split = lo + _best_split(loss[lo:hi])
            a, b = max(split - w, 0), min(split + w, n)
            magnitude = float(loss[split:b].mean() - loss[a:split].mean())
            if magnitude > 0.0:
                events.append(FiberEvent(split * spacing, EventKind.LOSS_STEP, magnitude))

    events.sort(key=lambda e: e.position_km)
    return Detection(tuple(events), bool(events), sigma)
