"""Intensity optimisation and distance x leakage sweeps.

The optimiser scans a log-spaced grid first and only then refines the best
bracket by golden-section search, so a non-unimodal rate cannot send the
refinement into the wrong basin.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .channel import DEFAULT_MU, check_fraction, check_intensity, check_transmittance, transmittance_from
from .errors import DegenerateOptimumError, DomainError, SweepCellError
from .keyrate import Protocol, rate_arrays, rate_values

X_MIN = 1e-3
X_MAX = 1e3
N_SCAN = 128
REL_TOL = 1e-6

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class ProtocolPair(str, Enum):
    """A line-controlled variant and the baseline it is compared against."""

    BB84 = "bb84"
    COW = "cow"
    DPS = "dps"

    @property
    def lc(self) -> Protocol:
        return {"bb84": Protocol.BB84_LC, "cow": Protocol.COW_LC, "dps": Protocol.DPS_LC}[self.value]

    @property
    def baseline(self) -> Protocol:
        return {"bb84": Protocol.BB84_DECOY_UPPER, "cow": Protocol.COW, "dps": Protocol.DPS}[self.value]

    @classmethod
    def parse(cls, name: "str | ProtocolPair") -> "ProtocolPair":
        if isinstance(name, ProtocolPair):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise DomainError(f"unknown protocol pair {name!r}; expected bb84, cow or dps") from None


@dataclass(frozen=True)
class Optimum:
    intensity: float
    rate: float
    degenerate: bool = False


def golden_section_max(f: Callable[[float], float], a: float, b: float, rel_tol: float = REL_TOL):
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    Stops once the bracket is narrower than ``rel_tol`` times its midpoint.
    """
    if not a < b:
        return a, f(a)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def scan_grid(x_min: float = X_MIN, x_max: float = X_MAX, n: int = N_SCAN) -> np.ndarray:
    return np.logspace(math.log10(x_min), math.log10(x_max), n)


def optimal_intensity(
    protocol: "Protocol | str",
    T: float,
    r_E: float = 0.0,
    *,
    x_min: float = X_MIN,
    x_max: float = X_MAX,
    n_scan: int = N_SCAN,
    rel_tol: float = REL_TOL,
    strict: bool = False,
) -> Optimum:
    """Intensity |gamma|^2 maximising the key rate of ``protocol`` at fixed (T, r_E).

    If the rate is zero on the whole scan (for instance ``r_E = 1`` for a
    line-controlled variant) the result is flagged ``degenerate`` with
    intensity 0, or :class:`DegenerateOptimumError` is raised when ``strict``.
    """
    protocol = Protocol.parse(protocol)
    T = check_transmittance(T)
    r_E = check_fraction("r_E", r_E)
    if not 0.0 < x_min < x_max:
        raise DomainError(f"need 0 < x_min < x_max, got {x_min}, {x_max}")

    xs = scan_grid(x_min, x_max, n_scan)
    ys = rate_values(protocol, T, r_E, xs)
    i = int(np.argmax(ys))
    if not ys[i] > 0.0:
        if strict:
            raise DegenerateOptimumError(
                f"{protocol.value} rate is zero on [{x_min}, {x_max}] at T={T}, r_E={r_E}"
            )
        return Optimum(0.0, 0.0, degenerate=True)

    def f(x: float) -> float:
        return float(rate_values(protocol, T, r_E, x))

    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    x_best, y_best = golden_section_max(f, lo, hi, rel_tol)
    if y_best < ys[i]:
        x_best, y_best = float(xs[i]), float(ys[i])
    return Optimum(float(x_best), float(y_best))


@dataclass(frozen=True)
class SweepGrid:
    distances: Sequence[float]
    leaks: Sequence[float]
    mu: float = DEFAULT_MU
    pair: ProtocolPair = ProtocolPair.BB84

    def __post_init__(self):
        object.__setattr__(self, "pair", ProtocolPair.parse(self.pair))
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))
        object.__setattr__(self, "leaks", tuple(float(r) for r in self.leaks))
        for name, values in (("distances", self.distances), ("leaks", self.leaks)):
            if not values:
                raise DomainError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise DomainError(f"{name} must be strictly increasing")
        if self.distances[0] < 0.0:
            raise DomainError("distances must be >= 0")
        for r in self.leaks:
            check_fraction("leak", r)
        if not self.mu > 0.0:
            raise DomainError(f"mu must be > 0, got {self.mu}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.distances), len(self.leaks)

    def cells(self):
        for d in self.distances:
            for r in self.leaks:
                yield d, r


@dataclass(frozen=True)
class SweepRecord:
    """One (D, r_E) cell: optimal intensities, rates and their ratio.

    ``eve_info_lc`` is Eve's information per sifted bit for the
    line-controlled variant at its chosen intensity. It is not part of the
    CSV schema and is ignored by equality.
    """

    distance_km: float
    leak_fraction: float
    intensity_lc: float
    intensity_base: float
    rate_lc: float
    rate_base: float
    ratio: float
    eve_info_lc: float = field(default=math.nan, compare=False)


def _ratio(lc: float, base: float) -> float:
    if base > 0.0:
        return lc / base
    return math.inf if lc > 0.0 else math.nan


def rate_ratio(
    distance_km: float,
    leak_fraction: float,
    mu: float = DEFAULT_MU,
    pair: "ProtocolPair | str" = ProtocolPair.BB84,
    *,
    fixed_intensity: float | None = None,
) -> SweepRecord:
    """Compare a line-controlled protocol with its baseline at one (D, r_E).

    Both intensities are optimised independently unless ``fixed_intensity``
    pins them to a common value (the "post-processing only" regime).
    """
    pair = ProtocolPair.parse(pair)
    T = transmittance_from(distance_km, mu)
    r = check_fraction("leak_fraction", leak_fraction)
    if fixed_intensity is None:
        lc = optimal_intensity(pair.lc, T, r)
        base = optimal_intensity(pair.baseline, T, r)
        x_lc, x_base = lc.intensity, base.intensity
        rate_lc, rate_base = lc.rate, base.rate
    else:
        x_lc = x_base = check_intensity(fixed_intensity)
        rate_lc = float(rate_values(pair.lc, T, r, x_lc))
        rate_base = float(rate_values(pair.baseline, T, r, x_base))
    eve = float(rate_arrays(pair.lc, T, r, x_lc)[2])
    return SweepRecord(
        distance_km=float(distance_km),
        leak_fraction=r,
        intensity_lc=x_lc,
        intensity_base=x_base,
        rate_lc=rate_lc,
        rate_base=rate_base,
        ratio=_ratio(rate_lc, rate_base),
        eve_info_lc=eve,
    )


def sweep(grid: SweepGrid, *, fixed_intensity: float | None = None, workers: int = 1) -> list[SweepRecord]:
    """Evaluate :func:`rate_ratio` on every cell, distance-major.

    Cells are independent; ``workers > 1`` evaluates them on a thread pool
    but the returned order (and content) does not depend on it.
    """
    cells = list(grid.cells())

    def run(indexed):
        k, (d, r) = indexed
        try:
            return rate_ratio(d, r, grid.mu, grid.pair, fixed_intensity=fixed_intensity)
        except Exception as exc:
            n_leaks = len(grid.leaks)
            raise SweepCellError((k // n_leaks, k % n_leaks), d, r, exc) from exc

    if workers <= 1:
        return [run(item) for item in enumerate(cells)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(cells)))
