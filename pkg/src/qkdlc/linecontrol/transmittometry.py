"""Leak estimation from bright test pulses.

Bob's photon count on a test pulse of ``n_A`` photons is Poisson with mean
``T (1 - r_E) n_A``. With the natural loss ``T`` documented beforehand, the
relative shortfall of the mean count estimates ``r_E``. Shot noise sets the
floor: the smallest resolvable leak scales as ``1 / sqrt(T n_A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _rng
from ..channel import DEFAULT_MU, ChannelParams, check_fraction, transmittance, transmittance_from
from ..errors import DomainError

#: Expected received photons per test pulse below which an estimate is unusable.
MIN_RECEIVED_PHOTONS = 10.0

_TEST_STREAM = 1


def required_test_intensity(r_E_min: float, distance_km: float, mu: float = DEFAULT_MU) -> float:
    """Photons per test pulse needed to resolve a leak of ``r_E_min``.

    >>> required_test_intensity(0.01, 100.0)
    1000000.0
    """
    r = check_fraction("r_E_min", r_E_min)
    if r == 0.0:
        raise DomainError("r_E_min must be > 0")
    # 10**(mu*D) directly: exact for the round cases instead of 1/10**(-mu*D)
    transmittance_from(distance_km, mu)
    return 10.0 ** (mu * distance_km) / (r * r)


def min_detectable_leakage(intensity: float, distance_km: float, mu: float = DEFAULT_MU) -> float:
    """Smallest leak fraction resolvable with test pulses of ``intensity`` photons."""
    if not (math.isfinite(intensity) and intensity > 0.0):
        raise DomainError(f"intensity must be > 0, got {intensity}")
    transmittance_from(distance_km, mu)
    return math.sqrt(10.0 ** (mu * distance_km) / intensity)


@dataclass(frozen=True)
class TestPulsePlan:
    """Which slots carry test pulses, and how bright they are.

    The schedule stands in for the slot positions Alice draws from a short
    pre-shared key; Eve cannot see it, so the simulation treats test and
    signal slots identically on the line.
    """

    __test__ = False  # not a pytest class

    intensity: float
    n_pulses: int
    slot_schedule: tuple[int, ...]

    def __post_init__(self):
        if not (math.isfinite(self.intensity) and self.intensity > 0.0):
            raise DomainError(f"test intensity must be > 0, got {self.intensity}")
        sched = tuple(int(i) for i in self.slot_schedule)
        if not sched:
            raise DomainError("slot_schedule must not be empty")
        if len(set(sched)) != len(sched):
            raise DomainError("slot_schedule indices must be unique")
        if min(sched) < 0 or max(sched) >= self.n_pulses:
            raise DomainError("slot_schedule indices must lie in [0, n_pulses)")
        object.__setattr__(self, "slot_schedule", sched)

    @classmethod
    def random(cls, intensity: float, n_tests: int, n_pulses: int | None = None, seed: int = 0) -> "TestPulsePlan":
        """Draw ``n_tests`` distinct test slots out of ``n_pulses`` (default ``100 * n_tests``)."""
        n_pulses = 100 * n_tests if n_pulses is None else n_pulses
        if not 0 < n_tests <= n_pulses:
            raise DomainError(f"need 0 < n_tests <= n_pulses, got {n_tests}, {n_pulses}")
        rng = np.random.default_rng(seed)
        slots = np.sort(rng.choice(n_pulses, size=n_tests, replace=False))
        return cls(float(intensity), int(n_pulses), tuple(int(s) for s in slots))

    @property
    def n_tests(self) -> int:
        return len(self.slot_schedule)


@dataclass(frozen=True)
class LeakEstimate:
    r_hat: float
    std_err: float
    n_used: int
    usable: bool = True

    @property
    def suspicious(self) -> bool:
        """Estimate is implausibly negative, pointing at a wrong loss baseline."""
        return self.r_hat < -3.0 * self.std_err


def simulate_test_counts(plan: TestPulsePlan, channel: ChannelParams, seed: int) -> np.ndarray:
    """Bob's photon count on each scheduled test slot.

    Slot ``i`` draws from the counter-keyed stream of block ``i // BLOCK``,
    so a slot's count depends only on ``(seed, i)``.
    """
    lam = transmittance(channel) * (1.0 - channel.leak_fraction) * plan.intensity
    slots = np.asarray(plan.slot_schedule, dtype=np.int64)
    counts = np.empty(len(slots), dtype=np.int64)
    block_of = slots // _rng.BLOCK
    for b in np.unique(block_of):
        sel = block_of == b
        draws = _rng.block_rng(seed, int(b), stream=_TEST_STREAM).poisson(lam, _rng.BLOCK)
        counts[sel] = draws[slots[sel] - b * _rng.BLOCK]
    return counts


def estimate_from_counts(counts: Sequence[int], T: float, intensity: float) -> LeakEstimate:
    counts = np.asarray(counts, dtype=float)
    n = len(counts)
    expected = T * intensity
    mean = float(counts.mean())
    r_hat = 1.0 - mean / expected
    std_err = math.sqrt(max(mean, expected * 1e-12) / n) / expected
    return LeakEstimate(r_hat, std_err, n, usable=expected >= MIN_RECEIVED_PHOTONS)


def estimate_leakage(plan: TestPulsePlan, channel: ChannelParams, seed: int = 0) -> LeakEstimate:
    """Simulate the test pulses of ``plan`` over ``channel`` and estimate r_E.

    ``channel.leak_fraction`` is the true (hidden) leak; the estimator only
    uses the documented transmittance and the announced test intensity.
    Estimates with fewer than :data:`MIN_RECEIVED_PHOTONS` expected photons
    per pulse are returned with ``usable=False``.
    """
    counts = simulate_test_counts(plan, channel, seed)
    return estimate_from_counts(counts, transmittance(channel), plan.intensity)
