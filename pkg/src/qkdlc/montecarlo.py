"""Pulse-level Monte Carlo of the channel, the attack and Bob's detection.

Each pulse is a Poisson photon number that is thinned binomially between
Eve, Bob and the fibre. Only counting statistics are simulated; that is all
the analytic conclusive-probability and leakage formulas depend on.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _rng
from .channel import ChannelParams, leak_split, transmittance, vacuum_probability
from .errors import DomainError
from .keyrate import ProtocolSpec, bb84_lc_conclusive, cow_lc_conclusive

Z_LIMIT = 3.0


class Attack(str, Enum):
    NONE = "none"
    LEAK_TAP = "leak-tap"           # Eve diverts r_E of each pulse at the line input
    ALL_LOSSES_BS = "all-losses-bs"  # Eve collects the whole 1 - T line loss
    PNS = "pns"                      # Eve keeps all but one photon of multi-photon pulses

    @classmethod
    def parse(cls, name: "str | Attack") -> "Attack":
        if isinstance(name, Attack):
            return name
        key = str(name).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(a.value for a in cls)
            raise DomainError(f"unknown attack {name!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class SimConfig:
    protocol: ProtocolSpec
    channel: ChannelParams
    attack: Attack = Attack.LEAK_TAP
    n_pulses: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "attack", Attack.parse(self.attack))
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise DomainError(f"n_pulses must be a positive integer, got {self.n_pulses}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.attack is not Attack.LEAK_TAP and self.channel.leak_fraction != 0.0:
            raise DomainError(f"leak_fraction is only meaningful for the leak-tap attack, not {self.attack.value}")

    @property
    def intensity(self) -> float:
        return self.protocol.intensity


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass(frozen=True)
class SimOutcome:
    """Integer tallies of a simulation run.

    Outcomes of disjoint pulse ranges combine with ``+``; the operation is
    associative and commutative, so the split across workers is irrelevant.
    """

    n_emitted: int = 0
    n_conclusive: int = 0
    n_eve_nonvacuum: int = 0
    photons_emitted: int = 0
    photons_eve: int = 0
    photons_bob: int = 0
    photons_dissipated: int = 0
    photons_eve_sq: int = field(default=0, repr=False)

    def __add__(self, other: "SimOutcome") -> "SimOutcome":
        if not isinstance(other, SimOutcome):
            return NotImplemented
        return SimOutcome(*(a + b for a, b in zip(self._counts(), other._counts())))

    def _counts(self):
        return (
            self.n_emitted, self.n_conclusive, self.n_eve_nonvacuum, self.photons_emitted,
            self.photons_eve, self.photons_bob, self.photons_dissipated, self.photons_eve_sq,
        )

    @property
    def est_conclusive_prob(self) -> float:
        return self.n_conclusive / self.n_emitted

    @property
    def conclusive_std_err(self) -> float:
        return _binomial_se(self.est_conclusive_prob, self.n_emitted)

    @property
    def est_eve_bit_fraction(self) -> float:
        """Fraction of pulses where Eve holds at least one photon."""
        return self.n_eve_nonvacuum / self.n_emitted

    @property
    def eve_std_err(self) -> float:
        return _binomial_se(self.est_eve_bit_fraction, self.n_emitted)

    @property
    def eve_mean_photons(self) -> float:
        return self.photons_eve / self.n_emitted

    @property
    def eve_mean_photons_std_err(self) -> float:
        n = self.n_emitted
        mean = self.eve_mean_photons
        var = max(self.photons_eve_sq / n - mean * mean, 0.0)
        return math.sqrt(var / n)

    def as_dict(self) -> dict:
        return {
            "n_emitted": self.n_emitted,
            "n_conclusive": self.n_conclusive,
            "n_eve_nonvacuum": self.n_eve_nonvacuum,
            "photons_emitted": self.photons_emitted,
            "photons_eve": self.photons_eve,
            "photons_bob": self.photons_bob,
            "photons_dissipated": self.photons_dissipated,
            "est_conclusive_prob": self.est_conclusive_prob,
            "conclusive_std_err": self.conclusive_std_err,
            "est_eve_bit_fraction": self.est_eve_bit_fraction,
            "eve_std_err": self.eve_std_err,
            "eve_mean_photons": self.eve_mean_photons,
            "eve_mean_photons_std_err": self.eve_mean_photons_std_err,
        }


def _simulate_block(config: SimConfig, block: int, m: int) -> SimOutcome:
    rng = _rng.block_rng(config.seed, block)
    x = config.intensity
    T = transmittance(config.channel)
    attack = config.attack

    n = rng.poisson(x, m)
    if attack is Attack.LEAK_TAP:
        eve = rng.binomial(n, config.channel.leak_fraction)
        rest = n - eve
        bob = rng.binomial(rest, T)
    elif attack is Attack.ALL_LOSSES_BS:
        eve = rng.binomial(n, 1.0 - T)
        rest = n - eve
        bob = rest
    elif attack is Attack.PNS:
        eve = np.maximum(n - 1, 0)
        rest = n - eve
        bob = rng.binomial(rest, T)
    else:
        eve = np.zeros_like(n)
        rest = n
        bob = rng.binomial(n, T)

    click = bob > 0
    if config.protocol.protocol.sifted:
        click &= rng.random(m) < 0.5

    return SimOutcome(
        n_emitted=m,
        n_conclusive=int(np.count_nonzero(click)),
        n_eve_nonvacuum=int(np.count_nonzero(eve)),
        photons_emitted=int(n.sum()),
        photons_eve=int(eve.sum()),
        photons_bob=int(bob.sum()),
        photons_dissipated=int((rest - bob).sum()),
        photons_eve_sq=int((eve.astype(np.int64) ** 2).sum()),
    )


def run(config: SimConfig, *, workers: int = 1) -> SimOutcome:
    """Simulate ``config.n_pulses`` pulses and return the tallies.

    The outcome is a pure function of ``config``; ``workers`` only changes
    how many blocks are simulated at once.
    """
    jobs = list(_rng.blocks(int(config.n_pulses)))

    def one(job):
        b, start, stop = job
        return _simulate_block(config, b, stop - start)

    if workers <= 1:
        parts = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    total = SimOutcome()
    for part in parts:
        total = total + part
    return total


# ---------------------------------------------------------------------------
# analytic counterparts

def analytic_expectations(config: SimConfig) -> dict[str, tuple[float, float]]:
    """Per-pulse ``(mean, variance)`` of each simulated observable under the model."""
    x = config.intensity
    T = transmittance(config.channel)
    sifted = config.protocol.protocol.sifted
    attack = config.attack

    if attack is Attack.PNS:
        clicks = T * -math.expm1(-x)
        conclusive = 0.5 * clicks if sifted else clicks
        p_eve = -math.expm1(-x) - x * math.exp(-x)
        eve_mean = x + math.expm1(-x)
        eve_sq = x + (x - 1.0) ** 2 - math.exp(-x)
        eve_var = max(eve_sq - eve_mean * eve_mean, 0.0)
    else:
        r = config.channel.leak_fraction if attack is Attack.LEAK_TAP else 0.0
        conclusive = bb84_lc_conclusive(T, r, x) if sifted else cow_lc_conclusive(T, r, x)
        if attack is Attack.LEAK_TAP:
            eve_mean = leak_split(config.channel, x)[0]
        elif attack is Attack.ALL_LOSSES_BS:
            eve_mean = (1.0 - T) * x
        else:
            eve_mean = 0.0
        p_eve = 1.0 - vacuum_probability(eve_mean)
        eve_var = eve_mean  # thinned Poisson stays Poisson

    return {
        "conclusive_prob": (conclusive, conclusive * (1.0 - conclusive)),
        "eve_nonvacuum_prob": (p_eve, p_eve * (1.0 - p_eve)),
        "eve_mean_photons": (eve_mean, eve_var),
    }


@dataclass(frozen=True)
class Check:
    quantity: str
    analytic: float
    empirical: float
    std_err: float
    z: float

    @property
    def passed(self) -> bool:
        return abs(self.z) <= Z_LIMIT


@dataclass(frozen=True)
class ValidationReport:
    outcome: SimOutcome
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"quantity": c.quantity, "analytic": c.analytic, "empirical": c.empirical,
                 "std_err": c.std_err, "z": c.z, "passed": c.passed}
                for c in self.checks
            ],
            "outcome": self.outcome.as_dict(),
        }


def _z(empirical: float, analytic: float, std_err: float) -> float:
    if std_err > 0.0:
        return (empirical - analytic) / std_err
    return 0.0 if empirical == analytic else math.copysign(math.inf, empirical - analytic)


def validate_against_analytic(config: SimConfig, *, workers: int = 1) -> ValidationReport:
    """Run the simulation and z-score it against the closed-form expectations.

    Standard errors come from the analytic variance, so a zero-intensity run
    (empirical and analytic both exactly 0) scores z = 0. The Holevo bound
    used by COW/DPS is not an observable frequency and is not checked.
    """
    outcome = run(config, workers=workers)
    n = outcome.n_emitted
    expected = analytic_expectations(config)
    empirical = {
        "conclusive_prob": outcome.est_conclusive_prob,
        "eve_nonvacuum_prob": outcome.est_eve_bit_fraction,
        "eve_mean_photons": outcome.eve_mean_photons,
    }
    checks = []
    for name, (mean, var) in expected.items():
        se = math.sqrt(var / n)
        checks.append(Check(name, mean, empirical[name], se, _z(empirical[name], mean, se)))
    return ValidationReport(outcome, tuple(checks))
