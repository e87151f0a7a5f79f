"""Closed-form secret-key rates for BB84, COW and DPS, with and without line control.

All rates are secret bits per emitted signal pulse. The vectorised core
(:func:`rate_arrays`) broadcasts over numpy arrays and is what the optimiser
scans; the per-protocol functions validate scalar inputs and return a
:class:`RatePoint`.

Protocol variants
-----------------
``BB84_DECOY_UPPER``
    Upper bound for decoy-state BB84 under a PNS attack: only single-photon
    pulses that survive the line give key, ``R = T x exp(-x) / 2``.
``BB84_LC``
    BB84 with line control. Eve holds only the photons diverted at her tap
    and learns the bit whenever she holds at least one of them.
``COW`` / ``DPS``
    Beam-splitter attack in which Eve collects all line losses ``1 - T``;
    her information is the Holevo bound of two pure coherent-state words.
``COW_LC`` / ``DPS_LC``
    Same, but Eve only holds the tapped fraction ``r_E``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import (
    VACUUM,
    CoherentAmplitude,
    check_fraction,
    check_intensity,
    check_transmittance,
    coherent_overlap,
)
from .errors import DomainError

_LN2 = math.log(2.0)


class Protocol(str, Enum):
    BB84_DECOY_UPPER = "bb84-decoy-upper"
    BB84_LC = "bb84-lc"
    COW = "cow"
    COW_LC = "cow-lc"
    DPS = "dps"
    DPS_LC = "dps-lc"

    @property
    def line_controlled(self) -> bool:
        return self in (Protocol.BB84_LC, Protocol.COW_LC, Protocol.DPS_LC)

    @property
    def sifted(self) -> bool:
        """True for BB84 variants, where half the slots are lost to basis mismatch."""
        return self in (Protocol.BB84_DECOY_UPPER, Protocol.BB84_LC)

    @classmethod
    def parse(cls, name: "str | Protocol") -> "Protocol":
        if isinstance(name, Protocol):
            return name
        key = str(name).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise DomainError(f"unknown protocol {name!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class ProtocolSpec:
    protocol: Protocol
    intensity: float

    def __post_init__(self):
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        check_intensity(self.intensity)


@dataclass(frozen=True)
class DecoyObservables:
    """Measured and estimated decoy-state BB84 quantities.

    ``gain_single`` (Q_1) and ``error_single`` (e_1) come from a decoy-state
    estimator that is outside this package.
    """

    gain_signal: float
    qber: float
    gain_single: float
    error_single: float
    ec_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("gain_signal", "qber", "gain_single", "error_single"):
            check_fraction(name, getattr(self, name))
        # real codes sit above the Shannon limit, typically f = 1.1 to 1.2
        check_intensity(self.ec_efficiency, "ec_efficiency")
        if self.gain_single > self.gain_signal:
            raise DomainError(
                f"gain_single ({self.gain_single}) exceeds gain_signal ({self.gain_signal})"
            )


@dataclass(frozen=True)
class RatePoint:
    """Key rate at one operating point.

    Attributes
    ----------
    rate : float
        Secret bits per emitted pulse.
    conclusive_prob : float
        Probability that a pulse yields a sifted, conclusive bit at Bob.
    eve_info : float
        Upper bound on Eve's information per sifted bit.
    """

    rate: float
    conclusive_prob: float
    eve_info: float


# ---------------------------------------------------------------------------
# entropy primitives

def _h2(p):
    p = np.asarray(p, dtype=float)
    inside = (p > 0.0) & (p < 1.0)
    safe = np.where(inside, p, 0.5)
    val = -(safe * np.log(safe) + (1.0 - safe) * np.log1p(-safe)) / _LN2
    return np.where(inside, np.minimum(val, 1.0), 0.0)


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy in bits, with ``h2(0) = h2(1) = 0``."""
    p = check_fraction("p", p)
    return float(_h2(p))


def holevo_two_pure(overlap: float) -> float:
    """Holevo quantity of two equiprobable pure states with overlap ``|<a|b>|``."""
    o = check_fraction("overlap", overlap)
    return float(_h2(0.5 * (1.0 - o)))


# 1/(2k(2k-1)) for k = 1..30, highest order first for Horner evaluation
_PF_COEFFS = np.array([1.0 / (2 * k * (2 * k - 1)) for k in range(30, 0, -1)])


def privacy_factor(overlap):
    """``1 - h2((1 - o) / 2)`` evaluated without cancellation.

    For small overlaps the direct form loses every significant digit
    (h2 tends to 1); a power series in ``o**2`` is used there instead.
    """
    o = np.asarray(overlap, dtype=float)
    u = o * o
    series = np.zeros_like(o)
    for c in _PF_COEFFS:
        series = series * u + c
    series = series * u / _LN2
    with np.errstate(divide="ignore", invalid="ignore"):
        hi = np.minimum(o, 1.0)
        direct = ((1.0 - hi) * np.log1p(-hi) + (1.0 + hi) * np.log1p(hi)) / (2.0 * _LN2)
    direct = np.where(hi >= 1.0, 1.0, direct)
    return np.where(o < 0.5, series, direct)


# ---------------------------------------------------------------------------
# vectorised core

def _neg_expm1(z):
    return -np.expm1(-z)


def rate_arrays(protocol: Protocol, T, r_E, x):
    """Return ``(rate, conclusive_prob, eve_info)`` broadcast over the inputs.

    No validation is done here; callers are expected to pass in-domain values.
    """
    protocol = Protocol.parse(protocol)
    T, r, x = np.broadcast_arrays(
        np.asarray(T, dtype=float), np.asarray(r_E, dtype=float), np.asarray(x, dtype=float)
    )

    if protocol is Protocol.BB84_DECOY_UPPER:
        tx = T * x
        conclusive = 0.5 * _neg_expm1(tx)
        rate = 0.5 * tx * np.exp(-x)
        with np.errstate(divide="ignore", invalid="ignore"):
            single = np.where(tx > 0.0, rate / np.where(conclusive > 0, conclusive, 1.0), 1.0)
        eve = np.clip(1.0 - single, 0.0, 1.0)
        return rate, conclusive, eve

    if protocol is Protocol.BB84_LC:
        conclusive = 0.5 * _neg_expm1(T * (1.0 - r) * x)
        return conclusive * np.exp(-r * x), conclusive, _neg_expm1(r * x)

    if protocol in (Protocol.COW, Protocol.DPS):
        conclusive = _neg_expm1(T * x)
        eve_mean = (1.0 - T) * x
    else:
        conclusive = _neg_expm1(T * (1.0 - r) * x)
        eve_mean = r * x

    # Squared single-mode overlaps as written for each protocol:
    # COW |<a|0>|^2 = exp(-|a|^2), DPS |<a|-a>|^2 = exp(-4|a|^2).
    arg = eve_mean if protocol in (Protocol.COW, Protocol.COW_LC) else 4.0 * eve_mean
    overlap = np.exp(-arg)

    eve = _h2(0.5 * _neg_expm1(arg))
    rate = np.maximum(conclusive * privacy_factor(overlap), 0.0)
    return rate, conclusive, eve


def rate_values(protocol: Protocol, T, r_E, x):
    """Key rate only, broadcast over the inputs."""
    return rate_arrays(protocol, T, r_E, x)[0]


# ---------------------------------------------------------------------------
# validated scalar API

def _point(protocol, T, r_E, intensity) -> RatePoint:
    rate, conclusive, eve = rate_arrays(protocol, T, r_E, intensity)
    return RatePoint(float(rate), float(conclusive), float(eve))


def evaluate(protocol: "Protocol | str", T: float, r_E: float, intensity: float) -> RatePoint:
    """Rate of any protocol variant; ``r_E`` is ignored by the baselines."""
    protocol = Protocol.parse(protocol)
    T = check_transmittance(T)
    r_E = check_fraction("r_E", r_E)
    x = check_intensity(intensity)
    return _point(protocol, T, r_E, x)


def decoy_key_length(obs: DecoyObservables, sifted_len: float) -> float:
    """Secret key length from decoy-state observables, clamped at zero."""
    L = check_intensity(sifted_len, "sifted_len")
    single = obs.gain_single * (1.0 - binary_entropy(obs.error_single))
    leak_ec = obs.gain_signal * obs.ec_efficiency * binary_entropy(obs.qber)
    return max(0.0, 0.5 * L * (single - leak_ec))


def bb84_decoy_upper(T: float, intensity: float) -> RatePoint:
    """PNS upper bound on decoy-state BB84; maximal at one photon per pulse."""
    return _point(Protocol.BB84_DECOY_UPPER, check_transmittance(T), 0.0, check_intensity(intensity))


def bb84_lc_conclusive(T: float, r_E: float, intensity: float) -> float:
    T = check_transmittance(T)
    r_E = check_fraction("r_E", r_E)
    x = check_intensity(intensity)
    return 0.5 * -math.expm1(-T * (1.0 - r_E) * x)


def bb84_lc_rate(T: float, r_E: float, intensity: float) -> RatePoint:
    return evaluate(Protocol.BB84_LC, T, r_E, intensity)


def cow_conclusive(T: float, intensity: float) -> float:
    """Probability that Bob's detector clicks; no sifting factor for COW/DPS."""
    T = check_transmittance(T)
    return -math.expm1(-T * check_intensity(intensity))


def cow_lc_conclusive(T: float, r_E: float, intensity: float) -> float:
    T = check_transmittance(T)
    r_E = check_fraction("r_E", r_E)
    return -math.expm1(-T * (1.0 - r_E) * check_intensity(intensity))


def cow_rate(T: float, intensity: float) -> RatePoint:
    return evaluate(Protocol.COW, T, 0.0, intensity)


def cow_lc_rate(T: float, r_E: float, intensity: float) -> RatePoint:
    return evaluate(Protocol.COW_LC, T, r_E, intensity)


def dps_rate(T: float, intensity: float) -> RatePoint:
    return evaluate(Protocol.DPS, T, 0.0, intensity)


def dps_lc_rate(T: float, r_E: float, intensity: float) -> RatePoint:
    return evaluate(Protocol.DPS_LC, T, r_E, intensity)


def eve_overlap(protocol: "Protocol | str", T: float, r_E: float, intensity: float) -> float:
    """Overlap fed to the Holevo bound, built from :func:`coherent_overlap`.

    Slower than the vectorised core but spelled out state by state; useful
    for cross-checks. BB84 variants have no Holevo term and raise.
    """
    protocol = Protocol.parse(protocol)
    if protocol.sifted:
        raise DomainError(f"{protocol.value} has no Holevo term")
    T = check_transmittance(T)
    r_E = check_fraction("r_E", r_E)
    x = check_intensity(intensity)
    eve_mean = (1.0 - T) * x if not protocol.line_controlled else r_E * x
    a = CoherentAmplitude(eve_mean)
    if protocol in (Protocol.COW, Protocol.COW_LC):
        return coherent_overlap(a, VACUUM) ** 2
    return coherent_overlap(a, CoherentAmplitude(eve_mean, -1)) ** 2
