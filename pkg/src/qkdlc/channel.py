"""Channel arithmetic: transmittance, leak splitting, coherent-state overlaps.

Every quantity here is a plain function of photon-number statistics. The
eavesdropper's tap sits at the channel input, so her share of a pulse is
never attenuated by the line while Bob's share is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Default fibre attenuation in km^-1 (base-10 exponent, i.e. 0.2 dB/km).
DEFAULT_MU = 1.0 / 50.0


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")
    return value


def check_fraction(name: str, value: float) -> float:
    value = _check_finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_transmittance(T: float) -> float:
    T = _check_finite("T", T)
    if not 0.0 < T <= 1.0:
        raise DomainError(f"transmittance must lie in (0, 1], got {T}")
    return T


def check_intensity(x: float, name: str = "intensity") -> float:
    x = _check_finite(name, x)
    if x < 0.0:
        raise DomainError(f"{name} must be >= 0, got {x}")
    return x


@dataclass(frozen=True)
class ChannelParams:
    """Fibre line between Alice and Bob with an optional local leak.

    Attributes
    ----------
    mu : float
        Attenuation coefficient in km^-1; transmittance is ``10**(-mu*D)``.
    distance_km : float
        Line length D.
    leak_fraction : float
        Fraction r_E of the pulse intensity diverted by Eve's tap.
    """

    mu: float = DEFAULT_MU
    distance_km: float = 0.0
    leak_fraction: float = 0.0

    def __post_init__(self):
        mu = _check_finite("mu", self.mu)
        if mu <= 0.0:
            raise DomainError(f"mu must be > 0, got {mu}")
        d = _check_finite("distance_km", self.distance_km)
        if d < 0.0:
            raise DomainError(f"distance_km must be >= 0, got {d}")
        check_fraction("leak_fraction", self.leak_fraction)

    @property
    def transmittance(self) -> float:
        return transmittance(self)


@dataclass(frozen=True)
class CoherentAmplitude:
    """Real coherent amplitude ``sign * sqrt(mean_photons)``.

    Only the phases 0 and pi occur in COW and DPS, so a sign bit is enough.
    """

    mean_photons: float
    sign: int = 1

    def __post_init__(self):
        check_intensity(self.mean_photons, "mean_photons")
        if self.sign not in (1, -1):
            raise DomainError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def value(self) -> float:
        return self.sign * math.sqrt(self.mean_photons)


VACUUM = CoherentAmplitude(0.0)


def transmittance_from(distance_km: float, mu: float = DEFAULT_MU) -> float:
    """``10**(-mu * D)`` with domain checks."""
    mu = _check_finite("mu", mu)
    distance_km = _check_finite("distance_km", distance_km)
    if mu <= 0.0:
        raise DomainError(f"mu must be > 0, got {mu}")
    if distance_km < 0.0:
        raise DomainError(f"distance_km must be >= 0, got {distance_km}")
    return 10.0 ** (-mu * distance_km)


def transmittance(params: ChannelParams) -> float:
    """End-to-end power transmittance of the line."""
    return transmittance_from(params.distance_km, params.mu)


def leak_split(params: ChannelParams, intensity: float) -> tuple[float, float]:
    """Split a pulse's mean photon number into Eve's and Bob's shares.

    Returns ``(eve_mean, bob_mean)`` with ``eve_mean = r_E * x`` and
    ``bob_mean = T * (1 - r_E) * x``. The remainder is dissipated by
    scattering along the line.
    """
    x = check_intensity(intensity)
    r = params.leak_fraction
    return r * x, transmittance(params) * (1.0 - r) * x


def coherent_overlap(a: CoherentAmplitude, b: CoherentAmplitude) -> float:
    """``|<a|b>| = exp(-|a - b|^2 / 2)`` for real amplitudes."""
    d = a.value - b.value
    return math.exp(-0.5 * d * d)


def vacuum_probability(mean: float) -> float:
    """Poisson probability of zero photons, ``exp(-mean)``."""
    return math.exp(-check_intensity(mean, "mean"))
