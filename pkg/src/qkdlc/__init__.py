"""Key-rate analysis and simulation for line-controlled quantum key distribution.

Submodules
----------
channel      transmittance, leak splitting, coherent-state overlaps
keyrate      closed-form rates for BB84 / COW / DPS, original and line-controlled
optimize     intensity optimisation and (distance, leak) sweeps
montecarlo   pulse-level simulation of channel, attack and detection
linecontrol  transmittometry and reflectometry diagnostics
export       CSV / JSON / SVG output
cli          the ``qkdlc`` command
"""
from .channel import DEFAULT_MU, ChannelParams, CoherentAmplitude, transmittance
from .errors import DegenerateOptimumError, DomainError, QKDLCError
from .keyrate import Protocol, ProtocolSpec, RatePoint, evaluate
from .optimize import ProtocolPair, SweepGrid, SweepRecord, optimal_intensity, rate_ratio, sweep

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MU",
    "ChannelParams",
    "CoherentAmplitude",
    "DegenerateOptimumError",
    "DomainError",
    "Protocol",
    "ProtocolPair",
    "ProtocolSpec",
    "QKDLCError",
    "RatePoint",
    "SweepGrid",
    "SweepRecord",
    "evaluate",
    "optimal_intensity",
    "rate_ratio",
    "sweep",
    "transmittance",
]
