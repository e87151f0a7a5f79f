"""Exception hierarchy shared by all qkdlc modules."""


class QKDLCError(Exception):
    """Base class for every error raised by qkdlc."""


class DomainError(QKDLCError, ValueError):
    """A parameter lies outside the domain of the model."""


class DegenerateOptimumError(QKDLCError):
    """The objective is zero everywhere on the search interval."""


class SweepCellError(DomainError):
    """A single sweep cell failed; carries the offending cell."""

    def __init__(self, index, distance_km, leak_fraction, cause):
        self.index = index
        self.distance_km = distance_km
        self.leak_fraction = leak_fraction
        self.cause = cause
        super().__init__(
            f"sweep cell {index} (D={distance_km} km, r_E={leak_fraction}) failed: {cause}"
        )


class GeometryError(DomainError):
    """Two reflectograms do not share the same sampling geometry."""


class InsufficientDataError(QKDLCError, ValueError):
    """Too few usable samples for a fit."""
