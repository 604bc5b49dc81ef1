"""Exception types shared across the package."""


class NlsLabError(Exception):
    """Base class for all package errors."""


class InvalidGrid(NlsLabError):
    """Grid parameters violate the discretization constraints."""


class InvalidExponent(NlsLabError):
    """Nonlinearity or multiplier exponent outside its admissible range."""


class InvalidConfig(NlsLabError):
    """Run configuration failed validation (unknown key, bad value)."""


class NonFinite(NlsLabError):
    """A field acquired non-finite entries."""


class NoConvergence(NlsLabError):
    """Iterative solver failed to reach its tolerance."""


class BoundaryContamination(NlsLabError):
    """Field mass at the box boundary too large for an x-weighted integral."""


class DegenerateInput(NlsLabError):
    """Input field is identically zero where a ratio is required."""


class MissingConstants(NlsLabError):
    """A threshold classification requires ground-state constants not supplied."""


class InsufficientSamples(NlsLabError):
    """Too few trajectory samples for a space-time norm estimate."""
