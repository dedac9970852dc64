"""Shared exception types."""


class CapacityError(RuntimeError):
    """A requested basis / dense operator exceeds the configured budget."""


class MalformedMoveError(ValueError):
    """A local rewrite move is inconsistent (patterns outside the mask, etc.)."""


class BasisMismatchError(ValueError):
    """Two objects refer to different sector bases."""


class SectorEscapeError(RuntimeError):
    """A Pauli X factor mapped a configuration outside the sector basis."""


class DegenerateCollapseError(RuntimeError):
    """A measurement branch with vanishing norm was selected (numerical inconsistency)."""


class VanishingNormError(RuntimeError):
    """Repeated projection drove the state norm below representable range."""


class WindowTooShortError(ValueError):
    """A fit window contains too few data points."""


class NoCrossingError(ValueError):
    """A series never crosses the requested target level."""


class NonConvergenceError(RuntimeError):
    """Iterative eigensolver failed to converge within the iteration budget."""
