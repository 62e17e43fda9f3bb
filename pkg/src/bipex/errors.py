"""Exception hierarchy shared across the package.

Every error raised by the library derives from :class:`BipexError`, so callers
can catch one base class.  Where it makes sense, errors also subclass the
matching builtin (``ValueError``, ``IndexError``) for idiomatic handling.
"""


class BipexError(Exception):
    """Base class for all package-specific errors."""


class GraphIndexError(BipexError, IndexError):
    """A unit index is outside the graph's valid range."""


class DuplicateEdgeError(BipexError, ValueError):
    """The same edge was supplied more than once."""


class IsolatedOutcomeUnitError(BipexError, ValueError):
    """One or more outcome units have no connected intervention unit."""

    def __init__(self, units):
        self.units = tuple(int(u) for u in units)
        super().__init__(
            f"outcome units with no connected intervention unit: {list(self.units)}"
        )


class AllUnitsIsolatedError(BipexError, ValueError):
    """Pruning removed every unit; nothing is left to analyze."""


class EmptyClusterError(BipexError, ValueError):
    """A cluster specification contains a non-positive cluster size."""


class InvalidDegreeBoundError(BipexError, ValueError):
    """The requested maximum degree is outside [1, m]."""


class InvalidProbabilityError(BipexError, ValueError):
    """A probability parameter must lie strictly inside (0, 1)."""


class DimensionMismatchError(BipexError, ValueError):
    """Array shapes are inconsistent with the graph or with each other."""


class NonFiniteDataError(BipexError, ValueError):
    """Outcomes, covariates, or potential outcomes contain NaN or infinity."""


class NoTreatedExposureError(BipexError, ValueError):
    """No outcome unit had all of its intervention units treated.

    The realized draw cannot identify the all-treated mean; callers running
    simulations should count and exclude such draws.
    """


class NoControlExposureError(BipexError, ValueError):
    """No outcome unit had all of its intervention units in control."""


class SizeGuardError(BipexError, ValueError):
    """A dense check was requested on an instance beyond its size guard."""


class EnumerationGuardError(BipexError, ValueError):
    """Exhaustive enumeration requested for more intervention units than allowed."""


class InvalidAlphaError(BipexError, ValueError):
    """Confidence level parameter alpha must lie strictly inside (0, 1)."""


class InvalidRepsError(BipexError, ValueError):
    """A replication count must be a positive integer."""


class DegenerateVarianceError(BipexError, ValueError):
    """A diagnostic demands a non-degenerate (positive) variance."""


class AllDrawsDegenerateError(BipexError, RuntimeError):
    """Every Monte Carlo replication failed the exposure precondition."""


class ConfigError(BipexError, ValueError):
    """A run configuration failed validation."""


class DataFormatError(BipexError, ValueError):
    """An input file could not be parsed; the message carries the line number."""
