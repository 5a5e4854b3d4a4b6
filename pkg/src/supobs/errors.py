"""Exception hierarchy for the supobs package.

Every error raised by the library derives from :class:`SupobsError`, so
callers can catch one base class at the harness boundary.
"""


class SupobsError(Exception):
    """Base class for all supobs errors."""


# ---- linear algebra -------------------------------------------------------

class LinalgError(SupobsError):
    """Base class for dense linear-algebra failures."""


class NonSquareError(LinalgError):
    pass


class AsymmetricError(LinalgError):
    pass


class NoConvergenceError(LinalgError):
    pass


class NotHurwitzError(LinalgError):
    pass


class NotObservableError(LinalgError):
    pass


class BadTargetsError(LinalgError):
    pass


# ---- integration ----------------------------------------------------------

class NonFiniteDerivativeError(SupobsError):
    """A vector-field evaluation produced NaN or Inf.

    Attributes
    ----------
    t : float
        Time of the offending evaluation.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class TrajectoryBlowUpError(SupobsError):
    """The plant state exceeded the boundedness guard threshold."""


# ---- gain design ----------------------------------------------------------

class GainDesignError(SupobsError):
    pass


class DimensionMismatchError(GainDesignError):
    pass


class ZeroSectorBoundError(GainDesignError):
    pass


class NotNSDError(GainDesignError):
    """The assembled matrix inequality is not negative semidefinite.

    Attributes
    ----------
    max_eig : float
        Largest eigenvalue of the assembled matrix.
    """

    def __init__(self, message, max_eig=None):
        super().__init__(message)
        self.max_eig = max_eig


class BadPError(GainDesignError):
    pass


class BadMError(GainDesignError):
    pass


class SynthesisBudgetExhaustedError(GainDesignError):
    """Gain synthesis found no certified point within its budget.

    Not a correctness error: externally computed gains can be supplied
    through a certificate file instead.
    """


class CertificateViolatedError(SupobsError):
    """A sampled check of a robustness certificate failed at zero
    parameter mismatch."""


# ---- sampling --------------------------------------------------------------

class EmptySetError(SupobsError):
    pass


class EmptyIntersectionError(SupobsError):
    pass


# ---- diagnostics / harness -------------------------------------------------

class WindowTooLongError(SupobsError):
    pass


class ConfigError(SupobsError):
    """Configuration file could not be parsed or failed validation."""
