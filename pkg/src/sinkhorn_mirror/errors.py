"""Exception hierarchy.

Every error raised by the package derives from :class:`SinkhornError`, and
input-validation errors additionally derive from :class:`ValueError`.
"""


class SinkhornError(Exception):
    """Base class for all package errors."""


class NegativeWeight(SinkhornError, ValueError):
    pass


class NotProbability(SinkhornError, ValueError):
    pass


class EmptyMeasure(SinkhornError, ValueError):
    pass


class NegativeEntry(SinkhornError, ValueError):
    pass


class AllZeroKernel(SinkhornError, ValueError):
    pass


class LengthMismatch(SinkhornError, ValueError):
    pass


class ShapeMismatch(SinkhornError, ValueError):
    pass


class EmptyRow(SinkhornError, ValueError):
    """A row with positive X-weight has no finite kernel entry."""


class EmptyColumn(SinkhornError, ValueError):
    """A column with positive Y-weight has no finite kernel entry."""


class DegenerateZ(SinkhornError):
    """The normalization constant of a coupling vanished in log domain."""


class NonAbsolutelyContinuous(SinkhornError):
    """The current Y-marginal charges a point where the target has no mass."""


class ZeroIterations(SinkhornError, ValueError):
    pass


class NonpositiveEps(SinkhornError, ValueError):
    pass


class NonpositiveParameter(SinkhornError, ValueError):
    """Rate, time or grid parameter out of range."""


class InfeasiblePattern(SinkhornError, ValueError):
    """The requested zero pattern cannot be realized with a feasible coupling."""


class CannotRepair(SinkhornError):
    """No coupling with the prescribed marginals fits inside the admissible support."""


class NoCertificate(SinkhornError):
    """The duality gap tolerance was not reached within the iteration budget.

    The best bounds found are attached as ``dual_lb``, ``primal_ub`` and
    ``iterations``.
    """

    def __init__(self, message, dual_lb=float("-inf"), primal_ub=float("inf"), iterations=0):
        super().__init__(message)
        self.dual_lb = dual_lb
        self.primal_ub = primal_ub
        self.iterations = iterations


class InvariantViolation(SinkhornError):
    """A numerical identity or invariant failed its tolerance."""

    def __init__(self, name, message):
        super().__init__(f"{name}: {message}")
        self.name = name
