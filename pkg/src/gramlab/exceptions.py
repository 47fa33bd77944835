"""Warning and error types shared across the package."""


class NumericalError(RuntimeError):
    """A solver or factorization failed in a way that is not a usage error."""


class SingularSystemError(NumericalError):
    """Linear system too ill-conditioned to solve reliably."""


class InfeasibleEmbeddingError(NumericalError):
    """An embedding violates its positive-semidefinite feasibility condition."""


class DisconnectedGraphWarning(UserWarning):
    """The pair/edge set does not connect all objects; geometry is unanchored per component."""


class UnderdeterminedEmbeddingWarning(UserWarning):
    """Too few distance constraints to pin down a new-object embedding."""


class TraceCapWarning(UserWarning):
    """The trace cap was active at the returned solution (regularization weight too large)."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration limit before reaching tolerance."""
