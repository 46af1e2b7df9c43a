"""Shared exception and warning types for the squeezing engine.

Every module raises from this vocabulary so callers (and the CLI) can map
failures to exit codes without string matching.
"""


class EngineError(Exception):
    """Base class for all engine failures."""


class ConfigError(EngineError):
    """Malformed or inconsistent user configuration."""


class DomainError(EngineError):
    """Input outside the mathematical domain of a formula."""


class SchemeError(EngineError):
    """Operation only defined for a specific twisting scheme."""


class ConvergenceError(EngineError):
    """Iterative solver failed to reach its residual target."""


class ResourceError(EngineError):
    """Requested problem size exceeds configured limits."""


class RegimeError(EngineError):
    """Hierarchy preconditions of a perturbative reduction are violated."""


class IntegratorError(EngineError):
    """Adaptive time stepper failed (step-size underflow or solver abort)."""


class SingularMatrixError(EngineError):
    """Linear solve hit a singular matrix with no fallback."""


class DegenerateSpinError(EngineError):
    """Mean spin length vanishes; squeezing direction undefined."""


class FitDivergenceError(EngineError):
    """Nonlinear least squares failed to converge from every start."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class EngineWarning(UserWarning):
    """Base class for all engine warnings."""


class PositivityWarning(EngineWarning):
    """A density-matrix block developed eigenvalues below tolerance."""


class BoundaryWarning(EngineWarning):
    """An extremum was located on the edge of its search grid."""


class NonUnimodalWarning(EngineWarning):
    """Pre-grid of a scalar minimization shows multiple local minima."""


class RegimeWarning(EngineWarning):
    """Hierarchy preconditions violated; results produced but flagged."""


class CutoffWarning(EngineWarning):
    """Fock-space truncation leakage exceeded its configured threshold."""
