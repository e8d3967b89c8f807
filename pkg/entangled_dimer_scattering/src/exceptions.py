"""
Exception hierarchy for scattering calculations
"""

from typing import List, Optional, Tuple


class ScatteringError(Exception):
    """Base class for all calculation errors"""


class PreconditionError(ScatteringError, ValueError):
    """An input violates an operation's precondition (e.g. non-unit spinor)"""


class UndefinedDirectionError(PreconditionError):
    """A direction was requested for a zero vector"""


class ForwardConeError(PreconditionError):
    """Outgoing direction lies inside the excluded forward cone"""


class ConfigurationError(ScatteringError, ValueError):
    """Invalid run or channel configuration"""

    def __init__(self, message: str, errors: Optional[List[Tuple[str, str]]] = None):
        super().__init__(message)
        self.errors = errors or []

    def __str__(self) -> str:
        if not self.errors:
            return super().__str__()
        details = "; ".join(f"{path}: {msg}" for path, msg in self.errors)
        return f"{super().__str__()} ({details})"


class ContractViolation(ScatteringError, ValueError):
    """A caller broke an operation contract (off-shell pair, asymmetric kernel, ...)"""


class DegenerateBasisError(ScatteringError, ValueError):
    """Two-fermion basis function requested at coincident momenta"""


class ConvergenceError(ScatteringError, ArithmeticError):
    """Quadrature refinement disagrees beyond tolerance"""

    def __init__(self, coarse: float, refined: float, tolerance: float):
        super().__init__(
            f"Quadrature not converged: coarse={coarse:.6e}, refined={refined:.6e}, "
            f"tolerance={tolerance:.1e}"
        )
        self.coarse = coarse
        self.refined = refined
        self.tolerance = tolerance


class UndefinedPolarizationError(ScatteringError, ArithmeticError):
    """Polarization requested where the cross-section vanishes"""
