"""Exception hierarchy shared by every module of the package."""


class LatticeEnergyError(Exception):
    """Base class for all errors raised by lattice_energy."""


class ValidationError(LatticeEnergyError, ValueError):
    """Input violates a construction invariant (e.g. coincident shifts)."""


class DegenerateLatticeError(ValidationError):
    """Basis matrix is singular or numerically close to singular."""


class UnsupportedDimensionError(LatticeEnergyError, ValueError):
    """Operation is not available in the requested dimension."""


class DomainError(LatticeEnergyError, ValueError):
    """Argument lies outside the domain of an operation."""


class ParseError(LatticeEnergyError, ValueError):
    """Malformed configuration string or JSON document."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ConvergenceError(LatticeEnergyError, ArithmeticError):
    """A requested tolerance cannot be met within the term/radius caps."""


class OptimizationError(LatticeEnergyError, RuntimeError):
    """Local descent failed to converge; carries the best iterate found."""

    def __init__(self, message, best=None, value=None):
        self.best = best
        self.value = value
        super().__init__(message)
