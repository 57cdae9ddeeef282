"""Exception hierarchy shared by every module of the package."""


class DendriticError(Exception):
    """Base class for all package errors."""


class DomainError(DendriticError, ValueError):
    """An argument lies outside the domain of an operation."""


class AssemblyError(DendriticError, ValueError):
    """Topologies cannot be combined into one simulation cell."""


class SolverError(DendriticError, RuntimeError):
    """The nodal system cannot be solved."""

    def __init__(self, message, component=None, time=None):
        if time is not None:
            message = f"t={time:.6g} s: {message}"
        super().__init__(message)
        self.component = component
        self.time = time


class ConvergenceError(SolverError):
    """The DC fixed-point iteration did not reach tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class StepError(DendriticError, ValueError):
    """A doping step violates the explicit stability contract."""


class ExtractionError(DendriticError, ValueError):
    """A sequence trace is missing a READ or REST record."""


class ConfigError(DendriticError, ValueError):
    """Malformed or semantically invalid configuration."""

    def __init__(self, message, line=None, column=None, field=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}, column {column}")
        if where:
            message = f"{message} ({'; '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column
        self.field = field


class StateFormatError(DendriticError, ValueError):
    """A persisted state/topology file is truncated, corrupt or of another version."""
