"""
Exception hierarchy shared by every photonet module.
The CLI maps each family to its own exit code (see cli.exit_code_for).
"""

from typing import Optional


class PhotonetError(Exception):
    """Base class for all simulator errors."""


class DimensionError(PhotonetError, ValueError):
    """Shape mismatch, non-square input, or non-finite entries."""


class SingularMatrixError(PhotonetError):
    """Condition estimate above the singularity threshold."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class PassivityError(PhotonetError, ValueError):
    """Scattering block with gain (largest singular value above 1)."""

    def __init__(self, message: str, max_singular_value: float):
        super().__init__(message)
        self.max_singular_value = max_singular_value


class ComponentError(PhotonetError, ValueError):
    """Component parameter outside its physical range."""


class SpectrumError(PhotonetError, ValueError):
    """Bad frequency grid, grid mismatch, or bad spectrum normalization."""


class NetlistSyntaxError(PhotonetError):
    """Netlist text that does not follow the grammar."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NetlistValidationError(PhotonetError):
    """Well-formed netlist describing an invalid circuit."""

    def __init__(self, message: str, line: Optional[int] = None, instance: Optional[str] = None):
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if instance is not None:
            prefix.append(f"instance '{instance}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)
        self.line = line
        self.instance = instance
