"""Exception types shared across the package.

Plain argument misuse (wrong types, out-of-range scalars) raises the usual
``ValueError``; the classes below mark domain failures that callers may want
to catch selectively, and that the command-line front end turns into clean
nonzero exits.
"""


class SpopoError(Exception):
    """Base class for every domain error raised by this package."""


class GridSupportError(SpopoError):
    """A spectral grid is too narrow to support a requested envelope."""


class GridMismatchError(SpopoError):
    """Two objects that must share a frequency grid do not."""


class DecompositionError(SpopoError):
    """Kernel decomposition failed to converge or failed verification."""


class CavityModelError(SpopoError):
    """Cavity parameters outside the validity range of the low-loss model."""


class AboveThresholdError(SpopoError):
    """Pump at or above oscillation threshold; only the below-threshold
    regime is modeled."""


class InversionError(SpopoError):
    """Undoing the detection-efficiency correction produced a non-positive
    variance, i.e. the (variance, efficiency) pair is inconsistent."""


class FitError(SpopoError):
    """Variance-curve fit failed to converge from every starting point."""

    def __init__(self, message: str, best_residual: float | None = None):
        if best_residual is not None:
            message = f"{message} (best residual {best_residual:.3e})"
        super().__init__(message)
        self.best_residual = best_residual


class TraceFormatError(SpopoError):
    """A trace file is malformed; carries the byte offset of the problem."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class ConfigError(SpopoError):
    """Configuration problem, reported with file and key context."""
