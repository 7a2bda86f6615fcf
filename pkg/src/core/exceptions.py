"""
Custom exceptions for the OccuMotion toolkit.

This module provides a set of exceptions that map to CLI exit codes
and provide consistent error reports across commands.
"""

from typing import Any, Dict, Optional, List
from datetime import datetime, timezone


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_FATAL = 3


class BaseOccuException(Exception):
    """
    Base exception for all OccuMotion exceptions.

    All custom exceptions should inherit from this class so the CLI error
    handler can render them and pick the exit code.
    """

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_FATAL,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code or self.__class__.__name__
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc)
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for JSON output"""
        return {
            "error": {
                "code": self.error_code,
                "message": self.message,
                "exit_code": self.exit_code,
                "details": self.details,
                "timestamp": self.timestamp.isoformat(),
            }
        }


# Usage errors (exit 1)

class ValidationError(BaseOccuException):
    """Raised when input validation fails"""

    def __init__(
        self,
        message: str = "Validation failed",
        field_errors: Optional[List[Dict[str, Any]]] = None,
    ):
        details = {"field_errors": field_errors} if field_errors else {}
        super().__init__(message, EXIT_USAGE, "VALIDATION_ERROR", details)


class ConfigError(ValidationError):
    """Raised when a configuration file cannot be parsed or validated"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path:
            where = f"{path}:{line}: " if line else f"{path}: "
        elif line:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")
        self.error_code = "CONFIG_ERROR"
        if path:
            self.details["path"] = path
        if line:
            self.details["line"] = line
        self.line = line


class UnknownFormatError(ValidationError):
    """Raised when an export or input format is not supported"""

    def __init__(self, fmt: str, supported: List[str]):
        super().__init__(f"Unknown format '{fmt}', expected one of {sorted(supported)}")
        self.error_code = "UNKNOWN_FORMAT"
        self.details["supported"] = sorted(supported)


class MissingReferenceError(ValidationError):
    """Raised when a result refers to a grid or motion that is not available"""

    def __init__(self, kind: str, reference: str):
        super().__init__(f"Missing {kind} reference '{reference}'")
        self.error_code = "MISSING_REFERENCE"
        self.details.update({"kind": kind, "reference": reference})


class EmptySequenceError(ValidationError):
    """Raised when an operation needs more frames or points than given"""

    def __init__(self, message: str = "Sequence is empty", required: Optional[int] = None):
        super().__init__(message)
        self.error_code = "EMPTY_SEQUENCE"
        if required is not None:
            self.details["required"] = required


class DimensionMismatchError(ValidationError):
    """Raised when array shapes disagree with declared metadata"""

    def __init__(self, what: str, expected: Any, actual: Any):
        super().__init__(f"{what}: expected {expected}, got {actual}")
        self.error_code = "DIMENSION_MISMATCH"
        self.details.update({"expected": str(expected), "actual": str(actual)})


# Geometry errors (fatal, exit 3)

class GeometryError(BaseOccuException):
    """Raised when a geometric computation has no valid answer"""

    def __init__(self, message: str, error_code: str = "GEOMETRY_ERROR"):
        super().__init__(message, EXIT_FATAL, error_code)


class InvalidRotationError(GeometryError):
    """Raised when a 6D rotation block cannot be orthonormalized"""

    def __init__(self, message: str = "Degenerate 6D rotation"):
        super().__init__(message, "INVALID_ROTATION")


class DegenerateFacingError(GeometryError):
    """Raised when the facing direction is undefined and no previous yaw exists"""

    def __init__(self, norm: float):
        super().__init__(
            f"Facing direction is degenerate (|right| = {norm:.3g}) and no previous frame is available",
            "DEGENERATE_FACING",
        )
        self.details["norm"] = norm


class NoFreeVoxelError(GeometryError):
    """Raised when a nearest-free-voxel query runs on a fully occupied grid"""

    def __init__(self):
        super().__init__("Grid has no free voxel", "NO_FREE_VOXEL")


class NonFiniteError(GeometryError):
    """Raised when a numeric evaluation returns NaN or infinity"""

    def __init__(self, what: str):
        super().__init__(f"Non-finite value in {what}", "NON_FINITE")


# Format and pipeline errors

class GridFormatError(BaseOccuException):
    """Raised when a grid or SDF file is malformed"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, EXIT_FATAL, "GRID_FORMAT_ERROR")
        if path:
            self.details["path"] = path


class MotionFormatError(BaseOccuException):
    """Raised when a motion file is malformed"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, EXIT_FATAL, "MOTION_FORMAT_ERROR")
        if path:
            self.details["path"] = path


class PolicyError(BaseOccuException):
    """Raised when a policy fails during a rollout"""

    def __init__(self, frame: int, cause: Exception):
        super().__init__(f"Policy failed at frame {frame}: {cause}", EXIT_FATAL, "POLICY_ERROR")
        self.frame = frame
        self.details["frame"] = frame


class BatchError(BaseOccuException):
    """Raised when every item of a batch failed"""

    def __init__(self, failed: int, total: int):
        super().__init__(f"{failed} of {total} items failed", EXIT_FATAL, "BATCH_ERROR")
        self.details.update({"failed": failed, "total": total})
