"""Unified error handling.

Every failure the package raises on purpose derives from ``RiskPessError`` and
carries an ``ErrorCode``. ``ErrorHandler`` turns any exception (ours, pydantic
validation errors, JSON decode errors, missing files) into a structured
``ErrorResponse`` with the process exit code the CLI should use.
"""

from __future__ import annotations

import json
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class ErrorCode(str, Enum):
    """Machine-readable error codes."""

    # Input errors
    VALIDATION_ERROR = "VALIDATION_ERROR"
    INVALID_INPUT = "INVALID_INPUT"
    FILE_NOT_FOUND = "FILE_NOT_FOUND"
    CONFIGURATION_ERROR = "CONFIGURATION_ERROR"

    # Domain errors
    NOT_LIPSCHITZ = "NOT_LIPSCHITZ"
    MISSING_MODEL = "MISSING_MODEL"
    MISSING_DR_BIAS = "MISSING_DR_BIAS"
    INVALID_CDF = "INVALID_CDF"
    GUARD_EXCEEDED = "GUARD_EXCEEDED"

    # System errors
    INTERNAL_ERROR = "INTERNAL_ERROR"


# Codes that mean "the caller gave us something unusable".
_VALIDATION_CODES = {
    ErrorCode.VALIDATION_ERROR,
    ErrorCode.INVALID_INPUT,
    ErrorCode.FILE_NOT_FOUND,
    ErrorCode.CONFIGURATION_ERROR,
    ErrorCode.NOT_LIPSCHITZ,
    ErrorCode.MISSING_MODEL,
    ErrorCode.MISSING_DR_BIAS,
    ErrorCode.GUARD_EXCEEDED,
}


class RiskPessError(Exception):
    """Base class of all errors raised deliberately by this package."""

    code: ErrorCode = ErrorCode.INTERNAL_ERROR

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class InputValidationError(RiskPessError, ValueError):
    """Malformed input data (spec files, datasets, policies, parameters)."""

    code = ErrorCode.VALIDATION_ERROR

    def __init__(self, message: str, errors: Optional[list] = None, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if errors:
            details["errors"] = list(errors)
        super().__init__(message, details)
        self.errors = list(errors or [])


class ConfigurationError(RiskPessError, ValueError):
    """A command or experiment was configured inconsistently."""

    code = ErrorCode.CONFIGURATION_ERROR


class NotLipschitzError(RiskPessError, ValueError):
    """The risk functional has no finite sup-norm Lipschitz constant."""

    code = ErrorCode.NOT_LIPSCHITZ


class MissingModelError(RiskPessError, ValueError):
    """The doubly robust estimator was requested without a conditional CDF model."""

    code = ErrorCode.MISSING_MODEL


class MissingBiasError(RiskPessError, ValueError):
    """The DR radius needs an explicit model-bias term r_bar."""

    code = ErrorCode.MISSING_DR_BIAS


class InvalidCDFError(RiskPessError, ValueError):
    """A step function violates the CDF preconditions of an operation."""

    code = ErrorCode.INVALID_CDF


class GuardExceededError(RiskPessError, ValueError):
    """A combinatorial search was asked to run past its size guard."""

    code = ErrorCode.GUARD_EXCEEDED


class ErrorResponse(BaseModel):
    """Structured error response.

    Attributes:
        error_code: machine-readable code
        error_message: human readable message
        details: optional debugging details
        run_id: id of the command/experiment run
        exit_code: process exit status the CLI should return
    """

    error_code: str = Field(..., description="Error code")
    error_message: str = Field(..., description="Human readable message")
    details: Optional[Dict[str, Any]] = Field(None, description="Error details")
    run_id: str = Field(..., description="Run id")
    exit_code: int = Field(EXIT_RUNTIME, description="Process exit status")


class ErrorHandler:
    """Classifies exceptions into ``ErrorResponse`` objects."""

    def handle(
        self,
        error: BaseException,
        context: Optional[Dict[str, Any]] = None,
        run_id: str = "unknown",
    ) -> ErrorResponse:
        """Build the structured response for ``error``.

        Args:
            error: the exception that ended the operation
            context: where it happened (e.g. {"command": "learn"})
            run_id: run id for correlation with log lines

        Returns:
            ErrorResponse with the exit code for the CLI
        """
        context = dict(context or {})
        error_type = type(error).__name__

        if isinstance(error, RiskPessError):
            return ErrorResponse(
                error_code=error.code.value,
                error_message=error.message,
                details={"error_type": error_type, **error.details, **context},
                run_id=run_id,
                exit_code=self.exit_code_for(error.code),
            )

        if isinstance(error, PydanticValidationError):
            errors = [
                f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}"
                for e in error.errors()
            ]
            return ErrorResponse(
                error_code=ErrorCode.VALIDATION_ERROR.value,
                error_message="Input validation failed",
                details={"error_type": error_type, "errors": errors, **context},
                run_id=run_id,
                exit_code=EXIT_VALIDATION,
            )

        if isinstance(error, json.JSONDecodeError):
            return ErrorResponse(
                error_code=ErrorCode.INVALID_INPUT.value,
                error_message=f"Malformed JSON at line {error.lineno}, column {error.colno}: {error.msg}",
                details={"error_type": error_type, "line": error.lineno, "column": error.colno, **context},
                run_id=run_id,
                exit_code=EXIT_VALIDATION,
            )

        if isinstance(error, FileNotFoundError):
            path = error.filename or str(error)
            return ErrorResponse(
                error_code=ErrorCode.FILE_NOT_FOUND.value,
                error_message=f"File not found: {path}",
                details={"error_type": error_type, "path": str(path), **context},
                run_id=run_id,
                exit_code=EXIT_VALIDATION,
            )

        return ErrorResponse(
            error_code=ErrorCode.INTERNAL_ERROR.value,
            error_message=f"Unexpected error: {error}",
            details={"error_type": error_type, **context},
            run_id=run_id,
            exit_code=EXIT_RUNTIME,
        )

    @staticmethod
    def exit_code_for(code: ErrorCode) -> int:
        """Exit status for an error code: 2 for validation, 3 for runtime."""
        return EXIT_VALIDATION if code in _VALIDATION_CODES else EXIT_RUNTIME
