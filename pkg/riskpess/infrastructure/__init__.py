"""Infrastructure layer: configuration, logging, errors, validation, metrics."""

from .config import Config
from .error_handler import ErrorCode, ErrorHandler, ErrorResponse, RiskPessError
from .logger import StructuredLogger, create_logger
from .metrics import MetricsCollector
from .validator import DataValidator, ValidationResult

__all__ = [
    "Config",
    "DataValidator",
    "ErrorCode",
    "ErrorHandler",
    "ErrorResponse",
    "MetricsCollector",
    "RiskPessError",
    "StructuredLogger",
    "ValidationResult",
    "create_logger",
]
