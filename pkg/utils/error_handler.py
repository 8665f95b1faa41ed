"""
Error types, exit codes and the run-level error handler.
"""

import json
import logging
import os
import time
import traceback
from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, Optional


class ErrorSeverity(Enum):
    """Error severity levels."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error categories."""
    CONFIGURATION = "configuration"
    DATA = "data"
    NUMERICAL = "numerical"
    FILE_SYSTEM = "file_system"
    SYSTEM = "system"


EXIT_SUCCESS = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIGURATION = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class BenchError(Exception):
    """Base class of every error raised on purpose by this package."""

    category = ErrorCategory.SYSTEM
    exit_code = EXIT_UNEXPECTED

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = str(path) if path is not None else None
        if self.path:
            message = f"{message} [{self.path}]"
        super().__init__(message)


class ConfigurationError(BenchError, ValueError):
    category = ErrorCategory.CONFIGURATION
    exit_code = EXIT_CONFIGURATION


class DataError(BenchError, ValueError):
    category = ErrorCategory.DATA
    exit_code = EXIT_DATA


class LayoutError(DataError):
    """Invalid joint layout or joint mapping."""


class SequenceFormatError(DataError):
    """Missing, corrupt or inconsistent sequence file."""


class ShapeMismatchError(DataError):
    """Tensors or windows whose shapes do not agree."""


class AlignmentError(DataError):
    """Noisy and clean corpora that cannot be paired frame by frame."""


class RenderError(DataError):
    """Skeleton rendering impossible with the given layout."""


class NumericalError(BenchError, ArithmeticError):
    category = ErrorCategory.NUMERICAL
    exit_code = EXIT_NUMERICAL


class TrainingDivergedError(NumericalError):
    """Raised when the training loss becomes non-finite.

    ``last_finite_epoch`` is the last epoch whose weights were restored into the
    model before raising.
    """

    def __init__(self, message: str, last_finite_epoch: int, path: Optional[str] = None):
        self.last_finite_epoch = last_finite_epoch
        super().__init__(message, path)


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, BenchError):
        return error.exit_code
    return EXIT_UNEXPECTED


class ErrorHandler:
    """Logs errors by severity, keeps statistics and exports an error report."""

    def __init__(self, log_dir: Optional[str] = None):
        self.error_log = []
        self.error_stats: Dict[str, Dict[str, Any]] = {}
        self.error_log_file = os.path.join(log_dir, "error_analysis.json") if log_dir else None

    def handle_error(self, error: Exception, context: Dict[str, Any] = None,
                     category: Optional[ErrorCategory] = None,
                     severity: ErrorSeverity = ErrorSeverity.HIGH) -> Dict[str, Any]:
        """
        Record an error and log it with the level matching its severity.

        Args:
            error: The exception that occurred
            context: Additional context about the error
            category: Error category, taken from the exception when omitted
            severity: Error severity

        Returns:
            Dict with the recorded error info
        """
        if category is None:
            category = getattr(error, "category", ErrorCategory.SYSTEM)

        error_info = {
            'timestamp': time.time(),
            'error_type': type(error).__name__,
            'error_message': str(error),
            'category': category.value,
            'severity': severity.value,
            'exit_code': exit_code_for(error),
            'context': context or {},
            'traceback': traceback.format_exc(),
        }

        self._log_error(error_info)
        self._update_error_stats(error_info)
        self._save_error_history()
        return error_info

    def _log_error(self, error_info: Dict[str, Any]):
        severity = error_info['severity']
        message = f"[{error_info['category'].upper()}] {error_info['error_type']}: {error_info['error_message']}"

        if severity == ErrorSeverity.CRITICAL.value:
            logging.critical(message)
        elif severity == ErrorSeverity.HIGH.value:
            logging.error(message)
        elif severity == ErrorSeverity.MEDIUM.value:
            logging.warning(message)
        else:
            logging.info(message)

        self.error_log.append(error_info)

    def _update_error_stats(self, error_info: Dict[str, Any]):
        error_type = error_info['error_type']
        stats = self.error_stats.setdefault(error_type, {
            'count': 0,
            'categories': {},
            'first_seen': error_info['timestamp'],
            'last_seen': error_info['timestamp'],
        })
        stats['count'] += 1
        stats['last_seen'] = error_info['timestamp']
        category = error_info['category']
        stats['categories'][category] = stats['categories'].get(category, 0) + 1

    def _save_error_history(self):
        if not self.error_log_file:
            return
        try:
            os.makedirs(os.path.dirname(self.error_log_file), exist_ok=True)
            data = {
                'stats': self.error_stats,
                'recent_errors': self.error_log[-100:],
                'last_updated': time.time(),
            }
            with open(self.error_log_file, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2)
        except OSError as e:
            logging.error(f"Could not save error history: {e}")

    def with_error_handling(self, command_name: str) -> Callable:
        """
        Decorator turning a command function into one that returns an exit code.

        The wrapped function returns ``EXIT_SUCCESS`` when the command finishes;
        a raised exception is recorded and converted with ``exit_code_for``.
        """
        def decorator(func):
            @wraps(func)
            def wrapper(*args, **kwargs) -> int:
                try:
                    func(*args, **kwargs)
                    return EXIT_SUCCESS
                except BenchError as e:
                    self.handle_error(e, {'command': command_name})
                    return e.exit_code
                except Exception as e:
                    self.handle_error(e, {'command': command_name},
                                      severity=ErrorSeverity.CRITICAL)
                    return EXIT_UNEXPECTED
            return wrapper
        return decorator
