"""
Centralized error handling for CLI commands.
"""

import json
import logging
import sys
import traceback
from typing import Any, Callable, Dict, Optional, TextIO

from core.exceptions import EXIT_FATAL, EXIT_USAGE, BaseOccuException

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Raised by the argument parser instead of exiting"""


def error_report(
    error_code: str,
    message: str,
    exit_code: int,
    details: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    report: Dict[str, Any] = {"error": {"code": error_code, "message": message, "exit_code": exit_code}}
    if details:
        report["error"]["details"] = details
    return report


def handle_command(
    command: Callable[[], int],
    debug: bool = False,
    stream: Optional[TextIO] = None,
) -> int:
    """
    Run a command and turn any exception into a JSON error on `stream`
    (stderr by default) and an exit code.
    """
    stream = stream or sys.stderr
    try:
        return command()

    except BaseOccuException as exc:
        logger.warning(f"{exc.error_code}: {exc.message}")
        report = exc.to_dict()

    except UsageError as exc:
        logger.warning(f"Usage error: {exc}")
        report = error_report("USAGE_ERROR", str(exc), EXIT_USAGE)

    except Exception as exc:
        logger.error(f"Unexpected error: {exc}", exc_info=True)
        details = {"type": type(exc).__name__}
        if debug:
            details["traceback"] = traceback.format_exc()
        report = error_report("INTERNAL_ERROR", str(exc), EXIT_FATAL, details)

    print(json.dumps(report, default=str), file=stream)
    return report["error"]["exit_code"]
