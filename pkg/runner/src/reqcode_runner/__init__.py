"""Sandboxed test runner: fresh-process execution, resource limits, and
cyclomatic complexity, behind a newline-delimited JSON protocol."""

from .complexity import CcReport, compute_cc, select_cc_threshold
from .execute import Limits, Verdict, execute_assertion_test, execute_stdio_test, normalize_output
from .server import handle_request, serve

__version__ = "0.1.0"

__all__ = [
    "CcReport",
    "Limits",
    "Verdict",
    "compute_cc",
    "execute_assertion_test",
    "execute_stdio_test",
    "handle_request",
    "normalize_output",
    "select_cc_threshold",
    "serve",
]
