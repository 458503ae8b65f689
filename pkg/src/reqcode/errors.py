"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class ReqcodeError(Exception):
    """Base class for all harness errors."""


class UnknownCategory(ReqcodeError):
    """A heading or label could not be mapped to a requirement category."""


class MissingContext(ReqcodeError):
    """A prompt stage requires context (requirements/tests) that was not supplied."""


class EmptyTargets(ReqcodeError):
    """Plug-and-play preference control needs at least one target category."""


class ProviderUnavailable(ReqcodeError):
    """The completion provider stayed unreachable after retry exhaustion."""


class InvalidRequest(ReqcodeError):
    """The provider rejected the request as malformed; retrying is pointless."""


class BudgetExceeded(ReqcodeError):
    """A configured call/token budget would be crossed by the next request."""


class MissingFixture(ReqcodeError):
    """The mock provider has no fixture for the requested (task, stage, index)."""


class EmptyRun(ReqcodeError):
    """A run record holds no per-problem data to aggregate."""


class EmptyCode(ReqcodeError):
    """Code extraction produced a blank result."""


class RunnerUnavailable(ReqcodeError):
    """The sandbox runner failed at the protocol level (not a candidate failure)."""

    def __init__(self, message: str, partial=None, failed_rows=None):
        super().__init__(message)
        self.partial = partial
        self.failed_rows = tuple(failed_rows or ())


class EmptyPool(ReqcodeError):
    """Ranking was asked to select from an empty candidate pool."""


class DomainError(ReqcodeError):
    """An estimator was called outside its mathematical domain."""


class MissingCategoryTests(ReqcodeError):
    """The dataset has no ground-truth tests for the requested category."""


class MissingGroundTruth(ReqcodeError):
    """Quality control needs a canonical solution the problem does not carry."""


class SchemaError(ReqcodeError):
    """A dataset line does not match the problem schema."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ConfigError(ReqcodeError):
    """A run configuration file or flag set is invalid."""
