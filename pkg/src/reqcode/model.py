"""Shared domain types: problems, requirement categories, tests, and verdicts.

Everything here is an immutable value object; instances are safe to share
across concurrent pipeline workers.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum

from .errors import UnknownCategory

log = logging.getLogger(__name__)


class Mode(str, Enum):
    """How a candidate is exercised: as a callable or as a stdin/stdout program."""

    FUNCTION = "function"
    STDIO = "stdio"


class Category(str, Enum):
    """The closed requirement-category vocabulary.

    ``fr_general`` covers both input/output-condition and expected-behavior
    checks: generated test documents carry a single "General Cases" heading
    for both.
    """

    FR_GENERAL = "fr_general"
    FR_EDGE = "fr_edge"
    NFR_TIME = "nfr_time"
    NFR_ROBUSTNESS = "nfr_robustness"
    NFR_MAINTAINABILITY = "nfr_maintainability"
    NFR_RELIABILITY = "nfr_reliability"


NFR_CATEGORIES = frozenset(
    {
        Category.NFR_TIME,
        Category.NFR_ROBUSTNESS,
        Category.NFR_MAINTAINABILITY,
        Category.NFR_RELIABILITY,
    }
)

FR_CATEGORIES = frozenset({Category.FR_GENERAL, Category.FR_EDGE})


class TestKind(str, Enum):
    __test__ = False  # keep pytest from collecting this as a test class

    ASSERTION = "assertion"
    STDIO = "stdio"
    CC_THRESHOLD = "cc_threshold"
    RELIABILITY_MARKER = "reliability_marker"


class VerdictStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"
    TIMEOUT = "timeout"


DEFAULT_TIMEOUT_S = {Mode.FUNCTION: 5.0, Mode.STDIO: 2.0}
DEFAULT_MEMORY_MB = 256


@dataclass(frozen=True)
class ResourceLimits:
    """Wall-clock and memory budget for one test execution."""

    timeout_s: float
    memory_mb: int = DEFAULT_MEMORY_MB

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError(f"timeout_s must be positive, got {self.timeout_s}")
        if self.memory_mb <= 0:
            raise ValueError(f"memory_mb must be positive, got {self.memory_mb}")

    @classmethod
    def default_for(cls, mode: Mode) -> "ResourceLimits":
        return cls(timeout_s=DEFAULT_TIMEOUT_S[Mode(mode)], memory_mb=DEFAULT_MEMORY_MB)


# CC targets commonly seen in generated requirement documents; other values
# are accepted with a warning so non-standard datasets still load.
STANDARD_CC_LIMITS = (5, 10)


@dataclass(frozen=True)
class GeneratedTest:
    """One category-tagged check.

    The payload depends on ``kind``:
      assertion          -> ``assertion_code``
      stdio              -> ``input`` plus ``expected_output`` and/or
                            ``expected_stderr_substring``
      cc_threshold       -> ``cc_limit``
      reliability_marker -> empty (derived from the other verdicts)
    """

    test_id: str
    category: Category
    kind: TestKind
    assertion_code: str | None = None
    input: str | None = None
    expected_output: str | None = None
    expected_stderr_substring: str | None = None
    cc_limit: int | None = None
    comment: str | None = None

    def __post_init__(self):
        if self.kind is TestKind.CC_THRESHOLD:
            if self.category is not Category.NFR_MAINTAINABILITY:
                raise ValueError("cc_threshold tests must be nfr_maintainability")
            if self.cc_limit is None:
                raise ValueError("cc_threshold tests need cc_limit")
            if self.cc_limit not in STANDARD_CC_LIMITS:
                log.warning(
                    "test %s: non-standard cc_limit %d (expected one of %s)",
                    self.test_id,
                    self.cc_limit,
                    STANDARD_CC_LIMITS,
                )
        elif self.kind is TestKind.RELIABILITY_MARKER:
            if self.category is not Category.NFR_RELIABILITY:
                raise ValueError("reliability_marker tests must be nfr_reliability")
            if any(
                v is not None
                for v in (
                    self.assertion_code,
                    self.input,
                    self.expected_output,
                    self.expected_stderr_substring,
                    self.cc_limit,
                )
            ):
                raise ValueError("reliability_marker tests carry no payload")
        elif self.kind is TestKind.ASSERTION:
            if not self.assertion_code:
                raise ValueError("assertion tests need assertion_code")
        elif self.kind is TestKind.STDIO:
            if self.input is None:
                raise ValueError("stdio tests need input")
            if self.expected_output is None and self.expected_stderr_substring is None:
                raise ValueError("stdio tests need an output or stderr expectation")

    @property
    def executable(self) -> bool:
        """True when the check runs candidate code (assertion/stdio)."""
        return self.kind in (TestKind.ASSERTION, TestKind.STDIO)


@dataclass(frozen=True)
class Problem:
    """One benchmark task."""

    task_id: str
    mode: Mode
    description: str
    entry_point: str | None = None
    canonical_solution: str | None = None
    gt_tests: tuple[GeneratedTest, ...] = ()
    limits: ResourceLimits | None = None

    def effective_limits(self) -> ResourceLimits:
        return self.limits if self.limits is not None else ResourceLimits.default_for(self.mode)


@dataclass(frozen=True)
class Provenance:
    provider: str
    params_hash: str


@dataclass(frozen=True)
class CodeCandidate:
    """One generated program plus where it came from."""

    task_id: str
    sample_index: int
    source: str
    reasoning: str | None = None
    provenance: Provenance | None = None

    def __post_init__(self):
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")


@dataclass(frozen=True)
class RequirementSet:
    """Structured requirement document with six category buckets.

    ``raw`` preserves the verbatim generated document; the buckets hold the
    per-heading bullet texts.
    """

    io_conditions: tuple[str, ...] = ()
    expected_behavior: tuple[str, ...] = ()
    edge_cases: tuple[str, ...] = ()
    time_performance: tuple[str, ...] = ()
    robustness: tuple[str, ...] = ()
    maintainability: tuple[str, ...] = ()
    reliability: tuple[str, ...] = ()
    problem_agnostic: tuple[str, ...] = ()
    raw: str = ""

    BUCKETS = (
        "problem_agnostic",
        "io_conditions",
        "expected_behavior",
        "edge_cases",
        "time_performance",
        "robustness",
        "reliability",
        "maintainability",
    )

    def buckets(self) -> dict[str, tuple[str, ...]]:
        return {name: getattr(self, name) for name in self.BUCKETS}

    def is_empty(self) -> bool:
        return not any(self.buckets().values())

    def __post_init__(self):
        if not self.raw and not self.is_empty():
            raise ValueError("raw must be non-empty whenever any bucket is non-empty")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one test against one candidate.

    ``status == pass`` is the only status that contributes a 1 to any score.
    """

    test_id: str
    status: VerdictStatus
    wall_ms: int = 0
    message: str | None = None

    def __post_init__(self):
        if self.wall_ms < 0:
            raise ValueError("wall_ms must be >= 0")

    @property
    def passed(self) -> bool:
        return self.status is VerdictStatus.PASS


@dataclass(frozen=True)
class VerdictMatrix:
    """Candidates x tests outcomes, keyed by (sample_index, test_id).

    ``skipped`` lists sample indexes whose row was lost to infrastructure
    failure; they are excluded from scoring instead of being coerced to fail.
    """

    rows: tuple[tuple[int, tuple[Verdict, ...]], ...] = ()
    skipped: tuple[int, ...] = ()

    @classmethod
    def from_dict(
        cls, rows: dict[int, list[Verdict]], skipped: tuple[int, ...] = ()
    ) -> "VerdictMatrix":
        ordered = tuple(
            (idx, tuple(rows[idx])) for idx in sorted(rows)
        )
        return cls(rows=ordered, skipped=tuple(sorted(skipped)))

    def row(self, sample_index: int) -> tuple[Verdict, ...]:
        for idx, verdicts in self.rows:
            if idx == sample_index:
                return verdicts
        raise KeyError(sample_index)

    def sample_indexes(self) -> tuple[int, ...]:
        return tuple(idx for idx, _ in self.rows)

    def validate(self) -> list[str]:
        """Check rectangularity and per-row test uniqueness."""
        problems: list[str] = []
        test_sets = []
        for idx, verdicts in self.rows:
            ids = [v.test_id for v in verdicts]
            if len(ids) != len(set(ids)):
                problems.append(f"row {idx}: duplicate test ids")
            test_sets.append(frozenset(ids))
        if len(set(test_sets)) > 1:
            problems.append("rows cover different test sets (matrix not rectangular)")
        return problems


# Heading/label spellings observed in generated documents, lowercased with
# punctuation squashed. Both requirement-document and test-document headings
# are accepted; input-output and expected-behavior checks land in fr_general.
_CATEGORY_ALIASES: dict[str, Category] = {
    "general cases": Category.FR_GENERAL,
    "general case": Category.FR_GENERAL,
    "general": Category.FR_GENERAL,
    "input output conditions": Category.FR_GENERAL,
    "input output condition": Category.FR_GENERAL,
    "expected behavior": Category.FR_GENERAL,
    "expected behaviour": Category.FR_GENERAL,
    "fr general": Category.FR_GENERAL,
    "edge cases": Category.FR_EDGE,
    "edge case": Category.FR_EDGE,
    "edge": Category.FR_EDGE,
    "fr edge": Category.FR_EDGE,
    "performance requirements": Category.NFR_TIME,
    "performance requirement": Category.NFR_TIME,
    "performance": Category.NFR_TIME,
    "time performance": Category.NFR_TIME,
    "time perf": Category.NFR_TIME,
    "nfr time": Category.NFR_TIME,
    "robustness": Category.NFR_ROBUSTNESS,
    "nfr robustness": Category.NFR_ROBUSTNESS,
    "maintainability": Category.NFR_MAINTAINABILITY,
    "nfr maintainability": Category.NFR_MAINTAINABILITY,
    "reliability": Category.NFR_RELIABILITY,
    "nfr reliability": Category.NFR_RELIABILITY,
}

_SQUASH_RE = re.compile(r"[^a-z0-9]+")


def _squash(label: str) -> str:
    return _SQUASH_RE.sub(" ", label.lower().lstrip("#").strip().lower()).strip()


def normalize_category(label: str) -> Category:
    """Map a heading/label string from a generated document to a Category.

    Case- and whitespace-insensitive; leading markdown hashes are ignored.
    Raises UnknownCategory for unrecognized labels so the caller can decide
    its own fallback.
    """
    key = _squash(label)
    try:
        return _CATEGORY_ALIASES[key]
    except KeyError:
        raise UnknownCategory(f"unrecognized category label: {label!r}") from None


def is_category_label(label: str) -> bool:
    return _squash(label) in _CATEGORY_ALIASES


def validate_problem(p: Problem) -> list[str]:
    """Return violation messages for every broken Problem invariant.

    Violations are data, not exceptions: an empty list means the problem is
    well formed.
    """
    violations: list[str] = []
    if not p.task_id:
        violations.append("task_id must be non-empty")
    if p.mode is Mode.FUNCTION and not p.entry_point:
        violations.append("entry_point required")
    if p.mode is Mode.STDIO and p.entry_point:
        violations.append("entry_point only valid in function mode")
    seen: set[str] = set()
    for t in p.gt_tests:
        if t.test_id in seen:
            violations.append(f"duplicate test_id: {t.test_id}")
        seen.add(t.test_id)
        if t.kind is TestKind.STDIO and p.mode is not Mode.STDIO:
            violations.append(f"stdio test {t.test_id} on a {p.mode.value}-mode problem")
    return violations
