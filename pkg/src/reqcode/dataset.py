"""Dataset IO: one Problem per JSON line.

The schema is a superset able to encode function-level and stdio benchmarks
with category-tagged ground-truth tests:

    {"task_id": str, "mode": "function"|"stdio", "description": str,
     "entry_point"?: str, "canonical_solution"?: str,
     "limits"?: {"timeout_s"?: num, "memory_mb"?: int},
     "gt_tests": [{"test_id": str, "category": str, "kind": str, "payload": {...}}]}
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .errors import SchemaError
from .model import (
    DEFAULT_MEMORY_MB,
    DEFAULT_TIMEOUT_S,
    GeneratedTest,
    Mode,
    Problem,
    ResourceLimits,
    TestKind,
    normalize_category,
    validate_problem,
)

log = logging.getLogger(__name__)


def _test_from_entry(entry: dict) -> GeneratedTest:
    kind = TestKind(entry["kind"])
    payload = entry.get("payload", {}) or {}
    return GeneratedTest(
        test_id=entry["test_id"],
        category=normalize_category(entry["category"]),
        kind=kind,
        assertion_code=payload.get("assertion_code"),
        input=payload.get("input"),
        expected_output=payload.get("expected_output"),
        expected_stderr_substring=payload.get("expected_stderr_substring"),
        cc_limit=payload.get("cc_limit"),
        comment=entry.get("comment"),
    )


def problem_from_dict(data: dict) -> Problem:
    mode = Mode(data["mode"])
    limits_entry = data.get("limits") or {}
    limits = ResourceLimits(
        timeout_s=float(limits_entry.get("timeout_s", DEFAULT_TIMEOUT_S[mode])),
        memory_mb=int(limits_entry.get("memory_mb", DEFAULT_MEMORY_MB)),
    )
    problem = Problem(
        task_id=data["task_id"],
        mode=mode,
        description=data["description"],
        entry_point=data.get("entry_point"),
        canonical_solution=data.get("canonical_solution"),
        gt_tests=tuple(_test_from_entry(t) for t in data.get("gt_tests", [])),
        limits=limits,
    )
    violations = validate_problem(problem)
    if violations:
        raise ValueError("; ".join(violations))
    return problem


def load_dataset(path: Path | str) -> list[Problem]:
    """Load a JSONL dataset; raises SchemaError naming the offending line."""
    path = Path(path)
    problems: list[Problem] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line_no) from exc
            try:
                problem = problem_from_dict(data)
            except (KeyError, ValueError, TypeError) as exc:
                raise SchemaError(str(exc) or repr(exc), line_no) from exc
            if problem.task_id in seen:
                raise SchemaError(f"duplicate task_id: {problem.task_id}", line_no)
            seen.add(problem.task_id)
            problems.append(problem)
    if not problems:
        log.warning("dataset %s is empty", path)
    return problems
