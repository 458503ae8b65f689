"""Fresh-process execution of assertion and stdio tests under resource limits."""

from __future__ import annotations

import json
import math
import os
import resource
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

DRIVER_PATH = str(Path(__file__).with_name("driver.py"))
STREAM_TRUNCATE = 8 * 1024  # bytes of candidate output kept in messages
TIMEOUT_GRACE_MS = 500


@dataclass(frozen=True)
class Limits:
    timeout_s: float = 5.0
    memory_mb: int = 256


@dataclass(frozen=True)
class Verdict:
    test_id: str
    status: str  # pass | fail | error | timeout
    wall_ms: int
    message: str | None = None

    def to_wire(self) -> dict:
        return {
            "test_id": self.test_id,
            "status": self.status,
            "wall_ms": self.wall_ms,
            "message": self.message,
        }


def normalize_output(text: str) -> str:
    """Judge convention: trailing whitespace per line and trailing newlines
    are insignificant."""
    return "\n".join(line.rstrip() for line in text.rstrip("\n").splitlines())


def _truncate(text: str) -> str:
    return text if len(text) <= STREAM_TRUNCATE else text[:STREAM_TRUNCATE] + "...[truncated]"


def _set_limits(memory_mb: int):
    def apply():
        limit = memory_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))

    return apply


@dataclass(frozen=True)
class _DriverRun:
    timed_out: bool
    wall_ms: int
    result: dict | None  # None when the child died before reporting
    stdout: str
    stderr: str


def _run_driver(mode: str, source: str, limits: Limits, stdin_text: str = "", assertion: str | None = None) -> _DriverRun:
    with tempfile.TemporaryDirectory(prefix="reqcode-runner-") as workdir:
        work = Path(workdir)
        source_path = work / "source.py"
        source_path.write_text(source, encoding="utf-8")
        result_path = work / "result.json"
        cmd = [sys.executable, "-I", DRIVER_PATH, mode, str(source_path), str(result_path)]
        if assertion is not None:
            assertion_path = work / "assertion.py"
            assertion_path.write_text(assertion, encoding="utf-8")
            cmd.append(str(assertion_path))
        started = time.perf_counter()
        proc = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            cwd=workdir,
            env={"PATH": os.defpath},
            preexec_fn=_set_limits(limits.memory_mb),
        )
        try:
            stdout, stderr = proc.communicate(input=stdin_text, timeout=limits.timeout_s)
            timed_out = False
        except subprocess.TimeoutExpired:
            proc.kill()
            stdout, stderr = proc.communicate()
            timed_out = True
        wall_ms = int((time.perf_counter() - started) * 1000)
        if timed_out:
            wall_ms = max(wall_ms, math.ceil(limits.timeout_s * 1000))
        result = None
        if result_path.exists():
            try:
                result = json.loads(result_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                result = None
        return _DriverRun(
            timed_out=timed_out,
            wall_ms=wall_ms,
            result=result,
            stdout=_truncate(stdout or ""),
            stderr=_truncate(stderr or ""),
        )


def _death_message(run: _DriverRun) -> str:
    if "MemoryError" in run.stderr:
        return "memory"
    tail = run.stderr.strip().splitlines()[-1] if run.stderr.strip() else "process died"
    return tail


def execute_assertion_test(source: str, assertion_code: str, limits: Limits, test_id: str = "t") -> Verdict:
    """Load the source in a fresh process and evaluate one assertion.

    pass = assertion holds; fail = assertion failure; error = any other
    uncaught exception, load-time included; timeout = over the wall budget.
    """
    run = _run_driver("assertion", source, limits, assertion=assertion_code)
    if run.timed_out:
        return Verdict(test_id, "timeout", run.wall_ms, f"no result within {limits.timeout_s}s")
    if run.result is None:
        return Verdict(test_id, "error", run.wall_ms, _death_message(run))
    message = run.result.get("message")
    if message and "MemoryError" in message:
        message = "memory"
    return Verdict(test_id, run.result["status"], run.wall_ms, message)


def execute_stdio_test(
    source: str,
    input_text: str,
    expected_output: str | None,
    expected_stderr_substring: str | None,
    limits: Limits,
    test_id: str = "t",
) -> Verdict:
    """Run the source as a program against stdin and judge its streams."""
    run = _run_driver("stdio", source, limits, stdin_text=input_text)
    if run.timed_out:
        return Verdict(test_id, "timeout", run.wall_ms, f"no result within {limits.timeout_s}s")
    if run.result is None:
        return Verdict(test_id, "error", run.wall_ms, _death_message(run))
    crashed = run.result.get("crashed")
    if crashed:
        if "MemoryError" in crashed:
            crashed = "memory"
        return Verdict(test_id, "error", run.wall_ms, crashed)
    if expected_output is not None and normalize_output(run.stdout) != normalize_output(expected_output):
        return Verdict(test_id, "fail", run.wall_ms, f"stdout mismatch: got {run.stdout[:200]!r}")
    if expected_stderr_substring is not None and expected_stderr_substring not in run.stderr:
        return Verdict(
            test_id,
            "fail",
            run.wall_ms,
            f"stderr is missing the expected substring {expected_stderr_substring!r}",
        )
    return Verdict(test_id, "pass", run.wall_ms, None)
