"""Schedules candidate x test executions and derives composite verdicts.

The orchestrator talks to runners through a newline-delimited JSON protocol
(one request line, one response line, ids echoed). Candidate failures are
verdicts; infrastructure failures are RunnerUnavailable and the affected row
is excluded from scoring rather than coerced to fail.
"""

from __future__ import annotations

import itertools
import json
import logging
import queue
import subprocess
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace

from .errors import RunnerUnavailable
from .model import (
    CodeCandidate,
    GeneratedTest,
    Mode,
    ResourceLimits,
    TestKind,
    Verdict,
    VerdictMatrix,
    VerdictStatus,
)
from .parsing import GENERATED_CODE_PLACEHOLDER, substitute_candidate

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "v1"
TIMEOUT_GRACE_MS = 500

_request_counter = itertools.count()


def wire_test(test: GeneratedTest) -> dict:
    if test.kind is TestKind.ASSERTION:
        payload = {"assertion_code": test.assertion_code}
    elif test.kind is TestKind.STDIO:
        payload = {
            "input": test.input,
            "expected_output": test.expected_output,
            "expected_stderr_substring": test.expected_stderr_substring,
        }
    elif test.kind is TestKind.CC_THRESHOLD:
        payload = {"cc_limit": test.cc_limit}
    else:
        payload = {}
    return {"test_id": test.test_id, "kind": test.kind.value, "payload": payload}


def verdict_from_wire(data: dict) -> Verdict:
    return Verdict(
        test_id=data["test_id"],
        status=VerdictStatus(data["status"]),
        wall_ms=int(data.get("wall_ms", 0)),
        message=data.get("message"),
    )


@dataclass(frozen=True)
class RunnerRequest:
    """One candidate row: the source plus every test to resolve against it."""

    id: str
    mode: Mode
    source: str
    tests: tuple[GeneratedTest, ...]
    limits: ResourceLimits
    want_cc: bool

    def __post_init__(self):
        has_cc = any(t.kind is TestKind.CC_THRESHOLD for t in self.tests)
        if has_cc != self.want_cc:
            raise ValueError("want_cc must be set iff a cc_threshold test is present")

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "mode": self.mode.value,
            "source": self.source,
            "tests": [wire_test(t) for t in self.tests],
            "limits": {"timeout_s": self.limits.timeout_s, "memory_mb": self.limits.memory_mb},
            "want_cc": self.want_cc,
        }


@dataclass(frozen=True)
class RunnerResponse:
    id: str
    verdicts: tuple[Verdict, ...]
    cc_total: int | None = None
    runner_error: str | None = None

    @classmethod
    def from_wire(cls, data: dict) -> "RunnerResponse":
        return cls(
            id=data.get("id", ""),
            verdicts=tuple(verdict_from_wire(v) for v in data.get("verdicts", [])),
            cc_total=data.get("cc_total"),
            runner_error=data.get("runner_error"),
        )


class RunnerClient:
    """One request in, one response out; implementations own their transport."""

    def run(self, request: RunnerRequest) -> RunnerResponse:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


DEFAULT_RUNNER_CMD = (sys.executable, "-m", "reqcode_runner", "--protocol", PROTOCOL_VERSION)


class SubprocessRunnerPool(RunnerClient):
    """Pool of runner processes speaking the line protocol over std streams.

    Each runner handles one request at a time; requests fan out across the
    pool. A protocol violation kills the offending process and surfaces as
    RunnerUnavailable.
    """

    def __init__(self, cmd: tuple[str, ...] | list[str] = DEFAULT_RUNNER_CMD, size: int = 1):
        self.cmd = tuple(cmd)
        self.size = max(1, size)
        # Each queue entry is a worker slot: a live process, or None meaning
        # "spawn on demand". Dead workers free their slot, so waiters can
        # never deadlock on a discarded process.
        self._slots: queue.Queue = queue.Queue()
        for _ in range(self.size):
            self._slots.put(None)
        self._closed = False

    def _spawn(self) -> subprocess.Popen:
        try:
            return subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise RunnerUnavailable(f"cannot launch runner {self.cmd}: {exc}") from exc

    def _acquire(self) -> subprocess.Popen:
        if self._closed:
            raise RunnerUnavailable("runner pool is closed")
        slot = self._slots.get()
        if slot is not None:
            return slot
        try:
            return self._spawn()
        except RunnerUnavailable:
            self._slots.put(None)  # hand the slot back before failing
            raise

    def _discard(self, proc: subprocess.Popen):
        try:
            proc.kill()
        except OSError:
            pass
        self._slots.put(None)

    def run(self, request: RunnerRequest) -> RunnerResponse:
        proc = self._acquire()
        deadline_s = (
            sum(request.limits.timeout_s for t in request.tests if t.executable) + 30.0
        )
        watchdog = threading.Timer(deadline_s, proc.kill)
        watchdog.start()
        try:
            proc.stdin.write(json.dumps(request.to_wire()) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
            if not line:
                raise RunnerUnavailable("runner closed its stream mid-request")
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RunnerUnavailable(f"runner wrote a non-protocol line: {line[:200]!r}") from exc
            if data.get("id") != request.id:
                raise RunnerUnavailable(
                    f"protocol desync: expected id {request.id!r}, got {data.get('id')!r}"
                )
        except (OSError, ValueError) as exc:
            self._discard(proc)
            raise RunnerUnavailable(f"runner transport failure: {exc}") from exc
        except RunnerUnavailable:
            self._discard(proc)
            raise
        else:
            self._slots.put(proc)
        finally:
            watchdog.cancel()
        return RunnerResponse.from_wire(data)

    def close(self):
        self._closed = True
        procs = []
        for _ in range(self.size):
            try:
                slot = self._slots.get(timeout=5)
            except queue.Empty:
                break
            if slot is not None:
                procs.append(slot)
        for proc in procs:
            try:
                proc.stdin.close()
                proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                proc.kill()


def evaluate_reliability(verdicts, test_id: str = "reliability") -> Verdict:
    """Derived verdict: pass iff no runtime error occurred anywhere in the row.

    Wrong outputs (fail) and timeouts do not count as errors; only
    status=error does.
    """
    ok = not any(v.status is VerdictStatus.ERROR for v in verdicts)
    return Verdict(
        test_id=test_id,
        status=VerdictStatus.PASS if ok else VerdictStatus.FAIL,
        wall_ms=0,
        message=None if ok else "a runtime error occurred in another test",
    )


def run_candidate(
    candidate: CodeCandidate,
    tests,
    limits: ResourceLimits,
    runner: RunnerClient,
    mode: Mode,
) -> list[Verdict]:
    """Resolve every test against one candidate, composites included.

    Assertion placeholders are substituted with the candidate source before
    dispatch; reliability markers are resolved last from the other verdicts.
    """
    tests = list(tests)
    if not tests:
        raise ValueError("tests must be non-empty")
    prepared: list[GeneratedTest] = []
    markers: list[GeneratedTest] = []
    for t in tests:
        if t.kind is TestKind.RELIABILITY_MARKER:
            markers.append(t)
            continue
        if t.kind is TestKind.ASSERTION and GENERATED_CODE_PLACEHOLDER in (t.assertion_code or ""):
            t = replace(t, assertion_code=substitute_candidate(t, candidate))
        prepared.append(t)
    want_cc = any(t.kind is TestKind.CC_THRESHOLD for t in prepared)
    request = RunnerRequest(
        id=f"{candidate.task_id}#{candidate.sample_index}#{next(_request_counter)}",
        mode=mode,
        source=candidate.source,
        tests=tuple(prepared),
        limits=limits,
        want_cc=want_cc,
    )
    response = runner.run(request)
    by_id = {v.test_id: v for v in response.verdicts}
    missing = [t.test_id for t in prepared if t.test_id not in by_id]
    if missing:
        detail = response.runner_error or "runner returned an incomplete verdict set"
        raise RunnerUnavailable(f"{detail} (missing: {missing})")
    resolved = [by_id[t.test_id] for t in prepared]
    out: list[Verdict] = []
    it = iter(resolved)
    for t in tests:
        if t.kind is TestKind.RELIABILITY_MARKER:
            out.append(evaluate_reliability(resolved, test_id=t.test_id))
        else:
            out.append(next(it))
    return out


def run_matrix(
    pool,
    tests,
    limits: ResourceLimits,
    runner: RunnerClient,
    mode: Mode,
    parallelism: int = 1,
) -> VerdictMatrix:
    """Run every candidate against the test set.

    The status matrix is independent of scheduling order and parallelism
    level. If any row is lost to infrastructure failure, RunnerUnavailable is
    raised carrying the salvaged partial matrix.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    pool = list(pool)
    if not pool:
        return VerdictMatrix()
    rows: dict[int, list[Verdict]] = {}
    failures: dict[int, str] = {}
    with ThreadPoolExecutor(max_workers=parallelism) as executor:
        futures = {
            executor.submit(run_candidate, cand, tests, limits, runner, mode): cand
            for cand in pool
        }
        for fut in as_completed(futures):
            cand = futures[fut]
            try:
                rows[cand.sample_index] = fut.result()
            except RunnerUnavailable as exc:
                failures[cand.sample_index] = str(exc)
                log.warning("candidate row %d lost to runner failure: %s", cand.sample_index, exc)
    matrix = VerdictMatrix.from_dict(rows, skipped=tuple(failures))
    if failures:
        raise RunnerUnavailable(
            f"{len(failures)} candidate row(s) lost to runner failures",
            partial=matrix,
            failed_rows=sorted(failures),
        )
    return matrix
