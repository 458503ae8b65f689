"""In-process runner implementing the RunnerResponse contract.

Deterministic and dependency-free, for tests and offline pipelines. It
executes candidates in the host interpreter with no real isolation, so it
must never see adversarial code; the subprocess runner is the sandboxed
path. Timeouts are enforced by abandoning the worker thread, which is
best-effort only.
"""

from __future__ import annotations

import ast
import io
import math
import sys
import threading
import time
from contextlib import redirect_stderr, redirect_stdout

from .model import TestKind, Verdict, VerdictStatus
from .orchestrate import RunnerClient, RunnerRequest, RunnerResponse, evaluate_reliability


def normalize_output(text: str) -> str:
    """Judge-style comparison form: per-line trailing whitespace and trailing
    newlines are insignificant."""
    return "\n".join(line.rstrip() for line in text.rstrip("\n").splitlines())


# Decision points counted per unit: conditional statements and clauses, loop
# statements, exception handlers, boolean short-circuit operators, conditional
# expressions, and per-clause conditions inside comprehensions.
def _decisions(node: ast.AST) -> int:
    count = 0
    for child in ast.iter_child_nodes(node):
        if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue  # nested defs are their own unit
        if isinstance(child, (ast.If, ast.While, ast.For, ast.AsyncFor, ast.ExceptHandler, ast.IfExp)):
            count += 1
        elif isinstance(child, ast.BoolOp):
            count += len(child.values) - 1
        elif isinstance(child, ast.comprehension):
            count += len(child.ifs)
        elif isinstance(child, ast.Match):
            count += len(child.cases)
        count += _decisions(child)
    return count


def cc_total(source: str) -> int:
    """Summed McCabe complexity: one unit per function, plus a module unit
    when any top-level logic exists outside definitions and imports."""
    tree = ast.parse(source)
    total = 0
    module_logic = False
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            total += 1 + _decisions(node)
    for stmt in tree.body:
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef, ast.Import, ast.ImportFrom)):
            continue
        if isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant) and isinstance(stmt.value.value, str):
            continue  # docstring
        module_logic = True
    if module_logic:
        module_decisions = 0
        for stmt in tree.body:
            if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef)):
                continue
            module_decisions += (
                1
                if isinstance(stmt, (ast.If, ast.While, ast.For, ast.AsyncFor))
                else 0
            ) + _decisions(stmt)
        total += 1 + module_decisions
    return total


class InProcessRunner(RunnerClient):
    """Stub runner: same wire semantics, no subprocesses."""

    def __init__(self):
        self._lock = threading.Lock()  # exec swaps process-global streams

    def run(self, request: RunnerRequest) -> RunnerResponse:
        verdicts: list[Verdict] = []
        runner_error = None
        cc = None
        if request.want_cc:
            try:
                cc = cc_total(request.source)
            except SyntaxError as exc:
                runner_error = f"source does not parse: {exc}"
        markers: list[str] = []
        for test in request.tests:
            if test.kind is TestKind.RELIABILITY_MARKER:
                markers.append(test.test_id)
            elif test.kind is TestKind.CC_THRESHOLD:
                if cc is None:
                    verdicts.append(
                        Verdict(test.test_id, VerdictStatus.ERROR, 0, runner_error or "no cc available")
                    )
                else:
                    ok = cc <= (test.cc_limit or 0)
                    verdicts.append(
                        Verdict(
                            test.test_id,
                            VerdictStatus.PASS if ok else VerdictStatus.FAIL,
                            0,
                            None if ok else f"cc_total {cc} > limit {test.cc_limit}",
                        )
                    )
            elif test.kind is TestKind.ASSERTION:
                verdicts.append(self._run_assertion(request, test))
            elif test.kind is TestKind.STDIO:
                verdicts.append(self._run_stdio(request, test))
        for test_id in markers:  # resolved after all others
            verdicts.append(evaluate_reliability(verdicts, test_id=test_id))
        return RunnerResponse(id=request.id, verdicts=tuple(verdicts), cc_total=cc, runner_error=runner_error)

    def _timed(self, fn, timeout_s: float):
        box: dict = {}

        def target():
            try:
                box["result"] = fn()
            except BaseException as exc:  # candidate code may raise anything
                box["exc"] = exc

        thread = threading.Thread(target=target, daemon=True)
        start = time.perf_counter()
        thread.start()
        thread.join(timeout_s)
        wall_ms = int((time.perf_counter() - start) * 1000)
        if thread.is_alive():
            return None, max(wall_ms, math.ceil(timeout_s * 1000)), True
        if "exc" in box:
            raise box["exc"]
        return box["result"], wall_ms, False

    def _run_assertion(self, request: RunnerRequest, test) -> Verdict:
        def job():
            ns = {"__name__": "__reqcode_candidate__"}
            with redirect_stdout(io.StringIO()), redirect_stderr(io.StringIO()):
                try:
                    exec(compile(request.source, "<candidate>", "exec"), ns)
                except BaseException as exc:
                    return ("error", f"load: {exc!r}")
                try:
                    exec(compile(test.assertion_code, "<test>", "exec"), ns)
                except AssertionError as exc:
                    return ("fail", str(exc) or "assertion failed")
                except BaseException as exc:
                    return ("error", repr(exc))
            return ("pass", None)

        with self._lock:
            try:
                result, wall_ms, timed_out = self._timed(job, request.limits.timeout_s)
            except BaseException as exc:
                return Verdict(test.test_id, VerdictStatus.ERROR, 0, repr(exc))
        if timed_out:
            return Verdict(test.test_id, VerdictStatus.TIMEOUT, wall_ms, "timed out")
        status, message = result
        return Verdict(test.test_id, VerdictStatus(status), wall_ms, message)

    def _run_stdio(self, request: RunnerRequest, test) -> Verdict:
        def job():
            ns = {"__name__": "__main__"}
            out, err = io.StringIO(), io.StringIO()
            old_stdin = sys.stdin
            sys.stdin = io.StringIO(test.input or "")
            try:
                with redirect_stdout(out), redirect_stderr(err):
                    try:
                        exec(compile(request.source, "<candidate>", "exec"), ns)
                    except SystemExit:
                        pass
                    except BaseException as exc:
                        return (f"crash: {exc!r}", out.getvalue(), err.getvalue())
            finally:
                sys.stdin = old_stdin
            return (None, out.getvalue(), err.getvalue())

        with self._lock:
            try:
                result, wall_ms, timed_out = self._timed(job, request.limits.timeout_s)
            except BaseException as exc:
                return Verdict(test.test_id, VerdictStatus.ERROR, 0, repr(exc))
        if timed_out:
            return Verdict(test.test_id, VerdictStatus.TIMEOUT, wall_ms, "timed out")
        crashed, stdout, stderr = result
        if crashed:
            return Verdict(test.test_id, VerdictStatus.ERROR, wall_ms, crashed)
        if test.expected_output is not None and normalize_output(stdout) != normalize_output(
            test.expected_output
        ):
            return Verdict(
                test.test_id,
                VerdictStatus.FAIL,
                wall_ms,
                f"stdout mismatch: got {stdout[:120]!r}",
            )
        if test.expected_stderr_substring is not None and test.expected_stderr_substring not in stderr:
            return Verdict(
                test.test_id,
                VerdictStatus.FAIL,
                wall_ms,
                f"stderr missing expected substring {test.expected_stderr_substring!r}",
            )
        return Verdict(test.test_id, VerdictStatus.PASS, wall_ms, None)
