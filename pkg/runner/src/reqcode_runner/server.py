"""Line-protocol server: one JSON request per line, one JSON response per line.

Request:  {"id", "mode", "source", "tests": [{"test_id", "kind", "payload"}],
           "limits": {"timeout_s", "memory_mb"}, "want_cc"}
Response: {"id", "verdicts": [{"test_id", "status", "wall_ms", "message"}],
           "cc_total", "runner_error"}

stdout carries protocol lines only; candidate output never reaches it
because every test runs in its own child process with captured pipes.
"""

from __future__ import annotations

import json
import sys

from .complexity import compute_cc
from .execute import Limits, Verdict, execute_assertion_test, execute_stdio_test


def handle_request(request: dict) -> dict:
    request_id = request.get("id")
    try:
        source = request["source"]
        tests = request.get("tests", [])
        limits_raw = request.get("limits", {})
        limits = Limits(
            timeout_s=float(limits_raw.get("timeout_s", 5.0)),
            memory_mb=int(limits_raw.get("memory_mb", 256)),
        )
        want_cc = bool(request.get("want_cc", False))
        mode = request.get("mode", "function")
    except (KeyError, TypeError, ValueError) as exc:
        return {
            "id": request_id,
            "verdicts": [],
            "cc_total": None,
            "runner_error": f"malformed request: {exc!r}",
        }

    runner_error = None
    cc_total = None
    if want_cc:
        try:
            cc_total = compute_cc(source).cc_total
        except SyntaxError as exc:
            runner_error = f"source does not parse: {exc}"

    verdicts: list[Verdict] = []
    markers: list[str] = []
    for test in tests:
        test_id = test.get("test_id", f"t{len(verdicts)}")
        kind = test.get("kind")
        payload = test.get("payload", {}) or {}
        if kind == "reliability_marker":
            markers.append(test_id)
        elif kind == "cc_threshold":
            limit = payload.get("cc_limit")
            if cc_total is None:
                verdicts.append(
                    Verdict(test_id, "error", 0, runner_error or "complexity unavailable")
                )
            elif cc_total <= int(limit):
                verdicts.append(Verdict(test_id, "pass", 0, None))
            else:
                verdicts.append(
                    Verdict(test_id, "fail", 0, f"cc_total {cc_total} exceeds limit {limit}")
                )
        elif kind == "assertion":
            verdicts.append(
                execute_assertion_test(source, payload.get("assertion_code", ""), limits, test_id)
            )
        elif kind == "stdio":
            verdicts.append(
                execute_stdio_test(
                    source,
                    payload.get("input", ""),
                    payload.get("expected_output"),
                    payload.get("expected_stderr_substring"),
                    limits,
                    test_id,
                )
            )
        else:
            verdicts.append(Verdict(test_id, "error", 0, f"unknown test kind: {kind!r}"))
    for test_id in markers:  # resolved after every other verdict
        reliable = not any(v.status == "error" for v in verdicts)
        verdicts.append(
            Verdict(
                test_id,
                "pass" if reliable else "fail",
                0,
                None if reliable else "a runtime error occurred in another test",
            )
        )
    return {
        "id": request_id,
        "verdicts": [v.to_wire() for v in verdicts],
        "cc_total": cc_total,
        "runner_error": runner_error,
    }


def serve(stdin=None, stdout=None) -> int:
    """Read requests until stdin closes; echo ids; never write non-protocol bytes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {
                "id": None,
                "verdicts": [],
                "cc_total": None,
                "runner_error": f"malformed request line: {exc}",
            }
        else:
            response = handle_request(request)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
    return 0
