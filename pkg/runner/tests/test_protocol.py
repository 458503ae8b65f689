from __future__ import annotations

import json
import subprocess
import sys

import pytest

from reqcode_runner.server import handle_request


def _request(tests, source="def f(x):\n    return x + 1\n", want_cc=False, mode="function"):
    return {
        "id": "req-1",
        "mode": mode,
        "source": source,
        "tests": tests,
        "limits": {"timeout_s": 5.0, "memory_mb": 256},
        "want_cc": want_cc,
    }


def _assertion(test_id, code):
    return {"test_id": test_id, "kind": "assertion", "payload": {"assertion_code": code}}


def test_two_tests_two_verdicts_same_id():
    response = handle_request(
        _request([_assertion("a", "assert f(1) == 2"), _assertion("b", "assert f(2) == 3")])
    )
    assert response["id"] == "req-1"
    assert [v["test_id"] for v in response["verdicts"]] == ["a", "b"]
    assert [v["status"] for v in response["verdicts"]] == ["pass", "pass"]


def test_want_cc_reports_total():
    response = handle_request(
        _request(
            [{"test_id": "m", "kind": "cc_threshold", "payload": {"cc_limit": 5}}],
            want_cc=True,
        )
    )
    assert response["cc_total"] == 1
    assert response["verdicts"][0]["status"] == "pass"
    assert response["runner_error"] is None


def test_unparseable_source_with_want_cc():
    response = handle_request(
        _request(
            [{"test_id": "m", "kind": "cc_threshold", "payload": {"cc_limit": 5}}],
            source="def broken(:\n    pass\n",
            want_cc=True,
        )
    )
    assert response["cc_total"] is None
    assert response["verdicts"][0]["status"] == "error"
    assert "does not parse" in response["runner_error"]


def test_cc_over_limit_fails():
    source = (
        "def f(x):\n"
        "    if x == 1:\n        return 1\n"
        "    if x == 2:\n        return 2\n"
        "    if x == 3:\n        return 3\n"
        "    return 0\n"
    )
    response = handle_request(
        _request(
            [{"test_id": "m", "kind": "cc_threshold", "payload": {"cc_limit": 3}}],
            source=source,
            want_cc=True,
        )
    )
    assert response["cc_total"] == 4
    assert response["verdicts"][0]["status"] == "fail"


def test_reliability_marker_resolved_last():
    response = handle_request(
        _request(
            [
                {"test_id": "rel", "kind": "reliability_marker", "payload": {}},
                _assertion("a", "assert f(1) == 99"),
                _assertion("b", "assert f('x') == 0"),
            ]
        )
    )
    by_id = {v["test_id"]: v["status"] for v in response["verdicts"]}
    assert by_id["a"] == "fail"
    assert by_id["b"] == "error"
    assert by_id["rel"] == "fail"
    assert response["verdicts"][-1]["test_id"] == "rel"


def test_unknown_kind_is_an_error_verdict():
    response = handle_request(_request([{"test_id": "x", "kind": "mystery", "payload": {}}]))
    assert response["verdicts"][0]["status"] == "error"


# --- end-to-end over the std streams ------------------------------------------------


@pytest.fixture()
def runner_proc():
    proc = subprocess.Popen(
        [sys.executable, "-m", "reqcode_runner", "--protocol", "v1"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        bufsize=1,
    )
    yield proc
    proc.stdin.close()
    proc.wait(timeout=10)


def _round_trip(proc, request):
    proc.stdin.write(json.dumps(request) + "\n")
    proc.stdin.flush()
    return json.loads(proc.stdout.readline())


def test_serve_round_trip_and_id_echo(runner_proc):
    response = _round_trip(runner_proc, _request([_assertion("a", "assert f(0) == 1")]))
    assert response["id"] == "req-1"
    assert response["verdicts"][0]["status"] == "pass"


def test_serve_multiple_requests_one_line_each(runner_proc):
    for i in range(3):
        request = _request([_assertion("a", f"assert f({i}) == {i + 1}")])
        request["id"] = f"seq-{i}"
        response = _round_trip(runner_proc, request)
        assert response["id"] == f"seq-{i}"


def test_serve_stdout_carries_protocol_only(runner_proc):
    # a candidate that prints must not be able to corrupt the protocol stream
    noisy = "print('NOISE')\n\ndef f(x):\n    print('more noise')\n    return x + 1\n"
    response = _round_trip(runner_proc, _request([_assertion("a", "assert f(1) == 2")], source=noisy))
    assert response["verdicts"][0]["status"] == "pass"
    assert "NOISE" not in json.dumps(response)


def test_serve_malformed_line_reports_runner_error(runner_proc):
    runner_proc.stdin.write("{this is not json}\n")
    runner_proc.stdin.flush()
    response = json.loads(runner_proc.stdout.readline())
    assert response["id"] is None
    assert "malformed" in response["runner_error"]
    # the stream stays usable afterwards
    response = _round_trip(runner_proc, _request([_assertion("a", "assert f(1) == 2")]))
    assert response["id"] == "req-1"


def test_protocol_flag_is_validated():
    proc = subprocess.run(
        [sys.executable, "-m", "reqcode_runner", "--protocol", "v999"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "unsupported protocol" in proc.stderr
