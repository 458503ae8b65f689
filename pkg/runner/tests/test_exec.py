from __future__ import annotations

from reqcode_runner.execute import (
    Limits,
    execute_assertion_test,
    execute_stdio_test,
    normalize_output,
)

FAST = Limits(timeout_s=5.0, memory_mb=256)

VOWELS = (
    "import sys\n\n"
    "def remove_vowels(text):\n"
    "    if not isinstance(text, str):\n"
    "        sys.stderr.write('Invalid input: text must be a string.')\n"
    "        return None\n"
    "    return ''.join(ch for ch in text if ch.lower() not in 'aeiou')\n"
)


def test_passing_assertion():
    v = execute_assertion_test(VOWELS, "assert remove_vowels('') == ''", FAST)
    assert v.status == "pass"


def test_failing_assertion_is_fail_not_error():
    v = execute_assertion_test(VOWELS, "assert remove_vowels('ab') == 'ab'", FAST)
    assert v.status == "fail"


def test_uncaught_exception_is_error():
    v = execute_assertion_test("def f():\n    return 1 / 0\n", "assert f() == 0", FAST)
    assert v.status == "error"
    assert "ZeroDivisionError" in (v.message or "")


def test_load_time_exception_is_error():
    v = execute_assertion_test("raise RuntimeError('bad import')\n", "assert True", FAST)
    assert v.status == "error"
    assert v.message and v.message.startswith("load:")


def test_syntax_error_is_a_load_error():
    v = execute_assertion_test("def f(:\n    pass\n", "assert True", FAST)
    assert v.status == "error"


def test_timeout_kills_the_process():
    v = execute_assertion_test(
        "def f():\n    while True:\n        pass\n",
        "assert f() == 0",
        Limits(timeout_s=0.5, memory_mb=256),
    )
    assert v.status == "timeout"
    assert v.wall_ms >= 500


def test_memory_limit_maps_to_error_memory():
    v = execute_assertion_test(
        "def f():\n    return bytearray(600 * 1024 * 1024)\n",
        "assert f() is None",
        Limits(timeout_s=5.0, memory_mb=128),
    )
    assert v.status == "error"
    assert v.message == "memory"


def test_robustness_convention_falsy_sentinel_without_raising():
    # invalid input yields None plus a stderr note instead of an exception
    v = execute_assertion_test(VOWELS, "assert remove_vowels(123) == None", FAST)
    assert v.status == "pass"


def test_fresh_process_isolation_under_permutation():
    # a stateful counter would poison a shared interpreter; order must not matter
    source = "calls = 0\n\ndef bump():\n    global calls\n    calls += 1\n    return calls\n"
    assertion = "assert bump() == 1"
    for order in ((1, 2), (2, 1)):
        verdicts = [execute_assertion_test(source, assertion, FAST) for _ in order]
        assert [v.status for v in verdicts] == ["pass", "pass"]


def test_network_access_is_refused():
    source = (
        "import socket\n\n"
        "def probe():\n"
        "    try:\n"
        "        socket.socket()\n"
        "    except OSError:\n"
        "        return 'blocked'\n"
        "    return 'open'\n"
    )
    v = execute_assertion_test(source, "assert probe() == 'blocked'", FAST)
    assert v.status == "pass"


ECHO_SUM = (
    "import sys\n"
    "values = sys.stdin.read().split()\n"
    "print(sum(int(v) for v in values))\n"
)


def test_stdio_pass():
    v = execute_stdio_test(ECHO_SUM, "1 2 3\n", "6", None, Limits(timeout_s=2.0))
    assert v.status == "pass"


def test_stdio_trailing_newline_normalization():
    v = execute_stdio_test("print(18)\n", "", "18\n", None, Limits(timeout_s=2.0))
    assert v.status == "pass"
    assert normalize_output("18\n") == normalize_output("18")


def test_stdio_wrong_output_fails():
    v = execute_stdio_test(ECHO_SUM, "1 2 3\n", "7", None, Limits(timeout_s=2.0))
    assert v.status == "fail"


def test_stdio_crash_is_error():
    v = execute_stdio_test("raise ValueError('boom')\n", "", "x", None, Limits(timeout_s=2.0))
    assert v.status == "error"


def test_stdio_graceful_exit_is_not_a_crash():
    source = "import sys\nsys.stderr.write('invalid grid')\nsys.exit()\n"
    v = execute_stdio_test(source, "", None, "invalid grid", Limits(timeout_s=2.0))
    assert v.status == "pass"


def test_stdio_stderr_substring_must_appear():
    v = execute_stdio_test("print('ok')\n", "", None, "missing marker", Limits(timeout_s=2.0))
    assert v.status == "fail"


def test_stdio_multiline_output_normalization():
    source = "print('a  ')\nprint('b')\nprint()\n"
    v = execute_stdio_test(source, "", "a\nb", None, Limits(timeout_s=2.0))
    assert v.status == "pass"
