"""Child-process harness. Runs once per test in a fresh interpreter.

Invoked as: python -I driver.py assertion <source> <result> <assertion>
        or: python -I driver.py stdio     <source> <result>

The candidate's stdout/stderr flow to this process's streams (captured by
the parent); the classification result is written as JSON to the result
path so it can never be confused with candidate output. This file must
stay import-free beyond the stdlib: it runs outside the package.
"""

import json
import sys


def _block_network():
    # Best-effort: candidates should never open sockets.
    try:
        import socket

        def _deny(*args, **kwargs):
            raise OSError("network access is disabled in the test sandbox")

        socket.socket = _deny
        socket.create_connection = _deny
        socket.socketpair = _deny
        socket.fromfd = _deny
    except Exception:
        pass


def _run_assertion(source: str, assertion: str) -> dict:
    namespace = {"__name__": "__candidate__"}
    try:
        exec(compile(source, "candidate.py", "exec"), namespace)
    except BaseException as exc:
        return {"status": "error", "message": f"load: {type(exc).__name__}: {exc}"}
    try:
        exec(compile(assertion, "test.py", "exec"), namespace)
    except AssertionError as exc:
        return {"status": "fail", "message": str(exc) or "assertion failed"}
    except BaseException as exc:
        return {"status": "error", "message": f"{type(exc).__name__}: {exc}"}
    return {"status": "pass", "message": None}


def _run_stdio(source: str) -> dict:
    namespace = {"__name__": "__main__"}
    try:
        exec(compile(source, "candidate.py", "exec"), namespace)
    except SystemExit:
        pass  # graceful termination, not a crash
    except BaseException as exc:
        return {"crashed": f"{type(exc).__name__}: {exc}"}
    return {"crashed": None}


def main() -> int:
    mode, source_path, result_path = sys.argv[1:4]
    with open(source_path, encoding="utf-8") as fh:
        source = fh.read()
    _block_network()
    if mode == "assertion":
        with open(sys.argv[4], encoding="utf-8") as fh:
            assertion = fh.read()
        result = _run_assertion(source, assertion)
    else:
        result = _run_stdio(source)
    with open(result_path, "w", encoding="utf-8") as fh:
        json.dump(result, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
