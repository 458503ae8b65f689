"""Entry point: `reqcode-runner --protocol v1` serves until stdin closes."""

from __future__ import annotations

import argparse
import sys

from .server import serve

SUPPORTED_PROTOCOLS = ("v1",)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="reqcode-runner",
        description="Sandboxed test runner speaking newline-delimited JSON on std streams.",
    )
    parser.add_argument(
        "--protocol",
        required=True,
        help=f"wire protocol version (supported: {', '.join(SUPPORTED_PROTOCOLS)})",
    )
    args = parser.parse_args(argv)
    if args.protocol not in SUPPORTED_PROTOCOLS:
        parser.error(f"unsupported protocol {args.protocol!r}")
    return serve()


if __name__ == "__main__":
    sys.exit(main())
