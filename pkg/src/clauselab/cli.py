"""Command-line entry point: `clauselab --listen HOST:PORT --store DIR`."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clauselab",
        description="Run the clauselab workbench server.")
    parser.add_argument("--listen", metavar="HOST:PORT",
                        help="address to bind (default 127.0.0.1:8080)")
    parser.add_argument("--store", metavar="DIR",
                        help="version store directory (default ./store)")
    parser.add_argument("--config", metavar="FILE",
                        help="TOML configuration file")
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="log requests")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(message)s")
    try:
        config = load_config(args.config, overrides={
            "listen": args.listen, "store": args.store})
    except (OSError, ValueError) as exc:
        print(f"clauselab: {exc}", file=sys.stderr)
        return 2
    serve(config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
