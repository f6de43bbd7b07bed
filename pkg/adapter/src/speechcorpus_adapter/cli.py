"""Command-line entry point: ``speechcorpus-adapter [options]``."""

from __future__ import annotations

import argparse
import logging

import uvicorn

from .app import create_app
from .config import CAPABILITIES, STUB, AdapterConfig


def _parse_model_spec(specs: list[str]) -> dict[str, str]:
    models = {cap: STUB for cap in CAPABILITIES}
    for spec in specs:
        capability, _, identifier = spec.partition("=")
        if not identifier or capability not in CAPABILITIES:
            raise argparse.ArgumentTypeError(
                f"expected CAPABILITY=MODEL with capability in {CAPABILITIES}, got {spec!r}"
            )
        models[capability] = identifier
    return models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechcorpus-adapter",
        description="Serve inference models over the speechcorpus provider protocol",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8322)
    parser.add_argument(
        "--max-concurrent",
        type=int,
        default=4,
        help="requests served at once; extra requests get 503 + Retry-After",
    )
    parser.add_argument("--device", default="cpu", help="device hint passed to model loaders")
    parser.add_argument(
        "--model",
        action="append",
        default=[],
        metavar="CAPABILITY=MODEL",
        help=f"model identifier per capability (default: all '{STUB}'); repeatable",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    try:
        config = AdapterConfig(
            host=args.host,
            port=args.port,
            max_concurrent=args.max_concurrent,
            device=args.device,
            models=_parse_model_spec(args.model),
        )
    except (ValueError, argparse.ArgumentTypeError) as exc:
        build_parser().error(str(exc))
        return 2  # unreachable; error() exits
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
