"""Run the sidecar: ``python -m inference_sidecar [--config file] [--port N]``."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .bundle import RealModelBundle
from .config import load_config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="inference-sidecar")
    parser.add_argument("--config", help="JSON config file (env vars still override)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    args = parser.parse_args(argv)
    config = load_config(args.config)
    host = args.host or config.host
    port = args.port or config.port
    app = create_app(config, bundle_loader=lambda: RealModelBundle(config))
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
