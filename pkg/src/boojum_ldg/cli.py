"""Command-line entry point: ``boojum-ldg <subcommand> --config <path>``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from threadpoolctl import threadpool_limits

from .config import ConfigError, load_config, with_overrides
from .pipeline import STAGES, run_pipeline

SUBCOMMANDS = {name: (name,) for name in STAGES}
SUBCOMMANDS["all"] = STAGES


def _threads():
    raw = os.environ.get("BOOJUM_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BOOJUM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"BOOJUM_THREADS must be a positive integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boojum-ldg", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="configuration file")
        sp.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, default=None, help="unsigned seed (overrides seed)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = with_overrides(load_config(args.config), out_dir=args.out, seed=args.seed)
        threads = _threads()
    except (ConfigError, OSError) as exc:
        print(f"boojum-ldg: {exc}", file=sys.stderr)
        return 2
    with threadpool_limits(limits=threads):
        return run_pipeline(cfg, SUBCOMMANDS[args.command])


if __name__ == "__main__":
    sys.exit(main())
