"""``tubal`` command line.

Subcommands ``phase``, ``table``, ``image``, ``rip`` and ``budget`` each read
``--config`` and write into ``--out``.  Exit status is 0 on success, 2 for an
invalid config and 3 for any other failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import InvalidConfig
from .config import ExperimentConfig, load_config
from .experiments import RUNNERS, run_image
from .images import synthetic_logo, write_ppm

log = logging.getLogger("tubal")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tubal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", help="TOML experiment config (defaults used if omitted)")
        p.add_argument("--out", help="output directory (overrides output_path)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--trials", type=int, help="override trials")
        p.add_argument("--workers", type=int, help="parallel worker processes")
        if kind == "image":
            p.add_argument("--image", help="PPM image to recover (overrides image_path)")
    logo = sub.add_parser("logo", help="write the synthetic rank-5 test image")
    logo.add_argument("--out", required=True, help="PPM file to write")
    logo.add_argument("--seed", type=int, default=2024)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig(kind=args.command)
    if cfg.kind != args.command:
        raise InvalidConfig(f"config kind {cfg.kind!r} does not match subcommand {args.command!r}")
    overrides = {}
    if args.out:
        overrides["output_path"] = args.out
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "image", None):
        overrides["image_path"] = args.image
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "logo":
            write_ppm(args.out, synthetic_logo(seed=args.seed), maxval=65535)
            return EXIT_OK
        cfg = resolve_config(args)
        log.info("running %s into %s", cfg.kind, cfg.output_path)
        if cfg.kind == "image":
            path = run_image(cfg, cfg.output_path)
        else:
            path = RUNNERS[cfg.kind](cfg, cfg.output_path)
    except InvalidConfig as exc:
        print(f"tubal: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit status
        log.debug("failure", exc_info=True)
        print(f"tubal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
