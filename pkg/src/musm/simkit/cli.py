"""Command-line entry point: ``musm {simulate,theory,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import MusmError, ParseError, ValidationError
from .config import load_config
from .csvio import write_csv
from .engine import default_workers, run_campaign
from .overlay import theory_overlay

log = logging.getLogger("musm")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _load(path):
    try:
        return load_config(path)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _cmd_simulate(args):
    configs = _load(args.config)
    if args.seed is not None:
        configs = [replace(c, master_seed=args.seed) for c in configs]

    def progress(done, total):
        if not args.quiet:
            print(f"\r{done}/{total} cells", end="", file=sys.stderr, flush=True)

    records = run_campaign(
        configs, workers=args.workers, record_timing=not args.no_timing, progress=progress
    )
    if not args.quiet:
        print(file=sys.stderr)
    write_csv(records, args.out)
    failed = [r for r in records if r.error]
    for r in failed:
        log.error("%s at %g dB failed: %s", r.system, r.snr_db, r.error)
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_theory(args):
    records = []
    for cfg in _load(args.config):
        records.extend(theory_overlay(cfg))
    write_csv(records, args.out)
    return EXIT_OK


def _cmd_validate(args):
    for i, cfg in enumerate(_load(args.config), start=1):
        ch = cfg.channel
        print(
            f"campaign {i}: system={cfg.system} K={ch.n_users} N_t={ch.n_tx} N_r={ch.n_rx} "
            f"J_k={cfg.j_k} m={cfg.bits_per_user} complexity={cfg.ml_ops}"
        )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="musm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--workers", type=int, default=None,
                     help="worker processes (default: $SM_SIM_WORKERS or 1)")
    sim.add_argument("--seed", type=int, default=None, help="override master_seed")
    sim.add_argument("--quiet", action="store_true")
    sim.add_argument("--no-timing", action="store_true",
                     help="write 0 wall time so outputs are byte-reproducible")
    sim.set_defaults(func=_cmd_simulate)

    th = sub.add_parser("theory", help="write union-bound curves")
    th.add_argument("--config", required=True)
    th.add_argument("--out", required=True)
    th.set_defaults(func=_cmd_theory)

    val = sub.add_parser("validate", help="check a config and print J_k, m and complexity")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is None and args.command == "simulate":
        args.workers = default_workers()
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (MusmError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
