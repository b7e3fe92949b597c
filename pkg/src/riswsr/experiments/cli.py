"""Command-line entry point: ``riswsr <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from riswsr.errors import InvalidInputError
from riswsr.experiments.config import SWEEP_KINDS, load_config, preset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riswsr", description="RIS-aided MISO weighted sum-rate experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SWEEP_KINDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config overriding the preset for this experiment")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--trials", type=int, help="number of trials (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--full-scale", action="store_true", help="use the full Monte-Carlo effort")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    v = sub.add_parser("validate", help="run the built-in property checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=20, help="random instances per check")
    return parser


def resolve_config(args):
    cfg = preset(args.command, full_scale=args.full_scale)
    if args.config:
        cfg = load_config(args.config, base=cfg)
        cfg = replace(cfg, sweep=args.command)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.out is not None:
        overrides["output_dir"] = args.out
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        from riswsr.experiments.validation import run_all
        return 0 if run_all(seed=args.seed, instances=args.trials) else 1

    from riswsr.experiments.runner import run_sweep, summarize
    try:
        cfg = resolve_config(args)
    except (InvalidInputError, OSError) as exc:
        print(f"riswsr: config error: {exc}", file=sys.stderr)
        return 2
    result = run_sweep(cfg, workers=args.workers)
    for row in summarize(result.records):
        label = f"{row['algorithm']:>12} P={row['tx_power_dbm']:g}dBm N={row['n']} rho={row['rho']:g} x={row['ris_x']:g}"
        print(f"{label}  mean WSR {row['mean_wsr_bits']:.4f} bit/s/Hz  (n={row['count']}, failed={row['failed']})")
    print(f"wrote {len(result.files)} files to {cfg.output_dir}")
    if result.failed:
        print(f"riswsr: {result.failed} cells failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
