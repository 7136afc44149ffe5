"""Command-line entry point.

Subcommands map one-to-one onto the experiment runners: `gaussian` for the
closed-form proximal recursion, `mfld-prox` / `mfld-gd` for single particle
runs, `reference` to build (and cache) the long-horizon reference cloud,
`compare` for the repeated two-algorithm study and `sweep` for the particle
count sweep. Exit codes: 0 success, 2 configuration problems, 1 anything
that fails at runtime.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, parse_config

_KIND_BY_COMMAND = {
    "gaussian": "gaussian",
    "mfld-prox": "mfld-prox",
    "mfld-gd": "mfld-gd",
    "reference": "reference",
    "compare": "compare",
    "sweep": "sweep",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wprox",
        description="Wasserstein proximal training experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gaussian", "closed-form Gaussian proximal recursion"),
        ("mfld-prox", "particle proximal training (flow inner solver)"),
        ("mfld-gd", "noisy gradient descent on particles"),
        ("reference", "build the long-horizon reference particle cloud"),
        ("compare", "repeated proximal-vs-gd comparison on shared data"),
        ("sweep", "final-distance sweep over particle counts"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, default=None,
                         help="TOML config file (defaults apply if omitted)")
        cmd.add_argument("--out", type=Path, required=True,
                         help="output directory for artifacts")
        if name == "sweep":
            cmd.add_argument("--particles", type=str, default=None,
                             help="comma-separated particle counts, e.g. 50,100,200")
    return parser


def _parse_particles(raw: str) -> tuple:
    try:
        values = tuple(int(part) for part in raw.split(","))
    except ValueError:
        raise ConfigError(f"--particles expects comma-separated integers, got {raw!r}")
    if not values or any(v <= 0 for v in values):
        raise ConfigError("--particles values must be positive")
    return values


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = parse_config(args.config, kind=_KIND_BY_COMMAND[args.command])
        if args.command == "sweep" and args.particles is not None:
            cfg = dataclasses.replace(cfg, sweep_particles=_parse_particles(args.particles))
    except ConfigError as exc:
        print(f"wprox: config error: {exc}", file=sys.stderr)
        return 2

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "gaussian":
            experiments.run_gaussian(cfg, out)
        elif args.command == "mfld-prox":
            experiments.run_mfld_single(cfg, out, "prox")
        elif args.command == "mfld-gd":
            experiments.run_mfld_single(cfg, out, "gd")
        elif args.command == "reference":
            experiments.run_reference(cfg, out)
        elif args.command == "compare":
            experiments.run_compare(cfg, out)
        elif args.command == "sweep":
            experiments.run_sweep(cfg, out)
    except Exception as exc:  # pragma: no cover - defensive catch-all
        print(f"wprox: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
