"""Command-line entry point: ``qntk <experiment> [options]``.

Exit codes: 0 on success, 2 for configuration errors, 3 when a numerical
contract (PSD kernel, descent stability, ...) is violated during the run.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ContractViolationError
from .experiments import EXPERIMENTS, default_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qntk",
        description="Reproducible tangent-kernel experiments; outputs CSV/JSON artifacts.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, (cls, _) in sorted(EXPERIMENTS.items()):
        p = sub.add_parser(name, help=(cls.__doc__ or "").strip().splitlines()[0])
        p.add_argument("--config", metavar="FILE", help="JSON config file (strict schema)")
        p.add_argument("--seed", type=int, metavar="S", help="override the master seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default qntk_runs/<experiment>)")
        p.add_argument(
            "--print-config",
            action="store_true",
            help="print the default config as JSON and exit",
        )
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path!r} at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.print_config:
            print(json.dumps(default_config(args.experiment), indent=2, sort_keys=True))
            return EXIT_OK
        config = _load_config(args.config) if args.config else {}
        manifest = run_experiment(args.experiment, config, seed=args.seed, out_dir=args.out)
        print(f"wrote {manifest}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractViolationError as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
