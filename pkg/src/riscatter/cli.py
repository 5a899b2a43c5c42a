"""Command-line entry point: ``riscatter <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments, validate
from .config import (BEAM_SCHEMES, INPUT_SCHEMES, THRESHOLD_SCHEMES, ConfigError,
                     ExperimentConfig, config_from_mapping, load_config)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_ALIASES = {"ergodicMrt": "ergodic_mrt", "directMrt": "direct_mrt"}

log = logging.getLogger("riscatter")


def _scheme(choices):
    def parse(text):
        text = _ALIASES.get(text, text)
        if text not in choices:
            raise argparse.ArgumentTypeError(f"choose from {', '.join(choices)}")
        return text
    return parse


def _rho_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file of configuration keys")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--realizations", type=int, help="channel realizations to average")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, help="realization-parallel worker processes")
    common.add_argument("--threshold-scheme", type=_scheme(THRESHOLD_SCHEMES))
    common.add_argument("--input-scheme", type=_scheme(INPUT_SCHEMES))
    common.add_argument("--beam-scheme", type=_scheme(BEAM_SCHEMES))
    common.add_argument("--channels", type=Path, help="channel cache written by 'cache'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="riscatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("region", parents=[common], help="rate region averaged over realizations")
    conv = sub.add_parser("converge", parents=[common], help="KKT / PGA / BCD traces")
    conv.add_argument("--rho", type=float, default=0.0)
    dist = sub.add_parser("distribution", parents=[common], help="input distributions per rho")
    dist.add_argument("--rhos", type=_rho_list, default=(0.0, 0.5, 1.0))
    sub.add_parser("benchmark", parents=[common], help="benchmark schemes only")
    val = sub.add_parser("validate", parents=[common], help="run the oracle suite")
    val.add_argument("--quick", action="store_true", help="fewer random instances")
    sub.add_parser("cache", parents=[common], help="write channel realizations to OUT/channels.bin")
    return parser


def resolve_config(args) -> ExperimentConfig:
    """File values first, then flags that were given."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {k: v for k, v in {
        "seed": args.seed, "realizations": args.realizations, "threads": args.threads,
        "threshold_scheme": args.threshold_scheme, "input_scheme": args.input_scheme,
        "beam_scheme": args.beam_scheme}.items() if v is not None}
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if args.threads is not None and args.threads < 1:
        raise ConfigError("threads must be at least 1")
    return config_from_mapping(overrides, cfg) if overrides else cfg


def _channels(args, cfg):
    if args.channels is None:
        return None
    try:
        draws = experiments.load_channels(args.channels, cfg)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return draws


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "validate":
            checks = validate.run_suite(quick=args.quick)
            print(validate.format_report(checks))
            return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
        if args.command == "cache":
            path = experiments.cache_channels(cfg, args.out / "channels.bin")
            print(path)
            return EXIT_OK
        if args.command == "region":
            files = experiments.run_region(cfg, args.out, _channels(args, cfg))
        elif args.command == "benchmark":
            files = experiments.run_benchmark(cfg, args.out, _channels(args, cfg))
        elif args.command == "converge":
            files = experiments.run_convergence(cfg, args.rho, args.out)
        else:
            files = experiments.run_distribution(cfg, args.rhos, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (experiments.NumericFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for f in files:
        print(f)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
