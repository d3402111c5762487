"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``rate-study``, ``bvm-study``,
``illposedness``.  Each takes ``--config <path>``, optional ``--seed``
(overriding the config seed), and ``--out <dir>``.  Exit codes: 0 success,
2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .design import load_csv
from .errors import NumericalError, ValidationError
from .harness import (
    ExperimentConfig,
    run_bvm_study,
    run_fit,
    run_illposedness,
    run_rate_study,
    save_report,
    simulate_to_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbnpiv",
        description="Quasi-Bayesian estimation of instrumented nonparametric regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "draw a sample from the configured design and write it as CSV"),
        ("fit", "fit one dataset and write the estimate report"),
        ("rate-study", "Monte Carlo convergence-rate study on a synthetic design"),
        ("bvm-study", "posterior-vs-normal-approximation study"),
        ("illposedness", "empirical ill-posedness profile over an (n, J) grid"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", required=True, help="output directory")
        if name == "fit":
            p.add_argument("--data", default=None, help="CSV data path override (header y,x,w)")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=int(args.seed))
    return config


def _fit_data(config: ExperimentConfig, data_override):
    path = data_override or config.data
    if path is not None:
        return load_csv(path)
    if config.n is None:
        raise ValidationError("fit needs a data path or a design with 'n' in the config")
    from .design import sample
    from .seeding import derive_seed

    return sample(config.make_design(), int(config.n), derive_seed(config.seed, 0))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "simulate":
            path = simulate_to_csv(config, args.out)
            print(path)
        elif args.command == "fit":
            report = run_fit(config, _fit_data(config, args.data))
            for path in save_report(report, args.out, "fit"):
                print(path)
        elif args.command == "rate-study":
            for path in save_report(run_rate_study(config), args.out, "rate_study"):
                print(path)
        elif args.command == "bvm-study":
            for path in save_report(run_bvm_study(config), args.out, "bvm_study"):
                print(path)
        elif args.command == "illposedness":
            for path in save_report(run_illposedness(config), args.out, "illposedness"):
                print(path)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
