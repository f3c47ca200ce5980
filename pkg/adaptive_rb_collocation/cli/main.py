"""
CLI: Reduced-Basis Collocation Experiments

Usage:
    python -m adaptive_rb_collocation.cli.main run configs/table2.yaml --set method.eps_rb=[1e-3]
    python -m adaptive_rb_collocation.cli.main count-points --M 64 --level 2 --p 9
    python -m adaptive_rb_collocation.cli.main nodes --family gauss_legendre --p 3

Exit codes: 0 success, 2 configuration error, 3 numerical failure.

References:
- docs/theory.md §6: Experiments
"""

import argparse
import logging
import sys

from ..collocation.anova_points import COUNT_CONVENTIONS, count_points
from ..collocation.rules import FAMILIES, make_rule
from ..core.config import ConfigError, ExperimentConfig
from .experiment import EXIT_CONFIG, EXIT_OK, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptive_rb_collocation",
        description="Reduced-basis stochastic collocation for convection-diffusion",
    )
    parser.add_argument("--verbose", action="store_true", help="Verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment from a YAML/JSON config")
    run.add_argument("config", type=str, help="Path to the config file")
    run.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override a config key (repeatable)",
    )
    run.add_argument("--output", type=str, default=None, help="Output directory")

    count = sub.add_parser("count-points", help="Number of PCM-ANOVA collocation points")
    count.add_argument("--M", type=int, required=True, help="Stochastic dimension")
    count.add_argument("--level", type=int, required=True, help="Truncation level ℓ")
    count.add_argument("--p", type=int, required=True, help="Points per direction")
    count.add_argument(
        "--convention",
        choices=COUNT_CONVENTIONS,
        default="formula",
        help="formula: anchor plus p^|K| per set; table: (p−1)^|K| per set, no anchor",
    )

    nodes = sub.add_parser("nodes", help="Print 1-D nodes and probabilist weights")
    nodes.add_argument("--family", choices=FAMILIES, default="gauss_legendre")
    nodes.add_argument("--p", type=int, required=True, help="Number of points")
    nodes.add_argument(
        "--interval", type=float, nargs=2, default=(-1.0, 1.0), metavar=("A", "B")
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main CLI execution; returns the exit code."""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    logger = logging.getLogger(__name__)

    if args.command == "count-points":
        try:
            print(count_points(args.M, args.level, args.p, convention=args.convention))
        except ValueError as e:
            logger.error(str(e))
            return EXIT_CONFIG
        return EXIT_OK

    if args.command == "nodes":
        try:
            rule = make_rule(args.family, args.p, tuple(args.interval))
        except ValueError as e:
            logger.error(str(e))
            return EXIT_CONFIG
        print("node,weight")
        for x, w in zip(rule.nodes, rule.weights, strict=True):
            print(f"{x:.17e},{w:.17e}")
        return EXIT_OK

    try:
        config = ExperimentConfig.from_yaml(args.config, overrides=args.overrides)
    except (ConfigError, FileNotFoundError) as e:
        logger.error(f"Cannot load config: {e}")
        return EXIT_CONFIG
    logger.info(f"Loaded {config}")
    return run_experiment(config, output_dir=args.output)


if __name__ == "__main__":
    sys.exit(main())
