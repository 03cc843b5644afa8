"""
xlk - Main Entry Point

Command-line tool for SL2(C) character-variety constructions of knots:
tangle replacements, braid-involution decompositions, parabolic families
and the rank certificates that witness components of dimension above one.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from config import RunConfig, get_config
from handlers import braids_router, certify_router, diagrams_router, trace_router
from handlers.common import EXIT_ERROR, Command

logger = logging.getLogger(__name__)

ROUTERS = (trace_router, diagrams_router, braids_router, certify_router)


class XlkArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for mathematical negatives."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def configure_logging(level: str) -> None:
    """Logs go to stderr so reports on stdout stay parseable."""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )
    # Reduce noise from third-party libraries
    logging.getLogger("numpy").setLevel(logging.WARNING)


def global_options() -> argparse.ArgumentParser:
    """Options accepted by every subcommand."""
    parser = XlkArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, help="random seed (XLK_SEED)")
    parser.add_argument("--tol", type=float, help="residual tolerance (XLK_TOL)")
    parser.add_argument("--rank-cutoff", type=float, help="relative singular value cutoff (XLK_RANK_CUTOFF)")
    parser.add_argument("--gap-ratio", type=float, help="certificate singular value gap (XLK_GAP_RATIO)")
    parser.add_argument("--min-gap", type=float, help="smallest decidable gap (XLK_MIN_GAP)")
    parser.add_argument("--step", type=float, help="finite-difference step (XLK_STEP)")
    parser.add_argument("--count", type=int, help="number of sample points (XLK_COUNT)")
    parser.add_argument("--json", action="store_true", help="JSON report instead of text")
    parser.add_argument("--output", "-o", help="write the report to a file")
    parser.add_argument("--data-dir", help="bundled data directory (XLK_DATA_DIR)")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = XlkArgumentParser(
        prog="xlk",
        description="SL2(C) character-variety constructions and dimension certificates for knots.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = global_options()
    for router in ROUTERS:
        for command in router.commands:
            sub = subparsers.add_parser(command.name, help=command.help, parents=[common])
            if command.arguments:
                command.arguments(sub)
            sub.set_defaults(command_entry=command)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return get_config().with_overrides(
        seed=args.seed,
        tol=args.tol,
        rank_cutoff=args.rank_cutoff,
        gap_ratio=args.gap_ratio,
        min_gap=args.min_gap,
        step=args.step,
        count=args.count,
        output_format="json" if args.json else None,
        output=args.output,
        data_dir=args.data_dir,
        log_level="DEBUG" if args.verbose else None,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run one subcommand and return its exit code.

    0 on success or when a claim holds, 2 for a mathematical negative,
    1 for errors (including invalid configuration).
    """
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    try:
        cfg = config_from_args(args)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR
    configure_logging(cfg.log_level)

    command: Command = args.command_entry
    logger.debug(f"Running '{command.name}' with seed {cfg.seed}, tolerances {cfg.tolerances()}")
    return command.handler(args, cfg)


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(EXIT_ERROR)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        sys.exit(EXIT_ERROR)
