"""
Trace-coordinate commands: trace-action, quotient-claim and u-points.
"""

import argparse
import logging

from config import RunConfig
from handlers.common import (
    EXIT_NEGATIVE,
    EXIT_OK,
    Router,
    add_braid_arguments,
    braid_from_args,
    emit,
    section,
)
from services.braids import BraidWord
from services.trace_coords import (
    COORD_NAMES,
    TraceCoord,
    act,
    act_word,
    find_U_points,
    fricke_P,
    quotient_claim_check,
)
from utils.logger import format_complex, format_residual

logger = logging.getLogger(__name__)
router = Router(name="trace")

LETTERS = ((1, 1), (1, -1), (2, 1), (2, -1))


def _trace_action_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--braid", default="", help='3-strand braid word, e.g. "s1 S2 s1"')


@router.command("trace-action", "image of (x, y, z, b, c) under a 3-strand braid", _trace_action_args)
def cmd_trace_action(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Symbolic image of the trace coordinates, plus P invariance per generator."""
    b = BraidWord.parse(args.braid, 3)
    sym = TraceCoord.symbolic()
    image = act_word(b, sym)
    p = fricke_P(sym)
    invariance = {
        f"{'s' if sign == 1 else 'S'}{index}": fricke_P(act((index, sign), sym)) == p
        for index, sign in LETTERS
    }
    images = dict(zip(COORD_NAMES, (str(v) for v in image.as_tuple())))
    lines = section(f"Trace action of {b}")
    lines += [f"  {name.upper()} = {value}" for name, value in images.items()]
    lines.append(f"  P preserved by generators: {invariance}")
    emit(cfg, {"braid": str(b), "image": images, "P": str(p), "P_invariant": invariance}, lines)
    return EXIT_OK


@router.command(
    "quotient-claim",
    "whether X = z, Z = x force Y = y for a 3-strand braid",
    lambda p: add_braid_arguments(p, default_name="10_123"),
)
def cmd_quotient_claim(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, _ = braid_from_args(args, cfg)
    report = quotient_claim_check(b, seed=cfg.seed)
    lines = section(f"Quotient claim for {b}")
    lines += [
        f"  P reduced: {report.Pbar}",
        f"  (X, Y, Z) reduced: ({report.Xbar}, {report.Ybar}, {report.Zbar})",
        f"  branch factor: {report.branch_factor}",
        f"  verdict: {'claim holds' if report.holds else 'claim fails'}",
    ]
    payload = report.to_dict()
    payload["seed"] = cfg.seed
    emit(cfg, payload, lines)
    return EXIT_OK if report.holds else EXIT_NEGATIVE


@router.command(
    "u-points",
    "numeric points of U for a 3-strand braid",
    lambda p: add_braid_arguments(p, default_name="10_123"),
)
def cmd_u_points(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, _ = braid_from_args(args, cfg)
    points = find_U_points(b, count=cfg.count, seed=cfg.seed, tol=cfg.tol)
    lines = section(f"{len(points)} U-points for {b} (seed {cfg.seed})")
    for k, point in enumerate(points, start=1):
        coords = ", ".join(
            f"{name}={format_complex(v)}" for name, v in zip(COORD_NAMES, point.coords.as_tuple())
        )
        lines.append(f"  {k}. {coords}")
        lines.append(
            f"     a={format_complex(point.a)}, T={format_complex(point.T)}, "
            f"residual {format_residual(max(point.residuals.values()), cfg.tol)}"
        )
    emit(cfg, {"braid": str(b), "seed": cfg.seed, "points": [p.to_dict() for p in points]}, lines)
    return EXIT_OK
