"""
Diagram commands: riley, construct1 and parabolic.
"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Tuple

from config import RunConfig
from handlers.common import EXIT_NEGATIVE, EXIT_OK, Router, emit, section
from services.constructions import (
    construction1_family,
    default_grid,
    load_instance,
    parabolic_family,
)
from services.diagrams import load_pd
from services.errors import ParseError
from services.pipelines import PARABOLIC_FILE, certify_parabolic, load_parabolic_instance
from services.tangles import RationalTangle, TwoBridge, c_closure, normalize_riley, riley_polynomial
from utils.logger import format_residual

logger = logging.getLogger(__name__)
router = Router(name="diagrams")


def parse_grid(text: Optional[str]) -> List[Tuple[complex, complex]]:
    """'m1,m2,...:t1,t2,...' as the product grid; the default grid when empty."""
    if not text:
        return default_grid()
    try:
        m_text, t_text = text.split(":")
        ms = [complex(v) for v in m_text.split(",") if v.strip()]
        ts = [complex(v) for v in t_text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"Bad grid '{text}'; expected 'm1,m2:t1,t2'")
    if not ms or not ts:
        raise ParseError(f"Grid '{text}' has no m or no t values")
    return [(m, t) for m in ms for t in ts]


def _riley_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--two-bridge", help="p/q of the two-bridge knot, e.g. 3/1")
    group.add_argument("--tangle", help='rational tangle whose c-closure is used, e.g. "2 1"')


@router.command("riley", "Riley polynomial of a two-bridge knot or of a tangle's c-closure", _riley_args)
def cmd_riley(args: argparse.Namespace, cfg: RunConfig) -> int:
    if args.two_bridge:
        tb = TwoBridge.parse(args.two_bridge)
        poly = riley_polynomial(tb)
        emit(cfg, {"two_bridge": str(tb), "polynomial": str(poly)}, [str(poly)])
        return EXIT_OK
    tangle = RationalTangle.parse(args.tangle)
    normalization = normalize_riley(tangle)
    lines = section(f"c-closure of tangle {tangle}")
    lines += [
        f"  two-bridge: {normalization.raw} (normalized {normalization.chosen})",
        f"  Riley polynomial: {normalization.polynomial}",
        f"  tangle defects at the roots: {[format_residual(d) for d in normalization.defects]}",
    ]
    emit(cfg, normalization.to_dict(), lines)
    return EXIT_OK


def _construct1_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", default="10_98", help="bundled instance from construction1.json")
    parser.add_argument("--link", type=Path, help="PD file of a split link, replacing --instance")
    parser.add_argument("--crossing", default="c", help="crossing to replace (with --link)")
    parser.add_argument("--tangle", help="rational tangle terms (with --link, or to override the instance)")
    parser.add_argument("--grid", help="parameter grid 'm1,m2:t1,t2'")
    parser.add_argument("--branch", type=int, default=0, help="Riley root of the c-closure")


@router.command("construct1", "tangle-replacement family over an (m, t) grid", _construct1_args)
def cmd_construct1(args: argparse.Namespace, cfg: RunConfig) -> int:
    label = ""
    if args.link:
        pd_link, crossing = load_pd(args.link), args.crossing
        if not args.tangle:
            raise ParseError("--tangle is required with --link")
        tangle = RationalTangle.parse(args.tangle)
    else:
        pd_link, crossing, tangle, entry = load_instance(args.instance, cfg.data_dir)
        label = str(entry.get("knot_label", ""))
        if args.tangle:
            tangle = RationalTangle.parse(args.tangle)
    result = construction1_family(
        pd_link, crossing, tangle, parse_grid(args.grid), args.branch, cfg.tol, label, seed=cfg.seed,
    )
    summary = result.summary()
    lines = section(f"Construction I on '{pd_link.name}' at '{crossing}' with tangle {tangle}")
    lines += [
        f"  c-closure: {c_closure(tangle)} (Riley normalization {result.normalization.chosen})",
        f"  knot: {summary['knot_crossings']} crossings, {summary['knot_components']} component(s)",
        f"  points: {summary['points']}, max residual {format_residual(result.max_residual, cfg.tol)}",
    ]
    emit(cfg, summary, lines)
    return EXIT_OK


def _parabolic_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--link", type=Path, help=f"PD file with two marked crossings (default: bundled {PARABOLIC_FILE})")
    parser.add_argument("--c1", help="first crossing to replace (with --c2)")
    parser.add_argument("--c2", help="second crossing to replace (with --c1)")
    parser.add_argument("--t1", help="rational tangle for the first crossing")
    parser.add_argument("--t2", help="rational tangle for the second crossing")
    parser.add_argument("--samples", type=int, default=3, help="points along the family")
    parser.add_argument("--certify", action="store_true", help="emit a rank certificate")


@router.command("parabolic", "parabolic family after a double tangle replacement", _parabolic_args)
def cmd_parabolic(args: argparse.Namespace, cfg: RunConfig) -> int:
    path = args.link or cfg.data_dir / PARABOLIC_FILE
    choice = {"c1": args.c1, "c2": args.c2, "t1": args.t1, "t2": args.t2}
    if args.certify:
        cert = certify_parabolic(cfg, path, args.samples, **choice)
        emit(cfg, cert.to_dict(), [cert.to_json()])
        return EXIT_OK if cert.rank_verdict()["certified"] else EXIT_NEGATIVE
    pd, labels, tangles = load_parabolic_instance(path, **choice)
    result = parabolic_family(pd, labels[0], labels[1], tangles[0], tangles[1], samples=args.samples, seed=cfg.seed, tol=cfg.tol)
    summary = result.summary()
    lines = section(f"Parabolic family on '{pd.name}'")
    lines += [
        f"  replaced: {summary['tangles']}",
        f"  solution (t, x, y): {summary['solution']}",
        f"  free coordinate: {summary['free_coordinate']}",
        f"  max residual {format_residual(result.max_residual, cfg.tol)}, "
        f"max |tr - 2| {format_residual(result.max_trace_deviation())}",
    ]
    emit(cfg, summary, lines)
    return EXIT_OK
