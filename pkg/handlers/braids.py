"""
Braid commands: construct2, hypothesis and turks-head.
"""

import argparse
import logging
from typing import Any, Dict, List

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
from services.braids import (
    BraidWord,
    Involution,
    InvolutionKind,
    closure_is_knot,
    perm_image,
    star,
    turks_head,
    turks_head_check,
)
from services.certify import (
    HypothesisReport,
    assemble_closure_rep,
    construction2_family,
    hypothesis_check,
    solve_mapping_torus,
)
from services.pipelines import certify_construction2
from utils.logger import format_matrix, format_residual

logger = logging.getLogger(__name__)
router = Router(name="braids")


@router.command(
    "construct2",
    "braid-involution family: U-points, intertwiners and closure representations",
    lambda p: add_braid_arguments(p, default_name="10_123"),
)
def cmd_construct2(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, tau = braid_from_args(args, cfg)
    result = construction2_family(b, tau, count=cfg.count, seed=cfg.seed, tol=cfg.tol)
    summary = result.summary()
    lines = section(f"Construction II for {b} ({tau.kind.value})")
    lines += [
        f"  b* = {summary['star']}",
        f"  points: {summary['points']} (skipped {summary['skipped']})",
        f"  max closure residual {format_residual(result.max_residual, 1e-8)}",
        f"  max |A^2 + I| {format_residual(result.max_A_square_residual, 1e-8)}",
    ]
    for k, point in enumerate(result.points, start=1):
        lines.append(f"  A_{k} = {format_matrix(point.a)}")
    emit(cfg, summary, lines)
    return EXIT_OK


def _hypothesis_reports(b: BraidWord, tau: Involution, cfg: RunConfig) -> List[HypothesisReport]:
    """Reports at U-points for 3 strands, at a solved mapping-torus point otherwise."""
    if b.n == 3:
        result = construction2_family(b, tau, count=cfg.count, seed=cfg.seed, tol=cfg.tol)
        return [hypothesis_check(b, tau, p.gens, p.a) for p in result.points]
    solution = solve_mapping_torus(b, tau, seed=cfg.seed)
    assemble_closure_rep(b, tau, solution.gens, solution.a)
    return [hypothesis_check(b, tau, solution.gens, solution.a)]


def _report_lines(reports: List[HypothesisReport]) -> List[str]:
    lines = []
    for k, r in enumerate(reports, start=1):
        lines.append(
            f"  {k}. {r.status}: (a)={r.condition_a} (b)={r.condition_b}, "
            f"|A^2 + I| {format_residual(r.A_square_residual)}, "
            f"closure {format_residual(r.closure_relation_residual)}"
        )
    return lines


@router.command(
    "hypothesis",
    "boundary Klein bottle and double cover conditions",
    lambda p: add_braid_arguments(p, default_name="10_123"),
)
def cmd_hypothesis(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, tau = braid_from_args(args, cfg)
    reports = _hypothesis_reports(b, tau, cfg)
    lines = section(f"Hypothesis check for {b} ({tau.kind.value})") + _report_lines(reports)
    emit(cfg, {"braid": str(b), "involution": tau.kind.value, "reports": [r.to_dict() for r in reports]}, lines)
    verified = any(r.status == "hypothesis verified" for r in reports)
    return EXIT_OK if verified else EXIT_NEGATIVE


def _turks_head_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("p", type=int, help="strands (odd, >= 3)")
    parser.add_argument("q", type=int, help="period count (odd, >= 3)")
    parser.add_argument("--certify", action="store_true", help="run the hypothesis check (and a rank certificate for p = 3)")


@router.command("turks-head", "Turk's head braids Th(p, q) and their involution decomposition", _turks_head_args)
def cmd_turks_head(args: argparse.Namespace, cfg: RunConfig) -> int:
    full, half = turks_head(args.p, args.q)
    tau = Involution(InvolutionKind.REFLECT, args.p)
    check = turks_head_check(args.p, args.q, seed=cfg.seed)
    payload: Dict[str, Any] = {
        "check": check.to_dict(),
        "star": str(star(half, tau)),
        "closure_is_knot": closure_is_knot(half, tau),
        "perm": str(perm_image(half, tau)),
    }
    lines = section(f"Th({args.p},{args.q})")
    lines += [
        f"  full: {full}",
        f"  half: {half}",
        f"  half*: {payload['star']}",
        f"  closure of half·half* is a knot: {payload['closure_is_knot']} (pi = {payload['perm']})",
        f"  semantic equality up to conjugation by '{check.conjugator}': {check.holds}",
    ]
    ok = check.holds and payload["closure_is_knot"]
    if args.certify and ok:
        reports = _hypothesis_reports(half, tau, cfg)
        payload["reports"] = [r.to_dict() for r in reports]
        lines += section("Hypothesis") + _report_lines(reports)
        if args.p == 3:
            cert = certify_construction2(half, tau, f"Th({args.p},{args.q})", cfg)
            payload["certificate"] = cert.to_dict()
            lines.append(f"  rank verdict: {cert.rank_verdict()}")
    emit(cfg, payload, lines)
    return EXIT_OK if ok else EXIT_NEGATIVE
