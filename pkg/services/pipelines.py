"""
End-to-end certificate runs and their re-verification.

Each run builds a representation family, samples points, measures the rank of
the character map at each point and packs everything into a Certificate.
Re-verification rebuilds the family from the recorded input and repeats the
residual and rank measurements at the recorded parameters.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import RunConfig, get_config
from services.braids import BraidWord, Involution, closure_pd, star
from services.certificate import (
    Certificate,
    VerificationReport,
    decode_complex,
    static_checks,
)
from services.certify import (
    BraidPoint,
    CharCoordinateSet,
    FamilyFn,
    RankResult,
    braid_family,
    construction2_family,
    hypothesis_check,
    jacobian_rank,
)
from services.constructions import (
    construction1_family,
    default_grid,
    load_instance,
    parabolic_family,
)
from services.diagrams import PDCode, load_pd
from services.errors import CertificateError, XlkError
from services.tangles import RationalTangle
from services.trace_coords import make_upoint, quotient_claim_check

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-8
PARABOLIC_FILE = "double_replacement.pd.json"


def _rank(cfg: RunConfig, family: FamilyFn, params: Sequence[complex], coords: CharCoordinateSet, tol: float) -> RankResult:
    return jacobian_rank(
        family,
        params,
        coords,
        h=cfg.step,
        cutoff=cfg.rank_cutoff,
        gap_ratio=cfg.gap_ratio,
        min_gap=cfg.min_gap,
        tol=tol,
    )


def _pairs(values: Sequence[complex]) -> List[List[float]]:
    return [[complex(v).real, complex(v).imag] for v in values]


# ============================================
# CONSTRUCTION I
# ============================================

def certify_construction1(name: str, cfg: Optional[RunConfig] = None, branch: int = 0) -> Certificate:
    """Tangle-replacement certificate for a bundled instance."""
    cfg = cfg or get_config()
    pd_link, crossing, tangle, entry = load_instance(name, cfg.data_dir)
    grid = default_grid()
    logger.info("=" * 50)
    logger.info(f"Construction I certificate for {name}: crossing '{crossing}', tangle {tangle}")
    label = str(entry.get("knot_label", ""))
    result = construction1_family(pd_link, crossing, tangle, grid, branch, cfg.tol, label, seed=cfg.seed)

    rng = np.random.default_rng(cfg.seed)
    chosen = sorted(rng.choice(len(grid), size=min(cfg.count, len(grid)), replace=False).tolist())
    coords = CharCoordinateSet.for_diagram(result.pd_knot)
    samples = []
    for index in chosen:
        point = result.points[index]
        rank = _rank(cfg, result.family, point.params, coords, cfg.tol)
        samples.append({
            "grid_index": index,
            "params": _pairs(point.params),
            "residual": point.residual,
            "rank": rank.to_dict(),
        })
        logger.info(f"  point {index}: residual {point.residual:.2e}, rank {rank.rank}, gap {rank.gap:.2e}")

    cert = Certificate(
        construction="I",
        label=name,
        input={
            "instance": name,
            "link": pd_link.to_dict(),
            "crossing": crossing,
            "tangle": str(tangle),
            "branch": branch,
            "grid": [_pairs(p) for p in grid],
        },
        seed=cfg.seed,
        tolerances=cfg.tolerances(),
        samples=samples,
        checks={
            "summary": result.summary(),
            "grid_max_residual": result.max_residual,
            "character_separation": character_separation(result.family, grid),
        },
    )
    logger.info(f"Construction I certificate for {name}: {cert.rank_verdict()}")
    logger.info("=" * 50)
    return cert


def character_separation(family: Any, grid: Sequence[Tuple[complex, complex]]) -> float:
    """Smallest mixed-trace gap over grid pairs with equal m and distinct t."""
    by_m: Dict[complex, List[complex]] = {}
    for m, t in grid:
        by_m.setdefault(m, []).append(family.mixed_trace(m, t))
    gaps = [
        abs(values[i] - values[j])
        for values in by_m.values()
        for i in range(len(values))
        for j in range(i + 1, len(values))
    ]
    return min(gaps) if gaps else 0.0


# ============================================
# CONSTRUCTION II
# ============================================

def _braid_input(b: BraidWord, tau: Involution) -> Dict[str, Any]:
    return {"braid": str(b), "strands": b.n, "involution": tau.kind.value}


def _braid_sample(cfg: RunConfig, b: BraidWord, tau: Involution, point: BraidPoint) -> Dict[str, Any]:
    family = braid_family(b, tau, point.upoint)
    pd = closure_pd(b * star(b, tau))
    rank = _rank(cfg, family, (0j, 0j), CharCoordinateSet.for_diagram(pd), CLOSURE_TOL)
    report = hypothesis_check(b, tau, point.gens, point.a)
    logger.info(
        f"  U-point: closure residual {point.closure.residual:.2e}, rank {rank.rank}, "
        f"gap {rank.gap:.2e}, {report.status}"
    )
    return {
        "params": _pairs((0j, 0j)),
        "point": _pairs(point.upoint.vector()),
        "a": _pairs([point.upoint.a]),
        "residual": point.closure.residual,
        "A_square_residual": report.A_square_residual,
        "trace_A": abs(complex(point.a.trace())),
        "rank": rank.to_dict(),
        "hypothesis": report.to_dict(),
    }


def certify_construction2(b: BraidWord, tau: Involution, label: str, cfg: Optional[RunConfig] = None) -> Certificate:
    """Braid-involution certificate: U-points, intertwiners, closure representations and ranks."""
    cfg = cfg or get_config()
    claim = quotient_claim_check(b, seed=cfg.seed)
    result = construction2_family(b, tau, count=cfg.count, seed=cfg.seed, tol=cfg.tol, closure_tol=CLOSURE_TOL)
    samples = [_braid_sample(cfg, b, tau, point) for point in result.points]
    tolerances = cfg.tolerances()
    tolerances["closure_residual"] = CLOSURE_TOL
    cert = Certificate(
        construction="II",
        label=label,
        input=_braid_input(b, tau),
        seed=cfg.seed,
        tolerances=tolerances,
        samples=samples,
        checks={
            "summary": result.summary(),
            "quotient_claim": claim.holds,
            "all_A_square_ok": all(p.a_squared_ok for p in result.points),
        },
    )
    logger.info(f"Construction II certificate for {label}: {cert.rank_verdict()}")
    return cert


# ============================================
# PARABOLIC FAMILY
# ============================================

def load_parabolic_instance(
    path: Path,
    c1: Optional[str] = None,
    c2: Optional[str] = None,
    t1: Optional[str] = None,
    t2: Optional[str] = None,
) -> Tuple[PDCode, List[str], List[RationalTangle]]:
    """Diagram, the two crossings to replace and their tangles; explicit values override the file's."""
    pd = load_pd(path)
    tangles = dict(pd.meta.get("tangles", {}))
    labels = [c1, c2] if c1 and c2 else sorted(tangles)
    if len(labels) != 2:
        raise XlkError(f"Diagram '{pd.name}' must name two crossings to replace", {"tangles": tangles})
    terms = [t1 or tangles.get(labels[0]), t2 or tangles.get(labels[1])]
    missing = [label for label, t in zip(labels, terms) if t is None]
    if missing:
        raise XlkError(f"No tangle given for crossing(s) {', '.join(missing)}", {"crossings": labels})
    return pd, labels, [RationalTangle.parse(str(t)) for t in terms]


def _parabolic_run(pd: PDCode, labels: Sequence[str], tangles: Sequence[RationalTangle], cfg: RunConfig, samples: int):
    return parabolic_family(
        pd, labels[0], labels[1], tangles[0], tangles[1], samples=samples, seed=cfg.seed, tol=cfg.tol,
    )


def certify_parabolic(
    cfg: Optional[RunConfig] = None,
    path: Optional[Path] = None,
    samples: int = 3,
    **choice: Optional[str],
) -> Certificate:
    """Parabolic family certificate: all meridians of trace 2, positive dimension."""
    cfg = cfg or get_config()
    path = path or cfg.data_dir / PARABOLIC_FILE
    pd, labels, tangles = load_parabolic_instance(path, **choice)
    result = _parabolic_run(pd, labels, tangles, cfg, samples)
    coords = CharCoordinateSet.for_diagram(result.pd_knot)
    records = []
    for point in result.points:
        rank = _rank(cfg, result.chart, point.params, coords, cfg.tol)
        records.append({"params": _pairs(point.params), "residual": point.residual, "rank": rank.to_dict()})
    cert = Certificate(
        construction="parabolic",
        label=pd.name,
        input={
            "link": pd.to_dict(),
            "crossings": list(labels),
            "tangles": [str(t) for t in tangles],
            "samples": samples,
        },
        seed=cfg.seed,
        tolerances=cfg.tolerances(),
        samples=records,
        checks={"summary": result.summary(), "max_trace_deviation": result.max_trace_deviation()},
    )
    logger.info(f"Parabolic certificate for '{pd.name}': {cert.rank_verdict()}")
    return cert


# ============================================
# RE-VERIFICATION
# ============================================

Rebuilt = Callable[[Dict[str, Any]], Tuple[FamilyFn, CharCoordinateSet]]


def _rebuild_construction1(data: Dict[str, Any], cfg: RunConfig) -> Rebuilt:
    given = data["input"]
    grid = [(decode_complex(p[0]), decode_complex(p[1])) for p in given["grid"]]
    result = construction1_family(
        PDCode.from_dict(given["link"]),
        given["crossing"],
        RationalTangle.parse(given["tangle"]),
        grid,
        int(given["branch"]),
        cfg.tol,
        seed=cfg.seed,
    )
    coords = CharCoordinateSet.for_diagram(result.pd_knot)
    return lambda sample: (result.family, coords)


def _rebuild_construction2(data: Dict[str, Any], cfg: RunConfig) -> Rebuilt:
    given = data["input"]
    b = BraidWord.parse(given["braid"], int(given["strands"]))
    tau = Involution.parse(given["involution"], b.n)
    coords = CharCoordinateSet.for_diagram(closure_pd(b * star(b, tau)))

    def rebuild(sample: Dict[str, Any]) -> Tuple[FamilyFn, CharCoordinateSet]:
        v = [decode_complex(p) for p in sample["point"]]
        upoint = make_upoint(b, v, anchor=decode_complex(sample["a"][0]))
        return braid_family(b, tau, upoint), coords

    return rebuild


def _rebuild_parabolic(data: Dict[str, Any], cfg: RunConfig) -> Rebuilt:
    given = data["input"]
    pd = PDCode.from_dict(given["link"])
    tangles = [RationalTangle.parse(t) for t in given["tangles"]]
    result = _parabolic_run(pd, given["crossings"], tangles, cfg, int(given["samples"]))
    coords = CharCoordinateSet.for_diagram(result.pd_knot)
    return lambda sample: (result.chart, coords)


REBUILDERS: Dict[str, Callable[[Dict[str, Any], RunConfig], Rebuilt]] = {
    "I": _rebuild_construction1,
    "II": _rebuild_construction2,
    "parabolic": _rebuild_parabolic,
}


def verify_certificate(data: Dict[str, Any], cfg: Optional[RunConfig] = None, rerun: bool = True) -> VerificationReport:
    """
    Static checks, then (optionally) recomputation at every recorded sample.

    The recorded seed and tolerances are used for the rerun, not the current
    configuration's.
    """
    report = static_checks(data)
    if not report.ok or not rerun:
        return report
    base = cfg or get_config()
    tolerances = data["tolerances"]
    recorded = base.with_overrides(
        seed=int(data["seed"]),
        tol=float(tolerances["residual"]),
        rank_cutoff=float(tolerances["rank_cutoff"]),
        gap_ratio=float(tolerances["gap_ratio"]),
        min_gap=float(tolerances["min_gap"]),
        step=float(tolerances["step"]),
    )
    bound = float(tolerances.get("closure_residual", tolerances["residual"]))
    try:
        rebuild = REBUILDERS[data["construction"]](data, recorded)
        for k, sample in enumerate(data["samples"]):
            family, coords = rebuild(sample)
            params = [decode_complex(p) for p in sample["params"]]
            point = family(params)
            if point.residual >= bound:
                report.problems.append(f"sample {k}: recomputed residual {point.residual:.2e} is not below {bound:.0e}")
            rank = _rank(recorded, family, params, coords, bound)
            if rank.rank != int(sample["rank"]["rank"]):
                report.problems.append(f"sample {k}: recomputed rank {rank.rank} differs from recorded {sample['rank']['rank']}")
    except XlkError as e:
        logger.debug(f"Rerun of '{report.label}' failed", exc_info=True)
        report.problems.append(f"rerun failed: {e}")
    report.reran = True
    return report


def require_verified(report: VerificationReport) -> None:
    if not report.ok:
        raise CertificateError(
            f"Certificate '{report.label}' failed verification: {'; '.join(report.problems)}",
            report.to_dict(),
        )
