"""
Checks behind the dimension certificates.

Irreducibility, intertwiners between triples with equal characters, the
mapping-torus relations of the braid construction, the Klein bottle
classifier, hypothesis reports and Jacobian-rank witnesses.
"""

import cmath
import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from services.braids import (
    BraidWord,
    Involution,
    MAPPING_LOOP,
    artin_act,
    closure_assignment,
    closure_is_knot,
    closure_pd,
    disk_boundary_word,
    generator_names,
    perm_image,
    star,
    strand_holonomy,
    twist_tuple,
)
from services.diagrams import FamilyPoint, PDCode, RepAssignment, max_trace_spread, wirtinger_residual
from services.errors import (
    ClosureNotKnotError,
    DegenerateIntertwinerError,
    DegenerateLiftError,
    InconclusiveCheckError,
    IndeterminateRankError,
    MeridianTraceZeroError,
    NoPointsError,
    NoIntertwinerError,
    ReducibilityError,
    RelationResidualError,
    SolverDivergenceError,
    StencilResidualError,
    XlkError,
)
from services.matrices import FreeWord, I2, Mat2, eval_word, trace_commutator
from services.solver_safety import (
    DivergenceBreaker,
    SolverLimits,
    gauss_newton,
    random_complex,
    with_restarts,
)
from services.trace_coords import UChart, UPoint, find_U_points, lift_triple, u_family

logger = logging.getLogger(__name__)


# ============================================
# IRREDUCIBILITY AND INTERTWINERS
# ============================================

def _short_words(mats: Sequence[Mat2]) -> List[Mat2]:
    words = list(mats)
    for i, j in combinations(range(len(mats)), 2):
        words.append(mats[i] @ mats[j])
    return words


def irreducible(mats: Sequence[Mat2], tol: float = 1e-9) -> bool:
    """
    True when some pair among the matrices and their pairwise products
    has commutator trace away from 2, i.e. no common eigenvector.
    """
    words = _short_words(mats)
    exact = all(m.is_exact() for m in mats)
    for x, y in combinations(words, 2):
        kappa = trace_commutator(x, y)
        if exact:
            if kappa != 2:
                return True
        elif abs(complex(kappa) - 2) > tol:
            return True
    return False


def triple_character(triple: Sequence[Mat2]) -> np.ndarray:
    """Traces of singles, pairs and the full product."""
    mats = [m.to_complex() for m in triple]
    values = [m.trace() for m in mats]
    values += [(mats[i] @ mats[j]).trace() for i, j in combinations(range(len(mats)), 2)]
    product = I2
    for m in mats:
        product = product @ m
    values.append(product.trace())
    return np.array([complex(v) for v in values])


def _normalize_sign(a: Mat2) -> Mat2:
    scale = a.norm()
    for entry in a.entries:
        entry = complex(entry)
        if abs(entry) > 1e-12 * scale:
            phase = cmath.phase(entry)
            if -cmath.pi / 2 < phase <= cmath.pi / 2:
                return a
            return -a
    return a


def intertwiner(src: Sequence[Mat2], dst: Sequence[Mat2], tol: float = 1e-8) -> Mat2:
    """
    A with det 1 and dst_i · A = A · src_i, normalized in sign.

    Raises:
        NoIntertwinerError: The characters differ
        DegenerateIntertwinerError: The solution space is not a line
    """
    chi_src, chi_dst = triple_character(src), triple_character(dst)
    deviation = float(np.max(np.abs(chi_src - chi_dst)))
    if deviation > tol * max(1.0, float(np.max(np.abs(chi_src)))):
        raise NoIntertwinerError(
            f"Characters differ by {deviation:.2e}",
            {"deviation": deviation},
        )
    eye = np.eye(2)
    blocks = []
    for s, d in zip(src, dst):
        s_np, d_np = s.to_numpy(), d.to_numpy()
        blocks.append(np.kron(d_np, eye) - np.kron(eye, s_np.T))
    system = np.vstack(blocks)
    _, sv, vh = np.linalg.svd(system)
    scale = max(float(sv[0]), 1.0)
    null_dim = int(np.sum(sv < 1e-7 * scale)) + (4 - len(sv))
    if null_dim != 1:
        raise DegenerateIntertwinerError(
            f"Intertwiner space has dimension {null_dim}",
            {"singular_values": [float(v) for v in sv]},
        )
    vec = vh[-1].conj()
    a = Mat2.from_numpy(vec.reshape(2, 2))
    det = complex(a.det())
    a = a.scale(1 / cmath.sqrt(det))
    a = _normalize_sign(a)
    residual = max((d @ a - a @ s).norm() for s, d in zip(src, dst))
    if residual > tol * max(1.0, max(m.norm() for m in src) * a.norm()):
        raise DegenerateIntertwinerError(f"Intertwiner residual {residual:.2e} above tolerance", {"residual": residual})
    return a


def check_A_squared(a: Mat2, triple_product: Mat2, tol: float = 1e-8, margin: float = 1e-6) -> bool:
    """
    A^2 = -I together with tr A = 0.

    Raises:
        InconclusiveCheckError: The triple product is within margin of ±I
    """
    if triple_product.is_scalar(margin):
        raise InconclusiveCheckError(
            "Triple product is ±I; the A^2 = -I argument does not apply",
            {"distance": min(triple_product.distance(I2), triple_product.distance(-I2))},
        )
    square = a @ a
    return square.distance(-I2) < tol and abs(complex(a.trace())) < tol


# ============================================
# MAPPING-TORUS REPRESENTATIONS
# ============================================

def mapping_torus_residual(b: BraidWord, tau: Involution, gens: Sequence[Mat2], a: Mat2) -> float:
    """max_i |act(b, G)_i - A twist(G)_i A^-1|."""
    moved = artin_act(b, gens)
    twisted = twist_tuple(gens, tau)
    a_inv = a.inverse()
    return max((h - a @ g @ a_inv).norm() for h, g in zip(moved, twisted))


@dataclass
class ClosureRep:
    braid: BraidWord
    pd: PDCode
    assignment: RepAssignment
    residual: float
    trace_spread: float


def assemble_closure_rep(
    b: BraidWord,
    tau: Involution,
    gens: Sequence[Mat2],
    a: Mat2,
    tol: float = 1e-8,
) -> ClosureRep:
    """
    Wirtinger representation of the closure of b·star(b) from a mapping-torus point.

    Raises:
        RelationResidualError: Relations or A^2 = -I fail, or the closure residual is too large
    """
    relation = mapping_torus_residual(b, tau, gens, a)
    square = (a @ a).distance(-I2)
    if relation > tol or square > tol:
        raise RelationResidualError(
            f"Mapping-torus relations fail (relation {relation:.2e}, A^2 + I {square:.2e})",
            {"relation": relation, "A_square": square},
        )
    w = b * star(b, tau)
    pd = closure_pd(w)
    rep = closure_assignment(w, gens)
    residual = wirtinger_residual(pd, rep)
    if residual >= 10 * tol:
        raise RelationResidualError(
            f"Closure residual {residual:.2e} exceeds {10 * tol:.0e}",
            {"residual": residual},
        )
    return ClosureRep(w, pd, rep, residual, max_trace_spread(rep))


class KleinCase(str, Enum):
    NOT_A_REP = "not-a-rep"
    CASE_1 = "1"
    CASE_2 = "2"
    CASE_3 = "3"


def klein_relation_residual(ma: Mat2, mb: Mat2) -> float:
    return (ma @ mb @ ma.inverse()).distance(mb.inverse())


def klein_classify(ma: Mat2, mb: Mat2, tol: float = 1e-9) -> KleinCase:
    """Representations of <a, b | a b a^-1 = b^-1> by the type of b."""
    exact = ma.is_exact() and mb.is_exact()
    if exact:
        if ma @ mb @ ma.inverse() != mb.inverse():
            return KleinCase.NOT_A_REP
        if mb.is_scalar():
            return KleinCase.CASE_1
        trace = mb.trace()
        return KleinCase.CASE_3 if trace in (2, -2) else KleinCase.CASE_2
    if klein_relation_residual(ma, mb) >= tol:
        return KleinCase.NOT_A_REP
    if mb.is_scalar(tol):
        return KleinCase.CASE_1
    trace = complex(mb.trace())
    if abs(trace - 2) > tol and abs(trace + 2) > tol:
        return KleinCase.CASE_2
    return KleinCase.CASE_3


@dataclass
class HypothesisReport:
    """Boundary Klein bottle and double cover conditions at one mapping-torus point."""

    condition_a: bool
    condition_b: bool
    inconclusive: bool
    disk_klein_residual: float
    strand_klein_residual: float
    disk_pair_kappa: float
    strand_pair_kappa: float
    condition_b_kappa: float
    A_square_residual: float
    closure_relation_residual: float
    relation_residual: float
    strand_word: str
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        if self.condition_a and self.condition_b:
            return "hypothesis verified"
        return "hypothesis not verified"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "inconclusive": self.inconclusive,
            "disk_klein_residual": self.disk_klein_residual,
            "strand_klein_residual": self.strand_klein_residual,
            "disk_pair_kappa": self.disk_pair_kappa,
            "strand_pair_kappa": self.strand_pair_kappa,
            "condition_b_kappa": self.condition_b_kappa,
            "A_square_residual": self.A_square_residual,
            "closure_relation_residual": self.closure_relation_residual,
            "relation_residual": self.relation_residual,
            "strand_word": self.strand_word,
            "diagnostics": dict(self.diagnostics),
        }


def _max_kappa(mats: Sequence[Mat2]) -> float:
    words = _short_words(mats)
    return max(
        (abs(complex(trace_commutator(x, y)) - 2) for x, y in combinations(words, 2)),
        default=0.0,
    )


def hypothesis_check(
    b: BraidWord,
    tau: Involution,
    gens: Sequence[Mat2],
    a: Mat2,
    tol: float = 1e-8,
    margin: float = 1e-6,
) -> HypothesisReport:
    """
    Boundary and double-cover conditions for the mapping-torus representation (G, A).

    (a) The disk boundary pair (g1...gn, a) and the strand pair (g1, u) are
        irreducible, after their Klein relations are re-verified.
    (b) G together with A G A^-1 is irreducible.
    """
    diagnostics: Dict[str, Any] = {}
    relation = mapping_torus_residual(b, tau, gens, a)
    names = generator_names(b.n)
    assign: Dict[str, Mat2] = dict(zip(names, gens))
    assign[MAPPING_LOOP] = a

    delta = eval_word(disk_boundary_word(b.n), assign)
    disk_residual = klein_relation_residual(a, delta)
    disk_kappa = abs(complex(trace_commutator(delta, a)) - 2)

    strand_word = FreeWord()
    try:
        strand_word = strand_holonomy(b, tau, 1)
        holonomy = eval_word(strand_word, assign)
        strand_residual = klein_relation_residual(holonomy, gens[0])
        strand_kappa = abs(complex(trace_commutator(gens[0], holonomy)) - 2)
    except XlkError as e:
        diagnostics["strand_error"] = str(e)
        strand_residual, strand_kappa = float("inf"), 0.0

    inconclusive = relation > tol or disk_residual > tol or strand_residual > tol
    if inconclusive:
        diagnostics.update({
            "relation_residual": relation,
            "disk_klein_residual": disk_residual,
            "strand_klein_residual": strand_residual,
        })
        logger.warning(f"Klein relations not verified for {b}: {diagnostics}")

    conjugates = [a @ g @ a.inverse() for g in gens]
    b_kappa = _max_kappa(list(gens) + conjugates)

    w = b * star(b, tau)
    try:
        closure = wirtinger_residual(closure_pd(w), closure_assignment(w, gens))
    except XlkError as e:
        diagnostics["closure_error"] = str(e)
        closure = float("inf")

    return HypothesisReport(
        condition_a=(not inconclusive) and disk_kappa > margin and strand_kappa > margin,
        condition_b=b_kappa > margin,
        inconclusive=inconclusive,
        disk_klein_residual=disk_residual,
        strand_klein_residual=strand_residual,
        disk_pair_kappa=disk_kappa,
        strand_pair_kappa=strand_kappa,
        condition_b_kappa=b_kappa,
        A_square_residual=(a @ a).distance(-I2),
        closure_relation_residual=closure,
        relation_residual=relation,
        strand_word=str(strand_word),
        diagnostics=diagnostics,
    )


@dataclass
class MappingTorusSolution:
    gens: Tuple[Mat2, ...]
    a: Mat2
    residual: float
    irreducible: bool


def _unpack(v: np.ndarray, n: int) -> Tuple[List[Mat2], Mat2]:
    gens = [Mat2(*(complex(e) for e in v[4 * k:4 * k + 4])) for k in range(n)]
    return gens, Mat2(*(complex(e) for e in v[4 * n:4 * n + 4]))


def solve_mapping_torus(
    b: BraidWord,
    tau: Involution,
    seed: int = 42,
    tol: float = 1e-10,
    margin: float = 1e-3,
    limits: Optional[SolverLimits] = None,
) -> MappingTorusSolution:
    """
    Numeric (G_1..G_n, A) with act(b, G) = A twist(G) A^-1, tr A = 0, det A = 1.

    Unknowns are the matrix entries; det G_i = 1 and equal traces are imposed
    as equations. Starts are drawn until an irreducible solution appears.

    Raises:
        SolverDivergenceError: No start produced an irreducible solution
    """
    limits = limits or SolverLimits()
    n = b.n
    rng = np.random.default_rng(seed)

    def residual(v: np.ndarray) -> np.ndarray:
        gens, a = _unpack(v, n)
        moved = artin_act(b, gens)
        twisted = twist_tuple(gens, tau)
        eqs: List[complex] = []
        for g in gens:
            eqs.append(complex(g.det()) - 1)
        for g in gens[1:]:
            eqs.append(complex(g.trace() - gens[0].trace()))
        for h, g in zip(moved, twisted):
            eqs.extend(complex(e) for e in (h @ a - a @ g).entries)
        eqs.append(complex(a.trace()))
        eqs.append(complex(a.det()) - 1)
        return np.array(eqs)

    @with_restarts(max_attempts=limits.max_attempts)
    def attempt() -> MappingTorusSolution:
        result = gauss_newton(residual, random_complex(rng, 4 * n + 4, scale=1.0), limits)
        if result.residual >= tol:
            raise SolverDivergenceError(f"Residual {result.residual:.2e} above {tol:.0e}")
        gens, a = _unpack(result.x, n)
        if not irreducible(gens, margin):
            raise SolverDivergenceError("Solution is reducible")
        return MappingTorusSolution(tuple(gens), a, result.residual, True)

    breaker = DivergenceBreaker(limits.breaker_threshold)
    for start in range(1, limits.max_starts + 1):
        if not breaker.can_continue():
            break
        try:
            solution = attempt()
        except SolverDivergenceError:
            breaker.record_failure()
            continue
        breaker.record_success()
        logger.info(f"Mapping-torus solution for {b} after {start} starts (residual {solution.residual:.2e})")
        return solution
    raise SolverDivergenceError(
        f"No irreducible mapping-torus representation found for {b}",
        {"braid": str(b), "failures": breaker.total_failures},
    )


@dataclass
class BraidPoint:
    """A U-point lifted to a mapping-torus representation."""
    upoint: UPoint
    gens: Tuple[Mat2, Mat2, Mat2]
    a: Mat2
    a_squared_ok: bool
    closure: ClosureRep


def braid_point(b: BraidWord, tau: Involution, point: UPoint, tol: float = 1e-8) -> BraidPoint:
    """Lift, intertwine and close up one U-point."""
    gens = lift_triple(point.coords)
    src = twist_tuple(gens, tau)
    dst = artin_act(b, gens)
    a = intertwiner(src, dst, tol)
    product = gens[0] @ gens[1] @ gens[2]
    ok = check_A_squared(a, product, tol)
    closure = assemble_closure_rep(b, tau, gens, a, tol)
    return BraidPoint(point, gens, a, ok, closure)


# ============================================
# CHARACTER COORDINATES AND JACOBIAN RANK
# ============================================

@dataclass
class CharCoordinateSet:
    """Trace functions of short words in named generators."""

    generators: List[str]
    words: List[FreeWord]

    @classmethod
    def standard(cls, generators: Sequence[str], max_length: int = 3) -> "CharCoordinateSet":
        gens = list(generators)
        words = [FreeWord.gen(g) for g in gens]
        for length in range(2, max_length + 1):
            for combo in combinations(gens, length):
                words.append(FreeWord(tuple((g, 1) for g in combo)))
        return cls(gens, words)

    @classmethod
    def for_diagram(cls, pd: PDCode, max_length: int = 3) -> "CharCoordinateSet":
        """Arcs are named e<first edge>."""
        return cls.standard([f"e{arc[0]}" for arc in pd.arcs()], max_length)

    def __len__(self) -> int:
        return len(self.words)

    def evaluate(self, assign: Mapping[str, Mat2]) -> np.ndarray:
        return np.array([complex(eval_word(w, assign).trace()) for w in self.words])

    def evaluate_rep(self, rep: Mapping[int, Mat2]) -> np.ndarray:
        return self.evaluate({f"e{edge}": m for edge, m in rep.items()})


@dataclass
class RankResult:
    singular_values: List[float]
    rank: int
    gap: float
    certificate_grade: bool
    full_rank: bool
    max_stencil_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "singular_values": list(self.singular_values),
            "rank": self.rank,
            "gap": self.gap,
            "full_rank": self.full_rank,
            "certificate_grade": self.certificate_grade,
            "max_stencil_residual": self.max_stencil_residual,
        }


FamilyFn = Callable[[Sequence[complex]], FamilyPoint]


def jacobian_rank(
    family: FamilyFn,
    point: Sequence[complex],
    coords: CharCoordinateSet,
    h: float = 1e-5,
    cutoff: float = 1e-3,
    gap_ratio: float = 1e6,
    min_gap: float = 1e2,
    tol: float = 1e-10,
) -> RankResult:
    """
    Rank of the character map at a family point by central differences.

    The rank counts singular values above cutoff times the largest one
    (floored at 1). The gap compares the last accepted singular value with
    the first rejected one, or with the finite-difference noise floor when
    none is rejected.

    Raises:
        StencilResidualError: A stencil point is not a representation
        IndeterminateRankError: The gap is below min_gap
    """
    base = np.array([complex(p) for p in point])
    columns = []
    worst = 0.0
    for k in range(base.size):
        values = []
        for step in (h, -h):
            shifted = base.copy()
            shifted[k] += step
            sample = family(tuple(shifted))
            worst = max(worst, sample.residual)
            if sample.residual > tol:
                raise StencilResidualError(
                    f"Stencil point {k}{'+' if step > 0 else '-'} has residual {sample.residual:.2e}",
                    {"direction": k, "step": step, "residual": sample.residual},
                )
            values.append(coords.evaluate_rep(sample.assignment))
        columns.append((values[0] - values[1]) / (2 * h))
    jac = np.column_stack(columns) if columns else np.zeros((len(coords), 0))
    sv = np.linalg.svd(jac, compute_uv=False) if jac.size else np.zeros(0)
    sv = sorted((float(s) for s in sv), reverse=True)
    scale = max(sv[0] if sv else 0.0, 1.0)
    rank = sum(1 for s in sv if s > cutoff * scale)
    floor = (h * h + np.finfo(float).eps / h) * scale
    accepted = sv[rank - 1] if rank > 0 else scale
    rejected = sv[rank] if rank < len(sv) else 0.0
    gap = accepted / max(rejected, floor)
    full_rank = rank == base.size
    if gap < min_gap:
        raise IndeterminateRankError(
            f"Singular value gap {gap:.2e} is below {min_gap:.0e}",
            {"singular_values": sv, "rank": rank, "gap": gap},
        )
    logger.debug(f"Jacobian rank {rank} (gap {gap:.2e}, singular values {sv})")
    return RankResult(
        singular_values=sv,
        rank=rank,
        gap=float(gap),
        certificate_grade=gap >= gap_ratio,
        full_rank=full_rank,
        max_stencil_residual=worst,
    )


@dataclass
class BraidFamily:
    """(s1, s2) -> closure representation along a chart of U."""

    braid: BraidWord
    tau: Involution
    chart: UChart
    base_alpha: complex

    def __call__(self, params: Sequence[complex]) -> FamilyPoint:
        point = self.chart.point(params)
        gens = lift_triple(point.coords, anchor_alpha=self.base_alpha)
        w = self.braid * star(self.braid, self.tau)
        rep = closure_assignment(w, gens)
        return FamilyPoint(tuple(complex(p) for p in params), rep, wirtinger_residual(closure_pd(w), rep))


def braid_family(b: BraidWord, tau: Involution, point: UPoint, limits: Optional[SolverLimits] = None) -> BraidFamily:
    chart = u_family(b, point, limits)
    gens = lift_triple(point.coords)
    return BraidFamily(b, tau, chart, complex(gens[0].a))


LIFT_ERRORS = (DegenerateLiftError, ReducibilityError, MeridianTraceZeroError)


# ============================================
# CONSTRUCTION II
# ============================================

@dataclass
class Construction2Result:
    braid: BraidWord
    tau: Involution
    points: List[BraidPoint] = field(default_factory=list)
    skipped: Dict[str, int] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((p.closure.residual for p in self.points), default=0.0)

    @property
    def max_A_square_residual(self) -> float:
        return max(((p.a @ p.a).distance(-I2) for p in self.points), default=0.0)

    def summary(self) -> Dict[str, Any]:
        w = self.braid * star(self.braid, self.tau)
        return {
            "braid": str(self.braid),
            "strands": self.braid.n,
            "involution": self.tau.kind.value,
            "star": str(star(self.braid, self.tau)),
            "closure_braid": str(w),
            "closure_crossings": len(w),
            "points": len(self.points),
            "max_residual": self.max_residual,
            "max_A_square_residual": self.max_A_square_residual,
            "all_A_square_ok": all(p.a_squared_ok for p in self.points),
            "skipped": dict(self.skipped),
        }


def construction2_family(
    b: BraidWord,
    tau: Involution,
    count: int = 5,
    seed: int = 42,
    tol: float = 1e-10,
    closure_tol: float = 1e-8,
    limits: Optional[SolverLimits] = None,
) -> Construction2Result:
    """
    U-points of b lifted to representations of the closure of b·star(b).

    Points whose lift or intertwiner degenerates are skipped and counted.

    Raises:
        ClosureNotKnotError: The closure of b·star(b) is not a knot
        NoPointsError: No U-point survived
    """
    if not closure_is_knot(b, tau):
        raise ClosureNotKnotError(
            f"Closure of b·b* is not a knot for b = {b} ({tau.kind.value})",
            {"perm": str(perm_image(b, tau))},
        )
    logger.info("=" * 50)
    logger.info(f"Construction II for {b} ({tau.kind.value}), {count} points, seed {seed}")
    upoints = find_U_points(b, count=count, seed=seed, tol=tol, limits=limits)
    result = Construction2Result(b, tau)
    for point in upoints:
        try:
            result.points.append(braid_point(b, tau, point, closure_tol))
        except (*LIFT_ERRORS, DegenerateIntertwinerError, NoIntertwinerError, InconclusiveCheckError, RelationResidualError) as e:
            name = type(e).__name__
            result.skipped[name] = result.skipped.get(name, 0) + 1
            logger.warning(f"Skipping U-point: {e}")
    if not result.points:
        raise NoPointsError(f"No U-point of {b} lifted to a closure representation", {"skipped": result.skipped})
    logger.info(
        f"Construction II: {len(result.points)} points, max closure residual {result.max_residual:.2e}, "
        f"max |A^2 + I| {result.max_A_square_residual:.2e}"
    )
    logger.info("=" * 50)
    return result
