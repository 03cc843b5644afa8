"""
Diagrammatic representation families.

Construction I replaces a crossing between a two-bridge knot T and a split
unknot O by a rational tangle and extends a representation of T over the
new knot with two parameters: the meridian eigenvalue m and a centralizer
parameter t. The parabolic construction replaces two crossings and solves the
two replacement conditions for a family with every meridian of trace 2.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.diagrams import (
    FamilyPoint,
    PDCode,
    RepAssignment,
    load_pd,
    max_trace_spread,
    propagate,
    wirtinger_residual,
)
from services.errors import (
    DomainError,
    NotAKnotError,
    ParseError,
    PropagationError,
    SolverDivergenceError,
)
from services.matrices import Mat2, trace_commutator
from services.solver_safety import (
    DivergenceBreaker,
    SolverLimits,
    gauss_newton,
    numeric_jacobian,
    random_complex,
    with_restarts,
)
from services.tangles import (
    RationalTangle,
    RileyNormalization,
    TwoBridge,
    c_closure,
    centralizer_matrix,
    normalize_riley,
    replacement_boundary,
    riley_generators,
    riley_polynomial,
    riley_roots,
    tangle_defect,
    tangle_replace,
)

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent.parent / "data"
INSTANCES_FILE = DATA_DIR / "construction1.json"

DEFAULT_M_VALUES = (1.2, 1.45, 1.7, 1.95, 2.2)
DEFAULT_T_VALUES = (0.6, 0.8, 1.25, 1.5, 1.9)


def default_grid() -> List[Tuple[complex, complex]]:
    return [(complex(m), complex(t)) for m in DEFAULT_M_VALUES for t in DEFAULT_T_VALUES]


def _role(pd: PDCode, name: str) -> int:
    roles = pd.meta.get("roles", {})
    if name not in roles:
        raise ParseError(f"Diagram '{pd.name}' does not mark the '{name}' edge", {"roles": roles})
    return int(roles[name])


def track_root(poly, m_from: complex, u_from: complex, m_to: complex, steps: int = 16) -> complex:
    """Follow a Riley root from m_from to m_to along the straight segment."""
    u = u_from
    for k in range(1, steps + 1):
        m = m_from + (m_to - m_from) * k / steps
        u = min(riley_roots(poly, m), key=lambda r: abs(r - u))
    return u


# ============================================
# CONSTRUCTION I
# ============================================

CONTINUATION_STEPS = 6


@dataclass
class Construction1Family:
    """
    (m, t) -> representation of the replaced knot, with Riley branches tracked from a base m.

    T carries the Riley pair (G, H) on its two seed edges. The crossing c must
    see G over the unknot meridian A·H_r·A^-1. When the unknot seed edge is not
    the under-strand entering c, the seed matrix X is solved for so that
    Wirtinger propagation over the split link delivers that meridian at c; X
    is followed from the base parameters by continuation, so the family is a
    smooth function of (m, t).
    """

    pd_knot: PDCode
    t_poly: Any
    r_poly: Any
    base_m: complex
    base_u_t: complex
    base_u_r: complex
    roles: Dict[str, int]
    tol: float = 1e-8
    pd_link: Optional[PDCode] = None
    target_edge: Optional[int] = None
    base_t: complex = 1.0
    base_x: Optional[np.ndarray] = None
    limits: SolverLimits = field(default_factory=SolverLimits)

    def matrices(self, m: complex, t: complex) -> Dict[str, Mat2]:
        u_t = track_root(self.t_poly, self.base_m, self.base_u_t, m)
        u_r = track_root(self.r_poly, self.base_m, self.base_u_r, m)
        g, h_t = riley_generators(m, u_t)
        _, h_r = riley_generators(m, u_r)
        a = centralizer_matrix(g, t)
        return {"G": g, "H": h_t, "A": a, "H_unknot": h_r.conjugate_by(a)}

    @property
    def solves_unknot(self) -> bool:
        return self.target_edge is not None and self.target_edge != self.roles["unknot"]

    def _unknot_residual(self, m: complex, t: complex) -> Callable[[np.ndarray], np.ndarray]:
        mats = self.matrices(m, t)
        fixed = {self.roles["t_first"]: mats["G"], self.roles["t_second"]: mats["H"]}

        def residual(v: np.ndarray) -> np.ndarray:
            x = Mat2(*(complex(e) for e in v))
            rep = propagate(self.pd_link, {**fixed, self.roles["unknot"]: x}, strict=False)
            defect = rep[self.target_edge] - mats["H_unknot"]
            return np.array([complex(e) for e in defect.entries] + [complex(x.det()) - 1])

        return residual

    def solve_base(self, seed: int = 42) -> int:
        """Seeded multi-start for the unknot seed matrix at (base_m, base_t); returns the number of starts."""
        if not self.solves_unknot:
            return 0
        residual = self._unknot_residual(self.base_m, self.base_t)
        rng = np.random.default_rng(seed)
        breaker = DivergenceBreaker(self.limits.breaker_threshold)
        starts = 0
        while starts < self.limits.max_starts and breaker.can_continue():
            starts += 1
            try:
                result = gauss_newton(residual, random_complex(rng, 4, scale=1.5), self.limits)
            except (SolverDivergenceError, DomainError, PropagationError):
                breaker.record_failure()
                continue
            self.base_x = result.x
            logger.debug(f"Unknot seed matrix solved after {starts} starts (residual {result.residual:.2e})")
            return starts
        raise SolverDivergenceError(
            f"No unknot seed matrix meets the crossing condition after {starts} starts",
            {"starts": starts, "target_edge": self.target_edge},
        )

    def unknot_matrix(self, m: complex, t: complex) -> Mat2:
        """Matrix on the unknot seed edge at (m, t)."""
        if not self.solves_unknot:
            return self.matrices(m, t)["H_unknot"]
        if self.base_x is None:
            self.solve_base()
        x = self.base_x
        for k in range(1, CONTINUATION_STEPS + 1):
            s = k / CONTINUATION_STEPS
            step_m = self.base_m + (m - self.base_m) * s
            step_t = self.base_t + (t - self.base_t) * s
            x = gauss_newton(self._unknot_residual(step_m, step_t), x, self.limits).x
        return Mat2(*(complex(e) for e in x))

    def seeds(self, m: complex, t: complex) -> RepAssignment:
        mats = self.matrices(m, t)
        return {
            self.roles["t_first"]: mats["G"],
            self.roles["t_second"]: mats["H"],
            self.roles["unknot"]: self.unknot_matrix(m, t),
        }

    def __call__(self, params: Sequence[complex]) -> FamilyPoint:
        m, t = complex(params[0]), complex(params[1])
        rep = propagate(self.pd_knot, self.seeds(m, t), tol=self.tol)
        return FamilyPoint((m, t), rep, wirtinger_residual(self.pd_knot, rep))

    def mixed_trace(self, m: complex, t: complex) -> complex:
        """tr(G · H_unknot): a T-meridian times the unknot meridian."""
        mats = self.matrices(m, t)
        return complex((mats["G"] @ mats["H_unknot"]).trace())


@dataclass
class Construction1Result:
    pd_link: PDCode
    pd_knot: PDCode
    crossing: str
    tangle: RationalTangle
    t_two_bridge: TwoBridge
    normalization: RileyNormalization
    branch: int
    family: Construction1Family
    points: List[FamilyPoint] = field(default_factory=list)
    knot_label: str = ""

    @property
    def max_residual(self) -> float:
        return max((p.residual for p in self.points), default=0.0)

    def summary(self) -> Dict[str, Any]:
        return {
            "link": self.pd_link.name,
            "crossing": self.crossing,
            "tangle": str(self.tangle),
            "c_closure": self.normalization.to_dict(),
            "t_two_bridge": str(self.t_two_bridge),
            "branch": self.branch,
            "knot_crossings": len(self.pd_knot.crossings),
            "knot_components": self.pd_knot.component_count(),
            "knot_label": self.knot_label,
            "points": len(self.points),
            "max_residual": self.max_residual,
        }


def _check_split_link(pd: PDCode, label: str, roles: Dict[str, int]) -> None:
    if pd.component_count() != 2:
        raise DomainError(
            f"Construction I needs a two-component link, '{pd.name}' has {pd.component_count()}",
        )
    c = pd.crossing(label)
    unknot = set(pd.component_of(roles["unknot"]))
    over_on_unknot = c.over[0] in unknot
    under_on_unknot = c.under[0] in unknot
    if over_on_unknot == under_on_unknot:
        raise DomainError(f"Crossing '{label}' does not join the knot and the unknot component")
    if over_on_unknot:
        raise DomainError(f"Crossing '{label}' must pass the unknot under the knot")
    if roles["t_first"] in unknot or roles["t_second"] in unknot:
        raise DomainError("Knot seed edges lie on the unknot component")


def construction1_family(
    pd_link: PDCode,
    crossing: str,
    tangle: RationalTangle,
    grid: Optional[Sequence[Tuple[complex, complex]]] = None,
    branch: int = 0,
    tol: float = 1e-10,
    knot_label: str = "",
    seed: int = 42,
) -> Construction1Result:
    """
    Two-parameter family of representations of the knot obtained by tangle replacement.

    Args:
        pd_link: Split link T ⊔ O with roles t_first, t_second, unknot and meta two_bridge
        crossing: Label of the crossing joining T and O
        tangle: Rational tangle replacing it
        grid: (m, t) parameter values; the default is the 5x5 grid
        branch: Index of the Riley root of the c-closure at the first grid m
        tol: Residual bound every point must meet
        knot_label: Name recorded in the result
        seed: Seed for the unknot seed matrix search

    Returns:
        Construction1Result with one FamilyPoint per grid value

    Raises:
        NotAKnotError: The c-closure is trivial or a link
        PropagationError: Wirtinger propagation is inconsistent
        SolverDivergenceError: No unknot seed matrix meets the crossing condition
    """
    grid = list(grid) if grid is not None else default_grid()
    roles = {name: _role(pd_link, name) for name in ("t_first", "t_second", "unknot")}
    _check_split_link(pd_link, crossing, roles)
    t_two_bridge = TwoBridge.parse(str(pd_link.meta.get("two_bridge", "3/1")))

    c = pd_link.crossing(crossing)
    normalization = normalize_riley(tangle, c_sign=c.sign)
    t_poly = riley_polynomial(t_two_bridge)
    r_poly = normalization.polynomial

    pd_knot = tangle_replace(pd_link, crossing, tangle)
    if pd_knot.component_count() != 1:
        raise NotAKnotError(
            f"Replacing '{crossing}' by {tangle} leaves {pd_knot.component_count()} components",
        )

    base_m = grid[0][0]
    t_roots = riley_roots(t_poly, base_m)
    r_roots = riley_roots(r_poly, base_m)
    if not 0 <= branch < len(r_roots):
        raise DomainError(f"Branch {branch} out of range; the c-closure has {len(r_roots)} Riley roots")
    family = Construction1Family(
        pd_knot=pd_knot,
        t_poly=t_poly,
        r_poly=r_poly,
        base_m=base_m,
        base_u_t=t_roots[0],
        base_u_r=r_roots[branch],
        roles=roles,
        pd_link=pd_link,
        target_edge=c.under[0],
        base_t=grid[0][1],
    )
    family.solve_base(seed)

    result = Construction1Result(
        pd_link=pd_link,
        pd_knot=pd_knot,
        crossing=crossing,
        tangle=tangle,
        t_two_bridge=t_two_bridge,
        normalization=normalization,
        branch=branch,
        family=family,
        knot_label=knot_label,
    )
    for m, t in grid:
        point = family((m, t))
        if point.residual >= tol:
            raise PropagationError(
                f"Residual {point.residual:.2e} at (m, t) = ({m}, {t}) exceeds {tol:.0e}",
                {"m": [m.real, m.imag], "t": [t.real, t.imag], "residual": point.residual},
            )
        result.points.append(point)
    spread = max(max_trace_spread(p.assignment) for p in result.points)
    logger.info(
        f"Construction I on '{pd_link.name}' at '{crossing}' with tangle {tangle}: "
        f"{len(result.points)} points, max residual {result.max_residual:.2e}, trace spread {spread:.2e}"
    )
    return result


# ============================================
# BUNDLED INSTANCES
# ============================================

def load_instances(path: Optional[Path] = None) -> Dict[str, Dict[str, Any]]:
    path = path or INSTANCES_FILE
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ParseError(f"Instance file not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"Instance file {path} is not valid JSON: {e}")
    return data.get("instances", {})


def load_instance(name: str, data_dir: Optional[Path] = None) -> Tuple[PDCode, str, RationalTangle, Dict[str, Any]]:
    """(link, crossing, tangle, entry) of a bundled construction I instance."""
    data_dir = data_dir or DATA_DIR
    instances = load_instances(data_dir / "construction1.json")
    if name not in instances:
        raise ParseError(f"Unknown instance '{name}'; known: {', '.join(sorted(instances))}")
    entry = instances[name]
    pd = load_pd(data_dir / entry["link"])
    if entry.get("reverse"):
        pd = pd.reverse_component(_role(pd, str(entry["reverse"])))
    return pd, str(entry["crossing"]), RationalTangle.parse(str(entry["tangle"])), entry


# ============================================
# PARABOLIC FAMILY
# ============================================

def parabolic_unknot_matrix(x: complex, y: complex) -> Mat2:
    """[[1 + xy, x^2], [-y^2, 1 - xy]]: determinant 1 and trace 2 for all x, y."""
    return Mat2(1 + x * y, x * x, -y * y, 1 - x * y)


def meets_single_arc(pd: PDCode, t1_edge: int, t2_edge: int) -> bool:
    """
    T1 edges at crossings with T2 form one consecutive run along T1.

    A syntactic reading of "T2 meets T1 only along a single arc".
    """
    t1 = pd.traverse(t1_edge)
    t2 = set(pd.component_of(t2_edge))
    t1_set = set(t1)
    touched = set()
    for c in pd.crossings:
        strands = [c.over, c.under]
        if any(s[0] in t2 for s in strands) and any(s[0] in t1_set for s in strands):
            for s in strands:
                if s[0] in t1_set:
                    touched.update(s)
    if not touched:
        return False
    flags = [edge in touched for edge in t1]
    # cyclic runs of consecutive touched edges
    runs = sum(1 for k in range(len(flags)) if flags[k] and not flags[k - 1])
    return runs == 1 or all(flags)


@dataclass
class ParabolicChart:
    """One free coordinate among (t, x, y); the other two solve the replacement conditions."""

    residual: Callable[[np.ndarray], np.ndarray]
    base: np.ndarray
    free: int
    seeds_for: Callable[[np.ndarray], RepAssignment]
    pd_knot: PDCode
    limits: SolverLimits = field(default_factory=SolverLimits)
    tol: float = 1e-8

    @property
    def dependent(self) -> List[int]:
        return [k for k in range(3) if k != self.free]

    def solve(self, s: complex) -> np.ndarray:
        dep = self.dependent
        fixed = self.base.copy()
        fixed[self.free] += s

        def reduced(w: np.ndarray) -> np.ndarray:
            v = fixed.copy()
            v[dep] = w
            return self.residual(v)

        result = gauss_newton(reduced, self.base[dep], self.limits)
        v = fixed.copy()
        v[dep] = result.x
        return v

    def __call__(self, params: Sequence[complex]) -> FamilyPoint:
        v = self.solve(complex(params[0]))
        rep = propagate(self.pd_knot, self.seeds_for(v), tol=self.tol)
        return FamilyPoint((complex(params[0]),), rep, wirtinger_residual(self.pd_knot, rep))


@dataclass
class ParabolicResult:
    pd_link: PDCode
    pd_knot: PDCode
    tangles: Dict[str, RationalTangle]
    solution: np.ndarray
    chart: ParabolicChart
    points: List[FamilyPoint] = field(default_factory=list)
    single_arc: bool = True

    @property
    def max_residual(self) -> float:
        return max((p.residual for p in self.points), default=0.0)

    def max_trace_deviation(self) -> float:
        worst = 0.0
        for point in self.points:
            for m in point.assignment.values():
                worst = max(worst, abs(complex(m.trace()) - 2))
        return worst

    def summary(self) -> Dict[str, Any]:
        names = ("t", "x", "y")
        return {
            "link": self.pd_link.name,
            "tangles": {label: str(r) for label, r in self.tangles.items()},
            "knot_crossings": len(self.pd_knot.crossings),
            "solution": {n: [complex(v).real, complex(v).imag] for n, v in zip(names, self.solution)},
            "free_coordinate": names[self.chart.free],
            "points": len(self.points),
            "max_residual": self.max_residual,
            "max_trace_deviation": self.max_trace_deviation(),
            "single_arc": self.single_arc,
        }


SAMPLE_OFFSETS = (0.0, 0.15, -0.15, 0.3, -0.3, 0.45, -0.45)


def parabolic_family(
    pd_link: PDCode,
    c1: str,
    c2: str,
    r1: RationalTangle,
    r2: RationalTangle,
    samples: int = 3,
    seed: int = 42,
    tol: float = 1e-10,
    margin: float = 1e-3,
    limits: Optional[SolverLimits] = None,
) -> ParabolicResult:
    """
    One-parameter family of parabolic representations after a double tangle replacement.

    T1 carries the parabolic trefoil representation, T2 the centralizer element
    [[1, t], [0, 1]] and the unknot the matrix of parabolic_unknot_matrix(x, y).
    The two replacement conditions are solved in (t, x, y) by damped
    Gauss-Newton from seeded random starts.

    Raises:
        DomainError: T2 meets T1 along more than one arc
        SolverDivergenceError: No start reached an irreducible solution
    """
    limits = limits or SolverLimits()
    roles = {name: _role(pd_link, name) for name in ("t1_first", "t1_second", "t2", "unknot")}
    single_arc = meets_single_arc(pd_link, roles["t1_first"], roles["t2"])
    if not single_arc:
        raise DomainError(f"T2 meets T1 along more than one arc in '{pd_link.name}'")
    for tangle in (r1, r2):
        c_closure(tangle)

    cross1, cross2 = pd_link.crossing(c1), pd_link.crossing(c2)
    pd_knot = tangle_replace(tangle_replace(pd_link, c1, r1), c2, r2)
    g = Mat2(1 + 0j, 1 + 0j, 0j, 1 + 0j)
    h = Mat2(1 + 0j, 0j, -1 + 0j, 1 + 0j)

    def seeds_for(v: np.ndarray) -> RepAssignment:
        t, x, y = (complex(e) for e in v)
        return {
            roles["t1_first"]: g,
            roles["t1_second"]: h,
            roles["t2"]: Mat2(1 + 0j, t, 0j, 1 + 0j),
            roles["unknot"]: parabolic_unknot_matrix(x, y),
        }

    def residual(v: np.ndarray) -> np.ndarray:
        rep = propagate(pd_link, seeds_for(v), strict=False)
        parts = []
        for c, tangle in ((cross1, r1), (cross2, r2)):
            boundary = replacement_boundary(rep[c.over[0]], rep[c.under[0]], c.sign)
            parts.append(tangle_defect(tangle, boundary, c.sign))
        return np.concatenate(parts)

    rng = np.random.default_rng(seed)
    breaker = DivergenceBreaker(limits.breaker_threshold)

    @with_restarts(max_attempts=limits.max_attempts)
    def attempt() -> np.ndarray:
        result = gauss_newton(residual, random_complex(rng, 3, scale=1.5), limits)
        v = result.x
        if result.residual >= tol:
            raise SolverDivergenceError(f"Residual {result.residual:.2e} above {tol:.0e}")
        x, y = v[1], v[2]
        if abs(complex(trace_commutator(g, parabolic_unknot_matrix(x, y))) - 2) <= margin:
            raise SolverDivergenceError("Solution is reducible on the unknot")
        return v

    solution = None
    starts = 0
    while solution is None and starts < limits.max_starts and breaker.can_continue():
        starts += 1
        try:
            solution = attempt()
            breaker.record_success()
        except SolverDivergenceError:
            breaker.record_failure()
    if solution is None:
        raise SolverDivergenceError(
            f"No parabolic solution for '{pd_link.name}' after {starts} starts",
            {"starts": starts},
        )

    jac = numeric_jacobian(residual, solution, limits.fd_step)
    best = None
    for free in range(3):
        rest = [k for k in range(3) if k != free]
        sv = np.linalg.svd(jac[:, rest], compute_uv=False)
        score = float(sv[-1] / max(sv[0], 1e-300))
        if best is None or score > best[0] + 1e-12:
            best = (score, free)
    chart = ParabolicChart(residual, solution, best[1], seeds_for, pd_knot, limits)
    logger.info(
        f"Parabolic solution after {starts} starts: t={solution[0]:.6f}, x={solution[1]:.6f}, "
        f"y={solution[2]:.6f}; free coordinate {'txy'[best[1]]}"
    )

    result = ParabolicResult(pd_link, pd_knot, {c1: r1, c2: r2}, solution, chart, single_arc=single_arc)
    for s in SAMPLE_OFFSETS[:samples]:
        point = chart((s,))
        if point.residual >= tol:
            raise PropagationError(
                f"Parabolic residual {point.residual:.2e} at offset {s} exceeds {tol:.0e}",
                {"offset": s, "residual": point.residual},
            )
        result.points.append(point)
    return result
