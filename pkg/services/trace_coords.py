"""
Trace coordinates on the equal-trace slice of the rank-3 free group character variety.

For a triple (G1, G2, G3) with common trace a and T = tr G1G2G3:
    (x, y, z) = (tr G1G2, tr G1G3, tr G2G3)
    b = a(a + T)
    c = 4 - 3a^2 - T^2 - a^3 T
and P = xyz + x^2 + y^2 + z^2 - b(x + y + z) - c vanishes.
"""

import cmath
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from services.braids import BraidWord
from services.errors import (
    DegenerateLiftError,
    DomainError,
    MeridianTraceZeroError,
    NoPointsError,
    ReducibilityError,
    SolverDivergenceError,
    StrandMismatchError,
    UnequalTraceError,
)
from services.matrices import Mat2, is_exact, to_complex
from services.polynomials import LaurentPoly, exact_scalar, format_scalar, truncated_reduce
from services.solver_safety import (
    DivergenceBreaker,
    SolverLimits,
    gauss_newton,
    numeric_jacobian,
    random_complex,
)

logger = logging.getLogger(__name__)

COORD_NAMES = ("x", "y", "z", "b", "c")


@dataclass(frozen=True)
class TraceCoord:
    """(x, y, z, b, c) with optional meridian trace a; scalars or polynomials."""

    x: Any
    y: Any
    z: Any
    b: Any
    c: Any
    a: Any = None

    @classmethod
    def symbolic(cls) -> "TraceCoord":
        return cls(*(LaurentPoly.var(name) for name in COORD_NAMES))

    @classmethod
    def from_vector(cls, values: Sequence[complex], a: Optional[complex] = None) -> "TraceCoord":
        return cls(*(complex(v) for v in values[:5]), a=a)

    def as_tuple(self) -> Tuple[Any, Any, Any, Any, Any]:
        return (self.x, self.y, self.z, self.b, self.c)

    def vector(self) -> np.ndarray:
        return np.array([to_complex(v) for v in self.as_tuple()], dtype=complex)

    def triple_trace(self) -> Any:
        """T = b/a - a; needs the meridian trace."""
        if self.a is None:
            raise DomainError("Meridian trace is not recorded on these coordinates")
        return self.b / self.a - self.a


def fricke_P(coords: TraceCoord) -> Any:
    x, y, z, b, c = coords.as_tuple()
    return x * y * z + x * x + y * y + z * z - b * (x + y + z) - c


def _traces_equal(values: Sequence[Any], tol: float) -> bool:
    if all(is_exact(v) for v in values):
        return all(v == values[0] for v in values)
    scale = max(1.0, max(abs(to_complex(v)) for v in values))
    return all(abs(to_complex(v) - to_complex(values[0])) <= tol * scale for v in values)


def coords_from_triple(g1: Mat2, g2: Mat2, g3: Mat2, tol: float = 1e-9) -> TraceCoord:
    """Trace coordinates of an equal-trace triple."""
    traces = [g1.trace(), g2.trace(), g3.trace()]
    if not _traces_equal(traces, tol):
        raise UnequalTraceError(
            "Triple does not have a common trace",
            {"traces": [str(t) for t in traces]},
        )
    a = traces[0]
    t = (g1 @ g2 @ g3).trace()
    x = (g1 @ g2).trace()
    y = (g1 @ g3).trace()
    z = (g2 @ g3).trace()
    b = a * (a + t)
    c = 4 - 3 * a * a - t * t - a * a * a * t
    return TraceCoord(x, y, z, b, c, a=a)


# ============================================
# B3 ACTION
# ============================================

def act(letter: Tuple[int, int], coords: TraceCoord) -> TraceCoord:
    """
    Action of sigma_1^±1, sigma_2^±1 on (x, y, z, b, c); b and c are fixed.

        s1: (x, z, b - y - xz)      S1: (x, b - z - xy, y)
        s2: (y, b - x - yz, z)      S2: (b - y - xz, x, z)
    """
    x, y, z, b, c = coords.as_tuple()
    if letter == (1, 1):
        new = (x, z, b - y - x * z)
    elif letter == (1, -1):
        new = (x, b - z - x * y, y)
    elif letter == (2, 1):
        new = (y, b - x - y * z, z)
    elif letter == (2, -1):
        new = (b - y - x * z, x, z)
    else:
        raise DomainError(f"No trace action for letter {letter}; only sigma_1, sigma_2 act")
    return TraceCoord(*new, b, c, a=coords.a)


def act_word(b: BraidWord, coords: TraceCoord) -> TraceCoord:
    if b.n != 3:
        raise StrandMismatchError(f"Trace action needs a 3-strand braid, got B_{b.n}")
    for letter in b.letters:
        coords = act(letter, coords)
    return coords


# ============================================
# QUOTIENT CLAIM
# ============================================

@dataclass
class QuotientClaimReport:
    braid: str
    holds: bool
    Pbar: LaurentPoly
    Xbar: LaurentPoly
    Ybar: LaurentPoly
    Zbar: LaurentPoly
    branch_factor: LaurentPoly
    membership: Optional[Tuple[sympy.Expr, sympy.Expr]] = None
    witness: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "braid": self.braid,
            "holds": self.holds,
            "Pbar": str(self.Pbar),
            "Xbar": str(self.Xbar),
            "Ybar": str(self.Ybar),
            "Zbar": str(self.Zbar),
            "branch_factor": str(self.branch_factor),
            "membership": None if self.membership is None else [format_scalar(v) for v in self.membership],
            "witness": self.witness,
        }


def _solve_exact(columns: List[LaurentPoly], rhs: LaurentPoly) -> Optional[List[sympy.Expr]]:
    """Constants v with sum_j v_j * columns[j] = rhs coefficientwise; None if inconsistent."""
    keys = sorted(set(rhs.terms) | {k for col in columns for k in col.terms}, key=repr)
    matrix = sympy.Matrix([[col.terms.get(k, 0) for col in columns] for k in keys])
    target = sympy.Matrix([rhs.terms.get(k, 0) for k in keys])
    try:
        solution, free = matrix.gauss_jordan_solve(target)
    except ValueError:
        return None
    solution = solution.xreplace({symbol: 0 for symbol in free})
    return [exact_scalar(v) for v in solution]


def branch_factor(coords: TraceCoord, image: TraceCoord) -> Any:
    """Y - b + y + xz; nonzero on the component where Y = y is forced."""
    return image.y - coords.b + coords.y + coords.x * coords.z


def quotient_claim_check(
    b: BraidWord,
    seed: int = 42,
    limits: Optional[SolverLimits] = None,
    margin: float = 1e-3,
    tol: float = 1e-10,
) -> QuotientClaimReport:
    """
    Decide whether X = z, Z = x force Y = y on a component of V.

    The reduced classes modulo (b, x^2, y^2, z^2) are reported. The claim fails
    when Y - b + y + xz is an exact constant combination of X - z and Z - x;
    otherwise it holds once a numeric point with X = z, Z = x and a branch factor
    of size at least margin is found.
    """
    sym = TraceCoord.symbolic()
    image = act_word(b, sym)
    q = branch_factor(sym, image)
    report = QuotientClaimReport(
        braid=str(b),
        holds=False,
        Pbar=truncated_reduce(fricke_P(sym)),
        Xbar=truncated_reduce(image.x),
        Ybar=truncated_reduce(image.y),
        Zbar=truncated_reduce(image.z),
        branch_factor=q,
    )
    membership = _solve_exact([image.x - sym.z, image.z - sym.x], q)
    if membership is not None:
        report.membership = (membership[0], membership[1])
        logger.info(f"Quotient claim fails for {b}: branch factor lies in the span of X - z, Z - x")
        return report

    limits = limits or SolverLimits()
    rng = np.random.default_rng(seed)

    def residual(v: np.ndarray) -> np.ndarray:
        point = TraceCoord(v[0], v[1], v[2], v[3], 0j)
        img = act_word(b, point)
        return np.array([img.x - point.z, img.z - point.x])

    breaker = DivergenceBreaker(limits.breaker_threshold)
    for start in range(limits.max_starts):
        if not breaker.can_continue():
            break
        try:
            result = gauss_newton(residual, random_complex(rng, 4), limits)
        except SolverDivergenceError:
            breaker.record_failure()
            continue
        x, y, z, bb = result.x
        point = TraceCoord(x, y, z, bb, 0j)
        img = act_word(b, point)
        factor = complex(branch_factor(point, img))
        if result.residual < tol and abs(factor) >= margin and abs(img.y - y) < 1e-8:
            breaker.record_success()
            report.holds = True
            report.witness = {
                "x": _pair(x), "y": _pair(y), "z": _pair(z), "b": _pair(bb),
                "branch_factor": abs(factor),
                "residual": result.residual,
                "start": start,
            }
            logger.info(f"Quotient claim holds for {b} (witness after {start + 1} starts)")
            return report
        breaker.record_failure()
    logger.warning(f"No witness for the quotient claim of {b}; reporting it as not verified")
    return report


def _pair(value: complex) -> List[float]:
    value = complex(value)
    return [value.real, value.imag]


# ============================================
# MERIDIAN RECOVERY AND LIFTING
# ============================================

def recover_meridian(b: complex, c: complex, anchor: Optional[complex] = None) -> Tuple[complex, complex]:
    """
    Meridian trace a and triple trace T from (b, c).

    s = a^2 solves s^3 - (4+b)s^2 + (4+2b-c)s - b^2 = 0. Without an anchor the
    root farthest from the parabolic values s = 0, 4 is taken; with an anchor
    (a previous value of a) the nearest root and sign are taken.
    """
    b, c = complex(b), complex(c)
    roots = np.roots([1, -(4 + b), 4 + 2 * b - c, -(b * b)])
    if anchor is not None:
        s = min(roots, key=lambda r: abs(r - complex(anchor) ** 2))
    else:
        s = max(roots, key=lambda r: (round(min(abs(r), abs(r - 4)), 9), r.real, r.imag))
    a = cmath.sqrt(complex(s))
    if anchor is not None:
        if abs(-a - anchor) < abs(a - anchor):
            a = -a
    elif a.real < 0 or (a.real == 0 and a.imag < 0):
        a = -a
    if abs(a) < 1e-12:
        raise MeridianTraceZeroError("Meridian trace vanishes", {"b": _pair(b), "c": _pair(c)})
    return a, b / a - a


def _pair_kappa(a: complex, x: complex) -> complex:
    """tr[G, H] - 2 for two trace-a matrices with tr GH = x."""
    return 2 * a * a + x * x - a * a * x - 4


def is_reducible(coords: TraceCoord, tol: float = 1e-9) -> bool:
    """Reducible locus: all pair commutators trivial in trace and T = T'."""
    a = complex(coords.a)
    x, y, z = complex(coords.x), complex(coords.y), complex(coords.z)
    t = complex(coords.triple_trace())
    t_other = a * (x + y + z) - a ** 3 - t
    scale = max(1.0, abs(a) ** 3, abs(x) ** 2, abs(y) ** 2, abs(z) ** 2)
    kappas = [_pair_kappa(a, v) for v in (x, y, z)]
    return all(abs(k) <= tol * scale for k in kappas) and abs(t - t_other) <= tol * scale


def lift_triple(
    coords: TraceCoord,
    a: Optional[complex] = None,
    anchor_alpha: Optional[complex] = None,
    tol: float = 1e-9,
) -> Tuple[Mat2, Mat2, Mat2]:
    """
    Matrix triple realizing numeric trace coordinates.

    G1 = [[α, 1], [0, 1/α]] and G2 = [[α, 0], [r, 1/α]] with α + 1/α = a and
    r = x - α² - α⁻²; G3 solves the trace conditions and det = 1, choosing the
    quadratic root whose triple trace matches T = b/a - a.

    Raises:
        MeridianTraceZeroError: a = 0
        ReducibilityError: coordinates on the reducible locus
        DegenerateLiftError: parabolic meridian, vanishing r or a double root
    """
    a = complex(coords.a if a is None else a)
    if abs(a) < 1e-12:
        raise MeridianTraceZeroError("Cannot lift coordinates with meridian trace 0")
    coords = TraceCoord(*coords.as_tuple(), a=a)
    if is_reducible(coords, tol):
        raise ReducibilityError("Coordinates lie on the reducible locus", {"a": _pair(a)})
    if abs(a * a - 4) < tol:
        raise DegenerateLiftError("Parabolic meridian: lift is not unique", {"a": _pair(a)})

    x, y, z = complex(coords.x), complex(coords.y), complex(coords.z)
    target_t = complex(coords.triple_trace())
    roots = [(a + cmath.sqrt(a * a - 4)) / 2, (a - cmath.sqrt(a * a - 4)) / 2]
    if anchor_alpha is not None:
        alpha = min(roots, key=lambda r: abs(r - anchor_alpha))
    else:
        alpha = max(roots, key=lambda r: (round(abs(r), 12), r.real, r.imag))
    inv = 1 / alpha
    r = x - alpha ** 2 - inv ** 2
    if abs(r) < tol:
        raise DegenerateLiftError("G1 and G2 share an eigenvector; normal form unavailable", {"r": _pair(r)})
    delta = alpha - inv
    s0 = y - a * inv
    q0 = z - a * inv
    quad = [-(r + delta * delta), r * a + delta * (q0 + s0), -(q0 * s0 + r)]

    g1 = Mat2(alpha, 1 + 0j, 0j, inv)
    g2 = Mat2(alpha, 0j, r, inv)
    if abs(quad[0]) < tol:
        candidates = [-quad[2] / quad[1]]
    else:
        candidates = list(np.roots(quad))
    lifts = []
    for p in candidates:
        p = complex(p)
        g3 = Mat2(p, (q0 - delta * p) / r, s0 - delta * p, a - p)
        lifts.append((abs((g1 @ g2 @ g3).trace() - target_t), g3))
    lifts.sort(key=lambda item: item[0])
    if len(lifts) == 2 and abs(lifts[0][0] - lifts[1][0]) < tol * max(1.0, abs(target_t)):
        raise DegenerateLiftError("Both roots give the same triple trace", {"T": _pair(target_t)})
    g3 = lifts[0][1]

    check = coords_from_triple(g1, g2, g3, tol=1e-6)
    scale = max(1.0, float(np.max(np.abs(coords.vector()))))
    deviation = float(np.max(np.abs(check.vector() - coords.vector())))
    if deviation > tol * scale:
        raise DegenerateLiftError(
            f"Lift does not reproduce the coordinates (deviation {deviation:.2e})",
            {"deviation": deviation},
        )
    return g1, g2, g3


# ============================================
# THE SUBVARIETY U
# ============================================

@dataclass
class UPoint:
    """Numeric point of V with X = z, Z = x, Y = y."""

    coords: TraceCoord
    residuals: Dict[str, float]
    a: complex
    T: complex
    branch: complex
    c_slice: complex = 0j

    def vector(self) -> np.ndarray:
        return self.coords.vector()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coords": {name: _pair(v) for name, v in zip(COORD_NAMES, self.coords.as_tuple())},
            "a": _pair(self.a),
            "T": _pair(self.T),
            "branch_factor": abs(self.branch),
            "residuals": dict(self.residuals),
        }


def u_residuals(b: BraidWord, coords: TraceCoord) -> Dict[str, float]:
    image = act_word(b, coords)
    return {
        "P": abs(complex(fricke_P(coords))),
        "X-z": abs(complex(image.x - coords.z)),
        "Z-x": abs(complex(image.z - coords.x)),
        "Y-y": abs(complex(image.y - coords.y)),
    }


def _c_from_P(x: complex, y: complex, z: complex, b: complex) -> complex:
    return x * y * z + x * x + y * y + z * z - b * (x + y + z)


def make_upoint(b: BraidWord, v: Sequence[complex], anchor: Optional[complex] = None) -> UPoint:
    x, y, z, bb = (complex(t) for t in v[:4])
    c = _c_from_P(x, y, z, bb)
    a, t = recover_meridian(bb, c, anchor)
    coords = TraceCoord(x, y, z, bb, c, a=a)
    image = act_word(b, coords)
    return UPoint(
        coords=coords,
        residuals=u_residuals(b, coords),
        a=a,
        T=t,
        branch=complex(branch_factor(coords, image)),
        c_slice=c,
    )


def _canonical_key(point: UPoint) -> Tuple[float, ...]:
    key: List[float] = []
    for v in point.vector():
        key.extend((round(v.real, 8), round(v.imag, 8)))
    return tuple(key)


def find_U_points(
    b: BraidWord,
    count: int = 5,
    seed: int = 42,
    tol: float = 1e-10,
    margin: float = 1e-3,
    limits: Optional[SolverLimits] = None,
) -> List[UPoint]:
    """
    Multi-start search for points of U.

    Each start fixes a random slice c = c0 and solves {P, X - z, Z - x, Y - y}
    in (x, y, z, b) by damped Gauss-Newton. Accepted points have residuals below
    tol, a branch factor and |T ∓ 2| at least margin, a nonzero meridian trace,
    a nondegenerate lift, and are pairwise farther apart than 1e-4.

    Raises:
        NoPointsError: No start produced an acceptable point
    """
    if b.n != 3:
        raise StrandMismatchError(f"U-points need a 3-strand braid, got B_{b.n}")
    limits = limits or SolverLimits()
    rng = np.random.default_rng(seed)
    breaker = DivergenceBreaker(limits.breaker_threshold)
    found: List[UPoint] = []
    rejected: Dict[str, int] = {}

    def reject(reason: str) -> None:
        rejected[reason] = rejected.get(reason, 0) + 1
        breaker.record_failure()

    starts = 0
    while starts < limits.max_starts and len(found) < count and breaker.can_continue():
        starts += 1
        c0 = complex(random_complex(rng, 1)[0])
        x0 = random_complex(rng, 4)

        def residual(v: np.ndarray, c0: complex = c0) -> np.ndarray:
            point = TraceCoord(v[0], v[1], v[2], v[3], c0)
            img = act_word(b, point)
            return np.array([
                fricke_P(point),
                img.x - point.z,
                img.z - point.x,
                img.y - point.y,
            ])

        try:
            result = gauss_newton(residual, x0, limits)
        except SolverDivergenceError:
            reject("diverged")
            continue
        if result.residual >= tol:
            reject("residual")
            continue
        try:
            point = make_upoint(b, result.x)
        except MeridianTraceZeroError:
            reject("meridian-trace-zero")
            continue
        if max(point.residuals.values()) >= tol:
            reject("residual")
            continue
        if abs(point.branch) < margin:
            reject("branch")
            continue
        if abs(point.T - 2) <= margin or abs(point.T + 2) <= margin:
            reject("triple-trace")
            continue
        if abs(point.a) <= margin:
            reject("meridian-trace-zero")
            continue
        try:
            lift_triple(point.coords)
        except (DegenerateLiftError, ReducibilityError, MeridianTraceZeroError):
            reject("lift")
            continue
        if any(np.linalg.norm(point.vector() - other.vector()) <= 1e-4 for other in found):
            reject("duplicate")
            continue
        breaker.record_success()
        found.append(point)
        logger.debug(f"U-point {len(found)}/{count} after {starts} starts")

    if not found:
        raise NoPointsError(
            f"No U-points found for {b} after {starts} starts",
            {"braid": str(b), "starts": starts, "rejected": rejected},
        )
    if len(found) < count:
        logger.warning(f"Only {len(found)}/{count} U-points found for {b} after {starts} starts")
    logger.info(f"Found {len(found)} U-points for {b} ({starts} starts, rejected {rejected})")
    return sorted(found, key=_canonical_key)


# ============================================
# LOCAL CHART OF U
# ============================================

@dataclass
class UChart:
    """
    Two-parameter chart of U near a base point.

    Two of (x, y, z, b) are free; the other two solve X = z, Z = x by Newton
    from the base point. c follows from P = 0.
    """

    braid: BraidWord
    base: UPoint
    free: Tuple[int, int]
    limits: SolverLimits = field(default_factory=SolverLimits)

    @property
    def dependent(self) -> Tuple[int, int]:
        rest = [k for k in range(4) if k not in self.free]
        return (rest[0], rest[1])

    def point(self, params: Sequence[complex]) -> UPoint:
        base = self.base.vector()[:4]
        fixed = base.copy()
        fixed[self.free[0]] += complex(params[0])
        fixed[self.free[1]] += complex(params[1])
        dep = self.dependent

        def residual(w: np.ndarray) -> np.ndarray:
            v = fixed.copy()
            v[dep[0]], v[dep[1]] = w[0], w[1]
            point = TraceCoord(v[0], v[1], v[2], v[3], 0j)
            img = act_word(self.braid, point)
            return np.array([img.x - point.z, img.z - point.x])

        result = gauss_newton(residual, base[list(dep)], self.limits)
        v = fixed.copy()
        v[dep[0]], v[dep[1]] = result.x[0], result.x[1]
        return make_upoint(self.braid, v, anchor=self.base.a)


def u_family(b: BraidWord, point: UPoint, limits: Optional[SolverLimits] = None) -> UChart:
    """Chart around point using the best-conditioned pair of free coordinates."""
    base = point.vector()[:4]

    def constraints(v: np.ndarray) -> np.ndarray:
        p = TraceCoord(v[0], v[1], v[2], v[3], 0j)
        img = act_word(b, p)
        return np.array([img.x - p.z, img.z - p.x])

    jac = numeric_jacobian(constraints, base, 1e-7)
    best: Optional[Tuple[float, Tuple[int, int]]] = None
    for i in range(4):
        for j in range(i + 1, 4):
            dep = [k for k in range(4) if k not in (i, j)]
            sv = np.linalg.svd(jac[:, dep], compute_uv=False)
            score = float(sv[-1] / max(sv[0], 1e-300))
            if best is None or score > best[0] + 1e-12:
                best = (score, (i, j))
    if best is None or best[0] < 1e-8:
        raise SolverDivergenceError("No well-conditioned chart of U at this point", {"score": best[0] if best else 0.0})
    logger.debug(f"U chart free coordinates {[COORD_NAMES[k] for k in best[1]]} (conditioning {best[0]:.2e})")
    return UChart(b, point, best[1], limits or SolverLimits())
