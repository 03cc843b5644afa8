"""
Rational tangles, tangle replacement, c-closures and Riley polynomials.

A rational tangle is built in a fixed frame around the crossing it replaces:
the over-strand enters at NW and leaves at SE, the under-strand enters at NE
and leaves at SW. In this frame the replaced crossing has Wirtinger sign -1;
crossings with sign +1 see the reflected frame, which negates every sign.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import gcd
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy

from services.diagrams import Crossing, PDCode, crossing_defects, fox_determinant, propagate
from services.errors import (
    ConventionError,
    DomainError,
    NotAKnotError,
    ParseError,
    RileyRootError,
    TangleOrientationError,
    TrivialKnotError,
)
from services.matrices import FreeWord, Mat2, eval_word, is_exact, reciprocal, to_complex
from services.polynomials import LaurentPoly, reduce_mod_monic

logger = logging.getLogger(__name__)


class Port(str, Enum):
    NW = "NW"
    NE = "NE"
    SW = "SW"
    SE = "SE"


class Flow(str, Enum):
    IN = "in"
    OUT = "out"


@dataclass
class End:
    """Boundary end of a strand: the edge sitting at a port and its flow."""
    strand: int
    edge: int
    flow: Flow


def _sgn(value: float) -> int:
    return 1 if value > 0 else -1


# Direction of travel at a twist crossing, for an end flowing out / in.
_VERTICAL_VECTORS = {
    "A": {Flow.OUT: (2, -1), Flow.IN: (-2, 1)},
    "B": {Flow.OUT: (-2, -1), Flow.IN: (2, 1)},
}
_HORIZONTAL_VECTORS = {
    "A": {Flow.OUT: (1, -2), Flow.IN: (-1, 2)},
    "B": {Flow.OUT: (1, 2), Flow.IN: (-1, -2)},
}


class _TangleBuilder:
    """Grows a tangle by bottom (vertical) and right (horizontal) twists."""

    def __init__(self, from_infinity: bool, reverse_first: bool = False, reverse_second: bool = False):
        def flows(reverse: bool) -> Tuple[Flow, Flow]:
            return (Flow.OUT, Flow.IN) if reverse else (Flow.IN, Flow.OUT)

        f1, f2 = flows(reverse_first), flows(reverse_second)
        if from_infinity:
            self.ports = {
                Port.NW: End(1, 0, f1[0]), Port.SW: End(1, 0, f1[1]),
                Port.NE: End(2, 1, f2[0]), Port.SE: End(2, 1, f2[1]),
            }
        else:
            self.ports = {
                Port.NW: End(1, 0, f1[0]), Port.NE: End(1, 0, f1[1]),
                Port.SW: End(2, 1, f2[0]), Port.SE: End(2, 1, f2[1]),
            }
        self.crossings: List[Crossing] = []
        self.next_edge = 2

    def twist(self, vertical: bool, amount: int) -> None:
        for _ in range(abs(amount)):
            self._crossing(vertical, 1 if amount > 0 else -1)

    def _crossing(self, vertical: bool, handedness: int) -> None:
        pa, pb = (Port.SW, Port.SE) if vertical else (Port.NE, Port.SE)
        vectors = _VERTICAL_VECTORS if vertical else _HORIZONTAL_VECTORS
        a_end, b_end = self.ports[pa], self.ports[pb]
        slots = {}
        for key, end in (("A", a_end), ("B", b_end)):
            new = self.next_edge
            self.next_edge += 1
            slots[key] = (end.edge, new) if end.flow == Flow.OUT else (new, end.edge)
            end.edge = new
        over, under = ("B", "A") if handedness == 1 else ("A", "B")
        ends = {"A": a_end, "B": b_end}
        ox, oy = vectors[over][ends[over].flow]
        ux, uy = vectors[under][ends[under].flow]
        sign = _sgn(ox * uy - oy * ux)
        label = f"r{len(self.crossings) + 1}"
        self.crossings.append(Crossing(label, slots[under], slots[over], sign))
        self.ports[pa], self.ports[pb] = b_end, a_end

    def fits_frame(self) -> bool:
        return (
            self.ports[Port.NW].flow == Flow.IN
            and self.ports[Port.NE].flow == Flow.IN
            and self.ports[Port.SW].flow == Flow.OUT
            and self.ports[Port.SE].flow == Flow.OUT
        )


def _apply_terms(builder: _TangleBuilder, terms: Sequence[int]) -> None:
    k = len(terms)
    for index, amount in enumerate(terms):
        # the last term is horizontal and the kinds alternate backwards
        horizontal = (k - 1 - index) % 2 == 0
        builder.twist(vertical=not horizontal, amount=amount)


def _fraction(terms: Sequence[int]) -> Tuple[int, int]:
    k = len(terms)
    n, d = (1, 0) if k % 2 == 0 else (0, 1)
    for index, amount in enumerate(terms):
        if (k - 1 - index) % 2 == 0:
            n = n + amount * d
        else:
            d = d + amount * n
    return n, d


# ============================================
# RATIONAL TANGLES
# ============================================

@dataclass
class RationalTangle:
    """
    Rational tangle in Conway notation, oriented to fit the replacement frame.

    The fraction is a_k + 1/(a_{k-1} + ...), stored as (numerator, denominator).
    """

    terms: Tuple[int, ...]
    crossings: List[Crossing]
    ports: Dict[Port, End]
    fraction: Tuple[int, int]

    @classmethod
    def from_terms(cls, terms: Sequence[int]) -> "RationalTangle":
        terms = tuple(int(a) for a in terms)
        if not terms:
            raise ParseError("A rational tangle needs at least one term")
        from_infinity = len(terms) % 2 == 0
        for reverse_second in (False, True):
            builder = _TangleBuilder(from_infinity, reverse_second=reverse_second)
            _apply_terms(builder, terms)
            if builder.fits_frame():
                return cls(terms, builder.crossings, builder.ports, _fraction(terms))
        raise TangleOrientationError(
            f"Tangle {' '.join(map(str, terms))} joins the two entry ends; it cannot replace a crossing",
            {"terms": list(terms), "fraction": list(_fraction(terms))},
        )

    @classmethod
    def parse(cls, text: str) -> "RationalTangle":
        try:
            terms = [int(token) for token in text.replace(",", " ").split()]
        except ValueError:
            raise ParseError(f"Bad tangle '{text}': expected integers like \"2 1\"")
        return cls.from_terms(terms)

    @property
    def value(self) -> Optional[sympy.Rational]:
        n, d = self.fraction
        return sympy.Rational(n, d) if d else None

    def port_edges(self) -> Dict[Port, int]:
        return {port: end.edge for port, end in self.ports.items()}

    def __str__(self) -> str:
        return " ".join(map(str, self.terms))

    def to_dict(self) -> Dict[str, Any]:
        n, d = self.fraction
        return {
            "terms": list(self.terms),
            "fraction": [n, d],
            "crossings": [c.to_dict() for c in self.crossings],
            "ports": {port.value: [end.edge, end.flow.value] for port, end in self.ports.items()},
        }


@dataclass(frozen=True)
class TwoBridge:
    """Two-bridge knot (p, q): p odd >= 3, 0 < q < p, gcd(p, q) = 1."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 3 or self.p % 2 == 0:
            raise DomainError(f"Two-bridge knots need odd p >= 3, got p = {self.p}")
        if not 0 < self.q < self.p:
            raise DomainError(f"Expected 0 < q < p, got ({self.p}, {self.q})")
        if gcd(self.p, self.q) != 1:
            raise DomainError(f"p and q must be coprime, got ({self.p}, {self.q})")

    @classmethod
    def parse(cls, text: str) -> "TwoBridge":
        p, sep, q = text.partition("/")
        try:
            return cls(int(p), int(q))
        except ValueError:
            raise ParseError(f"Bad two-bridge knot '{text}': expected p/q")

    def candidates(self) -> List["TwoBridge"]:
        """The normalizations that present the same knot or its mirror."""
        inv = pow(self.q, -1, self.p)
        seen: List[TwoBridge] = []
        for q in (self.q, self.p - self.q, inv, self.p - inv):
            tb = TwoBridge(self.p, q)
            if tb not in seen:
                seen.append(tb)
        return seen

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def c_closure(tangle: RationalTangle, validate: bool = True) -> TwoBridge:
    """
    Two-bridge knot closing the tangle with one crossing opposite to c.

    Appending the crossing turns the fraction n/d into n/(n + d), so p = |n + d|.

    Raises:
        NotAKnotError: The closure is a two-component link
        TrivialKnotError: The closure is the unknot
    """
    n, d = tangle.fraction
    p = abs(n + d)
    if p % 2 == 0:
        raise NotAKnotError(
            f"c-closure of tangle {tangle} is a link (p = {p})",
            {"terms": list(tangle.terms), "p": p},
        )
    if p == 1:
        raise TrivialKnotError(f"c-closure of tangle {tangle} is the unknot", {"terms": list(tangle.terms)})
    q = (n * (-1 if n + d > 0 else 1)) % p
    tb = TwoBridge(p, q)
    if validate:
        pd = closure_diagram(tangle)
        det = fox_determinant(pd)
        if pd.component_count() != 1 or det != p:
            raise ConventionError(
                f"Closure diagram of {tangle} disagrees with the fraction (determinant {det}, expected {p})",
                {"terms": list(tangle.terms), "determinant": det, "components": pd.component_count()},
            )
    logger.debug(f"c-closure of tangle {tangle} (fraction {n}/{d}) is the two-bridge knot {tb}")
    return tb


def closure_diagram(tangle: RationalTangle) -> PDCode:
    """Closed diagram of the c-closure: one extra vertical twist, then NW-SW and NE-SE joined."""
    from_infinity = len(tangle.terms) % 2 == 0
    for reverse_first in (False, True):
        for reverse_second in (False, True):
            builder = _TangleBuilder(from_infinity, reverse_first, reverse_second)
            _apply_terms(builder, tangle.terms)
            builder.twist(vertical=True, amount=1)
            pd = _join_ports(builder, ((Port.NW, Port.SW), (Port.NE, Port.SE)))
            if pd is not None:
                pd.name = f"c-closure({tangle})"
                pd.validate()
                return pd
    raise TangleOrientationError(f"No orientation closes tangle {tangle}")


def _join_ports(builder: _TangleBuilder, pairs: Sequence[Tuple[Port, Port]]) -> Optional[PDCode]:
    pd = PDCode(crossings=list(builder.crossings))
    free: List[int] = []
    for first, second in pairs:
        e1, e2 = builder.ports[first], builder.ports[second]
        if e1.flow == e2.flow:
            return None
        inward, outward = (e1, e2) if e1.flow == Flow.IN else (e2, e1)
        if inward.edge == outward.edge:
            free.append(inward.edge)
            continue
        pd = pd.relabel({inward.edge: outward.edge})
        for end in builder.ports.values():
            if end.edge == inward.edge:
                end.edge = outward.edge
    pd.free_edges = [e for e in free if e not in {x for c in pd.crossings for x in c.edges()}]
    return pd


# ============================================
# TANGLE REPLACEMENT
# ============================================

def _frame_edges(c: Crossing) -> Dict[Port, int]:
    return {Port.NW: c.over[0], Port.NE: c.under[0], Port.SW: c.under[1], Port.SE: c.over[1]}


def _frame_sign(c_sign: int) -> int:
    return -c_sign


def tangle_replace(pd: PDCode, label: str, tangle: RationalTangle) -> PDCode:
    """
    Replace crossing label by the tangle; edges outside the crossing keep their ids.

    Tangle-internal edges are numbered after the largest existing edge. A tangle
    strand with no crossing merges the two exterior edges it connects.
    """
    c = pd.crossing(label)
    frame = _frame_edges(c)
    offset = max(pd.edges) + 1
    mapping: Dict[int, int] = {}
    merges: Dict[int, int] = {}
    for port, end in tangle.ports.items():
        host = frame[port]
        if end.edge in mapping and mapping[end.edge] != host:
            merges[host] = mapping[end.edge]
        else:
            mapping[end.edge] = host
    local_edges = {e for x in tangle.crossings for e in x.edges()}
    for edge in sorted(local_edges):
        mapping.setdefault(edge, offset + edge)

    factor = _frame_sign(c.sign)
    spliced = [
        Crossing(f"{c.label}.{x.label}", x.under, x.over, x.sign * factor).relabel(mapping)
        for x in tangle.crossings
    ]
    crossings = [x for x in pd.crossings if x.label != c.label] + spliced
    result = PDCode(
        crossings=[x.relabel(merges) for x in crossings],
        name=f"{pd.name}[{c.label}:{tangle}]",
        free_edges=[merges.get(e, e) for e in pd.free_edges],
        designated={k: v for k, v in pd.designated.items() if v != c.label},
        meta=dict(pd.meta),
    )
    replaced = dict(result.meta.get("replaced", {}))
    replaced[c.label] = str(tangle)
    result.meta["replaced"] = replaced
    if merges:
        result.meta["merged_edges"] = {str(k): v for k, v in merges.items()}
    result.validate()
    logger.debug(
        f"Replaced crossing '{c.label}' by tangle {tangle}: {len(pd.crossings)} -> {len(result.crossings)} crossings"
    )
    return result


def replacement_boundary(over: Mat2, under: Mat2, c_sign: int = -1) -> Dict[Port, Mat2]:
    """Port matrices the tangle must reproduce to act like the crossing it replaces."""
    if c_sign == 1:
        out = over @ under @ over.inverse()
    else:
        out = over.inverse() @ under @ over
    return {Port.NW: over, Port.SE: over, Port.NE: under, Port.SW: out}


def tangle_defect(tangle: RationalTangle, boundary: Mapping[Port, Mat2], c_sign: int = -1) -> np.ndarray:
    """
    Replacement condition as a complex residual vector.

    The four port edges are seeded with the boundary matrices and the tangle is
    filled in from its outermost crossings; every crossing relation that is not
    met contributes its entries. Zero exactly when the boundary extends over
    the tangle.
    """
    factor = _frame_sign(c_sign)
    local = PDCode(crossings=[
        Crossing(x.label, x.under, x.over, x.sign * factor) for x in tangle.crossings
    ])
    seeds: Dict[int, Mat2] = {}
    extra: List[complex] = []
    for port in Port:
        edge = tangle.ports[port].edge
        value = boundary[port]
        if edge in seeds:
            extra.extend(to_complex(e) for e in (value - seeds[edge]).entries)
        else:
            seeds[edge] = value
    if not local.crossings:
        return np.array(extra, dtype=complex)
    rep = propagate(local, seeds, strict=False)
    values: List[complex] = list(extra)
    for _, under_defect, over_defect in crossing_defects(local, rep):
        values.extend(to_complex(e) for e in under_defect.entries)
        values.extend(to_complex(e) for e in over_defect.entries)
    return np.array(values, dtype=complex)


# ============================================
# RILEY POLYNOMIALS
# ============================================

M = LaurentPoly.var("m")
U = LaurentPoly.var("u")


def two_bridge_word(tb: TwoBridge) -> FreeWord:
    """x^e1 y^e2 x^e3 ... with e_i = (-1)^floor(i q / p); q is taken odd."""
    q = tb.q if tb.q % 2 == 1 else tb.q - tb.p
    letters = []
    for i in range(1, tb.p):
        exponent = 1 if ((i * q) // tb.p) % 2 == 0 else -1
        letters.append(("x" if i % 2 == 1 else "y", exponent))
    return FreeWord(tuple(letters))


def riley_generators(m: Any = M, u: Any = U) -> Tuple[Mat2, Mat2]:
    """G = [[m, 1], [0, 1/m]] and H = [[m, 0], [u, 1/m]]."""
    inv = reciprocal(m)
    zero = 0
    return Mat2(m, 1, zero, inv), Mat2(m, zero, u, inv)


def riley_polynomial(tb: TwoBridge) -> LaurentPoly:
    """
    Riley polynomial of the two-bridge knot in (m, u), monic in u.

    With W the word evaluated at the normal forms G, H, returns the (1,2)
    entry of WG - HW.

    Raises:
        ConventionError: A structural check on WG - HW fails
    """
    g, h = riley_generators()
    w = eval_word(two_bridge_word(tb), {"x": g, "y": h})
    e = w @ g - h @ w
    e11, e12, e21, e22 = (LaurentPoly.coerce(v) for v in e.entries)
    if not e11.is_zero() or not e22.is_zero():
        raise ConventionError(
            f"Diagonal of WG - HW is not zero for {tb}",
            {"E11": str(e11), "E22": str(e22)},
        )
    if e12.is_zero():
        raise ConventionError(f"Riley polynomial of {tb} vanishes identically")
    if not (e21 + U * e12).is_zero():
        try:
            remainder = reduce_mod_monic(e21, e12, "u")
        except DomainError as e:
            raise ConventionError(f"Cannot reduce E21 modulo the Riley polynomial of {tb}: {e}")
        if not remainder.is_zero():
            raise ConventionError(f"E21 is not divisible by E12 for {tb}", {"remainder": str(remainder)})
    degree = e12.degree("u")
    if degree != (tb.p - 1) // 2:
        raise ConventionError(
            f"Riley polynomial of {tb} has u-degree {degree}, expected {(tb.p - 1) // 2}",
            {"polynomial": str(e12)},
        )
    lead = e12.coefficients_in("u")[degree]
    if lead.is_unit_monomial():
        e12 = e12 * lead.inverse()
    return e12


def riley_roots(poly: LaurentPoly, m: complex, exclude: float = 1e-9) -> List[complex]:
    """Nonzero u-roots at a numeric meridian eigenvalue, in a fixed order."""
    coefficients = poly.coefficients_in("u")
    degree = max(coefficients)
    coeffs = [coefficients.get(k, LaurentPoly()).evaluate({"m": m}) for k in range(degree, -1, -1)]
    roots = [complex(r) for r in np.roots(coeffs)] if degree > 0 else []
    roots = [r for r in roots if abs(r) >= exclude]
    if not roots:
        raise RileyRootError(
            f"No Riley root off u = 0 at m = {m}",
            {"polynomial": str(poly), "m": [complex(m).real, complex(m).imag]},
        )
    return sorted(roots, key=lambda r: (round(r.real, 9), round(r.imag, 9)))


def centralizer_matrix(g: Mat2, t: Any, tol: float = 1e-10) -> Mat2:
    """
    Matrix commuting with the upper-triangular G = [[m, 1], [0, 1/m]].

    Returns [[t, (t - 1/t)/(m - 1/m)], [0, 1/t]] when m^2 != 1 and
    [[m, t], [0, 1/m]] otherwise.

    Raises:
        DomainError: t = 0, or the result does not commute with G
    """
    if t == 0:
        raise DomainError("Centralizer parameter t must be nonzero")
    m = g.a
    exact = is_exact(m) and is_exact(t)
    m_sq_is_one = (m * m == 1) if exact else abs(to_complex(m) ** 2 - 1) < tol
    if m_sq_is_one:
        a = Mat2(m, t, 0, reciprocal(m))
    else:
        a = Mat2(t, (t - reciprocal(t)) * reciprocal(m - reciprocal(m)), 0, reciprocal(t))
    check = a @ g - g @ a
    if exact:
        ok = all(e == 0 for e in check.entries)
    else:
        ok = check.norm() < tol * max(1.0, a.norm() * g.norm())
    if not ok:
        raise DomainError("Centralizer matrix does not commute with G", {"matrix": str(g)})
    return a


@dataclass
class RileyNormalization:
    """Two-bridge normalization whose Riley roots satisfy a tangle's replacement condition."""
    tangle: str
    raw: TwoBridge
    chosen: TwoBridge
    polynomial: LaurentPoly
    sample_m: complex
    defects: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tangle": self.tangle,
            "raw": str(self.raw),
            "chosen": str(self.chosen),
            "polynomial": str(self.polynomial),
            "defects": list(self.defects),
        }


def normalize_riley(
    tangle: RationalTangle,
    sample_m: complex = 1.3 + 0.4j,
    tol: float = 1e-8,
    c_sign: int = -1,
) -> RileyNormalization:
    """
    Pick the (p, q) normalization of the c-closure compatible with the tangle
    replacing a crossing of Wirtinger sign c_sign.

    Raises:
        ConventionError: No candidate's roots satisfy the replacement condition
    """
    raw = c_closure(tangle)
    tried: Dict[str, List[float]] = {}
    for candidate in raw.candidates():
        poly = riley_polynomial(candidate)
        defects = []
        for u in riley_roots(poly, sample_m):
            g, h = riley_generators(sample_m, u)
            boundary = replacement_boundary(g, h, c_sign)
            defects.append(float(np.max(np.abs(tangle_defect(tangle, boundary, c_sign)))))
        tried[str(candidate)] = defects
        if defects and max(defects) < tol:
            logger.debug(f"Tangle {tangle}: Riley normalization {candidate} (raw {raw})")
            return RileyNormalization(str(tangle), raw, candidate, poly, sample_m, defects)
    raise ConventionError(
        f"No Riley normalization of {raw} matches tangle {tangle}",
        {"tangle": str(tangle), "tried": tried},
    )
