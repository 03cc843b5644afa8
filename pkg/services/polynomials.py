"""
Exact scalars and Laurent polynomials over the Gaussian rationals, on sympy.

Exact scalars are sympy numbers a + b*I with rational parts. LaurentPoly wraps
an expanded sympy expression in named variables, of which only m and t may
carry negative exponents; expansion is canonical, so equal terms mean equal
polynomials.
"""

import logging
import re
from tokenize import TokenError
from typing import Dict, Iterable, Iterator, List, Mapping, Tuple, Union

import sympy
from sympy.core.sympify import SympifyError
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from services.errors import DomainError, ParseError

logger = logging.getLogger(__name__)

# Canonical variable order; unknown names sort after these, alphabetically
VARIABLE_ORDER: Tuple[str, ...] = ("u", "x", "y", "z", "b", "c", "t", "m")

# Variables allowed to carry negative exponents
UNIT_VARIABLES = frozenset({"m", "t"})

Monomial = Tuple[Tuple[str, int], ...]

I = sympy.I


def variable_key(name: str) -> Tuple[int, Union[int, str]]:
    """Sort key placing known variables first, in canonical order."""
    if name in VARIABLE_ORDER:
        return (0, VARIABLE_ORDER.index(name))
    return (1, name)


# ============================================
# GAUSSIAN RATIONALS
# ============================================

def gaussian(re_part: object = 0, im_part: object = 0) -> sympy.Expr:
    """Exact re + im*I."""
    return sympy.Rational(re_part) + I * sympy.Rational(im_part)


def exact_scalar(value: object) -> sympy.Expr:
    """
    Canonical a + b*I for an exact scalar.

    Raises:
        DomainError: value is a float, a symbol or has irrational parts
    """
    if isinstance(value, bool) or isinstance(value, (float, complex)):
        raise DomainError(f"Cannot use {value!r} as an exact scalar")
    if isinstance(value, int):
        return sympy.Integer(value)
    try:
        number = sympy.sympify(value, strict=True)
    except SympifyError:
        raise DomainError(f"Cannot use {value!r} as an exact scalar")
    if number.is_Rational:
        return number
    if not number.is_number:
        raise DomainError(f"Cannot use {value!r} as an exact scalar")
    re_part, im_part = number.as_real_imag()
    if not (re_part.is_Rational and im_part.is_Rational):
        raise DomainError(f"{value!r} is not a Gaussian rational")
    return re_part + I * im_part


def is_exact_scalar(value: object) -> bool:
    try:
        exact_scalar(value)
    except DomainError:
        return False
    return True


def scalar_inverse(value: object) -> sympy.Expr:
    z = exact_scalar(value)
    if z == 0:
        raise ZeroDivisionError("Exact division by zero")
    return exact_scalar(1 / z)


def format_scalar(value: sympy.Expr) -> str:
    """1/2, 3i, (1/2 - 3i)."""
    re_part, im_part = value.as_real_imag()
    if im_part == 0:
        return _format_rational(re_part)
    if re_part == 0:
        return _format_imaginary(im_part)
    sign = "-" if im_part < 0 else "+"
    return f"({_format_rational(re_part)} {sign} {_format_imaginary(abs(im_part))})"


def _format_rational(value: sympy.Rational) -> str:
    if value.q == 1:
        return str(value.p)
    return f"{value.p}/{value.q}"


def _format_imaginary(value: sympy.Rational) -> str:
    if value == 1:
        return "i"
    if value == -1:
        return "-i"
    return f"{_format_rational(value)}i"


def _looks_negative(value: sympy.Expr) -> bool:
    """True when the canonical text starts with a minus sign."""
    re_part, im_part = value.as_real_imag()
    if im_part == 0:
        return re_part < 0
    if re_part == 0:
        return im_part < 0
    return False


# ============================================
# LAURENT POLYNOMIALS
# ============================================

def _normalize_monomial(exponents: Mapping[str, int]) -> Monomial:
    items = [(var, int(exp)) for var, exp in exponents.items() if exp != 0]
    for var, exp in items:
        if exp < 0 and var not in UNIT_VARIABLES:
            raise DomainError(
                f"Negative exponent {exp} on non-unit variable '{var}'",
                {"variable": var, "exponent": exp},
            )
    items.sort(key=lambda item: variable_key(item[0]))
    return tuple(items)


def _monomial_expr(mono: Monomial) -> sympy.Expr:
    return sympy.Mul(*(sympy.Symbol(var) ** exp for var, exp in mono))


def _split_terms(expr: sympy.Expr) -> Dict[Monomial, sympy.Expr]:
    """Monomial -> Gaussian rational coefficient of an expanded expression."""
    collected: Dict[Monomial, sympy.Expr] = {}
    for term in sympy.Add.make_args(expr):
        if term == 0:
            continue
        coeff = sympy.Integer(1)
        exponents: Dict[str, int] = {}
        for factor in sympy.Mul.make_args(term):
            base, exp = factor.as_base_exp()
            if base.is_Symbol:
                if not exp.is_Integer:
                    raise DomainError(f"Exponent {exp} of '{base}' is not an integer")
                exponents[base.name] = exponents.get(base.name, 0) + int(exp)
            elif factor.is_number:
                coeff = coeff * factor
            else:
                raise DomainError(f"'{factor}' is not a Laurent monomial", {"term": str(term)})
        mono = _normalize_monomial(exponents)
        collected[mono] = collected.get(mono, sympy.Integer(0)) + coeff
    terms = {}
    for mono, coeff in collected.items():
        value = exact_scalar(coeff)
        if value != 0:
            terms[mono] = value
    return terms


class LaurentPoly:
    """
    Laurent polynomial with Gaussian rational coefficients.

    Instances are immutable; every operation returns a new polynomial.
    """

    __slots__ = ("expr", "_terms", "_hash")

    def __init__(self, expr: object = 0):
        if isinstance(expr, LaurentPoly):
            expr = expr.expr
        try:
            value = sympy.sympify(expr, strict=True)
        except SympifyError:
            raise DomainError(f"Cannot build a Laurent polynomial from {expr!r}")
        self.expr: sympy.Expr = sympy.expand(value)
        self._terms = _split_terms(self.expr)
        self._hash = None

    # Constructors ----------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Mapping[Monomial, object]) -> "LaurentPoly":
        return cls(sympy.Add(*(exact_scalar(c) * _monomial_expr(mono) for mono, c in terms.items())))

    @classmethod
    def constant(cls, value: object) -> "LaurentPoly":
        return cls(exact_scalar(value))

    @classmethod
    def var(cls, name: str, exponent: int = 1) -> "LaurentPoly":
        return cls(sympy.Symbol(name) ** exponent)

    @classmethod
    def coerce(cls, value: object) -> "LaurentPoly":
        if isinstance(value, LaurentPoly):
            return value
        return cls.constant(value)

    @classmethod
    def parse(cls, text: str) -> "LaurentPoly":
        """Parse the canonical text form (e.g. ``u + m^2 - 1 + m^-2``)."""
        return _parse(text)

    # Introspection ---------------------------------------------------

    @property
    def terms(self) -> Dict[Monomial, sympy.Expr]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Monomial, sympy.Expr]]:
        return iter(self._terms.items())

    @property
    def variables(self) -> List[str]:
        names = {var for mono in self._terms for var, _ in mono}
        return sorted(names, key=variable_key)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(mono == () for mono in self._terms)

    def constant_value(self) -> sympy.Expr:
        if not self.is_constant():
            raise DomainError(f"Polynomial {self} is not constant")
        return self._terms.get((), sympy.Integer(0))

    def is_unit_monomial(self) -> bool:
        """Single term whose monomial only uses unit variables."""
        if len(self._terms) != 1:
            return False
        (mono,) = self._terms
        return all(var in UNIT_VARIABLES for var, _ in mono)

    def degree(self, var: str) -> int:
        """Highest exponent of var; raises on the zero polynomial."""
        if not self._terms:
            raise DomainError("Degree of the zero polynomial is undefined")
        return max(dict(mono).get(var, 0) for mono in self._terms)

    def min_degree(self, var: str) -> int:
        if not self._terms:
            raise DomainError("Degree of the zero polynomial is undefined")
        return min(dict(mono).get(var, 0) for mono in self._terms)

    def coefficients_in(self, var: str) -> Dict[int, "LaurentPoly"]:
        """Split into powers of var: {k: coefficient of var^k}."""
        buckets: Dict[int, Dict[Monomial, sympy.Expr]] = {}
        for mono, coeff in self._terms.items():
            exps = dict(mono)
            k = exps.pop(var, 0)
            buckets.setdefault(k, {})[_normalize_monomial(exps)] = coeff
        return {k: LaurentPoly.from_terms(terms) for k, terms in buckets.items()}

    # Arithmetic ------------------------------------------------------

    def __add__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return LaurentPoly(self.expr + o.expr)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(-self.expr)

    def __pos__(self) -> "LaurentPoly":
        return self

    def __sub__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return LaurentPoly(self.expr - o.expr)

    def __rsub__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return o - self

    def __mul__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return LaurentPoly(self.expr * o.expr)

    __rmul__ = __mul__

    def inverse(self) -> "LaurentPoly":
        """Inverse of a unit: a nonzero constant or a unit-variable monomial."""
        if not self.is_unit_monomial():
            raise DomainError(f"{self} is not a unit of the Laurent ring")
        ((mono, coeff),) = self._terms.items()
        inv_mono = tuple((var, -exp) for var, exp in mono)
        return LaurentPoly(scalar_inverse(coeff) * _monomial_expr(inv_mono))

    def __truediv__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other: object) -> "LaurentPoly":
        try:
            o = LaurentPoly.coerce(other)
        except DomainError:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, exponent: int) -> "LaurentPoly":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        return LaurentPoly(self.expr ** exponent)

    # Substitution ----------------------------------------------------

    def substitute(self, values: Mapping[str, object]) -> "LaurentPoly":
        """Exact simultaneous substitution of scalars or polynomials for variables."""
        mapping = {sympy.Symbol(name): LaurentPoly.coerce(v).expr for name, v in values.items()}
        return LaurentPoly(self.expr.xreplace(mapping))

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        """Numeric evaluation; every variable must be bound."""
        total = 0j
        for mono, coeff in self._terms.items():
            term = complex(coeff)
            for var, exp in mono:
                if var not in values:
                    raise DomainError(f"No value for variable '{var}'", {"variable": var})
                term *= complex(values[var]) ** exp
            total += term
        return total

    # Comparison ------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        try:
            return self._terms == LaurentPoly.coerce(other)._terms
        except DomainError:
            return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    # Text ------------------------------------------------------------

    def sorted_terms(self) -> List[Tuple[Monomial, sympy.Expr]]:
        """Terms in canonical order: descending exponent vectors."""
        names = self.variables

        def vector(mono: Monomial) -> Tuple[int, ...]:
            exps = dict(mono)
            return tuple(exps.get(name, 0) for name in names)

        return sorted(self._terms.items(), key=lambda item: vector(item[0]), reverse=True)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces: List[str] = []
        for index, (mono, coeff) in enumerate(self.sorted_terms()):
            negative = _looks_negative(coeff)
            magnitude = -coeff if negative else coeff
            body = _format_term(mono, magnitude)
            if index == 0:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f" - {body}" if negative else f" + {body}")
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"LaurentPoly('{self}')"


def _format_monomial(mono: Monomial) -> str:
    parts = []
    for var, exp in mono:
        parts.append(var if exp == 1 else f"{var}^{exp}")
    return "*".join(parts)


def _format_term(mono: Monomial, coeff: sympy.Expr) -> str:
    if not mono:
        return format_scalar(coeff)
    if coeff == 1:
        return _format_monomial(mono)
    return f"{format_scalar(coeff)}*{_format_monomial(mono)}"


# ============================================
# PARSER
# ============================================

_TRANSFORMATIONS = standard_transformations + (convert_xor,)

# Every ^ takes a plain integer exponent
_BAD_EXPONENT_RE = re.compile(r"\^(?!\s*-?\s*\d+(?![\d./]))")

# 3i, 1/2i -> 3*i, 1/2*i
_IMAGINARY_RE = re.compile(r"\b(\d+)\s*i(?![A-Za-z0-9_])")

_GLOBALS = {
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
}


def _parse(text: str) -> LaurentPoly:
    if not text or not text.strip():
        raise ParseError("Empty polynomial text")
    bad = _BAD_EXPONENT_RE.search(text)
    if bad:
        raise ParseError(f"Exponent must be an integer at position {bad.start()} in '{text}'")
    source = _IMAGINARY_RE.sub(r"\1*i", text)
    try:
        expr = parse_expr(
            source,
            local_dict={"i": I},
            global_dict=dict(_GLOBALS),
            transformations=_TRANSFORMATIONS,
        )
    except (SyntaxError, TokenError, TypeError, ValueError, SympifyError) as e:
        raise ParseError(f"Cannot parse polynomial '{text}': {e}")
    if not isinstance(expr, sympy.Expr):
        raise ParseError(f"'{text}' is not a polynomial expression")
    if expr.has(sympy.Float):
        raise ParseError(f"Decimal coefficients are not exact in '{text}'")
    return LaurentPoly(expr)


# ============================================
# REDUCTIONS
# ============================================

TRUNCATION_SQUARE_FREE = ("x", "y", "z")


def truncated_reduce(p: LaurentPoly) -> LaurentPoly:
    """
    Normal form modulo the monomial ideal (b, x^2, y^2, z^2).

    Args:
        p: Polynomial with no negative exponents in x, y, z, b

    Returns:
        p with every monomial of b-degree >= 1 or x/y/z-degree >= 2 dropped
    """
    kept: Dict[Monomial, sympy.Expr] = {}
    for mono, coeff in p.items():
        exps = dict(mono)
        for var in TRUNCATION_SQUARE_FREE + ("b",):
            if exps.get(var, 0) < 0:
                raise DomainError(
                    f"truncated_reduce needs a polynomial in {var}, got exponent {exps[var]}",
                    {"variable": var},
                )
        if exps.get("b", 0) >= 1:
            continue
        if any(exps.get(var, 0) >= 2 for var in TRUNCATION_SQUARE_FREE):
            continue
        kept[mono] = coeff
    return LaurentPoly.from_terms(kept)


def reduce_mod_monic(p: LaurentPoly, f: LaurentPoly, var: str) -> LaurentPoly:
    """
    Remainder of p on division by f as polynomials in var.

    The leading coefficient of f in var must be a unit of the Laurent ring in
    the remaining variables (a constant or a monomial in m, t).
    """
    if f.is_zero():
        raise DomainError("Division by the zero polynomial")
    d = f.degree(var)
    if f.min_degree(var) < 0 or (not p.is_zero() and p.min_degree(var) < 0):
        raise DomainError(f"Negative powers of '{var}' are not supported")
    lead = f.coefficients_in(var)[d]
    if not lead.is_unit_monomial():
        raise DomainError(
            f"Leading coefficient {lead} of the divisor is not a unit",
            {"divisor": str(f), "variable": var},
        )
    if p.is_zero():
        return p
    remainder = sympy.rem(p.expr, f.expr, sympy.Symbol(var))
    return LaurentPoly(sympy.cancel(remainder))


def as_exact(value: object) -> LaurentPoly:
    """Lift ints, sympy Gaussian rationals and text into LaurentPoly."""
    if isinstance(value, str):
        return LaurentPoly.parse(value)
    return LaurentPoly.coerce(value)


def polys(*texts: str) -> Tuple[LaurentPoly, ...]:
    return tuple(LaurentPoly.parse(text) for text in texts)


def symbols(names: Iterable[str]) -> Tuple[LaurentPoly, ...]:
    return tuple(LaurentPoly.var(name) for name in names)
