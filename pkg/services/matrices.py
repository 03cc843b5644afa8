"""
2x2 matrices over exact rings or complex floats, free-group words and their
evaluation at matrix assignments.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.combinatorics.free_groups import free_group

from services.errors import DomainError, ParseError, UnboundGeneratorError
from services.polynomials import LaurentPoly, exact_scalar, is_exact_scalar, scalar_inverse

logger = logging.getLogger(__name__)


def is_exact(value: object) -> bool:
    """Laurent polynomials, ints and sympy Gaussian rationals."""
    if isinstance(value, LaurentPoly):
        return True
    if isinstance(value, bool) or not isinstance(value, (int, sympy.Basic)):
        return False
    return is_exact_scalar(value)


def to_complex(value: object) -> complex:
    """Numeric value of a scalar; constant polynomials are allowed."""
    if isinstance(value, LaurentPoly):
        return complex(value.constant_value())
    return complex(value)


def reciprocal(value: object) -> object:
    """1/value, staying exact for exact input."""
    if isinstance(value, LaurentPoly):
        return value.inverse()
    if is_exact(value):
        return scalar_inverse(value)
    return 1 / value


def _divide(entry: object, det: object) -> object:
    if is_exact(entry) and is_exact(det):
        if isinstance(entry, LaurentPoly) or isinstance(det, LaurentPoly):
            return LaurentPoly.coerce(entry) / det
        return exact_scalar(sympy.sympify(entry) * scalar_inverse(det))
    return entry / det


# ============================================
# 2x2 MATRICES
# ============================================

@dataclass(frozen=True)
class Mat2:
    """Matrix [[a, b], [c, d]] with entries of a common ring."""

    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        # sympy products stay unexpanded until asked
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if isinstance(value, sympy.Basic):
                object.__setattr__(self, name, sympy.expand(value))

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[object]]) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @classmethod
    def from_numpy(cls, array: np.ndarray) -> "Mat2":
        return cls(
            complex(array[0, 0]), complex(array[0, 1]),
            complex(array[1, 0]), complex(array[1, 1]),
        )

    @property
    def entries(self) -> Tuple[object, object, object, object]:
        return (self.a, self.b, self.c, self.d)

    @property
    def rows(self) -> List[List[object]]:
        return [[self.a, self.b], [self.c, self.d]]

    def is_exact(self) -> bool:
        return all(is_exact(e) for e in self.entries)

    # Algebra ---------------------------------------------------------

    def __matmul__(self, other: "Mat2") -> "Mat2":
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __add__(self, other: "Mat2") -> "Mat2":
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(*(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other: "Mat2") -> "Mat2":
        if not isinstance(other, Mat2):
            return NotImplemented
        return Mat2(*(x - y for x, y in zip(self.entries, other.entries)))

    def __neg__(self) -> "Mat2":
        return Mat2(-self.a, -self.b, -self.c, -self.d)

    def scale(self, factor: object) -> "Mat2":
        return Mat2(*(factor * e for e in self.entries))

    def det(self) -> object:
        return self.a * self.d - self.b * self.c

    def trace(self) -> object:
        return self.a + self.d

    def adjugate(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def inverse(self) -> "Mat2":
        """Adjugate inverse; exact whenever the determinant is a unit."""
        det = self.det()
        if is_exact(det):
            if det == 1:
                return self.adjugate()
            if det == 0:
                raise DomainError("Matrix is singular", {"matrix": str(self)})
        elif det == 0:
            raise DomainError("Matrix is singular", {"matrix": str(self)})
        return Mat2(*(_divide(e, det) for e in self.adjugate().entries))

    def __pow__(self, exponent: int) -> "Mat2":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Mat2.identity()
        base = self
        while exponent:
            if exponent & 1:
                result = result @ base
            base = base @ base
            exponent >>= 1
        return result

    def conjugate_by(self, m: "Mat2") -> "Mat2":
        """m · self · m⁻¹."""
        return m @ self @ m.inverse()

    def transform(self, fn: Callable[[object], object]) -> "Mat2":
        return Mat2(*(fn(e) for e in self.entries))

    # Numerics --------------------------------------------------------

    def evaluate(self, values: Mapping[str, complex]) -> "Mat2":
        """Numeric matrix from polynomial entries at the given values."""
        def value(e: object) -> complex:
            if isinstance(e, LaurentPoly):
                return e.evaluate(values)
            return to_complex(e)
        return self.transform(value)

    def substitute(self, values: Mapping[str, object]) -> "Mat2":
        def value(e: object) -> object:
            if isinstance(e, LaurentPoly):
                return e.substitute(values)
            return e
        return self.transform(value)

    def to_complex(self) -> "Mat2":
        return self.transform(to_complex)

    def to_numpy(self) -> np.ndarray:
        return np.array([[to_complex(self.a), to_complex(self.b)],
                         [to_complex(self.c), to_complex(self.d)]], dtype=complex)

    def distance(self, other: "Mat2") -> float:
        """Max absolute entry deviation."""
        return max(abs(to_complex(x) - to_complex(y)) for x, y in zip(self.entries, other.entries))

    def norm(self) -> float:
        return max(abs(to_complex(e)) for e in self.entries)

    def close_to(self, other: "Mat2", tol: float) -> bool:
        return self.distance(other) < tol

    def is_scalar(self, tol: Optional[float] = None) -> bool:
        """True for ±I (exactly, or within tol when given)."""
        ident = Mat2.identity()
        if tol is None:
            return self == ident or self == -ident
        return self.distance(ident) < tol or self.distance(-ident) < tol

    def __str__(self) -> str:
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


I2 = Mat2.identity()


def commutator(x: Mat2, y: Mat2) -> Mat2:
    return x @ y @ x.inverse() @ y.inverse()


def trace_commutator(x: Mat2, y: Mat2) -> object:
    """tr(XYX⁻¹Y⁻¹); equals 2 exactly when X and Y share an eigenvector."""
    return commutator(x, y).trace()


# ============================================
# FREE-GROUP WORDS
# ============================================

Letter = Tuple[str, int]


def _free_reduce(letters: Iterable[Letter]) -> Tuple[Letter, ...]:
    """Free reduction in the sympy free group on the generators that occur."""
    letters = tuple(letters)
    for _, exp in letters:
        if exp not in (1, -1):
            raise DomainError(f"Letter exponent must be ±1, got {exp}")
    names = sorted({gen for gen, _ in letters})
    if not names:
        return ()
    group = free_group(names)[0]
    element = group.identity
    for gen, exp in letters:
        element = element * group.generators[names.index(gen)] ** exp
    reduced: List[Letter] = []
    for symbol, power in element.array_form:
        step = 1 if power > 0 else -1
        reduced.extend((str(symbol), step) for _ in range(abs(power)))
    return tuple(reduced)


@dataclass(frozen=True)
class FreeWord:
    """Freely reduced word in named generators; letters are (name, ±1)."""

    letters: Tuple[Letter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _free_reduce(self.letters))

    @classmethod
    def gen(cls, name: str, exponent: int = 1) -> "FreeWord":
        if exponent >= 0:
            return cls(tuple((name, 1) for _ in range(exponent)))
        return cls(tuple((name, -1) for _ in range(-exponent)))

    @classmethod
    def parse(cls, text: str) -> "FreeWord":
        """Parse ``g1 g2^-1 a`` style text; ``1`` or an empty string is the identity."""
        letters: List[Letter] = []
        for token in text.split():
            if token == "1":
                continue
            name, _, power = token.partition("^")
            if not name or not (name[0].isalpha() or name[0] == "_"):
                raise ParseError(f"Bad generator token '{token}'")
            try:
                exponent = int(power) if power else 1
            except ValueError:
                raise ParseError(f"Bad exponent in token '{token}'")
            letters.extend(FreeWord.gen(name, exponent).letters)
        return cls(tuple(letters))

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        if not isinstance(other, FreeWord):
            return NotImplemented
        return FreeWord(self.letters + other.letters)

    __matmul__ = __mul__

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple((gen, -exp) for gen, exp in reversed(self.letters)))

    def __pow__(self, exponent: int) -> "FreeWord":
        base = self if exponent >= 0 else self.inverse()
        return FreeWord(base.letters * abs(exponent))

    def conjugate_by(self, c: "FreeWord") -> "FreeWord":
        return c * self * c.inverse()

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def generators(self) -> List[str]:
        seen: List[str] = []
        for gen, _ in self.letters:
            if gen not in seen:
                seen.append(gen)
        return seen

    def exponent_sum(self, name: str) -> int:
        return sum(exp for gen, exp in self.letters if gen == name)

    def split_conjugate(self) -> Tuple["FreeWord", "FreeWord"]:
        """Return (c, core) with self = c · core · c⁻¹ and core cyclically reduced."""
        letters = self.letters
        k = 0
        while 2 * k + 1 < len(letters):
            head, tail = letters[k], letters[len(letters) - 1 - k]
            if head[0] == tail[0] and head[1] == -tail[1]:
                k += 1
            else:
                break
        return FreeWord(letters[:k]), FreeWord(letters[k:len(letters) - k])

    def substitute(self, images: Mapping[str, "FreeWord"]) -> "FreeWord":
        """Apply a free-group homomorphism given on generators."""
        result: List[Letter] = []
        for gen, exp in self.letters:
            image = images.get(gen, FreeWord.gen(gen))
            result.extend((image if exp == 1 else image.inverse()).letters)
        return FreeWord(tuple(result))

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(gen if exp == 1 else f"{gen}^-1" for gen, exp in self.letters)


def eval_word(word: FreeWord, assign: Mapping[str, Mat2]) -> Mat2:
    """
    Evaluate a word at a matrix assignment.

    Args:
        word: Free-group word
        assign: Generator name -> matrix

    Returns:
        Ordered product of the assigned matrices and their inverses
    """
    inverses: Dict[str, Mat2] = {}
    result = Mat2.identity()
    for gen, exp in word.letters:
        if gen not in assign:
            raise UnboundGeneratorError(
                f"Generator '{gen}' has no assigned matrix",
                {"generator": gen, "word": str(word)},
            )
        if exp == 1:
            result = result @ assign[gen]
        else:
            if gen not in inverses:
                inverses[gen] = assign[gen].inverse()
            result = result @ inverses[gen]
    return result


def random_exact_sl2(rng: np.random.Generator, steps: int = 4, bound: int = 3) -> Mat2:
    """Integer SL2 matrix as a product of random elementary matrices."""
    result = Mat2.identity()
    for k in range(steps):
        entry = int(rng.integers(-bound, bound + 1))
        if k % 2 == 0:
            result = result @ Mat2(1, entry, 0, 1)
        else:
            result = result @ Mat2(1, 0, entry, 1)
    return result
