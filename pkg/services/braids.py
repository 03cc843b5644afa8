"""
Braid words, orientation-reversing involutions and the Artin action.

Braids compose left to right. The generator sigma_i sends the pair
(M_i, M_i+1) to (M_i+1, M_i+1^-1 M_i M_i+1); its inverse sends it to
(M_i M_i+1 M_i^-1, M_i). Both preserve the ordered product of the tuple.
"""

import json
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from services.diagrams import Crossing, PDCode, RepAssignment
from services.errors import (
    ClosureNotKnotError,
    DomainError,
    ParseError,
    StrandMismatchError,
)
from services.matrices import FreeWord, Mat2, random_exact_sl2

logger = logging.getLogger(__name__)

BRAIDS_FILE = Path(__file__).parent.parent / "data" / "braids.json"

BraidLetter = Tuple[int, int]
Element = TypeVar("Element", Mat2, FreeWord)


# ============================================
# BRAID WORDS
# ============================================

@dataclass(frozen=True)
class BraidWord:
    """Word in sigma_1..sigma_{n-1}; letters are (index, ±1)."""

    n: int
    letters: Tuple[BraidLetter, ...] = ()

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"A braid needs at least 2 strands, got {self.n}")
        for index, sign in self.letters:
            if not 1 <= index <= self.n - 1 or sign not in (1, -1):
                raise DomainError(
                    f"Letter ({index}, {sign}) is out of range for B_{self.n}",
                    {"letter": [index, sign], "strands": self.n},
                )

    @classmethod
    def parse(cls, text: str, n: Optional[int] = None) -> "BraidWord":
        """
        Parse ``s1 S2 s1``: lowercase is sigma_i, uppercase its inverse.

        The strand count defaults to one more than the largest index (at least 2).
        """
        letters: List[BraidLetter] = []
        for token in text.replace(",", " ").split():
            if token == "1":
                continue
            if len(token) < 2 or token[0] not in "sS" or not token[1:].isdigit():
                raise ParseError(f"Bad braid token '{token}' in '{text}'")
            letters.append((int(token[1:]), 1 if token[0] == "s" else -1))
        if n is None:
            n = max([index for index, _ in letters] + [1]) + 1
        return cls(n, tuple(letters))

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        if not isinstance(other, BraidWord):
            return NotImplemented
        if other.n != self.n:
            raise StrandMismatchError(f"Cannot compose B_{self.n} with B_{other.n}")
        return BraidWord(self.n, self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(self.n, tuple((i, -e) for i, e in reversed(self.letters)))

    def __pow__(self, exponent: int) -> "BraidWord":
        base = self if exponent >= 0 else self.inverse()
        return BraidWord(self.n, base.letters * abs(exponent))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(f"{'s' if e == 1 else 'S'}{i}" for i, e in self.letters)


class InvolutionKind(str, Enum):
    REFLECT = "reflect"
    MIRROR = "mirror"


@dataclass(frozen=True)
class Involution:
    """Orientation-reversing involution of the n-punctured disk."""

    kind: InvolutionKind
    n: int

    @classmethod
    def parse(cls, text: str, n: int) -> "Involution":
        try:
            return cls(InvolutionKind(text.lower()), n)
        except ValueError:
            raise ParseError(f"Unknown involution '{text}' (expected reflect or mirror)")

    def letter(self, letter: BraidLetter) -> BraidLetter:
        index, sign = letter
        if self.kind == InvolutionKind.REFLECT:
            return (self.n - index, -sign)
        return (index, -sign)

    def puncture(self, k: int) -> int:
        """Image of puncture k (1-based)."""
        if self.kind == InvolutionKind.REFLECT:
            return self.n + 1 - k
        return k

    def perm(self) -> "Perm":
        return Perm(tuple(self.puncture(k) for k in range(1, self.n + 1)))


@dataclass(frozen=True)
class Perm:
    """Permutation of {1..n}; images[k-1] is the image of k."""

    images: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise DomainError(f"{self.images} is not a permutation")

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, k: int) -> int:
        return self.images[k - 1]

    def then(self, other: "Perm") -> "Perm":
        """Apply self first, then other."""
        return Perm(tuple(other(self(k)) for k in range(1, self.n + 1)))

    def inverse(self) -> "Perm":
        images = [0] * self.n
        for k in range(1, self.n + 1):
            images[self(k) - 1] = k
        return Perm(tuple(images))

    def cycles(self) -> List[Tuple[int, ...]]:
        seen = set()
        result = []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            k = self(start)
            while k != start:
                cycle.append(k)
                seen.add(k)
                k = self(k)
            result.append(tuple(cycle))
        return result

    def is_full_cycle(self) -> bool:
        return len(self.cycles()) == 1

    def __str__(self) -> str:
        parts = [c for c in self.cycles() if len(c) > 1]
        if not parts:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in parts)


def star(b: BraidWord, tau: Involution) -> BraidWord:
    """Letterwise image of b under the involution."""
    if tau.n != b.n:
        raise StrandMismatchError(f"Involution on {tau.n} strands applied to B_{b.n}")
    return BraidWord(b.n, tuple(tau.letter(letter) for letter in b.letters))


def perm_image(b: BraidWord, tau: Optional[Involution] = None) -> Perm:
    """Strand permutation of b (then of tau's punctures, when given)."""
    perm = Perm.identity(b.n)
    for index, _ in b.letters:
        swap = list(range(1, b.n + 1))
        swap[index - 1], swap[index] = index + 1, index
        perm = perm.then(Perm(tuple(swap)))
    if tau is not None:
        if tau.n != b.n:
            raise StrandMismatchError(f"Involution on {tau.n} strands applied to B_{b.n}")
        perm = perm.then(tau.perm())
    return perm


def closure_is_knot(b: BraidWord, tau: Involution) -> bool:
    """The closure of b·star(b) is a knot iff n is odd and pi(b·tau) is an n-cycle."""
    if b.n % 2 == 0:
        return False
    return perm_image(b, tau).is_full_cycle()


# ============================================
# ARTIN ACTION
# ============================================

def _identity_like(sample: Element) -> Element:
    return Mat2.identity() if isinstance(sample, Mat2) else FreeWord()


def _act_letter(items: List[Element], letter: BraidLetter) -> None:
    index, sign = letter
    i = index - 1
    left, right = items[i], items[i + 1]
    if sign == 1:
        items[i], items[i + 1] = right, right.inverse() @ left @ right
    else:
        items[i], items[i + 1] = left @ right @ left.inverse(), left


def artin_act(b: BraidWord, items: Sequence[Element]) -> Tuple[Element, ...]:
    """Left-to-right fold of the generator action over a tuple of matrices or words."""
    if len(items) != b.n:
        raise StrandMismatchError(
            f"Tuple of length {len(items)} for a braid on {b.n} strands",
            {"tuple_length": len(items), "strands": b.n},
        )
    current = list(items)
    for letter in b.letters:
        _act_letter(current, letter)
    return tuple(current)


def twist_tuple(items: Sequence[Element], tau: Involution) -> Tuple[Element, ...]:
    """
    Action of the involution on tuples.

    Reflect: M_i -> M_{n+1-i}^-1. Mirror: M_i -> P_i M_i^-1 P_i^-1 with
    P_i = M_1 ... M_{i-1}. In both cases act(star(b), twist(T)) = twist(act(b, T)).
    """
    if len(items) != tau.n:
        raise StrandMismatchError(f"Tuple of length {len(items)} for an involution on {tau.n} strands")
    if tau.kind == InvolutionKind.REFLECT:
        return tuple(items[tau.n - 1 - i].inverse() for i in range(tau.n))
    result = []
    prefix = _identity_like(items[0])
    for item in items:
        result.append(prefix @ item.inverse() @ prefix.inverse())
        prefix = prefix @ item
    return tuple(result)


def generator_names(n: int) -> List[str]:
    return [f"g{i}" for i in range(1, n + 1)]


MAPPING_LOOP = "a"


def disk_boundary_word(n: int) -> FreeWord:
    """g1 g2 ... gn, the boundary of the fiber disk."""
    return FreeWord(tuple((name, 1) for name in generator_names(n)))


def strand_holonomy(b: BraidWord, tau: Involution, i: int) -> FreeWord:
    """
    Peripheral word u with u·g_i·u^-1 = g_i^-1 in the mapping-torus group.

    The group is generated by g_1..g_n and the loop a, with relations
    act(b, g)_j = a·twist(g)_j·a^-1. Writing act(b, g)_j = c_j g_s(j) c_j^-1
    and twist(g)_tau(k) = Q_k g_k^-1 Q_k^-1 gives
    g_f(k) = d_k g_k^-1 d_k^-1 with f(k) = s(tau(k)) and d_k = c_tau(k)^-1 a Q_k.
    Following f around its n-cycle from i yields u.
    """
    if not closure_is_knot(b, tau):
        raise ClosureNotKnotError(
            f"Closure of b·b* is not a knot for b = {b} ({tau.kind.value})",
            {"braid": str(b), "involution": tau.kind.value, "perm": str(perm_image(b, tau))},
        )
    n = b.n
    gens = [FreeWord.gen(name) for name in generator_names(n)]
    transported = artin_act(b, gens)
    conjugators: Dict[int, FreeWord] = {}
    source: Dict[int, int] = {}
    for j, word in enumerate(transported, start=1):
        c, core = word.split_conjugate()
        if len(core) != 1 or core.letters[0][1] != 1:
            raise DomainError(f"Transported generator {word} is not a conjugate of a generator")
        conjugators[j] = c
        source[j] = generator_names(n).index(core.letters[0][0]) + 1

    twisted = twist_tuple(gens, tau)
    loop = FreeWord.gen(MAPPING_LOOP)
    step: Dict[int, FreeWord] = {}
    target: Dict[int, int] = {}
    for k in range(1, n + 1):
        j = tau.puncture(k)
        q, core = twisted[j - 1].split_conjugate()
        if core != FreeWord.gen(f"g{k}", -1):
            raise DomainError(f"Twisted generator {twisted[j - 1]} is not conjugate to g{k}^-1")
        step[k] = conjugators[j].inverse() * loop * q
        target[k] = source[j]

    word = FreeWord()
    k = i
    for _ in range(n):
        word = step[k] * word
        k = target[k]
    if k != i:
        raise DomainError(f"Strand orbit of {i} does not close after {n} steps")
    return word


def turks_head(p: int, q: int) -> Tuple[BraidWord, BraidWord]:
    """
    Full and half braids of Th(p, q).

    full = (s1 S2 s3 S4 ...)^q and half = (O E)^((q-1)/2) O with
    O = s1 s3 ... s_{p-2} and E = S2 S4 ... S_{p-1}.
    """
    if p < 3 or q < 3 or p % 2 == 0 or q % 2 == 0:
        raise DomainError(f"Turk's head parameters must be odd and >= 3, got ({p}, {q})")
    cycle = BraidWord(p, tuple((i, 1 if i % 2 == 1 else -1) for i in range(1, p)))
    odd = BraidWord(p, tuple((i, 1) for i in range(1, p, 2)))
    even = BraidWord(p, tuple((i, -1) for i in range(2, p, 2)))
    half = (odd * even) ** ((q - 1) // 2) * odd
    return cycle ** q, half


@dataclass
class TurksHeadCheck:
    """half·star(half) against the full braid, up to an explicit conjugator."""

    p: int
    q: int
    full: BraidWord
    half: BraidWord
    conjugator: BraidWord
    action_agrees: bool
    perm_agrees: bool
    samples: int

    @property
    def holds(self) -> bool:
        return self.action_agrees and self.perm_agrees

    def to_dict(self) -> Dict[str, object]:
        return {
            "p": self.p,
            "q": self.q,
            "full": str(self.full),
            "half": str(self.half),
            "conjugator": str(self.conjugator),
            "action_agrees": self.action_agrees,
            "perm_agrees": self.perm_agrees,
            "samples": self.samples,
        }


def cyclic_conjugator(source: BraidWord, target: BraidWord, max_states: int = 200_000) -> Optional[BraidWord]:
    """
    gamma with target = gamma^-1 · source · gamma, found by breadth-first search
    over far commutations and cyclic rotations of source. None when the search
    space is exhausted.
    """
    if source.n != target.n or sorted(source.letters) != sorted(target.letters):
        return None
    start = source.letters
    seen: Dict[Tuple[BraidLetter, ...], Tuple[BraidLetter, ...]] = {start: ()}
    queue = deque([start])
    while queue and len(seen) < max_states:
        word = queue.popleft()
        gamma = seen[word]
        if word == target.letters:
            return BraidWord(source.n, gamma)
        moves = []
        for k in range(len(word) - 1):
            if abs(word[k][0] - word[k + 1][0]) > 1:
                swapped = word[:k] + (word[k + 1], word[k]) + word[k + 2:]
                moves.append((swapped, gamma))
        if word:
            moves.append((word[1:] + word[:1], gamma + word[:1]))
        for moved, conj in moves:
            if moved not in seen:
                seen[moved] = conj
                queue.append(moved)
    return None


def turks_head_check(p: int, q: int, samples: int = 20, seed: int = 42) -> TurksHeadCheck:
    """
    Semantic comparison of half·star(half, Reflect) with the full Th(p, q) braid.

    The periods O·E and s1 S2 s3 S4 ... agree up to a conjugator found by
    cyclic moves, so the check is act(half·half*, T) = act(gamma^-1 full gamma, T)
    on random exact tuples together with equal strand permutations.
    """
    full, half = turks_head(p, q)
    tau = Involution(InvolutionKind.REFLECT, p)
    doubled = half * star(half, tau)
    period = BraidWord(p, full.letters[:p - 1])
    odd_even = BraidWord(p, doubled.letters[:p - 1])
    gamma = cyclic_conjugator(period, odd_even)
    if gamma is None:
        raise DomainError(f"No cyclic conjugator between {period} and {odd_even}")
    conjugated = gamma.inverse() * full * gamma

    rng = np.random.default_rng(seed)
    agrees = True
    for _ in range(samples):
        items = [random_exact_sl2(rng) for _ in range(p)]
        if artin_act(doubled, items) != artin_act(conjugated, items):
            agrees = False
            break

    perm_ok = perm_image(doubled) == perm_image(conjugated)
    logger.info(f"Th({p},{q}): conjugator '{gamma}', action agrees={agrees}, perm agrees={perm_ok}")
    return TurksHeadCheck(p, q, full, half, gamma, agrees, perm_ok, samples)


# ============================================
# BRAID CLOSURES
# ============================================

def closure_pd(w: BraidWord, name: str = "") -> PDCode:
    """
    Oriented diagram of the braid closure of w.

    Edges 0..n-1 are the strand segments at the start of the braid; the final
    segments are identified with them. Untouched strands become free loops.
    """
    pd, _ = _closure_with_transport(w, None, name)
    return pd


def closure_assignment(w: BraidWord, items: Sequence[Mat2]) -> RepAssignment:
    """Wirtinger assignment on closure_pd(w) transported from the starting tuple."""
    _, rep = _closure_with_transport(w, items, "")
    return rep


def _closure_with_transport(
    w: BraidWord,
    items: Optional[Sequence[Mat2]],
    name: str,
) -> Tuple[PDCode, RepAssignment]:
    n = w.n
    if items is not None and len(items) != n:
        raise StrandMismatchError(f"Tuple of length {len(items)} for a braid on {n} strands")
    current = list(range(n))
    values: List[Optional[Mat2]] = list(items) if items is not None else [None] * n
    rep: RepAssignment = {}
    if items is not None:
        rep.update({k: items[k] for k in range(n)})
    next_edge = n
    records: List[Crossing] = []
    for position, (index, sign) in enumerate(w.letters, start=1):
        i = index - 1
        left_edge, right_edge = current[i], current[i + 1]
        new_left, new_right = next_edge, next_edge + 1
        next_edge += 2
        if sign == 1:
            # strand from the right passes over to the left
            records.append(Crossing(f"x{position}", (left_edge, new_right), (right_edge, new_left), -1))
        else:
            records.append(Crossing(f"x{position}", (right_edge, new_left), (left_edge, new_right), 1))
        current[i], current[i + 1] = new_left, new_right
        if items is not None:
            pair = [values[i], values[i + 1]]
            _act_letter(pair, (1, sign))
            values[i], values[i + 1] = pair
            rep[new_left], rep[new_right] = values[i], values[i + 1]

    closing = {current[k]: k for k in range(n) if current[k] != k}
    records = [c.relabel(closing) for c in records]
    free = [k for k in range(n) if current[k] == k]
    pd = PDCode(crossings=records, name=name or f"closure({w})", free_edges=free)
    pd, mapping = pd.compacted()
    pd.meta["braid"] = str(w)
    pd.meta["strands"] = n
    if items is not None:
        rep = {mapping[e]: m for e, m in rep.items() if e in mapping}
    return pd, rep


# ============================================
# NAMED BRAIDS
# ============================================

def load_braid_catalog(path: Optional[Path] = None) -> Dict[str, Dict[str, object]]:
    """Named braids bundled in data/braids.json."""
    path = path or BRAIDS_FILE
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ParseError(f"Braid catalog not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"Braid catalog {path} is not valid JSON: {e}")
    return data.get("braids", {})


def named_braid(name: str, path: Optional[Path] = None) -> Tuple[BraidWord, Involution]:
    catalog = load_braid_catalog(path)
    if name not in catalog:
        raise ParseError(f"Unknown braid '{name}'; known: {', '.join(sorted(catalog))}")
    entry = catalog[name]
    word = BraidWord.parse(str(entry["word"]), int(entry["strands"]))
    return word, Involution.parse(str(entry.get("involution", "reflect")), word.n)
