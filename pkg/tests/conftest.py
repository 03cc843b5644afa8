"""
Shared fixtures: a seeded generator and exact random SL2 matrices.
"""

from typing import Callable, Tuple

import numpy as np
import pytest

from services.matrices import Mat2, random_exact_sl2


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def exact_sl2(rng) -> Callable[[], Mat2]:
    """Factory of integer SL2 matrices drawn from the seeded generator."""
    return lambda: random_exact_sl2(rng)


@pytest.fixture
def equal_trace_triple(exact_sl2) -> Callable[[], Tuple[Mat2, Mat2, Mat2]]:
    """Factory of exact triples of conjugates of one matrix."""
    def make() -> Tuple[Mat2, Mat2, Mat2]:
        base = exact_sl2()
        c1, c2 = exact_sl2(), exact_sl2()
        return base, base.conjugate_by(c1), base.conjugate_by(c2)
    return make


@pytest.fixture
def parabolic_pair() -> Tuple[Mat2, Mat2]:
    """[[1, 1], [0, 1]] and [[1, 0], [-1, 1]]: an irreducible exact pair."""
    return Mat2(1, 1, 0, 1), Mat2(1, 0, -1, 1)
