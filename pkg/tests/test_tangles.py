import numpy as np
import pytest
from sympy import Rational

from config import DEFAULT_DATA_DIR
from services.diagrams import fox_determinant, load_pd
from services.errors import DomainError, NotAKnotError, ParseError, TrivialKnotError
from services.matrices import I2, Mat2, eval_word
from services.polynomials import LaurentPoly
from services.tangles import (
    RationalTangle,
    TwoBridge,
    c_closure,
    centralizer_matrix,
    closure_diagram,
    normalize_riley,
    riley_generators,
    riley_polynomial,
    riley_roots,
    tangle_replace,
    two_bridge_word,
)


def bare_tangle(n: int, d: int) -> RationalTangle:
    """Tangle carrying only a fraction; enough for the arithmetic closure."""
    return RationalTangle(terms=(n,), crossings=[], ports={}, fraction=(n, d))


def test_tangle_fractions():
    assert RationalTangle.parse("2 0").fraction == (1, 2)
    assert RationalTangle.parse("2 1").fraction == (3, 2)
    with pytest.raises(ParseError):
        RationalTangle.parse("2 x")


def test_c_closure_trefoil():
    assert c_closure(RationalTangle.parse("2 0")) == TwoBridge(3, 2)


def test_c_closure_five_two():
    tb = c_closure(RationalTangle.parse("2 1"))
    assert tb.p == 5


def test_c_closure_link_and_unknot():
    with pytest.raises(NotAKnotError):
        c_closure(bare_tangle(1, 1), validate=False)
    with pytest.raises(TrivialKnotError):
        c_closure(bare_tangle(0, 1), validate=False)


@pytest.mark.parametrize("terms, det", [("2 0", 3), ("2 1", 5)])
def test_closure_diagram_is_the_knot(terms, det):
    pd = closure_diagram(RationalTangle.parse(terms))
    assert pd.component_count() == 1
    assert fox_determinant(pd) == det


def test_two_bridge_validation():
    with pytest.raises(DomainError):
        TwoBridge(4, 1)
    with pytest.raises(DomainError):
        TwoBridge(9, 3)
    with pytest.raises(DomainError):
        TwoBridge(5, 5)
    assert TwoBridge.parse("3/1") == TwoBridge(3, 1)


def test_two_bridge_words():
    assert str(two_bridge_word(TwoBridge(3, 1))) == "x y"
    assert str(two_bridge_word(TwoBridge(5, 3))) == "x y^-1 x^-1 y"


def test_riley_polynomial_of_trefoil():
    poly = riley_polynomial(TwoBridge(3, 1))
    assert str(poly) == "u + m^2 - 1 + m^-2"
    assert poly.substitute({"m": 1}) == LaurentPoly.parse("u + 1")


def test_trefoil_braid_relation_at_m_1():
    g, h = Mat2(1, 1, 0, 1), Mat2(1, 0, -1, 1)
    assert riley_generators(1, -1) == (g, h)
    assert g @ h @ g == h @ g @ h


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_riley_degree_for_p_5(q):
    assert riley_polynomial(TwoBridge(5, q)).degree("u") == 2


def test_riley_roots_satisfy_the_relation():
    tb = TwoBridge(5, 2)
    poly = riley_polynomial(tb)
    m = 1.3 + 0.2j
    for u in riley_roots(poly, m):
        g, h = riley_generators(m, u)
        w = eval_word(two_bridge_word(tb), {"x": g, "y": h})
        assert (w @ g).distance(h @ w) < 1e-9


def test_centralizer_matrix():
    g = Mat2(2, 1, 0, Rational(1, 2))
    assert centralizer_matrix(g, 1) == I2
    a = centralizer_matrix(g, 3)
    assert a @ g == g @ a
    assert a.det() == 1
    parabolic = Mat2(1, 1, 0, 1)
    assert centralizer_matrix(parabolic, 3) == Mat2(1, 3, 0, 1)
    with pytest.raises(DomainError):
        centralizer_matrix(g, 0)


def test_tangle_replace_joins_the_components():
    pd = load_pd(DEFAULT_DATA_DIR / "3_1_split.pd.json")
    tangle = RationalTangle.parse("2 0")
    knot = tangle_replace(pd, "c", tangle)
    assert knot.component_count() == 1
    assert len(knot.crossings) == len(pd.crossings) - 1 + len(tangle.crossings)
    assert knot.meta["replaced"] == {"c": "2 0"}
    assert "c" not in knot.labels()


def test_normalize_riley():
    normalization = normalize_riley(RationalTangle.parse("2 0"))
    assert normalization.chosen.p == 3
    assert normalization.defects
    assert max(normalization.defects) < 1e-8
    assert np.isfinite(normalization.defects).all()


def test_normalize_riley_for_either_crossing_sign():
    for sign in (-1, 1):
        normalization = normalize_riley(RationalTangle.parse("2 1"), c_sign=sign)
        assert normalization.chosen.p == 5
        assert max(normalization.defects) < 1e-8
