import numpy as np
import pytest

from services.braids import BraidWord, artin_act
from services.errors import ReducibilityError, StrandMismatchError, UnequalTraceError
from services.matrices import I2, Mat2
from services.polynomials import LaurentPoly
from services.trace_coords import (
    TraceCoord,
    act,
    act_word,
    coords_from_triple,
    find_U_points,
    fricke_P,
    lift_triple,
    quotient_claim_check,
    recover_meridian,
    u_family,
)

LETTERS = ((1, 1), (1, -1), (2, 1), (2, -1))


def random_braid(rng: np.random.Generator, max_length: int = 8) -> BraidWord:
    length = int(rng.integers(0, max_length + 1))
    return BraidWord(3, tuple(LETTERS[int(k)] for k in rng.integers(0, 4, size=length)))


def test_fricke_P_examples():
    assert fricke_P(TraceCoord(0, 0, 0, 0, 0)) == 0
    assert fricke_P(TraceCoord(1, 1, 1, 1, 0)) == 1


def test_identity_triple():
    coords = coords_from_triple(I2, I2, I2)
    assert coords.as_tuple() == (2, 2, 2, 8, -28)
    assert coords.a == 2
    assert fricke_P(coords) == 0


def test_random_triples_lie_on_V(equal_trace_triple):
    for _ in range(50):
        assert fricke_P(coords_from_triple(*equal_trace_triple())) == 0


def test_conjugation_invariance(equal_trace_triple, exact_sl2):
    triple = equal_trace_triple()
    m = exact_sl2()
    conjugated = [g.conjugate_by(m) for g in triple]
    assert coords_from_triple(*conjugated) == coords_from_triple(*triple)


def test_unequal_traces():
    with pytest.raises(UnequalTraceError):
        coords_from_triple(I2, Mat2(2, 1, 1, 1), I2)


def test_action_matches_artin_action(rng, equal_trace_triple):
    for _ in range(100):
        triple = equal_trace_triple()
        b = random_braid(rng)
        assert act_word(b, coords_from_triple(*triple)) == coords_from_triple(*artin_act(b, triple))


@pytest.mark.parametrize("letter", LETTERS)
def test_generators_preserve_P(letter):
    sym = TraceCoord.symbolic()
    assert fricke_P(act(letter, sym)) == fricke_P(sym)


def test_letter_and_inverse_cancel():
    sym = TraceCoord.symbolic()
    b = BraidWord.parse("s1 S2 s1 S2 s1")
    assert act_word(b * b.inverse(), sym) == sym
    assert act_word(BraidWord(3), sym) == sym


def test_action_needs_three_strands():
    with pytest.raises(StrandMismatchError):
        act_word(BraidWord.parse("s1 s2 s3"), TraceCoord.symbolic())


def test_quotient_claim_holds_for_10_123():
    report = quotient_claim_check(BraidWord.parse("s1 S2 s1 S2 s1"))
    assert report.holds
    assert report.Xbar == LaurentPoly.var("y")
    assert report.Ybar == LaurentPoly.parse("-x - y*z")
    assert report.Zbar == LaurentPoly.var("z")
    assert report.Pbar == LaurentPoly.parse("x*y*z - c")
    assert report.witness["branch_factor"] >= 1e-3


def test_quotient_claim_holds_for_10_99():
    assert quotient_claim_check(BraidWord.parse("s1 S2 S2 s1 s1")).holds


def test_quotient_claim_fails():
    report = quotient_claim_check(BraidWord.parse("s1 s2 s1 s2 s1"))
    assert not report.holds
    assert report.membership is not None


def test_recover_meridian():
    g = Mat2(2, 1, 1, 1)
    coords = coords_from_triple(g, g.conjugate_by(Mat2(1, 1, 0, 1)), g.conjugate_by(Mat2(1, 0, 1, 1)))
    a, t = recover_meridian(complex(coords.b), complex(coords.c), anchor=3.0)
    assert a == pytest.approx(3.0)
    assert t == pytest.approx(complex(coords.triple_trace()))


def test_lift_round_trip():
    g = Mat2(2, 1, 1, 1)
    exact = coords_from_triple(g, g.conjugate_by(Mat2(1, 1, 0, 1)), g.conjugate_by(Mat2(1, 0, 1, 1)))
    numeric = TraceCoord.from_vector(exact.vector(), a=complex(exact.a))
    g1, g2, g3 = lift_triple(numeric)
    recovered = coords_from_triple(g1, g2, g3)
    assert np.allclose(recovered.vector(), numeric.vector(), atol=1e-9)


def test_lift_rejects_reducible():
    identity = coords_from_triple(I2, I2, I2)
    with pytest.raises(ReducibilityError):
        lift_triple(TraceCoord.from_vector(identity.vector(), a=2.0))


def test_find_U_points_for_10_123():
    b = BraidWord.parse("s1 S2 s1 S2 s1")
    points = find_U_points(b, count=5, seed=42)
    assert len(points) == 5
    for point in points:
        assert max(point.residuals.values()) < 1e-10
        assert abs(point.branch) >= 1e-3
    again = find_U_points(b, count=5, seed=42)
    assert [p.to_dict() for p in again] == [p.to_dict() for p in points]


def test_u_family_chart_moves_along_U():
    b = BraidWord.parse("s1 S2 s1 S2 s1")
    base = find_U_points(b, count=1, seed=42)[0]
    chart = u_family(b, base)
    assert len(set(chart.free)) == 2
    assert set(chart.free).isdisjoint(chart.dependent)
    moved = chart.point((1e-3, -1e-3))
    for key in ("P", "X-z", "Z-x"):
        assert moved.residuals[key] < 1e-9
    assert np.linalg.norm(moved.vector()[:4] - base.vector()[:4]) > 1e-4
