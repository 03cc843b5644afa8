import pytest
from sympy import Rational

from services.errors import DomainError, UnboundGeneratorError
from services.matrices import FreeWord, I2, Mat2, eval_word, trace_commutator


def test_eval_word_empty_is_identity(parabolic_pair):
    x, _ = parabolic_pair
    assert eval_word(FreeWord(), {"x": x}) == I2


def test_eval_word_cancellation(exact_sl2):
    g = exact_sl2()
    assert eval_word(FreeWord.parse("g g^-1"), {"g": g}) == I2


def test_eval_word_product(parabolic_pair):
    x, y = parabolic_pair
    assert eval_word(FreeWord.parse("x y"), {"x": x, "y": y}) == Mat2(0, 1, -1, 1)


def test_eval_word_unbound_generator(parabolic_pair):
    x, _ = parabolic_pair
    with pytest.raises(UnboundGeneratorError) as info:
        eval_word(FreeWord.parse("x z"), {"x": x})
    assert info.value.diagnostics["generator"] == "z"


def test_trace_commutator_examples(parabolic_pair, exact_sl2):
    x, y = parabolic_pair
    assert trace_commutator(x, y) == 3
    g = exact_sl2()
    assert trace_commutator(g, g) == 2
    assert trace_commutator(Mat2(2, 5, 0, Rational(1, 2)), Mat2(3, -1, 0, Rational(1, 3))) == 2


def test_random_exact_sl2_has_det_one(exact_sl2):
    for _ in range(20):
        m = exact_sl2()
        assert m.is_exact()
        assert m.det() == 1
        assert m @ m.inverse() == I2


def test_singular_inverse():
    with pytest.raises(DomainError):
        Mat2(1, 2, 2, 4).inverse()


def test_free_reduction_and_inverse():
    w = FreeWord.parse("a b b^-1 a^2")
    assert str(w) == "a a a"
    assert w * w.inverse() == FreeWord()
    assert FreeWord.parse("1") == FreeWord()


def test_split_conjugate():
    w = FreeWord.parse("a b g1 b^-1 a^-1")
    c, core = w.split_conjugate()
    assert core == FreeWord.gen("g1")
    assert c * core * c.inverse() == w


def test_numeric_matrices(parabolic_pair):
    x, _ = parabolic_pair
    z = x.to_complex()
    assert not z.is_exact()
    assert z.close_to(x, 1e-12)
    assert (z @ z.inverse()).is_scalar(1e-12)
