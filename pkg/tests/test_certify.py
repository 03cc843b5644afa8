import numpy as np
import pytest
from sympy import Rational

from services.braids import BraidWord, Involution, InvolutionKind, turks_head
from services.certify import (
    CharCoordinateSet,
    KleinCase,
    assemble_closure_rep,
    check_A_squared,
    construction2_family,
    hypothesis_check,
    intertwiner,
    irreducible,
    jacobian_rank,
    klein_classify,
    mapping_torus_residual,
    solve_mapping_torus,
)
from services.diagrams import FamilyPoint
from services.errors import (
    ClosureNotKnotError,
    InconclusiveCheckError,
    IndeterminateRankError,
    NoIntertwinerError,
    StencilResidualError,
)
from services.matrices import FreeWord, I2, Mat2, random_exact_sl2

HALF_10_123 = BraidWord.parse("s1 S2 s1 S2 s1")
REFLECT = Involution(InvolutionKind.REFLECT, 3)


@pytest.fixture
def irreducible_triple(parabolic_pair):
    x, y = parabolic_pair
    return [x, y, x @ y]


def test_irreducible_examples(parabolic_pair):
    assert irreducible(list(parabolic_pair))
    assert not irreducible([Mat2(2, 1, 0, Rational(1, 2)), Mat2(1, 5, 0, 1), Mat2(-1, 3, 0, -1)])
    assert not irreducible([Mat2(1, 1, 0, 1)])


def test_irreducible_numeric(parabolic_pair):
    x, y = (m.to_complex() for m in parabolic_pair)
    assert irreducible([x, y])
    assert not irreducible([x, x.inverse()])


def test_intertwiner_of_identical_triples(irreducible_triple):
    a = intertwiner(irreducible_triple, irreducible_triple)
    assert a.is_scalar(1e-9)


def test_intertwiner_recovers_the_conjugator(irreducible_triple, exact_sl2):
    m = exact_sl2()
    dst = [g.conjugate_by(m) for g in irreducible_triple]
    a = intertwiner(irreducible_triple, dst)
    assert min(a.distance(m), a.distance(-m)) < 1e-8
    assert abs(complex(a.det()) - 1) < 1e-10


def test_intertwiner_needs_equal_characters(irreducible_triple):
    x, y, _ = irreducible_triple
    with pytest.raises(NoIntertwinerError):
        intertwiner(irreducible_triple, [x, y, I2])


def test_check_A_squared():
    generic = Mat2(1, 1, 0, 1)
    assert check_A_squared(Mat2(0, 1, -1, 0), generic)
    assert not check_A_squared(I2, generic)
    with pytest.raises(InconclusiveCheckError):
        check_A_squared(Mat2(0, 1, -1, 0), -I2)


def test_klein_case_1(exact_sl2):
    assert klein_classify(exact_sl2(), I2) == KleinCase.CASE_1


def test_klein_case_2():
    mb = Mat2(2, 0, 0, Rational(1, 2))
    ma = Mat2(0, 1, -1, 0)
    assert klein_classify(ma, mb) == KleinCase.CASE_2
    assert ma.trace() == 0


def test_klein_case_3():
    mb = Mat2(1 + 0j, 1 + 0j, 0j, 1 + 0j)
    ma = Mat2(1j, 0j, 0j, -1j)
    assert klein_classify(ma, mb) == KleinCase.CASE_3


def test_klein_is_conjugation_invariant(exact_sl2):
    cases = [
        (Mat2(0, 1, -1, 0), Mat2(2, 0, 0, Rational(1, 2))),
        (Mat2(1j, 0j, 0j, -1j), Mat2(1 + 0j, 1 + 0j, 0j, 1 + 0j)),
    ]
    for ma, mb in cases:
        m = exact_sl2().to_complex()
        assert klein_classify(ma.conjugate_by(m), mb.conjugate_by(m)) == klein_classify(ma, mb)


def test_klein_not_a_representation(parabolic_pair):
    x, y = parabolic_pair
    assert klein_classify(x, y) == KleinCase.NOT_A_REP


KLEIN_SAMPLES_PER_CASE = 100


def _unit_complex(rng, low, high):
    return complex(rng.uniform(low, high) * np.exp(1j * rng.uniform(0, 2 * np.pi)))


def klein_normal_form(case, rng):
    """Random (a, b) in the normal form of a Klein bottle representation case."""
    sign = 1 if rng.random() < 0.5 else -1
    if case == KleinCase.CASE_1:
        return random_exact_sl2(rng, steps=2, bound=2).to_complex(), Mat2(sign + 0j, 0j, 0j, sign + 0j)
    if case == KleinCase.CASE_2:
        lam, s = _unit_complex(rng, 1.2, 2.0), _unit_complex(rng, 0.5, 2.0)
        return Mat2(0j, s, -1 / s, 0j), Mat2(lam, 0j, 0j, 1 / lam)
    x, beta = _unit_complex(rng, 0.5, 2.0), _unit_complex(rng, 0.0, 2.0)
    return Mat2(1j, beta, 0j, -1j), Mat2(sign + 0j, sign * x, 0j, sign + 0j)


def random_conjugator(rng):
    mu = _unit_complex(rng, 0.7, 1.4)
    return random_exact_sl2(rng, steps=2, bound=2).to_complex() @ Mat2(mu, 0j, 0j, 1 / mu)


@pytest.mark.parametrize("case", [KleinCase.CASE_1, KleinCase.CASE_2, KleinCase.CASE_3])
def test_klein_classify_random_conjugates(case):
    rng = np.random.default_rng(300 + int(case.value))
    for _ in range(KLEIN_SAMPLES_PER_CASE):
        ma, mb = klein_normal_form(case, rng)
        g = random_conjugator(rng)
        ca, cb = ma.conjugate_by(g), mb.conjugate_by(g)
        assert klein_classify(ca, cb) == case
        if case == KleinCase.CASE_2:
            assert abs(complex(ca.trace())) < 1e-10
            assert abs(complex((ca @ cb).trace())) < 1e-10


def test_hypothesis_needs_a_knot():
    with pytest.raises(ClosureNotKnotError):
        construction2_family(BraidWord(3), REFLECT, count=1)


def test_hypothesis_rejects_reducible_tuples():
    diag = Mat2(2, 0, 0, Rational(1, 2))
    report = hypothesis_check(HALF_10_123, REFLECT, [diag, diag, diag], I2)
    assert not report.condition_b
    assert report.status != "hypothesis verified"


def constant_family(rep):
    return lambda params: FamilyPoint(tuple(params), rep, 0.0)


def test_rank_of_a_constant_family(irreducible_triple):
    rep = dict(enumerate(irreducible_triple))
    coords = CharCoordinateSet.standard(["e0", "e1", "e2"])
    result = jacobian_rank(constant_family(rep), (0.1, 0.2), coords)
    assert result.rank == 0
    assert result.certificate_grade


def test_rank_of_a_conjugation_path(irreducible_triple):
    def family(params):
        s = complex(params[0])
        m = Mat2(1 + 0j, s, 0j, 1 + 0j)
        return FamilyPoint((s,), {k: g.conjugate_by(m) for k, g in enumerate(irreducible_triple)}, 0.0)

    coords = CharCoordinateSet.standard(["e0", "e1", "e2"])
    assert jacobian_rank(family, (0.3,), coords).rank == 0


def test_rank_of_a_two_parameter_family():
    def family(params):
        s, t = (complex(p) for p in params)
        g = Mat2(1 + s, 1 + 0j, 0j, 1 / (1 + s))
        h = Mat2(1 + s, 0j, t, 1 / (1 + s))
        return FamilyPoint((s, t), {0: g, 1: h}, 0.0)

    coords = CharCoordinateSet.standard(["e0", "e1"])
    result = jacobian_rank(family, (0.4, 0.7), coords)
    assert result.rank == 2
    assert result.full_rank
    assert result.gap >= 1e6


def test_rank_survives_affine_reparameterization():
    def family(params):
        s, t = (complex(p) for p in params)
        g = Mat2(1 + s, 1 + 0j, 0j, 1 / (1 + s))
        h = Mat2(1 + s, 0j, t, 1 / (1 + s))
        return FamilyPoint((s, t), {0: g, 1: h}, 0.0)

    def skewed(params):
        u, v = (complex(p) for p in params)
        return family((0.3 * u + 0.5 * v + 0.1, -0.7 * u + 0.2 * v + 0.4))

    coords = CharCoordinateSet.standard(["e0", "e1"])
    assert jacobian_rank(skewed, (-0.2, 1.1), coords).rank == jacobian_rank(family, (0.4, 0.7), coords).rank == 2


def test_rank_stencil_residual(irreducible_triple):
    rep = dict(enumerate(irreducible_triple))
    def broken(params):
        return FamilyPoint(tuple(params), rep, 1e-3)

    with pytest.raises(StencilResidualError):
        jacobian_rank(broken, (0.0,), CharCoordinateSet.standard(["e0"]))


def test_rank_indeterminate_gap():
    slopes = (10.0, 0.011, 0.009)

    def family(params):
        # trace of [[p, -1], [1, 0]] is p
        rep = {k: Mat2(c * complex(p), -1 + 0j, 1 + 0j, 0j) for k, (c, p) in enumerate(zip(slopes, params))}
        return FamilyPoint(tuple(params), rep, 0.0)

    coords = CharCoordinateSet(["e0", "e1", "e2"], [FreeWord.gen(f"e{k}") for k in range(3)])
    with pytest.raises(IndeterminateRankError):
        jacobian_rank(family, (0.1, 0.2, 0.3), coords)


@pytest.mark.slow
def test_construction2_for_10_123():
    result = construction2_family(HALF_10_123, REFLECT, count=5, seed=42)
    assert result.points
    assert len(result.points) + sum(result.skipped.values()) == 5
    assert result.max_residual < 1e-8
    assert result.max_A_square_residual < 1e-8
    for point in result.points:
        assert point.a_squared_ok
        report = hypothesis_check(HALF_10_123, REFLECT, point.gens, point.a)
        assert report.condition_b
    assert np.isfinite(result.max_residual)


@pytest.mark.slow
def test_mapping_torus_solve_assembles_a_closure_rep():
    solution = solve_mapping_torus(HALF_10_123, REFLECT, seed=7)
    assert solution.irreducible
    assert mapping_torus_residual(HALF_10_123, REFLECT, solution.gens, solution.a) < 1e-8
    assert abs(complex(solution.a.trace())) < 1e-8
    closure = assemble_closure_rep(HALF_10_123, REFLECT, solution.gens, solution.a)
    assert closure.residual < 1e-8
    assert closure.trace_spread < 1e-8


@pytest.mark.slow
def test_hypothesis_holds_on_turks_head_3_5():
    _, half = turks_head(3, 5)
    result = construction2_family(half, REFLECT, count=3, seed=42)
    assert result.points
    for point in result.points:
        report = hypothesis_check(half, REFLECT, point.gens, point.a)
        assert report.condition_b
        assert not report.inconclusive
