import pytest

from services.braids import (
    BraidWord,
    Involution,
    InvolutionKind,
    Perm,
    artin_act,
    closure_assignment,
    closure_is_knot,
    closure_pd,
    cyclic_conjugator,
    named_braid,
    perm_image,
    star,
    strand_holonomy,
    turks_head,
    turks_head_check,
    twist_tuple,
)
from services.diagrams import wirtinger_residual
from services.errors import ClosureNotKnotError, DomainError, ParseError, StrandMismatchError
from services.matrices import FreeWord

HALF_10_123 = "s1 S2 s1 S2 s1"


def reflect(n: int) -> Involution:
    return Involution(InvolutionKind.REFLECT, n)


def test_parse_and_print():
    b = BraidWord.parse(HALF_10_123)
    assert b.n == 3
    assert b.letters == ((1, 1), (2, -1), (1, 1), (2, -1), (1, 1))
    assert str(b) == HALF_10_123
    assert str(BraidWord(3)) == "1"


def test_parse_errors():
    with pytest.raises(ParseError):
        BraidWord.parse("s1 x2")
    with pytest.raises(DomainError):
        BraidWord.parse("s3", 3)


def test_star_reflect():
    b = BraidWord.parse(HALF_10_123)
    assert str(star(b, reflect(3))) == "S2 s1 S2 s1 S2"


def test_star_mirror():
    b = BraidWord.parse("s1 S2 S2 s1 s1")
    assert str(star(b, Involution(InvolutionKind.MIRROR, 3))) == "S1 s2 s2 S1 S1"


def test_star_is_an_involution():
    b = BraidWord.parse("s1 s2 S3 s1 S2", 4)
    for kind in InvolutionKind:
        tau = Involution(kind, 4)
        assert star(star(b, tau), tau) == b


def test_star_strand_mismatch():
    with pytest.raises(StrandMismatchError):
        star(BraidWord.parse("s1"), reflect(3))


def test_perm_image():
    assert perm_image(BraidWord(3)) == Perm.identity(3)
    assert perm_image(BraidWord.parse("s1")) == Perm((2, 1))
    assert perm_image(BraidWord.parse(HALF_10_123), reflect(3)).is_full_cycle()


def test_closure_is_knot():
    assert closure_is_knot(BraidWord.parse(HALF_10_123), reflect(3))
    assert not closure_is_knot(BraidWord(3), reflect(3))
    assert not closure_is_knot(BraidWord.parse("s1 s2 s3"), reflect(4))


def test_artin_act_generator(exact_sl2):
    x, y, z = exact_sl2(), exact_sl2(), exact_sl2()
    assert artin_act(BraidWord(3), (x, y, z)) == (x, y, z)
    assert artin_act(BraidWord.parse("s1", 3), (x, y, z)) == (y, y.inverse() @ x @ y, z)


def test_artin_act_preserves_boundary_product(exact_sl2):
    items = [exact_sl2() for _ in range(4)]
    moved = artin_act(BraidWord.parse("s1 S2 s3 s2 S1", 4), items)
    before = items[0] @ items[1] @ items[2] @ items[3]
    after = moved[0] @ moved[1] @ moved[2] @ moved[3]
    assert before == after


def test_artin_act_inverse(exact_sl2):
    b = BraidWord.parse("s1 S2 s2 s1 S2 S1")
    items = tuple(exact_sl2() for _ in range(3))
    assert artin_act(b.inverse(), artin_act(b, items)) == items


def test_twist_intertwines_star(exact_sl2):
    b = BraidWord.parse("s1 S2 s3 s1", 4)
    items = [exact_sl2() for _ in range(4)]
    for kind in InvolutionKind:
        tau = Involution(kind, 4)
        assert artin_act(star(b, tau), twist_tuple(items, tau)) == twist_tuple(artin_act(b, items), tau)


def test_turks_head_3_3():
    full, half = turks_head(3, 3)
    assert str(full) == "s1 S2 s1 S2 s1 S2"
    assert str(half) == "s1 S2 s1"


def test_turks_head_parameters():
    with pytest.raises(DomainError):
        turks_head(4, 3)
    with pytest.raises(DomainError):
        turks_head(3, 1)


@pytest.mark.parametrize("p, q", [(3, 3), (3, 5), (5, 3), (7, 3)])
def test_turks_head_check(p, q):
    check = turks_head_check(p, q, samples=10)
    assert check.holds
    if p == 3:
        assert len(check.conjugator) == 0


@pytest.mark.parametrize("p, q", [(3, 5), (5, 3)])
def test_turks_head_permutations_match_exactly(p, q):
    check = turks_head_check(p, q, samples=2)
    doubled = check.half * star(check.half, reflect(p))
    conjugated = check.conjugator.inverse() * check.full * check.conjugator
    assert check.perm_agrees
    assert perm_image(doubled) == perm_image(conjugated)


def test_equal_cycle_types_are_not_equal_permutations():
    first, second = perm_image(BraidWord.parse("s1 s2")), perm_image(BraidWord.parse("s2 s1"))
    assert sorted(map(len, first.cycles())) == sorted(map(len, second.cycles()))
    assert first != second


def test_cyclic_conjugator_rotation(exact_sl2):
    source = BraidWord.parse("s1 s2 S1")
    target = BraidWord.parse("s2 S1 s1")
    gamma = cyclic_conjugator(source, target)
    assert gamma is not None
    items = [exact_sl2() for _ in range(3)]
    assert artin_act(target, items) == artin_act(gamma.inverse() * source * gamma, items)
    assert cyclic_conjugator(source, BraidWord.parse("s1 s1 s2")) is None


def test_strand_holonomy_is_peripheral():
    b = BraidWord.parse(HALF_10_123)
    tau = reflect(3)
    for i in (1, 2, 3):
        u = strand_holonomy(b, tau, i)
        assert u.exponent_sum("a") != 0
        assert all(g in ("a", "g1", "g2", "g3") for g in u.generators)


def test_strand_holonomy_needs_a_knot():
    with pytest.raises(ClosureNotKnotError):
        strand_holonomy(BraidWord(3), reflect(3), 1)


def test_closure_assignment(exact_sl2):
    w = BraidWord.parse("s1 S2 s1 S2")
    pd = closure_pd(w)
    assert pd.component_count() == 1
    m = exact_sl2()
    fixed = closure_assignment(w, [m, m, m])
    assert set(fixed) == set(pd.edges)
    assert wirtinger_residual(pd, fixed) == 0


def test_free_word_images_are_conjugates():
    gens = [FreeWord.gen(f"g{i}") for i in (1, 2, 3)]
    for word in artin_act(BraidWord.parse(HALF_10_123), gens):
        _, core = word.split_conjugate()
        assert len(core) == 1


def test_named_braids():
    b, tau = named_braid("10_123")
    assert str(b) == HALF_10_123
    assert tau.kind == InvolutionKind.REFLECT
    with pytest.raises(ParseError):
        named_braid("no_such_knot")
