import pytest

from config import DEFAULT_DATA_DIR
from services.braids import closure_pd, named_braid, star
from services.constructions import (
    Construction1Family,
    construction1_family,
    default_grid,
    load_instance,
    load_instances,
    parabolic_family,
    parabolic_unknot_matrix,
)
from services.diagrams import fox_determinant
from services.errors import DomainError, ParseError, XlkError
from services.pipelines import PARABOLIC_FILE, load_parabolic_instance
from services.tangles import c_closure, tangle_replace


@pytest.fixture(scope="module")
def family_10_98():
    pd, crossing, tangle, entry = load_instance("10_98", DEFAULT_DATA_DIR)
    return construction1_family(pd, crossing, tangle, knot_label=entry["knot_label"])


def test_default_grid_is_five_by_five():
    grid = default_grid()
    assert len(grid) == 25
    assert len({m for m, _ in grid}) == 5


def test_construction1_grid_residuals(family_10_98):
    assert len(family_10_98.points) == 25
    assert family_10_98.max_residual < 1e-10
    assert family_10_98.pd_knot.component_count() == 1


def test_construction1_point_2_1(family_10_98):
    point = family_10_98.family((2.0, 1.0))
    assert point.residual < 1e-10
    assert set(point.assignment) == set(family_10_98.pd_knot.edges)


def test_construction1_separates_characters(family_10_98):
    family = family_10_98.family
    for m, _ in default_grid()[::5]:
        assert abs(family.mixed_trace(m, 0.8) - family.mixed_trace(m, 1.5)) > 1e-6


def test_construction1_summary(family_10_98):
    summary = family_10_98.summary()
    assert summary["tangle"] == "2 0"
    assert summary["knot_components"] == 1
    assert summary["c_closure"]["chosen"].startswith("3/")


def test_construction1_10_99_instance():
    pd, crossing, tangle, _ = load_instance("10_99", DEFAULT_DATA_DIR)
    result = construction1_family(pd, crossing, tangle, grid=[(1.3, 0.7), (1.6, 1.4)])
    assert result.max_residual < 1e-10
    assert result.normalization.chosen.p == 3


def test_construction1_needs_a_joining_crossing():
    pd, _, tangle, _ = load_instance("10_98", DEFAULT_DATA_DIR)
    with pytest.raises(DomainError):
        construction1_family(pd, "X5", tangle)


def test_construction1_needs_the_unknot_under():
    pd, _, tangle, _ = load_instance("10_99", DEFAULT_DATA_DIR)
    with pytest.raises(DomainError):
        construction1_family(pd, "X2", tangle)


@pytest.mark.parametrize("name", ["10_98", "10_99"])
def test_ten_crossing_instances_are_alternating_knots(name):
    pd, crossing, tangle, _ = load_instance(name, DEFAULT_DATA_DIR)
    knot = tangle_replace(pd, crossing, tangle)
    assert len(knot.crossings) == 10
    assert knot.component_count() == 1
    assert knot.is_alternating()
    assert fox_determinant(knot) == 81


def test_10_99_matches_its_braid_closure():
    pd, crossing, tangle, _ = load_instance("10_99", DEFAULT_DATA_DIR)
    b, tau = named_braid("10_99", DEFAULT_DATA_DIR / "braids.json")
    closure = closure_pd(b * star(b, tau))
    assert len(closure.crossings) == 10
    assert fox_determinant(tangle_replace(pd, crossing, tangle)) == fox_determinant(closure)


@pytest.mark.parametrize("name", sorted(load_instances(DEFAULT_DATA_DIR / "construction1.json")))
def test_instance_determinant_is_multiplicative(name):
    pd, crossing, tangle, _ = load_instance(name, DEFAULT_DATA_DIR)
    knot = tangle_replace(pd, crossing, tangle)
    assert knot.component_count() == 1
    assert len(knot.crossings) == len(pd.crossings) - 1 + len(tangle.crossings)
    assert fox_determinant(knot) == 27 * c_closure(tangle).p


def test_reversed_instance_changes_the_crossing_sign():
    plain, crossing, _, _ = load_instance("10_99", DEFAULT_DATA_DIR)
    reversed_link, _, _, entry = load_instance("10_98", DEFAULT_DATA_DIR)
    assert entry["reverse"] == "unknot"
    assert reversed_link.crossing(crossing).sign == -plain.crossing(crossing).sign
    assert reversed_link.crossing(crossing).under == (9, 7)


def test_unknot_seed_meets_the_crossing(family_10_98):
    family = family_10_98.family
    assert family.solves_unknot
    point = family((1.6, 1.4))
    target = point.assignment[family.target_edge]
    assert target.distance(family.matrices(1.6, 1.4)["H_unknot"]) < 1e-9
    assert abs(complex(family.unknot_matrix(1.6, 1.4).det()) - 1) < 1e-9


def test_unknot_seed_search_is_seeded():
    pd, crossing, tangle, _ = load_instance("10_99", DEFAULT_DATA_DIR)
    grid = [(1.3, 0.7)]
    first = construction1_family(pd, crossing, tangle, grid=grid, seed=5)
    second = construction1_family(pd, crossing, tangle, grid=grid, seed=5)
    assert isinstance(first.family, Construction1Family)
    assert first.family.base_x.tolist() == second.family.base_x.tolist()


def test_unknown_instance():
    with pytest.raises(ParseError):
        load_instance("3_1", DEFAULT_DATA_DIR)


def test_parabolic_unknot_matrix():
    m = parabolic_unknot_matrix(0.3 + 0.1j, -1.2j)
    assert abs(complex(m.det()) - 1) < 1e-12
    assert abs(complex(m.trace()) - 2) < 1e-12


def test_parabolic_instance_overrides():
    path = DEFAULT_DATA_DIR / PARABOLIC_FILE
    _, labels, tangles = load_parabolic_instance(path)
    assert labels == ["c1", "c2"]
    assert [str(t) for t in tangles] == ["2 0", "2 0"]
    _, _, tangles = load_parabolic_instance(path, t2="2 1")
    assert str(tangles[1]) == "2 1"
    with pytest.raises(XlkError):
        load_parabolic_instance(path, c1="X1", c2="c2")


@pytest.mark.slow
def test_parabolic_family():
    pd, labels, tangles = load_parabolic_instance(DEFAULT_DATA_DIR / PARABOLIC_FILE)
    result = parabolic_family(pd, labels[0], labels[1], tangles[0], tangles[1], samples=3)
    assert len(result.points) == 3
    assert result.max_residual < 1e-10
    assert result.max_trace_deviation() < 1e-8
    assert result.pd_knot.component_count() == 1
