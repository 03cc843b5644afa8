import pytest

from config import DEFAULT_DATA_DIR
from services.diagrams import (
    PDCode,
    fox_determinant,
    is_representation_exact,
    load_pd,
    max_trace_spread,
    propagate,
    wirtinger_residual,
)
from services.errors import ParseError, PropagationError, UnassignedArcError
from services.matrices import I2, Mat2


@pytest.fixture
def split_link() -> PDCode:
    return load_pd(DEFAULT_DATA_DIR / "3_1_split.pd.json")


def test_bundled_split_link(split_link):
    assert split_link.component_count() == 2
    assert split_link.crossing("c").label == "c"
    assert len(split_link.arcs()) == 9


def test_trivial_representation(split_link):
    rep = {edge: I2 for edge in split_link.edges}
    assert wirtinger_residual(split_link, rep) == 0
    assert is_representation_exact(split_link, rep)


def test_abelian_on_one_component(split_link):
    m = Mat2(2, 1, 1, 1)
    trefoil = set(split_link.component_of(1))
    rep = {edge: (m if edge in trefoil else I2) for edge in split_link.edges}
    assert wirtinger_residual(split_link, rep) == 0


def test_propagate_fills_the_diagram(split_link):
    m = Mat2(2, 1, 1, 1)
    rep = propagate(split_link, {1: m, 2: m, 4: I2})
    assert set(rep) == set(split_link.edges)
    assert wirtinger_residual(split_link, rep) == 0
    assert max_trace_spread(rep, split_link.component_of(1)) == 0


def test_propagate_gets_stuck(split_link):
    with pytest.raises(PropagationError) as info:
        propagate(split_link, {4: I2})
    assert 1 in info.value.diagnostics["missing"]


def test_propagate_detects_inconsistency(split_link):
    with pytest.raises(PropagationError):
        propagate(split_link, {1: Mat2(2, 1, 1, 1), 3: Mat2(1, 1, 0, 1), 2: I2, 4: I2})


def test_unassigned_edges(split_link):
    with pytest.raises(UnassignedArcError):
        wirtinger_residual(split_link, {0: I2})


def test_dict_round_trip(split_link):
    again = PDCode.from_dict(split_link.to_dict())
    assert again.labels() == split_link.labels()
    assert again.designated == split_link.designated
    assert again.arcs() == split_link.arcs()


def test_broken_diagram():
    data = {
        "crossings": [
            {"label": "a", "under": [0, 1], "over": [2, 3], "sign": 1},
            {"label": "b", "under": [1, 0], "over": [2, 3], "sign": 1},
        ]
    }
    with pytest.raises(ParseError):
        PDCode.from_dict(data)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_pd(tmp_path / "nothing.json")


def test_fox_determinant_of_unlinked_loop():
    assert fox_determinant(PDCode(crossings=[], free_edges=[0])) == 0
    assert fox_determinant(PDCode(crossings=[])) == 1


def test_split_link_is_alternating(split_link):
    assert split_link.is_alternating()
    assert split_link.meta["roles"] == {"t_first": 1, "t_second": 2, "unknot": 4}


def test_reverse_component(split_link):
    unknot = set(split_link.component_of(4))
    reversed_link = split_link.reverse_component(4)
    assert reversed_link.component_count() == 2
    assert reversed_link.is_alternating()
    for before in split_link.crossings:
        after = reversed_link.crossing(before.label)
        one_strand = (before.under[0] in unknot) != (before.over[0] in unknot)
        assert after.sign == (-before.sign if one_strand else before.sign)
    assert reversed_link.crossing("X1").under == (4, 0)
    assert reversed_link.crossing("X2").over == (6, 4)
    assert reversed_link.crossing("X5") == split_link.crossing("X5")
    assert set(reversed_link.component_of(4)) == unknot


def test_reversal_keeps_representations(split_link):
    m = Mat2(2, 1, 1, 1)
    reversed_link = split_link.reverse_component(4)
    rep = propagate(reversed_link, {1: m, 2: m, 4: I2})
    assert wirtinger_residual(reversed_link, rep) == 0


def test_non_alternating_diagram():
    pd = PDCode.from_dict({
        "crossings": [
            {"label": "a", "under": [2, 3], "over": [0, 1], "sign": 1},
            {"label": "b", "under": [3, 2], "over": [1, 0], "sign": -1},
        ]
    })
    assert not pd.is_alternating()
