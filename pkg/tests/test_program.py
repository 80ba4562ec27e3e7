import math

import pytest

from problite import GroundFactId, LoadError, NonGroundProbabilisticCall, Probability, Program, parse_program, parse_term
from problite.program import GroundingTable, subprogram_probability
from problite.terms import Atom


def test_probability_bounds():
    assert Probability(0.0).log_value == -math.inf
    assert Probability(1).log_value == 0.0
    assert Probability(0.8).log_value == pytest.approx(math.log(0.8))
    for bad in (-0.1, 1.0001, float("nan")):
        with pytest.raises(LoadError):
            Probability(bad)


def test_fact_ids_follow_declaration_order(example):
    names = [f"{f.head.args[0].name}{f.head.args[1].name}" for f in example.facts]
    assert names == ["ac", "ab", "ce", "bc", "cd", "ed"]
    assert [f.fact_id for f in example.facts] == list(range(6))
    assert example.is_probabilistic("edge", 2) and not example.is_probabilistic("path", 2)
    assert example.defines("path", 2) and not example.defines("path", 3)


def test_ground_fact_id_text():
    assert str(GroundFactId(5, 1)) == "5_1"
    assert str(GroundFactId(3)) == "3"


def test_subprogram_probability_of_one_world(example):
    universe = [f.gid for f in example.facts]
    chosen = [universe[0], universe[4]]  # ac, cd
    expected = 0.8 * 0.9 * (1 - 0.7) * (1 - 0.8) * (1 - 0.6) * (1 - 0.5)
    assert subprogram_probability(example, chosen, universe) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(ValueError):
        subprogram_probability(example, [GroundFactId(9)], universe)


def test_world_probabilities_sum_to_one(example):
    universe = [f.gid for f in example.facts]
    total = 0.0
    for mask in range(1 << len(universe)):
        total += subprogram_probability(example, [g for i, g in enumerate(universe) if mask >> i & 1], universe)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_grounding_table_numbers_instances():
    program = parse_program("0.3::p(X).\n0.4::q(a).")
    table = GroundingTable(program)
    a = table.ground_id(0, parse_term("p(a)"))
    b = table.ground_id(0, parse_term("p(b)"))
    assert (a, b) == (GroundFactId(0, 1), GroundFactId(0, 2))
    assert table.ground_id(0, parse_term("p(a)")) == a
    assert table.ground_id(1, parse_term("q(a)")) == GroundFactId(1, 0)
    assert table.instance(b).args[0] is Atom("b")
    with pytest.raises(NonGroundProbabilisticCall):
        table.ground_id(0, parse_term("p(Y)"))
    table.clear()
    assert len(table) == 0


def test_index_selects_on_first_bound_discriminating_argument():
    program = parse_program("absent(_, []).\nabsent(X, [Y|Z]) :- X \\== Y, absent(X, Z).")
    index = program._clause_index[("absent", 2)]
    assert len(index.select((Atom("a"), Atom("[]")))) == 1
    assert len(index.select((Atom("a"), parse_term("[b]")))) == 1
    assert len(index.select((Atom("a"), parse_term("T")))) == 2


def test_index_keeps_declaration_order_with_open_items():
    program = Program()
    parse_program("0.1::e(a,b).\n0.2::e(X,c).\n0.3::e(a,d).\n0.4::e(b,e).", program)
    index = program._fact_index[("e", 2)]
    ids = [f.fact_id for f in index.select((Atom("a"), parse_term("V")))]
    assert ids == [0, 1, 2]
    assert [f.fact_id for f in index.select((Atom("z"), parse_term("V")))] == [1]


def test_extend_and_text(example):
    copy = Program().extend(example)
    assert copy.to_text() == example.to_text()
    assert "0.8::edge(a,c)." in copy.to_text()
