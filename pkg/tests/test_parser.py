import pytest
from hypothesis import given, settings, strategies as st

from problite import LoadError, ParseError, parse_program, parse_query, parse_term
from problite.terms import Atom, Compound, Var, format_term, list_items, structurally_equal


def same_program(a, b) -> bool:
    if len(a.facts) != len(b.facts) or len(a.clauses) != len(b.clauses):
        return False
    for f, g in zip(a.facts, b.facts):
        if f.prob.value != g.prob.value or not structurally_equal(f.head, g.head):
            return False
    for c, d in zip(a.clauses, b.clauses):
        if not structurally_equal(Compound("r", (c.head, *c.body)), Compound("r", (d.head, *d.body))):
            return False
    return True


def test_running_example(example_text):
    program = parse_program(example_text)
    assert len(program.facts) == 6
    assert len(program.clauses) == 2
    assert format_term(program.facts[0].head) == "edge(a,c)"
    assert program.facts[0].prob.value == 0.8
    assert [f.prob.value for f in program.facts] == [0.8, 0.7, 0.8, 0.6, 0.9, 0.5]


def test_list_syntax_in_clause_body():
    program = parse_program("path(X,Y,A) :- X \\== Y, edge(X,Z), absent(Z,A), path(Z,Y,[Z|A],R).")
    (clause,) = program.clauses
    last = clause.body[-1]
    cell = last.args[2]
    assert cell.functor == "." and cell.args[0] is clause.body[1].args[1]
    assert clause.body[0].functor == "\\=="


def test_lists_desugar_to_cons_cells():
    term = parse_term("[a,b,c]")
    assert [t.name for t in list_items(term)] == ["a", "b", "c"]
    assert parse_term("[]") is Atom("[]")
    assert format_term(parse_term("[a|T]")) == "[a|T]"


def test_probability_out_of_range():
    with pytest.raises(ParseError) as info:
        parse_program("1.5::edge(a,b).")
    assert "out of range" in str(info.value)
    assert info.value.span.line == 1 and info.value.span.column == 1


def test_label_on_rule_rejected():
    with pytest.raises(ParseError, match="rules"):
        parse_program("0.5::p(X) :- q(X).")


def test_query_forms():
    goal = parse_query("path(c,d)")
    assert isinstance(goal, Compound) and goal.functor == "path" and len(goal.args) == 2
    assert structurally_equal(parse_query("path(c,d)."), goal)
    goal = parse_query("path('HGNC_983','HGNC_620',Path)")
    assert goal.args[0] is Atom("HGNC_983")
    assert isinstance(goal.args[2], Var)


def test_query_error_at_end_of_input():
    with pytest.raises(ParseError) as info:
        parse_query("path(c,")
    assert info.value.span.column == len("path(c,") + 1
    assert info.value.span.start == len("path(c,")


def test_comments_and_quoted_atoms():
    program = parse_program("% comment\n/* block\n comment */ 0.715::edge('PubMed_2196878','MIM_609065'). % tail\n")
    assert format_term(program.facts[0].head) == "edge('PubMed_2196878','MIM_609065')"


def test_arithmetic_and_comparisons():
    program = parse_program("lenpath(N,X,Y,A,P) :- X \\== Y, N > 0, NN is N-1, M is 2*N+1, N >= 0.")
    body = program.clauses[0].body
    assert [g.functor for g in body] == ["\\==", ">", "is", "is", ">="]
    assert format_term(body[3]) == "M is 2 * N + 1"


def test_error_spans_use_byte_offsets():
    with pytest.raises(ParseError) as info:
        parse_program("p('é').\nq(")
    span = info.value.span
    assert span.line == 2
    assert span.start == len("p('é').\nq(".encode("utf-8"))


def test_float_outside_label_rejected():
    with pytest.raises(ParseError, match="floating point"):
        parse_program("p(1.5).")


def test_clash_between_facts_and_clauses():
    with pytest.raises(ParseError, match="already defined"):
        parse_program("0.5::p(a).\np(b).")


def test_repeated_fact_is_a_new_variable():
    program = parse_program("0.5::p(a).\n0.5::p(a).")
    assert [f.fact_id for f in program.facts] == [0, 1]


def test_round_trip(example_text, paths_text):
    for text in (example_text, paths_text, "p(X) :- q(X, [a,b|T], -3, 'Q x'), X is -(Y) + 2 * Z."):
        program = parse_program(text)
        assert same_program(parse_program(program.to_text()), program)


# ----------------------------------------------------------------------
# generated programs

_atoms = st.sampled_from(["a", "b", "node_1", "'HGNC_983'", "'x y'", "[]"])
_vars = st.sampled_from(["X", "Y", "Z", "_Tail", "_"])


def _terms():
    return st.recursive(
        st.one_of(_atoms, _vars, st.integers(-50, 50).map(str)),
        lambda inner: st.one_of(
            st.tuples(st.sampled_from(["f", "g", "'h i'"]), st.lists(inner, min_size=1, max_size=3)).map(
                lambda t: f"{t[0]}({','.join(t[1])})"
            ),
            st.lists(inner, min_size=1, max_size=3).map(lambda xs: "[" + ",".join(xs) + "]"),
            st.tuples(st.lists(inner, min_size=1, max_size=2), _vars).map(lambda t: "[" + ",".join(t[0]) + "|" + t[1] + "]"),
        ),
        max_leaves=6,
    )


_goals = st.one_of(
    st.tuples(st.sampled_from(["p", "q", "r"]), st.lists(_terms(), min_size=1, max_size=3)).map(
        lambda t: f"{t[0]}({','.join(t[1])})"
    ),
    st.tuples(_vars, st.sampled_from(["\\==", "==", ">", ">=", "<", "=<", "="]), _vars).map(" ".join),
    st.tuples(_vars, _vars, st.integers(0, 9)).map(lambda t: f"{t[0]} is {t[1]} - {t[2]} * 2"),
)

_items = st.one_of(
    st.tuples(st.floats(0, 1).map(lambda p: f"{p:.3f}"), st.lists(_atoms, min_size=1, max_size=2)).map(
        lambda t: f"{t[0]}::e({','.join(t[1])})."
    ),
    st.tuples(st.lists(_terms(), min_size=1, max_size=2), st.lists(_goals, max_size=3)).map(
        lambda t: f"h({','.join(t[0])})" + (f" :- {', '.join(t[1])}." if t[1] else ".")
    ),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(_items, max_size=6))
def test_generated_programs_round_trip(items):
    text = "\n".join(items)
    program = parse_program(text)
    again = parse_program(program.to_text())
    assert same_program(again, program)


@settings(max_examples=500, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("abXY_()[]|,.:-=\\<>0123456789 '%\n*+")), max_size=40))
def test_parse_is_total(text):
    try:
        parse_program(text)
    except ParseError as exc:
        assert exc.span is not None
        assert 0 <= exc.span.start <= exc.span.end
    try:
        parse_query(text)
    except ParseError as exc:
        assert exc.span is not None
