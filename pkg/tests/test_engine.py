import math
import random

import pytest

from oracles import edges_text, random_digraph, simple_paths
from problite import (
    DepthLimitExceeded,
    Engine,
    InstantiationError,
    NonGroundProbabilisticCall,
    QueryError,
    SampleState,
    add_prelude,
    best_proof,
    collect_proofs,
    k_best_proofs,
    parse_program,
    parse_query,
    solve,
    solve_in_sample,
    threshold_pruner,
)
from problite.engine import SolveStatus
from problite.terms import format_term

PATH2 = "path(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).\n"


def edge_names(proof):
    return tuple(format_term(t.args[0]) + format_term(t.args[1]) for t in proof.terms)


def graph_program(edges, paths_text):
    program = parse_program(edges_text(edges) + paths_text)
    return add_prelude(program)


def test_running_example_proofs(example):
    proofs = collect_proofs(example, parse_query("path(c,d)"))
    assert [edge_names(p) for p in proofs] == [("cd",), ("ce", "ed")]
    assert [p.probability for p in proofs] == pytest.approx([0.9, 0.4])
    proofs = collect_proofs(example, parse_query("path(a,d)"))
    assert sorted(round(p.probability, 12) for p in proofs) == [0.168, 0.32, 0.378, 0.72]


def test_answers_bind_query_variables(example):
    proofs = collect_proofs(example, parse_query("path(a,X)"))
    reached = [format_term(p.answer["X"]) for p in proofs]
    assert set(reached) == {"b", "c", "d", "e"}
    assert all(p.answer for p in proofs)


def test_engine_state_restored_after_run(example):
    engine = Engine(example)
    for _ in engine.run(parse_query("path(a,d)")):
        assert engine.proof
    assert engine.trail == [] and engine.proof == [] and engine.log_prob == 0.0
    # an abandoned generator also restores state
    gen = engine.run(parse_query("path(a,d)"))
    next(gen)
    gen.close()
    assert engine.trail == [] and engine.proof == [] and engine.proof_set == set()


def test_all_simple_paths_found(paths_text):
    rng = random.Random(4)
    for _ in range(60):
        edges = random_digraph(rng, rng.randint(2, 6), rng.randint(1, 12), acyclic=False)
        program = graph_program(edges, paths_text)
        nodes = sorted({u for u, _, _ in edges} | {v for _, v, _ in edges})
        s, t = rng.sample(nodes, 2)
        proofs = collect_proofs(program, parse_query(f"path({s},{t},P)"))
        index = {(u, v): i for i, (u, v, _) in enumerate(edges)}
        found = sorted(sorted(index[(format_term(x.args[0]), format_term(x.args[1]))] for x in p.terms) for p in proofs)
        expected = sorted(sorted(p) for p in simple_paths(edges, s, t))
        assert found == expected


def test_repeated_fact_counted_once():
    program = parse_program("0.5::a.\np :- a, a.\n")
    (proof,) = collect_proofs(program, parse_query("p"))
    assert len(proof.facts) == 1 and proof.probability == pytest.approx(0.5)


def test_deterministic_goal_gives_empty_proof():
    program = parse_program("0.5::a.\nq.\np :- q.\n")
    (proof,) = collect_proofs(program, parse_query("p"))
    assert proof.facts == () and proof.probability == 1.0


def test_nonground_facts_are_numbered_by_instance():
    program = parse_program("0.3::e(X,Y).\np :- e(a,b), e(b,c), e(a,b).\n")
    (proof,) = collect_proofs(program, parse_query("p"))
    assert [str(g) for g in proof.facts] == ["0_1", "0_2"]
    assert proof.probability == pytest.approx(0.09)


def test_nonground_probabilistic_call_rejected():
    program = parse_program("0.3::e(X,Y).\np :- e(a,Z).\n")
    with pytest.raises(NonGroundProbabilisticCall):
        collect_proofs(program, parse_query("p"))


def test_unbound_goal_and_arithmetic():
    program = parse_program("p(X) :- X.\nq(Y) :- Z is Y + 1, Z > 2.\n")
    with pytest.raises(InstantiationError):
        collect_proofs(program, parse_query("p(X)"))
    with pytest.raises(InstantiationError):
        collect_proofs(program, parse_query("q(W)"))
    assert len(collect_proofs(program, parse_query("q(2)"))) == 1
    assert collect_proofs(program, parse_query("q(1)")) == []


def test_undefined_predicate_fails(example):
    assert collect_proofs(example, parse_query("nothing(a)")) == []


def test_depth_limit():
    program = parse_program("loop(X) :- loop(X).\n")
    with pytest.raises(DepthLimitExceeded):
        collect_proofs(program, parse_query("loop(a)"), max_depth=50)


def test_recorded_database_only_under_sampling(paths_text, example):
    program = add_prelude(parse_program(paths_text, example))
    with pytest.raises(QueryError, match="Monte Carlo"):
        collect_proofs(program, parse_query("memopath(a,d,P)"))


def test_memopath_in_sample(paths_text, example):
    program = add_prelude(parse_program(paths_text, example))
    sample = SampleState(program, seed=1)
    for gid_present in ([True] * 6, [False] * 6):
        sample.reset(0)
        for fact, present in zip(program.facts, gid_present):
            sample.set(fact.gid, present)
        assert solve_in_sample(program, parse_query("memopath(a,d,P)"), sample) == gid_present[0]


def test_threshold_pruner_records_stopped_prefixes(example):
    seen = []
    status = solve(example, parse_query("path(c,d)"), threshold_pruner(0.9), seen.append)
    assert status is SolveStatus.PRUNED
    assert [(edge_names(p), p.stopped) for p in seen] == [(("cd",), False), (("ce",), True)]
    status = solve(example, parse_query("path(c,d)"), threshold_pruner(0.01), lambda p: None)
    assert status is SolveStatus.EXHAUSTED


def test_best_proof(example):
    assert edge_names(best_proof(example, parse_query("path(c,d)"))) == ("cd",)
    best = best_proof(example, parse_query("path(a,d)"))
    assert edge_names(best) == ("ac", "cd") and best.probability == pytest.approx(0.72)
    assert best_proof(example, parse_query("path(d,a)")) is None


def test_best_proof_first_found_wins_ties():
    program = parse_program("0.5::a.\n0.5::b.\np :- a.\np :- b.\n")
    best = best_proof(program, parse_query("p"))
    assert best.facts[0].fact_id == 0


def test_k_best_against_sorted_proofs(paths_text):
    rng = random.Random(8)
    for _ in range(40):
        edges = random_digraph(rng, 6, rng.randint(4, 14), acyclic=False)
        program = graph_program(edges, paths_text)
        nodes = sorted({u for u, _, _ in edges} | {v for _, v, _ in edges})
        s, t = rng.sample(nodes, 2)
        goal = parse_query(f"path({s},{t},P)")
        all_probs = sorted((p.log_prob for p in collect_proofs(program, goal)), reverse=True)
        for k in (1, 2, 3, 5, 50):
            got = sorted((p.log_prob for p in k_best_proofs(program, goal, k)), reverse=True)
            if not all_probs:
                assert got == []
                continue
            cutoff = all_probs[min(k, len(all_probs)) - 1]
            expected = [lp for lp in all_probs if lp >= cutoff]
            assert got == pytest.approx(expected, abs=1e-12)


def test_k_best_keeps_ties():
    program = parse_program("0.5::a.\n0.5::b.\n0.5::c.\n0.9::d.\np :- d.\np :- a.\np :- b.\np :- c.\n")
    proofs = k_best_proofs(program, parse_query("p"), 2)
    assert len(proofs) == 4
    assert k_best_proofs(program, parse_query("p"), 1)[0].probability == pytest.approx(0.9)
    with pytest.raises(ValueError):
        k_best_proofs(program, parse_query("p"), 0)


def test_k_best_deduplicates_proofs():
    program = parse_program("0.5::a.\n0.6::b.\np :- a, b.\np :- b, a.\np :- a.\n")
    proofs = k_best_proofs(program, parse_query("p"), 5)
    assert sorted(len(p) for p in proofs) == [1, 2]


def test_k_best_needs_low_threshold_passes():
    # the only proof is far below the first threshold passes
    text = "".join(f"0.3::e{i}.\n" for i in range(8)) + "p :- " + ", ".join(f"e{i}" for i in range(8)) + ".\n"
    (proof,) = k_best_proofs(parse_program(text), parse_query("p"), 3)
    assert proof.probability == pytest.approx(0.3**8)


def test_first_argument_indexing_keeps_results(paths_text):
    # facts with open and bound arguments mixed
    program = parse_program("0.5::e(a,b).\n0.5::e(X,c).\n0.5::e(b,Y).\nq(Z) :- e(a,Z).\n")
    answers = sorted(format_term(p.answer["Z"]) for p in collect_proofs(program, parse_query("q(Z)")))
    assert answers == ["b", "c"]


def test_proof_probabilities_are_products(paths_text):
    rng = random.Random(12)
    edges = random_digraph(rng, 6, 12, acyclic=False)
    program = graph_program(edges, paths_text)
    probs = {(u, v): p for u, v, p in edges}
    for proof in collect_proofs(program, parse_query(f"path({edges[0][0]},{edges[-1][1]},P)")):
        expected = math.prod(probs[(format_term(t.args[0]), format_term(t.args[1]))] for t in proof.terms)
        assert proof.probability == pytest.approx(expected, rel=1e-12)
