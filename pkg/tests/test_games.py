from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import random_neg
from negcheck import fixtures
from negcheck.games import OmitInstance, build_arena, eve_winning, run_from_strategy, solve_omitting
from negcheck.generators import gen_structured
from negcheck.graph import topo_order
from negcheck.model import PreconditionError, restrict


def fig1r_det_part():
    return restrict(fixtures.load("FIG1R"), ["p0"])


def test_arena_of_fig1r_det_part():
    arena = build_arena(fig1r_det_part())
    assert arena.eve_positions == ("n0", "n1", "n2", "n3")
    assert arena.adam_positions == (("n0", "a"), ("n1", "a"), ("n1", "b"), ("n2", "a"))
    assert arena.adam_edges[("n1", "b")] == ("n2",)


def test_omitted_node_is_not_an_eve_position():
    assert build_arena(fig1r_det_part(), ["n2"]).eve_positions == ("n0", "n1", "n3")


def test_omitting_the_final_node_is_rejected():
    with pytest.raises(ValueError):
        build_arena(fig1r_det_part(), ["n3"])


def test_sigma_max_examples():
    neg = fig1r_det_part()
    free = eve_winning(build_arena(neg))
    assert free.eve_wins and free.sigma["n1"] == ("a", "b")
    assert eve_winning(build_arena(neg, ["n2"])).sigma["n1"] == ("a",)
    assert not eve_winning(build_arena(neg, ["n1"])).eve_wins


def test_solve_omitting_examples():
    nd = restrict(fixtures.load("FIG1R-MOD"), ["p0"])
    plan = solve_omitting(nd, include=[("n0", "a"), ("n2", "a")])
    assert plan.run.steps == (("n0", "a"), ("n1", "b"), ("n2", "a"))
    assert solve_omitting(nd, include=[("n1", "a"), ("n1", "b")]) is None
    assert solve_omitting(nd, OmitInstance(frozenset({("n0", "a")}))) is not None
    assert solve_omitting(nd, omit=["n0"]) is None


def test_solve_omitting_preconditions():
    with pytest.raises(PreconditionError):
        solve_omitting(fixtures.load("FIG1L"))
    with pytest.raises(PreconditionError):
        solve_omitting(fixtures.load("FIG1M"))
    with pytest.raises(PreconditionError):
        solve_omitting(fixtures.load("ANTI-F"))
    steps = [("n0", "a"), ("n1", "a"), ("n2", "a")]
    with pytest.raises(PreconditionError):
        solve_omitting(fig1r_det_part(), include=steps, k=2)


@pytest.mark.parametrize("seed", range(5))
def test_empty_instance_gives_a_successful_run(seed):
    neg = gen_structured(12, 3, seed)
    assert solve_omitting(neg).run.is_successful(neg)


@lru_cache(maxsize=None)
def sound_instance(seed: int, structured: bool):
    if structured:
        return gen_structured(9, 3, seed)
    for s in range(seed, seed + 200):
        neg = random_neg(s, nodes=8, procs=3, acyclic=True, deterministic=True)
        if oracles.is_sound(neg):
            return neg
    raise AssertionError("no sound instance nearby")


def winning_nodes(neg, omit):
    """Nodes from which some choice of results reaches the final node avoiding ``omit``."""
    win = set()
    for n in reversed(topo_order(neg).order):
        if n == neg.fin:
            win.add(n)
        elif n not in omit and any(
                all(t in win for p in neg.dom[n] for t in neg.delta[(n, a, p)]) for a in neg.out[n]):
            win.add(n)
    return win


instances = st.builds(sound_instance, st.integers(0, 5000), st.booleans())


@given(instances, st.data())
def test_eve_wins_iff_an_omitting_run_exists(neg, data):
    omit = data.draw(st.sets(st.sampled_from([n for n in neg.nodes if n != neg.fin]), max_size=3))
    strategy = eve_winning(build_arena(neg, omit))
    assert strategy.eve_wins == oracles.omit_exists(neg, omit=omit)
    assert strategy.winning_nodes == winning_nodes(neg, omit)


@given(instances, st.data())
def test_sigma_max_is_maximal(neg, data):
    omit = data.draw(st.sets(st.sampled_from([n for n in neg.nodes if n != neg.fin]), max_size=2))
    strategy = eve_winning(build_arena(neg, omit))
    win = strategy.winning_nodes
    for n in win - {neg.fin}:
        for a in neg.out[n]:
            safe = all(t in win for p in neg.dom[n] for t in neg.delta[(n, a, p)])
            assert (a in strategy.sigma[n]) == safe


@given(instances, st.data())
def test_solve_omitting_matches_run_enumeration(neg, data):
    pairs = [(n, a) for n in neg.nodes for a in neg.out[n]]
    include = data.draw(st.lists(st.sampled_from(pairs), max_size=2, unique=True))
    omit = data.draw(st.sets(st.sampled_from([n for n in neg.nodes if n != neg.fin]), max_size=2))
    plan = solve_omitting(neg, include=include, omit=omit)
    assert (plan is not None) == oracles.omit_exists(neg, include, omit)
    if plan is not None:
        assert plan.run.is_successful(neg)
        assert set(include) <= set(plan.run.steps)
        assert not {n for n, _ in plan.run.steps} & omit
        assert all(plan.choices[n] == a for n, a in plan.run.steps)


@given(instances, st.data())
def test_two_results_of_one_node_never_succeed(neg, data):
    node = data.draw(st.sampled_from([n for n in neg.nodes if len(neg.out[n]) > 1] or [None]))
    if node is None:
        return
    a, b = neg.out[node][:2]
    assert solve_omitting(neg, include=[(node, a), (node, b)]) is None


@given(instances, st.data())
def test_strategy_run_visits_its_node_set(neg, data):
    strategy = eve_winning(build_arena(neg))
    choices = {n: data.draw(st.sampled_from(moves)) for n, moves in strategy.sigma.items() if moves}
    run, visited = run_from_strategy(neg, choices)
    reach, stack = {neg.init}, [neg.init]
    while stack:
        n = stack.pop()
        if n == neg.fin:
            continue
        for p in neg.dom[n]:
            for t in neg.delta[(n, choices[n], p)]:
                if t not in reach:
                    reach.add(t)
                    stack.append(t)
    assert run.is_successful(neg)
    assert {n for n, _ in run.steps} == reach - {neg.fin}
    assert visited == reach
