from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import random_neg
from negcheck import fixtures
from negcheck.data import (
    KINDS,
    DataSpec,
    RaceVerdict,
    SharedPath,
    builtin_spec,
    check_spec,
    check_violation,
    co_occur,
    emit_dataspec,
    inconsistent,
    make_spec,
    oracle_compliance,
    parse_dataspec,
    race,
    spec_compliance,
)
from negcheck.generators import gen_random_data, gen_structured
from negcheck.model import PreconditionError
from negcheck.ngt import parse_ngt
from negcheck.oracle import oracle_concurrent
from negcheck.patterns import Fork

EXCLUSIVE = ("negotiation exclusive\nprocesses p0 p1\ninit n0 ; fin f\n"
             "node n0 { p0 p1 } ; node m { p0 p1 } ; node n { p0 p1 } ; node f { p0 p1 }\n"
             "out n0 : a b ; out m : a ; out n : a\n"
             "arc n0 a p0 -> m ; arc n0 a p1 -> m ; arc n0 b p0 -> n ; arc n0 b p1 -> n\n"
             "arc m a p0 -> f ; arc m a p1 -> f ; arc n a p0 -> f ; arc n a p1 -> f\n")

PARALLEL = ("negotiation parallel\nprocesses p0 p1\ninit n0 ; fin f\n"
            "node n0 { p0 p1 } ; node m { p0 } ; node n { p1 } ; node f { p0 p1 }\n"
            "out n0 : a ; out m : a ; out n : a\n"
            "arc n0 a p0 -> m ; arc n0 a p1 -> n ; arc m a p0 -> f ; arc n a p1 -> f\n")


def test_co_occur_examples():
    neg = fixtures.load("FIG1L")
    fork = co_occur(neg, "n3", "n4")
    assert isinstance(fork, Fork) and (fork.p1, fork.p2, fork.n1, fork.n2) == ("p0", "p1", "n3", "n4")
    shared = co_occur(neg, "n1", "n3")
    assert isinstance(shared, SharedPath) and (shared.first, shared.second) == ("n1", "n3")
    assert co_occur(parse_ngt(EXCLUSIVE), "m", "n") is None


def test_co_occur_needs_sound_deterministic_input():
    with pytest.raises(PreconditionError):
        co_occur(fixtures.load("ANTI-F"), "n1", "n2")
    with pytest.raises(PreconditionError):
        co_occur(fixtures.load("FIG1M"), "n1", "n2")


def test_race_examples():
    par = race(parse_ngt(PARALLEL), "m", "n")
    assert par.race and par.method == "races" and par.fork is not None
    shared = race(fixtures.load("FIG1L"), "n1", "n3")
    assert not shared.race and shared.reason == "shared-domain"
    cyclic = race(fixtures.load("FIG1L"), "n1", "n2")
    assert cyclic.race and cyclic.method == "oracle"
    assert not race(parse_ngt(EXCLUSIVE), "m", "n").race


def test_fig1l_n1_n2_are_concurrently_enabled():
    neg = fixtures.load("FIG1L")
    assert oracle_concurrent(neg, "n1", "n2") == neg.config({"p0": {"n1"}, "p1": {"n2"}})


def test_data1_inconsistent_x2():
    verdict = builtin_spec(fixtures.load("DATA1"), "inconsistent", "x2")
    assert not verdict.ok and verdict.method == "oracle"
    assert (("n2", "a"), ("n3", "b")) in verdict.violations
    assert builtin_spec(fixtures.load("DATA1"), "inconsistent", "x1").ok


def test_data1_weakly_redundant_x2():
    dneg = fixtures.load("DATA1")
    verdict = builtin_spec(dneg, "weakly-redundant", "x2")
    assert not verdict.ok
    witness = verdict.violations[(("n3", "b"), ("n5", "a"))]
    assert witness.pairs == (("n3", "b"), ("n5", "a"))
    assert check_violation(dneg, make_spec(dneg, "weakly-redundant", "x2"), witness) == []


def test_data1_never_destroyed_x1():
    dneg = fixtures.load("DATA1")
    verdict = builtin_spec(dneg, "never-destroyed", "x1")
    assert not verdict.ok
    _, witness = verdict.first
    assert ("n4", "b") not in witness.run.steps
    assert witness.run.is_successful(dneg.base)


def test_unknown_variable_and_kind():
    dneg = fixtures.load("DATA1")
    with pytest.raises(ValueError):
        builtin_spec(dneg, "inconsistent", "x9")
    with pytest.raises(ValueError):
        builtin_spec(dneg, "leaky", "x1")


def test_data1_acyc_fast_path_matches_oracle():
    dneg = fixtures.load("DATA1-ACYC")
    for kind in KINDS[1:]:
        for x in dneg.variables:
            spec = make_spec(dneg, kind, x)
            fast = spec_compliance(dneg, spec)
            assert fast.method == "omitting"
            assert set(fast.violations) == set(oracle_compliance(dneg, spec).violations)
    redundant = spec_compliance(dneg, make_spec(dneg, "weakly-redundant", "x2"))
    assert (("n3", "b"), ("n5", "a")) in redundant.violations


def test_empty_first_set_complies():
    dneg = fixtures.load("DATA1-ACYC")
    spec = DataSpec(frozenset(), frozenset(dneg.pairs), frozenset())
    assert spec_compliance(dneg, spec).ok
    assert check_spec(fixtures.load("DATA1"), spec).ok


def test_reaching_the_end_violates():
    dneg = fixtures.load("DATA1-ACYC")
    spec = DataSpec(frozenset({("n1", "a")}), frozenset(dneg.final_pairs), frozenset())
    assert not spec_compliance(dneg, spec).ok
    assert not oracle_compliance(dneg, spec).ok


def test_dataspec_round_trip_and_errors():
    dneg = fixtures.load("DATA1")
    spec = make_spec(dneg, "weakly-redundant", "x2")
    again = parse_dataspec(emit_dataspec(spec), dneg, name=spec.name)
    assert (again.o1, again.o2, again.o) == (spec.o1, spec.o2, spec.o)
    with pytest.raises(ValueError, match="line 2"):
        parse_dataspec("O1: n1:a\nO2: n9:a\nO:\n", dneg)
    with pytest.raises(ValueError, match="line 1"):
        parse_dataspec("O3: n1:a\n", dneg)


@lru_cache(maxsize=None)
def sound_instance(seed: int, structured: bool):
    if structured:
        return gen_structured(8, 3, seed)
    for s in range(seed, seed + 200):
        neg = random_neg(s, nodes=8, procs=3, acyclic=True, deterministic=True)
        if oracles.is_sound(neg):
            return neg
    raise AssertionError("no sound instance nearby")


instances = st.builds(sound_instance, st.integers(0, 5000), st.booleans())


@given(instances, st.data())
def test_race_matches_oracle_and_is_symmetric(neg, data):
    m = data.draw(st.sampled_from(neg.nodes))
    n = data.draw(st.sampled_from(neg.nodes))
    verdict = race(neg, m, n)
    assert isinstance(verdict, RaceVerdict)
    assert verdict.race == oracles.concurrent(neg, m, n)
    assert race(neg, n, m).race == verdict.race
    if verdict.race and verdict.method == "races":
        oracles.verify_fork(neg, verdict.fork)


@given(instances, st.data())
def test_co_occur_matches_run_enumeration(neg, data):
    m = data.draw(st.sampled_from(neg.nodes))
    n = data.draw(st.sampled_from([x for x in neg.nodes if x != neg.fin]))
    if m == neg.fin:
        return
    found = co_occur(neg, m, n)
    assert (found is not None) == oracles.co_occurring(neg, m, n)
    if isinstance(found, Fork):
        oracles.verify_fork(neg, found)


@given(instances, st.integers(0, 10**6), st.sampled_from(KINDS[1:]))
def test_spec_compliance_matches_run_enumeration(neg, seed, kind):
    dneg = gen_random_data(neg, 2, seed)
    for x in dneg.variables:
        spec = make_spec(dneg, kind, x)
        verdict = spec_compliance(dneg, spec)
        assert set(verdict.violations) == oracles.spec_violations(dneg, spec)
        for witness in verdict.violations.values():
            assert check_violation(dneg, spec, witness) == []


@given(instances, st.integers(0, 10**6), st.data())
def test_custom_specs_match_oracle(neg, seed, data):
    dneg = gen_random_data(neg, 1, seed)
    pick = st.sets(st.sampled_from(dneg.pairs), max_size=3)
    spec = DataSpec(data.draw(pick), data.draw(pick), data.draw(pick))
    fast = spec_compliance(dneg, spec)
    slow = oracle_compliance(dneg, spec)
    assert set(fast.violations) == set(slow.violations) == oracles.spec_violations(dneg, spec)
    for witness in slow.violations.values():
        assert check_violation(dneg, spec, witness) == []


@given(instances, st.integers(0, 10**6))
def test_inconsistent_matches_definition(neg, seed):
    dneg = gen_random_data(neg, 2, seed)
    for x in dneg.variables:
        verdict = inconsistent(dneg, x)
        expected = set()
        for first in dneg.touching(x, ("read", "write")):
            for second in dneg.touching(x, ("write", "alloc", "dealloc")):
                if first[0] != dneg.base.fin and second[0] != dneg.base.fin and \
                        oracles.concurrent(dneg.base, first[0], second[0]):
                    expected.add((first, second))
        assert set(verdict.violations) == expected
