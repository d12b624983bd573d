import random

import pytest
from conftest import GOLDEN
from gen import SOURCE, random_gav_egd, random_instance, random_query, satisfies
from hypothesis import given, settings, strategies as st

from xrepair.alpha import same_constraints, same_query
from xrepair.chase import certain_answers, chase
from xrepair.core import Egd, Instance, eval_ucq, fact
from xrepair.errors import PreconditionError
from xrepair.repair import enumerate_source_repairs, subset_repairs_egds, xr_certain
from xrepair.textio import parse_constraints, parse_mapping, parse_query
from xrepair.unfold import (
    gav_unfold_egds, gav_unfold_query, require_gav_egd, source_rewriting, xr_certain_via_cqa,
)


def values(answers):
    return {tuple(v.value for v in t) for t in answers}


def test_boss_query_unfolds_to_golden(running):
    m, _, q = running
    golden = parse_query((GOLDEN / "unfolded_boss.xq").read_text())
    got = gav_unfold_query(q, m.st)
    assert same_query(got, golden)
    assert {a.relation for d in got.disjuncts for a in d.body} <= set(m.source)


def test_key_egd_unfolds_to_golden(running):
    m, _, _ = running
    schema, golden = parse_constraints((GOLDEN / "unfolded_egds.xcon").read_text())
    got = gav_unfold_egds(m.egds, m.st)
    assert same_constraints(got, golden)
    assert set(schema) == set(m.source)


def test_two_definitions_times_two_atoms_give_four_disjuncts():
    m = parse_mapping("source: A/2; B/2\ntarget: T/2\n"
                      "st-tgd: A(x, y) -> T(x, y)\nst-tgd: B(x, y) -> T(y, x)")
    q = parse_query("query q(x, z) :- T(x, y) & T(y, z)")
    out = gav_unfold_query(q, m.st)
    assert len(out.disjuncts) == 4
    assert all(len(d.head) == 2 for d in out.disjuncts)


def test_copied_relations_just_rename():
    m = parse_mapping("source: P/2\ntarget: P'/2\nst-tgd: P(x, y) -> P'(x, y)")
    q = parse_query("query q(x) :- P'(x, y) & P'(y, x)")
    assert same_query(gav_unfold_query(q, m.st), parse_query("query q(x) :- P(x, y) & P(y, x)"))


def test_undefined_relation_vanishes():
    m = parse_mapping("source: A/2\ntarget: T/2; U/2\nst-tgd: A(x, y) -> T(x, y)\n"
                      "t-egd: U(x, y) & U(x, y') -> y = y'")
    q = parse_query("query q(x) :- U(x, y)")
    assert gav_unfold_query(q, m.st).disjuncts == ()
    assert gav_unfold_egds(m.egds, m.st) == ()


def test_copy_keys_become_source_keys():
    m = parse_mapping("source: P/2; Q/2\ntarget: P'/2; Q'/2\n"
                      "st-tgd: P(x, y) -> P'(x, y)\nst-tgd: Q(x, y) -> Q'(x, y)\n"
                      "t-egd: P'(x, y) & P'(x, y') -> y = y'\nt-egd: Q'(x, y) & Q'(x, y') -> y = y'")
    _, expected = parse_constraints("schema: P/2; Q/2\n"
                                    "egd: P(x, y) & P(x, y') -> y = y'\negd: Q(x, y) & Q(x, y') -> y = y'")
    assert same_constraints(gav_unfold_egds(m.egds, m.st), expected)


def test_unfolding_does_not_capture_variables():
    m = parse_mapping("source: A/3\ntarget: T/2\nst-tgd: A(x, y, z) -> T(x, y)")
    q = parse_query("query q(z) :- T(z, x) & T(x, y)")
    (d,) = gav_unfold_query(q, m.st).disjuncts
    a1, a2 = d.body
    assert a1.args[1] == a2.args[0]
    assert len({a1.args[2], a2.args[2], *d.head, a1.args[1], a2.args[1]}) == 5


def test_cqa_route_on_running_example(running):
    m, src, q = running
    assert values(xr_certain_via_cqa(q, src, m)) == {("peter", "bobs")}


def test_cqa_route_on_consistent_source(running):
    m, src, q = running
    good = Instance([f for f in src if not (f.relation == "Task_Assignments" and f.args[2].value == "exec")])
    qs = gav_unfold_query(q, m.st)
    assert xr_certain_via_cqa(q, good, m) == eval_ucq(qs, good)


def test_class_check_names_the_constraint(reach):
    m, _, _ = reach
    with pytest.raises(PreconditionError, match=r"st\[0\]"):
        require_gav_egd(m)
    tt = parse_mapping("source: R/2\ntarget: T/2\nst-tgd: R(x, y) -> T(x, y)\nt-tgd: T(x, y) -> T(y, x)")
    with pytest.raises(PreconditionError, match=r"t\[0\]"):
        xr_certain_via_cqa(parse_query("query q(x) :- T(x, y)"), Instance([fact("R", "a", "b")]), tt)


def test_source_egds_mention_only_source(running):
    m, _, _ = running
    rw = source_rewriting(m)
    assert all(isinstance(e, Egd) and {a.relation for a in e.body} <= set(m.source) for e in rw.egds)


# -- properties ------------------------------------------------------------

def _setting(seed):
    rng = random.Random(seed)
    m = random_gav_egd(rng)
    src = random_instance(rng, SOURCE, rng.randint(0, 6))
    return rng, m, src


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000))
def test_source_egds_decide_solvability(seed):
    _, m, src = _setting(seed)
    rw = source_rewriting(m)
    assert satisfies(src, rw.egds) == chase(src, m, log=False).success


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000))
def test_egd_repairs_are_source_repairs(seed):
    _, m, src = _setting(seed)
    rw = source_rewriting(m)
    got = {r.facts for r in subset_repairs_egds(src, rw.egds)}
    assert got == {r.facts for r in enumerate_source_repairs(src, m)}


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000))
def test_unfolded_query_gives_certain_answers(seed):
    rng, m, src = _setting(seed)
    q = random_query(rng)
    ca = certain_answers(q, src, m)
    if chase(src, m, log=False).success:
        assert eval_ucq(gav_unfold_query(q, m.st), src) == ca
    assert xr_certain_via_cqa(q, src, m) == xr_certain(q, src, m)
