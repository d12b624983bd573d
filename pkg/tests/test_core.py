import pytest
from conftest import GOLDEN
from hypothesis import given, settings, strategies as st

from xrepair.core import (
    NO_SOLUTION, UCQ, Atom, Compound, ConjunctiveQuery, Const, Egd, Instance, Null, Schema,
    SchemaMapping, Tgd, Var, eval_ucq, eval_ucq_nullfree, fact, find_homomorphisms,
    mapping_class, symmetric_difference, term_depth,
)
from xrepair.errors import SchemaError
from xrepair.textio import parse_instance, parse_query

x, y, u = Var("x"), Var("y"), Var("u")
a, b = Const("a"), Const("b")
N1, N2 = Null(1), Null(2)


def test_pattern_over_shared_null_has_four_matches():
    target = Instance([Atom("T", (a, N1)), Atom("T", (b, N1))])
    hs = find_homomorphisms([Atom("T", (x, u)), Atom("T", (y, u))], target)
    assert len(hs) == 4
    assert {x: a, y: b, u: N1} in hs


def test_constant_mismatch_gives_nothing():
    assert find_homomorphisms([Atom("T", (a, u))], Instance([Atom("T", (b, N1))])) == []


def test_boss_join_over_materialized_target(running):
    m, _, q = running
    j = parse_instance((GOLDEN / "running_chase_target.xinst").read_text(), m.target)
    hs = find_homomorphisms(q.disjuncts[0].body, j)
    assert len(hs) == 4
    expected = {("peter", "lumbergh"), ("peter", "portman"), ("peter", "bobs")}
    assert {tuple(v.value for v in t) for t in eval_ucq(q, j)} == expected
    assert eval_ucq_nullfree(q, j) == eval_ucq(q, j)


def test_eval_on_empty_instance():
    q = parse_query("query q(x) :- T(x, y)")
    assert eval_ucq(q, Instance()) == set()


def test_eval_repeated_variable():
    q = parse_query("query q(x) :- T(x, x)")
    inst = Instance([fact("T", "a", "a"), fact("T", "a", "b")])
    assert eval_ucq(q, inst) == {(a,)}


def test_nullfree_filters_nulls():
    q = parse_query("query q(x, y) :- T(x, u) & T(y, u)")
    inst = Instance([Atom("T", (a, N1)), Atom("T", (b, N1))])
    assert eval_ucq_nullfree(q, inst) == {(a, a), (a, b), (b, a), (b, b)}
    q2 = parse_query("query q(x) :- T(x, x)")
    assert eval_ucq_nullfree(q2, Instance([Atom("T", (N1, N1))])) == set()


def test_symmetric_difference_examples(running):
    _, src, _ = running
    assert len(symmetric_difference(src, src)) == 0
    p = Instance([fact("P", "a")])
    assert symmetric_difference(p, Instance()) == p
    kept = src.difference([f for f in src if f.args[1].value in ("tpsreport", "spaceout")
                           and f.relation == "Task_Assignments"])
    diff = symmetric_difference(src, kept)
    assert {f.args[1].value for f in diff} == {"tpsreport", "spaceout"}
    assert all(f.args[2].value == "software" for f in diff)


def test_instance_rejects_non_ground_and_bad_arity():
    with pytest.raises(SchemaError):
        Instance([Atom("T", (x,))])
    with pytest.raises(SchemaError):
        Instance([fact("T", "a")], Schema.of([("T", 2)]))


def test_tgd_classes():
    lav = Tgd((Atom("R", (x, y)),), (Atom("T", (x, u)), Atom("T", (y, u))))
    assert lav.is_lav and not lav.is_full and lav.existentials == [u]
    gav = Tgd((Atom("R", (x, y)), Atom("S", (y,))), (Atom("T", (x, y)),))
    assert gav.is_gav and gav.is_full and not gav.is_lav
    full = Tgd((Atom("R", (x, y)),), (Atom("T", (x, y)), Atom("U", (y,))))
    assert [g.is_gav for g in full.split()] == [True, True]


def test_egd_sides_must_come_from_body():
    with pytest.raises(SchemaError):
        Egd((Atom("T", (x, y)),), x, u)


def test_mapping_rejects_shared_relations():
    with pytest.raises(SchemaError):
        SchemaMapping(Schema.of([("R", 2)]), Schema.of([("R", 2)]))


def test_mapping_class_names(running, reach):
    assert mapping_class(running[0])["name"] == "GAV+egd"
    assert mapping_class(reach[0])["name"] == "LAV+egd"


def test_term_depth():
    assert term_depth(a) == 0
    assert term_depth(Compound("f", (Compound("g", (a,)), b))) == 2


def test_no_solution_marker_is_falsy_singleton():
    assert not NO_SOLUTION
    assert type(NO_SOLUTION)() is NO_SOLUTION


def test_ucq_may_be_empty():
    q = UCQ("q", 1, ())
    assert eval_ucq(q, Instance([fact("T", "a")])) == set()


# -- properties ------------------------------------------------------------

values = st.sampled_from([a, b, Const("c"), N1, N2])
facts = st.builds(lambda r, v1, v2: Atom(r, (v1, v2)), st.sampled_from(["T", "U"]), values, values)
instances = st.frozensets(facts, max_size=8).map(Instance)
terms = st.sampled_from([x, y, u, a, b])
pattern_atoms = st.builds(lambda r, t1, t2: Atom(r, (t1, t2)), st.sampled_from(["T", "U"]), terms, terms)
patterns = st.lists(pattern_atoms, min_size=1, max_size=3)


@settings(max_examples=200, deadline=None)
@given(patterns, instances)
def test_homomorphisms_are_sound(pattern, inst):
    for h in find_homomorphisms(pattern, inst):
        assert all(p.substitute(h) in inst for p in pattern)


@settings(max_examples=200, deadline=None)
@given(patterns, instances, instances)
def test_eval_is_monotone(pattern, small, extra):
    vs = sorted({t for p in pattern for t in p.args if isinstance(t, Var)}, key=lambda v: v.name)
    q = UCQ.single(ConjunctiveQuery(tuple(vs), tuple(pattern)))
    big = small.union(extra)
    assert eval_ucq(q, small) <= eval_ucq(q, big)
    assert eval_ucq_nullfree(q, big) <= eval_ucq(q, big)


@given(instances, instances)
def test_symmetric_difference_laws(i1, i2):
    assert symmetric_difference(i1, i2) == symmetric_difference(i2, i1)
    assert len(symmetric_difference(i1, i1)) == 0
