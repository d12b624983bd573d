import random

import pytest
from conftest import GOLDEN
from gen import SOURCE, random_gav_gav_egd, random_instance, random_query
from hypothesis import given, settings, strategies as st

from xrepair.alpha import same_constraints
from xrepair.core import Atom, Const, Instance, Schema, SchemaMapping, fact
from xrepair.dlp import (
    DlpRule, build_dlp, export_dlp_text, ground, mangle_relation, minimal_models,
    parse_dlp_text, source_repairs_via_dlp, xr_certain_via_dlp,
)
from xrepair.errors import PreconditionError, ResourceError
from xrepair.repair import enumerate_source_repairs, xr_certain
from xrepair.textio import parse_mapping

def values(answers):
    return {tuple(v.value for v in t) for t in answers}


def lowered(rules):
    def atom(a):
        return Atom(mangle_relation(a.relation), a.args)
    return [DlpRule(tuple(map(atom, r.head)), tuple(map(atom, r.body)), r.neq) for r in rules]


def test_running_program_matches_golden(running):
    m, _, q = running
    art = build_dlp(m, q)
    golden = parse_dlp_text((GOLDEN / "running_dlp.dl").read_text())
    assert len(art.rules) == 10 and len(art.query_rules) == 1
    assert same_constraints(lowered(art.rules + art.query_rules), golden.rules)


def test_running_program_roles(running):
    m, _, _ = running
    art = build_dlp(m)
    assert set(art.minimize) == {"Task_Assignments_d", "Stakeholders_old_d"}
    assert set(art.fixed) == set(m.source)
    assert not set(art.minimize) & set(art.fixed)
    assert all(len(r.head) <= 2 for r in art.rules)
    assert sum(r.is_disjunctive for r in art.rules) == 2


def test_empty_mapping_gives_empty_program():
    art = build_dlp(SchemaMapping(Schema.of([]), Schema.of([])))
    assert art.rules == ()
    text = export_dlp_text(art)
    assert all(line.startswith("%") for line in text.splitlines())


def test_copy_with_key_counts():
    m = parse_mapping("source: P/2\ntarget: P'/2\nst-tgd: P(x, y) -> P'(x, y)\n"
                      "t-egd: P'(x, y) & P'(x, y') -> y = y'")
    kinds = [r.kind for r in build_dlp(m).rules]
    assert sorted(kinds) == sorted(["guess", "exclusive", "support", "st", "egd"])


def test_class_violation(reach):
    with pytest.raises(PreconditionError):
        build_dlp(reach[0])


def test_export_round_trips(running):
    m, src, q = running
    art = build_dlp(m, q)
    text = export_dlp_text(art)
    back = parse_dlp_text(text)
    assert same_constraints(back.rules, art.rules + art.query_rules)
    assert export_dlp_text(back) == text
    assert back.minimize == art.minimize and back.fixed == art.fixed
    assert export_dlp_text(art) == text
    with_facts = export_dlp_text(art, src)
    assert with_facts.count('task_assignments("peter"') == 3
    assert parse_dlp_text(with_facts) == back


def test_export_syntax(running):
    m, _, q = running
    lines = [ln for ln in export_dlp_text(build_dlp(m, q)).splitlines() if not ln.startswith("%")]
    assert all(ln.endswith(".") for ln in lines)
    assert any(" v " in ln for ln in lines)
    assert any(ln.startswith(":- ") and "!=" in ln for ln in lines)


# -- grounding -------------------------------------------------------------

def test_inequality_over_single_value_vanishes():
    m = parse_mapping("source: P/2\ntarget: T/2\nst-tgd: P(x, y) -> T(x, y)\nt-egd: T(x, y) & T(x, y') -> y = y'")
    gp = ground(build_dlp(m), Instance([fact("P", "a", "a")]), naive=True)
    assert not any(r.kind == "egd" for r in gp.rules)


def test_running_grounding_holds_the_department_clash(running):
    m, src, _ = running
    gp = ground(build_dlp(m), src)
    clash = [r for r in gp.rules if r.kind == "egd"]
    depts = {frozenset(a.args[1].value for a in r.body) for r in clash}
    assert frozenset({"software", "exec"}) in depts


def test_empty_data_grounds_to_nothing(running):
    gp = ground(build_dlp(running[0]), Instance())
    assert gp.rules == () and not gp.facts


def test_relevance_grounding_keeps_the_models(running):
    m, src, _ = running
    art = build_dlp(m)
    a = minimal_models(ground(art, src), art.minimize, art.fixed)
    b = minimal_models(ground(art, src, naive=True), art.minimize, art.fixed)
    assert {i.facts for i in a} == {i.facts for i in b}


# -- models ----------------------------------------------------------------

def test_running_models_match_repairs(running):
    m, src, q = running
    art = build_dlp(m)
    models = minimal_models(ground(art, src), art.minimize, art.fixed)
    assert len(models) == 2
    rs = enumerate_source_repairs(src, m)
    kept = {r.facts for r in source_repairs_via_dlp(src, m)}
    assert kept == {r.facts for r in rs}
    targets = {frozenset(f for f in mod if f.relation in m.target) for mod in models}
    assert targets == {j.facts for j in rs.solutions}
    assert values(xr_certain_via_dlp(q, src, m)) == {("peter", "bobs")}


def test_consistent_data_has_one_model_without_deletions(running):
    m, src, _ = running
    good = Instance([f for f in src if not (f.relation == "Task_Assignments" and f.args[2].value == "exec")])
    art = build_dlp(m)
    (model,) = minimal_models(ground(art, good), art.minimize, art.fixed)
    assert not [f for f in model if f.relation in art.minimize]


def test_self_conflicting_fact_is_deleted():
    m = parse_mapping("source: S/2\ntarget: T/2; U/2\nst-tgd: S(x, y) -> T(x, y) & U(x, \"b\")\n"
                      "t-egd: T(x, y) & U(x, y') -> y = y'")
    data = Instance([fact("S", "k", "a"), fact("S", "j", "b")])
    art = build_dlp(m)
    (model,) = minimal_models(ground(art, data), art.minimize, art.fixed)
    assert Atom("S_d", (Const("k"), Const("a"))) in model
    assert Atom("S_k", (Const("j"), Const("b"))) in model


def test_guess_cap(running):
    m, src, _ = running
    art = build_dlp(m)
    with pytest.raises(ResourceError):
        minimal_models(ground(art, src), art.minimize, art.fixed, max_choices=3)


# -- properties ------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_models_biject_with_repairs_and_guesses_cohere(seed):
    rng = random.Random(seed)
    m = random_gav_gav_egd(rng)
    src = random_instance(rng, SOURCE, rng.randint(0, 6))
    art = build_dlp(m)
    models = minimal_models(ground(art, src), art.minimize, art.fixed)
    kept_of = {r: art.kept[r] for r in m.source}
    del_of = {r: art.deleted[r] for r in m.source}
    for model in models:
        for f in src:
            k = Atom(kept_of[f.relation], f.args) in model
            d = Atom(del_of[f.relation], f.args) in model
            assert k != d
    got = sorted(sorted(map(str, r)) for r in source_repairs_via_dlp(src, m))
    want = sorted(sorted(map(str, r)) for r in enumerate_source_repairs(src, m))
    assert got == want
    q = random_query(rng)
    assert xr_certain_via_dlp(q, src, m) == xr_certain(q, src, m)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_naive_and_relevance_grounding_agree(seed):
    rng = random.Random(seed)
    m = random_gav_gav_egd(rng)
    src = random_instance(rng, SOURCE, rng.randint(0, 4))
    art = build_dlp(m)
    a = minimal_models(ground(art, src), art.minimize, art.fixed)
    b = minimal_models(ground(art, src, naive=True), art.minimize, art.fixed)
    assert {i.facts for i in a} == {i.facts for i in b}
