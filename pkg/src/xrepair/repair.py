"""Source repairs, XR-certain answers and the alternative repair semantics
they are compared against (materialize-then-repair, exchange-as-repair,
symmetric-difference repairs, OBDA AR semantics)."""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .chase import chase, chase_kb, require_weakly_acyclic
from .core import (
    Atom, Egd, Instance, SchemaMapping, Tgd, Var, eval_ucq,
    eval_ucq_nullfree, iter_homomorphisms, substitute,
)
from .errors import ResourceError

DEFAULT_MAX_FACTS = 24


def max_facts_cap(override=None) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get("XR_MAX_FACTS")
    return int(env) if env else DEFAULT_MAX_FACTS


def _check_cap(inst, cap):
    cap = max_facts_cap(cap)
    if len(inst) > cap:
        raise ResourceError(f"instance has {len(inst)} facts, above the cap of {cap} "
                            "(raise it with --max-facts or XR_MAX_FACTS)")


class SolvabilityOracle:
    """Memoized ``has_solution`` for one mapping."""

    def __init__(self, m: SchemaMapping):
        self.mapping = m
        self.memo = {}

    def __call__(self, facts) -> bool:
        key = frozenset(facts)
        r = self.memo.get(key)
        if r is None:
            r = chase(Instance(key), self.mapping, log=False).success
            self.memo[key] = r
        return r


def _solvable(args):
    facts, m = args
    return chase(Instance(facts), m, log=False).success


@dataclass(frozen=True)
class SourceRepairSet:
    source: Instance
    repairs: tuple
    solutions: tuple

    def __iter__(self):
        return iter(self.repairs)

    def __len__(self):
        return len(self.repairs)


def is_source_repair(candidate: Instance, source: Instance, m: SchemaMapping) -> bool:
    """Subset of ``source`` that has a solution, and no single extra source fact keeps one."""
    if not candidate.facts <= source.facts:
        return False
    ok = SolvabilityOracle(m)
    if not ok(candidate.facts):
        return False
    return not any(ok(candidate.facts | {f}) for f in source.facts - candidate.facts)


def enumerate_source_repairs(source: Instance, m: SchemaMapping, max_facts=None, jobs=1) -> SourceRepairSet:
    """All maximal subsets of ``source`` that have a solution.

    Walks down the subset lattice one cardinality level at a time, only
    expanding subsets without a solution. A subset with a solution that is
    not inside an already found repair is itself maximal.
    """
    _check_cap(source, max_facts)
    require_weakly_acyclic(m.target_tgds)
    ok = SolvabilityOracle(m)
    found = []
    level = [frozenset(source.facts)]
    pool = ProcessPoolExecutor(jobs) if jobs and jobs > 1 else None
    try:
        while level:
            todo = [s for s in level if not any(s <= r for r in found) and s not in ok.memo]
            if pool is not None and len(todo) > 1:
                for s, r in zip(todo, pool.map(_solvable, [(s, m) for s in todo])):
                    ok.memo[s] = r
            nxt = {}
            for s in level:
                if any(s <= r for r in found):
                    continue
                if ok(s):
                    found.append(s)
                else:
                    for f in sorted(s, key=Atom.sort_key):
                        nxt.setdefault(s - {f}, None)
            level = list(nxt)
    finally:
        if pool is not None:
            pool.shutdown()
    repairs = sorted(found, key=lambda s: (-len(s), sorted(f.sort_key() for f in s)))
    insts = tuple(Instance(r, source.schema if source.declared else None) for r in repairs)
    sols = tuple(chase(r, m, log=False).target for r in insts)
    return SourceRepairSet(source, insts, sols)


def xr_certain(q, source: Instance, m: SchemaMapping, max_facts=None, jobs=1) -> set:
    """Answers true in the universal solution of every source repair."""
    rs = enumerate_source_repairs(source, m, max_facts, jobs)
    out = None
    for j in rs.solutions:
        ans = eval_ucq_nullfree(q, j)
        out = ans if out is None else out & ans
    return out or set()


# -- subset repairs with respect to egds -----------------------------------

def egd_conflicts(inst: Instance, egds) -> set:
    """Sets of facts that jointly violate some egd."""
    out = set()
    for e in egds:
        for h in iter_homomorphisms(e.body, inst):
            if substitute(e.lhs, h) != substitute(e.rhs, h):
                out.add(frozenset(a.substitute(h) for a in e.body))
    return {c for c in out if not any(o < c for o in out)}


def minimal_hitting_sets(edges) -> list:
    edges = sorted({frozenset(e) for e in edges}, key=lambda e: (len(e), sorted(map(str, e))))
    found = []

    def rec(chosen):
        if any(h <= chosen for h in found):
            return
        open_edge = next((e for e in edges if not (e & chosen)), None)
        if open_edge is None:
            found.append(chosen)
            return
        for x in sorted(open_edge, key=str):
            rec(chosen | {x})

    rec(frozenset())
    return [h for h in found if not any(o < h for o in found)]


def subset_repairs_egds(inst: Instance, egds) -> list:
    """Maximal subsets of ``inst`` satisfying the egds."""
    hits = minimal_hitting_sets(egd_conflicts(inst, egds))
    out = {inst.facts - h for h in hits}
    return [Instance(s) for s in sorted(out, key=lambda s: sorted(f.sort_key() for f in s))]


def materialize_then_repair_cqa(q, source: Instance, m: SchemaMapping) -> set:
    """Chase with the tgds only, then take consistent answers over the egd repairs of the result."""
    tgds_only = m.with_constraints(t=m.target_tgds)
    j = chase(source, tgds_only, log=False).target
    out = None
    for r in subset_repairs_egds(j, m.egds):
        ans = eval_ucq_nullfree(q, r)
        out = ans if out is None else out & ans
    return out or set()


# -- symmetric-difference repairs -----------------------------------------

def _violation(inst_store, c):
    """First violated trigger of constraint c, as (kind, h) or None."""
    for h in iter_homomorphisms(c.body, inst_store):
        if isinstance(c, Egd):
            if substitute(c.lhs, h) != substitute(c.rhs, h):
                return "egd", h
        elif next(iter_homomorphisms(c.head, inst_store, h), None) is None:
            return "tgd", h
    return None


def _minimal_models_over(fixed: Instance, constraints, domain, limit=200000):
    """⊆-minimal sets K of derived facts, values drawn from ``domain``, with fixed ∪ K a model.

    Every model is reached along some branch that only adds facts the model
    contains, so collecting the leaves and keeping the minimal ones is exact.
    """
    domain = sorted(domain, key=lambda v: (str(type(v)), str(v)))
    leaves = set()
    seen = set()
    stack = [frozenset()]
    steps = 0
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        steps += 1
        if steps > limit:
            raise ResourceError("candidate model search exceeded its step limit")
        cur = Instance(fixed.facts | k)
        hit = None
        for c in constraints:
            v = _violation(cur, c)
            if v:
                hit = (c, v)
                break
        if hit is None:
            leaves.add(k)
            continue
        c, (kind, h) = hit
        if kind == "egd":
            continue
        ex = c.existentials
        for vals in itertools.product(domain, repeat=len(ex)):
            ext = dict(h)
            ext.update(zip(ex, vals))
            stack.append(k | {a.substitute(ext) for a in c.head})
    return [k for k in leaves if not any(o < k for o in leaves)]


@dataclass(frozen=True)
class OplusRepair:
    source: Instance
    target: Instance


def oplus_repairs_of_empty(source: Instance, m: SchemaMapping, max_facts=None) -> list:
    """⊕-repairs of the pair (source, ∅) w.r.t. all constraints, over the active domain of source.

    Adding a source fact never helps: dropping it again keeps every
    constraint satisfied and shrinks the difference. So candidates keep a
    subset of ``source`` and a minimal target instance for it.
    """
    _check_cap(source, max_facts)
    domain = source.active_domain()
    constraints = list(m.st) + list(m.t)
    cands = []
    facts = sorted(source.facts, key=Atom.sort_key)
    for r in range(len(facts) + 1):
        for dropped in itertools.combinations(facts, r):
            kept = source.difference(dropped)
            for k in _minimal_models_over(kept, constraints, domain):
                cands.append((frozenset(dropped), k, kept))
    out = []
    for d, k, kept in cands:
        if any((d2 <= d and k2 <= k) and (d2, k2) != (d, k) for d2, k2, _ in cands):
            continue
        out.append(OplusRepair(kept, Instance(k)))
    return out


def exchange_as_repair_cqa(q, source: Instance, m: SchemaMapping, max_facts=None) -> set:
    out = None
    for r in oplus_repairs_of_empty(source, m, max_facts):
        ans = eval_ucq(q, r.target.restrict(m.target.names))
        out = ans if out is None else out & ans
    return out or set()


def is_oplus_repair_of_empty(source: Instance, kept: Instance, target: Instance, m: SchemaMapping) -> bool:
    """Check that (kept, target) is a solution-pair whose difference to (source, ∅) is minimal.

    Competitors keep more of ``source`` or use a subset of ``target``;
    anything else cannot have a smaller difference.
    """
    constraints = list(m.st) + list(m.t)

    def model(s, t):
        inst = Instance(s | t)
        return all(_violation(inst, c) is None for c in constraints)

    if not kept.facts <= source.facts or not model(kept.facts, target.facts):
        return False
    extra = sorted(source.facts - kept.facts, key=Atom.sort_key)
    tfacts = sorted(target.facts, key=Atom.sort_key)
    for r in range(len(extra) + 1):
        for more in itertools.combinations(extra, r):
            s = kept.facts | set(more)
            for n in range(len(tfacts) + 1):
                for sub in itertools.combinations(tfacts, n):
                    if not more and n == len(tfacts):
                        continue
                    if model(s, frozenset(sub)):
                        return False
    return True


def active_domain_facts(schema, domain) -> list:
    dom = sorted(domain, key=str)
    out = []
    for rel, n in schema.arities:
        for vals in itertools.product(dom, repeat=n):
            out.append(Atom(rel, tuple(vals)))
    return out


def oplus_source_repairs(source: Instance, m: SchemaMapping, extra=()) -> list:
    """Source instances with a solution whose difference from ``source`` is minimal.

    Candidates are all subsets of ``source`` plus ``extra`` (facts not in
    source). Differences are visited by size and only supersets of a found
    minimal difference are skipped.
    """
    extra = [f for f in extra if f not in source.facts]
    universe = sorted(set(source.facts) | set(extra), key=Atom.sort_key)
    ok = SolvabilityOracle(m)
    minimal = []
    for r in range(len(universe) + 1):
        for diff in itertools.combinations(universe, r):
            d = frozenset(diff)
            if any(x <= d for x in minimal):
                continue
            if ok(source.facts ^ d):
                minimal.append(d)
    return [Instance(source.facts ^ d) for d in minimal]


def oplus_source_repairs_equal_subset(source: Instance, m: SchemaMapping, extra=()) -> bool:
    a = {r.facts for r in oplus_source_repairs(source, m, extra)}
    b = {r.facts for r in enumerate_source_repairs(source, m)}
    return a == b


# -- OBDA bridge -----------------------------------------------------------

def _copy_name(rel, taken):
    name = rel + "_src"
    while name in taken:
        name += "_"
    return name


def obda_to_xr(data: Instance, constraints, schema=None):
    """Turn a knowledge base (data, constraints) into a mapping that copies the
    data relations into the target. Returns ``(mapping, source_instance)``."""
    from .core import Schema
    tschema = Schema.of(schema) if schema is not None else data.schema.union(
        Schema.from_atoms([a for c in constraints for a in _atoms(c)]))
    tschema = tschema.union(data.schema)
    names = set(tschema)
    copy = {}
    src = []
    st = []
    for rel, n in data.schema.arities:
        c = _copy_name(rel, names)
        names.add(c)
        copy[rel] = c
        src.append((c, n))
        xs = tuple(Var(f"x{i}") for i in range(1, n + 1))
        st.append(Tgd((Atom(c, xs),), (Atom(rel, xs),)))
    m = SchemaMapping(Schema.of(src), tschema, tuple(st), tuple(constraints))
    inst = Instance((Atom(copy[f.relation], f.args) for f in data), m.source)
    return m, inst


def _atoms(c):
    if isinstance(c, Tgd):
        return c.body + c.head
    return c.body


def ar_repairs(data: Instance, constraints, max_facts=None) -> list:
    """Maximal subsets of ``data`` consistent with the constraints, by direct search."""
    _check_cap(data, max_facts)
    require_weakly_acyclic([c for c in constraints if isinstance(c, Tgd)])
    facts = sorted(data.facts, key=Atom.sort_key)
    memo = {}

    def consistent(s):
        if s not in memo:
            memo[s] = chase_kb(Instance(s), constraints).success
        return memo[s]

    found = []
    for r in range(len(facts), -1, -1):
        for keep in itertools.combinations(facts, r):
            s = frozenset(keep)
            if any(s < x for x in found):
                continue
            if consistent(s):
                found.append(s)
    return [Instance(s) for s in found]


def ar_certain(q, data: Instance, constraints, max_facts=None) -> set:
    """Consistent answers under the AR semantics."""
    out = None
    for r in ar_repairs(data, constraints, max_facts):
        j = chase_kb(r, constraints).target
        ans = eval_ucq_nullfree(q, j)
        out = ans if out is None else out & ans
    return out or set()


def xr_as_kb(source: Instance, m: SchemaMapping):
    """Read an exchange setting as a knowledge base over source ∪ target."""
    return source, list(m.st) + list(m.t)

