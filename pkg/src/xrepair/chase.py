"""Restricted chase, skolem chase, weak acyclicity and cores."""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass

from .core import (
    NO_SOLUTION, Atom, Compound, Const, Egd, Instance, Null, SchemaMapping,
    SOClause, SOTgd, Tgd, Var, eval_ucq_nullfree, exists_homomorphism,
    iter_homomorphisms, substitute, term_depth, term_key, term_vars,
)
from .errors import InvariantViolation, PreconditionError


# -- dependency graph ------------------------------------------------------

@dataclass(frozen=True)
class DependencyGraph:
    positions: tuple
    normal_edges: frozenset
    special_edges: frozenset
    rank: dict | None
    weakly_acyclic: bool

    @property
    def max_rank(self):
        if self.rank is None:
            return None
        return max(self.rank.values(), default=0)

    def cycle_witness(self):
        """A cycle through a special edge as a list of positions, or None."""
        succ = {}
        for u, v in self.normal_edges | self.special_edges:
            succ.setdefault(u, set()).add(v)
        for u, v in sorted(self.special_edges):
            path = _bfs_path(succ, v, u)
            if path is not None:
                return [u] + path
        return None


def _bfs_path(succ, start, goal):
    prev = {start: None}
    todo = deque([start])
    while todo:
        x = todo.popleft()
        if x == goal:
            out = []
            while x is not None:
                out.append(x)
                x = prev[x]
            return out[::-1]
        for y in sorted(succ.get(x, ())):
            if y not in prev:
                prev[y] = x
                todo.append(y)
    return None


def _positions_of(atoms):
    out = {}
    for a in atoms:
        for i, t in enumerate(a.args):
            out.setdefault((a.relation, i + 1), None)
    return out


def _clauses(c):
    if isinstance(c, SOTgd):
        return c.clauses
    if isinstance(c, Tgd):
        return (c,)
    return ()


def analyze_weak_acyclicity(constraints) -> DependencyGraph:
    """Build the position graph of a set of (SO) tgds and rank its positions.

    Egds are ignored. A position's rank is the largest number of special
    edges on a path ending in it.
    """
    normal, special = set(), set()
    positions = {}
    for c in constraints:
        for cl in _clauses(c):
            positions.update(_positions_of(cl.body))
            positions.update(_positions_of(cl.head))
            occ = {}
            for a in cl.body:
                for i, t in enumerate(a.args):
                    if isinstance(t, Var):
                        occ.setdefault(t, []).append((a.relation, i + 1))
            if isinstance(cl, Tgd):
                ex = set(cl.existentials)
                ex_pos = [(a.relation, i + 1) for a in cl.head
                          for i, t in enumerate(a.args) if t in ex]
                for a in cl.head:
                    for i, t in enumerate(a.args):
                        if isinstance(t, Var) and t in occ:
                            for p in occ[t]:
                                normal.add((p, (a.relation, i + 1)))
                for x in cl.frontier:
                    for p in occ[x]:
                        for q in ex_pos:
                            special.add((p, q))
            else:
                for a in cl.head:
                    for i, t in enumerate(a.args):
                        q = (a.relation, i + 1)
                        if isinstance(t, Var):
                            for p in occ.get(t, ()):
                                normal.add((p, q))
                        elif isinstance(t, Compound):
                            for v in term_vars(t):
                                for p in occ.get(v, ()):
                                    special.add((p, q))
    pos = tuple(sorted(positions))
    rank = {p: 0 for p in pos}
    edges = [(u, v, 0) for u, v in normal] + [(u, v, 1) for u, v in special]
    limit = len(special)
    wa = True
    changed = True
    while changed and wa:
        changed = False
        for u, v, w in edges:
            if rank[u] + w > rank[v]:
                rank[v] = rank[u] + w
                changed = True
                if rank[v] > limit:
                    wa = False
                    break
    return DependencyGraph(pos, frozenset(normal), frozenset(special),
                           rank if wa else None, wa)


def mapping_rank(m: SchemaMapping) -> int:
    g = analyze_weak_acyclicity(list(m.st) + list(m.target_tgds))
    if not g.weakly_acyclic:
        raise PreconditionError("target tgds are not weakly acyclic: "
                                + _format_cycle(g.cycle_witness()))
    return g.max_rank


def _format_cycle(cyc):
    if not cyc:
        return "cycle through a special edge"
    return " -> ".join(f"{r}.{i}" for r, i in cyc)


def require_weakly_acyclic(constraints):
    g = analyze_weak_acyclicity(constraints)
    if not g.weakly_acyclic:
        raise PreconditionError("tgds are not weakly acyclic: " + _format_cycle(g.cycle_witness()))
    return g


# -- mutable fact store used while chasing --------------------------------

class _Store:
    """Insertion-ordered fact set with per-position index."""

    def __init__(self, facts=()):
        self.by_rel = {}
        self.idx = {}
        self.count = 0
        for f in facts:
            self.add(f)

    def __contains__(self, f):
        return f in self.by_rel.get(f.relation, ())

    def add(self, f) -> bool:
        rel = self.by_rel.setdefault(f.relation, {})
        if f in rel:
            return False
        rel[f] = None
        for i, v in enumerate(f.args):
            self.idx.setdefault((f.relation, i, v), {})[f] = None
        self.count += 1
        return True

    def remove(self, f):
        del self.by_rel[f.relation][f]
        for i, v in enumerate(f.args):
            del self.idx[(f.relation, i, v)][f]
        self.count -= 1

    def relation(self, name):
        return tuple(self.by_rel.get(name, ()))

    def lookup(self, name, pos, value):
        return tuple(self.idx.get((name, pos, value), ()))

    def has_relation(self, name):
        return True

    def facts(self):
        for rel in self.by_rel.values():
            yield from rel

    def replace_value(self, old, new):
        hit = [f for f in self.facts() if old in f.args]
        for f in hit:
            self.remove(f)
        for f in hit:
            self.add(Atom(f.relation, tuple(new if v == old else v for v in f.args)))


# -- restricted chase ------------------------------------------------------

@dataclass(frozen=True)
class ChaseStep:
    kind: str
    constraint: str
    assignment: tuple
    added: tuple = ()
    merged: tuple = ()

    def to_json(self):
        d = {"kind": self.kind, "constraint": self.constraint,
             "assignment": {k: str(v) for k, v in self.assignment}}
        if self.added:
            d["added"] = [str(f) for f in self.added]
        if self.merged:
            d["merged"] = [str(v) for v in self.merged]
        return d


@dataclass(frozen=True)
class EgdViolation:
    constraint: str
    egd: Egd
    assignment: tuple
    values: tuple

    def __str__(self):
        a, b = self.values
        return f"{self.constraint} ({self.egd}) forces {a} = {b}"


@dataclass(frozen=True)
class ChaseResult:
    source: Instance
    target: Instance | None
    failure: EgdViolation | None
    steps: tuple

    @property
    def success(self):
        return self.failure is None

    def log_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json()) + "\n" for s in self.steps)


def _asg_tuple(h):
    return tuple(sorted(((v.name, x) for v, x in h.items()), key=lambda p: (p[0], term_key(p[1]))))


class _Engine:
    def __init__(self, store, next_null, log):
        self.store = store
        self.nulls = itertools.count(next_null)
        self.steps = [] if log else None

    def fire_tgd(self, tgd, name, h):
        ext = dict(h)
        for z in tgd.existentials:
            ext[z] = Null(next(self.nulls))
        added = []
        for a in tgd.head:
            f = a.substitute(ext)
            if self.store.add(f):
                added.append(f)
        if self.steps is not None:
            self.steps.append(ChaseStep("tgd", name, _asg_tuple(h), tuple(added)))

    def tgd_round(self, tgds, body_store):
        fired = False
        for name, tgd in tgds:
            for h in list(iter_homomorphisms(tgd.body, body_store)):
                if not exists_homomorphism(tgd.head, self.store, h):
                    self.fire_tgd(tgd, name, h)
                    fired = True
        return fired

    def egds_to_fixpoint(self, egds):
        """Apply egds until none is violated. Returns (changed, violation)."""
        changed = False
        while True:
            hit = None
            for name, egd in egds:
                for h in iter_homomorphisms(egd.body, self.store):
                    a, b = substitute(egd.lhs, h), substitute(egd.rhs, h)
                    if a != b:
                        hit = (name, egd, h, a, b)
                        break
                if hit:
                    break
            if hit is None:
                return changed, None
            name, egd, h, a, b = hit
            if not isinstance(a, Null) and not isinstance(b, Null):
                if self.steps is not None:
                    self.steps.append(ChaseStep("fail", name, _asg_tuple(h), merged=(a, b)))
                return changed, EgdViolation(name, egd, _asg_tuple(h), (a, b))
            if isinstance(a, Null) and isinstance(b, Null):
                old, new = (a, b) if a.id > b.id else (b, a)
            elif isinstance(a, Null):
                old, new = a, b
            else:
                old, new = b, a
            self.store.replace_value(old, new)
            changed = True
            if self.steps is not None:
                self.steps.append(ChaseStep("egd", name, _asg_tuple(h), merged=(old, new)))


def _max_null(facts):
    return max((v.id for f in facts for v in f.args if isinstance(v, Null)), default=0)


def _run(source, st, t, log, keep_source):
    tgds_t = [(n, c) for n, c in t if isinstance(c, Tgd)]
    egds = [(n, c) for n, c in t if isinstance(c, Egd)]
    for n, c in st + t:
        if not isinstance(c, (Tgd, Egd)):
            raise PreconditionError(f"{n}: the restricted chase handles tgds and egds only, got {type(c).__name__}")
    require_weakly_acyclic([c for _, c in tgds_t])
    store = _Store(source if keep_source else ())
    eng = _Engine(store, _max_null(source) + 1, log)
    if st:
        eng.tgd_round(st, source)
    while True:
        changed, bad = eng.egds_to_fixpoint(egds)
        if bad:
            return None, bad, eng.steps
        fired = eng.tgd_round(tgds_t, store)
        if not fired and not changed:
            break
    return Instance(store.facts()), None, eng.steps


def chase(source: Instance, m: SchemaMapping, log=True) -> ChaseResult:
    """Restricted chase of ``source`` with a schema mapping.

    s-t tgds fire first, then target egds are applied eagerly between
    breadth-first rounds of target tgds. Returns the target part only.
    """
    st = [(f"st[{i}]", c) for i, c in enumerate(m.st)]
    t = [(f"t[{i}]", c) for i, c in enumerate(m.t)]
    target, bad, steps = _run(source, st, t, log, keep_source=False)
    if target is not None:
        target = target.with_schema(m.target)
    return ChaseResult(source, target, bad, tuple(steps or ()))


def chase_kb(inst: Instance, constraints, log=False) -> ChaseResult:
    """Chase a single-schema instance with tgds and egds; keeps the input facts."""
    t = [(f"c[{i}]", c) for i, c in enumerate(constraints)]
    result, bad, steps = _run(inst, [], t, log, keep_source=True)
    return ChaseResult(inst, result, bad, tuple(steps or ()))


def has_solution(source: Instance, m: SchemaMapping) -> bool:
    return chase(source, m, log=False).success


def certain_answers(q, source: Instance, m: SchemaMapping):
    """Null-free answers on the canonical universal solution, or NO_SOLUTION."""
    r = chase(source, m, log=False)
    if not r.success:
        return NO_SOLUTION
    return eval_ucq_nullfree(q, r.target)


# -- skolem chase ----------------------------------------------------------

def _as_clauses(c):
    if isinstance(c, SOTgd):
        return c.clauses
    if isinstance(c, Tgd):
        if not c.is_full:
            raise PreconditionError(f"tgd {c} has existential variables; skolemize first")
        return (SOClause(c.body, (), c.head),)
    raise PreconditionError(f"the skolem chase does not handle {type(c).__name__}")


def max_function_depth(constraints) -> int:
    d = 0
    for c in constraints:
        for cl in _clauses(c):
            for a in cl.head:
                for t in a.args:
                    d = max(d, term_depth(t))
    return d


def has_constant_function(constraints) -> bool:
    """True when some clause head applies a function to no arguments."""
    found = set()
    for c in constraints:
        for cl in _clauses(c):
            for a in cl.head:
                for t in a.args:
                    _nullary_terms(t, found)
    return bool(found)


def _nullary_terms(t, out):
    if isinstance(t, Compound):
        if not t.args:
            out.add(t.fn)
        for x in t.args:
            _nullary_terms(x, out)


def term_depth_bound(constraints) -> int:
    """Deepest term a skolem chase can build: rank times head-term depth.

    A function with no arguments already yields a depth-one term at rank
    zero, so such mappings get one extra level.
    """
    cs = [c for c in constraints if not isinstance(c, Egd)]
    g = require_weakly_acyclic(cs)
    levels = g.max_rank + (1 if has_constant_function(cs) else 0)
    return levels * max(max_function_depth(cs), 1)


def skolem_depth_bound(m: SchemaMapping) -> int:
    return term_depth_bound(list(m.st) + list(m.t))


def _fire_clause(cl, h):
    for s, t in cl.equalities:
        if substitute(s, h) != substitute(t, h):
            return None
    return [a.substitute(h) for a in cl.head]


def skolem_chase(source: Instance, m: SchemaMapping, bound=None) -> Instance:
    """Fire SO clauses with ground function terms as values until nothing changes.

    Terms deeper than ``bound`` raise InvariantViolation. Without a bound
    the mapping must be weakly acyclic and its own depth bound is used;
    for an equality singularization pass the bound of the mapping it came
    from, since the Eq links can close cycles that no value travels.
    """
    if m.egds:
        raise PreconditionError("the skolem chase expects an egd-free mapping")
    st = [cl for c in m.st for cl in _as_clauses(c)]
    t = [cl for c in m.t for cl in _as_clauses(c)]
    if bound is None:
        bound = skolem_depth_bound(m)
    store = _Store()

    def add(facts):
        new = False
        for f in facts:
            for v in f.args:
                if term_depth(v) > bound:
                    raise InvariantViolation(f"term {v} exceeds the depth bound {bound}")
            new |= store.add(f)
        return new

    for cl in st:
        for h in list(iter_homomorphisms(cl.body, source)):
            out = _fire_clause(cl, h)
            if out:
                add(out)
    changed = True
    while changed:
        changed = False
        for cl in t:
            for h in list(iter_homomorphisms(cl.body, store)):
                out = _fire_clause(cl, h)
                if out and add(out):
                    changed = True
    return Instance(store.facts(), m.target)


# -- cores -----------------------------------------------------------------

def _nulls_as_vars(facts):
    def conv(v):
        return Var(f"?n{v.id}") if isinstance(v, Null) else v
    return [Atom(f.relation, tuple(conv(v) for v in f.args)) for f in facts]


def core_of(inst: Instance) -> Instance:
    """Smallest retract of ``inst``; constants stay fixed."""
    cur = inst
    while True:
        pattern = _nulls_as_vars(cur)
        shrunk = None
        for f in cur:
            if not any(isinstance(v, Null) for v in f.args):
                continue
            rest = cur.difference([f])
            h = next(iter_homomorphisms(pattern, rest), None)
            if h is not None:
                shrunk = Instance((a.substitute(h) for a in pattern),
                                  inst.schema if inst.declared else None)
                break
        if shrunk is None:
            return cur
        cur = shrunk


def homomorphic(a: Instance, b: Instance) -> bool:
    """Is there a homomorphism from a to b fixing constants?"""
    return exists_homomorphism(_nulls_as_vars(a), b)


def homomorphically_equivalent(a: Instance, b: Instance) -> bool:
    return homomorphic(a, b) and homomorphic(b, a)


def isomorphic(a: Instance, b: Instance) -> bool:
    """Equal up to a bijective renaming of nulls."""
    if len(a) != len(b):
        return False
    pattern = _nulls_as_vars(a)
    for h in iter_homomorphisms(pattern, b):
        image = list(h.values())
        if all(isinstance(v, Null) for v in image) and len(set(image)) == len(image):
            return True
    return False


def is_constant(v):
    return isinstance(v, Const)
