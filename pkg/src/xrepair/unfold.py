"""Rewrite target queries and egds into source ones through GAV s-t tgds."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import (
    UCQ, Atom, ConjunctiveQuery, Const, Egd, Instance, SchemaMapping, Tgd, Var,
    atoms_vars, eval_ucq,
)
from .errors import PreconditionError
from .repair import subset_repairs_egds


def gav_definitions(st) -> dict:
    """Map each target relation to the single-head full tgds defining it."""
    defs = {}
    for i, c in enumerate(st):
        if not isinstance(c, Tgd) or not c.is_full:
            raise PreconditionError(f"st[{i}] ({c}) is not a GAV tgd")
        for g in c.split():
            defs.setdefault(g.head[0].relation, []).append(g)
    return defs


class _Unifier:
    def __init__(self, preferred):
        self.parent = {}
        self.preferred = preferred

    def find(self, t):
        while self.parent.get(t, t) != t:
            t = self.parent[t]
        return t

    def _rank(self, t):
        if isinstance(t, Const):
            return (0, 0)
        return (1, self.preferred.get(t, len(self.preferred)))

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if isinstance(ra, Const) and isinstance(rb, Const):
            return False
        if self._rank(rb) < self._rank(ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def resolve(self, t):
        return self.find(t) if isinstance(t, Var) else t


def _fresh_renaming(tgd, k, taken):
    ren = {}
    for v in tgd.body_vars:
        name = f"{v.name}_{k}"
        while name in taken:
            name += "_"
        taken.add(name)
        ren[v] = Var(name)
    return ren


def _unfold_body(atoms, defs, keep_vars):
    """Yield (unifier, body) for each choice of definitions, one per atom."""
    choices = []
    for a in atoms:
        ds = defs.get(a.relation)
        if not ds:
            return
        choices.append(ds)
    preferred = {v: i for i, v in enumerate(keep_vars)}
    for combo in itertools.product(*choices):
        taken = {v.name for v in keep_vars}
        u = _Unifier(preferred)
        body = []
        ok = True
        for k, (a, g) in enumerate(zip(atoms, combo), start=1):
            ren = _fresh_renaming(g, k, taken)
            head = g.head[0].substitute(ren)
            for x, y in zip(a.args, head.args):
                if not u.union(x, y):
                    ok = False
                    break
            if not ok:
                break
            body += [b.substitute(ren) for b in g.body]
        if ok:
            yield u, [Atom(b.relation, tuple(u.resolve(t) for t in b.args)) for b in body]


def _dedupe(items):
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def gav_unfold_query(q: UCQ, st) -> UCQ:
    """Replace every target atom by the body of a tgd defining it, in all ways.

    A disjunct with a relation nobody defines contributes nothing; the result
    may be the empty UCQ.
    """
    defs = gav_definitions(st)
    out = []
    for d in q.disjuncts:
        keep = [t for t in d.head if isinstance(t, Var)] + atoms_vars(d.body)
        keep = list(dict.fromkeys(keep))
        for u, body in _unfold_body(d.body, defs, keep):
            head = tuple(u.resolve(t) for t in d.head)
            out.append(ConjunctiveQuery(head, tuple(_dedupe(body))))
    return UCQ(q.name, q.arity, tuple(_dedupe(out)))


def gav_unfold_egds(egds, st) -> tuple:
    defs = gav_definitions(st)
    out = []
    for e in egds:
        for u, body in _unfold_body(e.body, defs, atoms_vars(e.body)):
            lhs, rhs = u.resolve(e.lhs), u.resolve(e.rhs)
            if lhs == rhs:
                continue
            out.append(Egd(tuple(_dedupe(body)), lhs, rhs))
    return tuple(_dedupe(out))


@dataclass(frozen=True)
class SourceRewriting:
    mapping: SchemaMapping
    egds: tuple

    def rewrite(self, q: UCQ) -> UCQ:
        return gav_unfold_query(q, self.mapping.st)


def require_gav_egd(m: SchemaMapping):
    for i, c in enumerate(m.st):
        if not isinstance(c, Tgd) or not c.is_full:
            raise PreconditionError(f"st[{i}] ({c}) is not GAV; the CQA route needs GAV s-t tgds")
    for i, c in enumerate(m.t):
        if not isinstance(c, Egd):
            raise PreconditionError(f"t[{i}] ({c}) is not an egd; the CQA route needs egd-only targets")


def source_rewriting(m: SchemaMapping) -> SourceRewriting:
    require_gav_egd(m)
    return SourceRewriting(m, gav_unfold_egds(m.egds, m.st))


def xr_certain_via_cqa(q: UCQ, source: Instance, m: SchemaMapping) -> set:
    """XR-certain answers as consistent answers of the unfolded query over source repairs."""
    rw = source_rewriting(m)
    qs = rw.rewrite(q)
    out = None
    for r in subset_repairs_egds(source, rw.egds):
        ans = eval_ucq(qs, r)
        out = ans if out is None else out & ans
    return out or set()
