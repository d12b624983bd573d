"""Equality of constraints, queries and programs up to variable renaming,
atom order and renaming of function symbols."""
from __future__ import annotations

import itertools

from .core import (
    UCQ, Compound, ConjunctiveQuery, Egd, Null, SchemaMapping, SOClause, SOTgd, Tgd, Var,
)
from .compile.skeleton import Skeleton, skel_relation, split_skel_relation


def _parts(obj):
    if isinstance(obj, Tgd):
        return [("b", a.relation, a.args) for a in obj.body] + [("h", a.relation, a.args) for a in obj.head]
    if isinstance(obj, Egd):
        return [("b", a.relation, a.args) for a in obj.body] + [("=", "", (obj.lhs, obj.rhs))]
    if isinstance(obj, SOClause):
        return ([("b", a.relation, a.args) for a in obj.body]
                + [("=", "", (s, t)) for s, t in obj.equalities]
                + [("h", a.relation, a.args) for a in obj.head])
    if isinstance(obj, ConjunctiveQuery):
        return [("H", str(i), (t,)) for i, t in enumerate(obj.head)] + \
               [("b", a.relation, a.args) for a in obj.body]
    from .dlp import DlpRule
    if isinstance(obj, DlpRule):
        return ([("h", a.relation, a.args) for a in obj.head]
                + [("b", a.relation, a.args) for a in obj.body]
                + [("=", "!", (a, b)) for a, b in obj.neq])
    raise TypeError(f"cannot compare {type(obj).__name__}")


def _is_var(t):
    return isinstance(t, (Var, Null))


class _Bij:
    def __init__(self, fmap):
        self.fw, self.bw, self.fmap = {}, {}, fmap
        self.trail = []

    def term(self, a, b):
        if _is_var(a) or _is_var(b):
            if not (_is_var(a) and _is_var(b)):
                return False
            if a in self.fw:
                return self.fw[a] == b
            if b in self.bw:
                return False
            self.fw[a], self.bw[b] = b, a
            self.trail.append(a)
            return True
        if isinstance(a, Compound):
            return (isinstance(b, Compound) and self.fmap.get(a.fn, a.fn) == b.fn
                    and len(a.args) == len(b.args)
                    and all(self.term(x, y) for x, y in zip(a.args, b.args)))
        return a == b

    def mark(self):
        return len(self.trail)

    def undo(self, m):
        while len(self.trail) > m:
            a = self.trail.pop()
            del self.bw[self.fw.pop(a)]


def _rel(name, fmap):
    if not fmap:
        return name
    sp = split_skel_relation(name)
    if sp is None:
        return name
    base, skels = sp

    def ren(s):
        if s.fn is None:
            return s
        return Skeleton(fmap.get(s.fn, s.fn), tuple(ren(c) for c in s.children))

    return skel_relation(base, [ren(s) for s in skels])


def _match_parts(p1, p2, bij, fmap):
    if len(p1) != len(p2):
        return False
    used = [False] * len(p2)

    def rec(i):
        if i == len(p1):
            return True
        tag, rel, args = p1[i]
        rel = _rel(rel, fmap)
        for j, (tag2, rel2, args2) in enumerate(p2):
            if used[j] or tag2 != tag or rel2 != rel or len(args2) != len(args):
                continue
            orients = [args2] if tag != "=" else [args2, args2[::-1]]
            for o in orients:
                m = bij.mark()
                if all(bij.term(a, b) for a, b in zip(args, o)):
                    used[j] = True
                    if rec(i + 1):
                        return True
                    used[j] = False
                bij.undo(m)
        return False

    return rec(0)


def variant(a, b, fmap=None) -> bool:
    """True when b is a renaming of a. ``fmap`` renames a's function symbols."""
    fmap = fmap or {}
    if type(a) is not type(b):
        return False
    if isinstance(a, SOTgd):
        fa = {fmap.get(f, f): n for f, n in a.functions}
        if fa != dict(b.functions):
            return False
        return _match_list(list(a.clauses), list(b.clauses), fmap)
    return _match_parts(_parts(a), _parts(b), _Bij(fmap), fmap)


def _match_list(xs, ys, fmap):
    if len(xs) != len(ys):
        return False
    used = [False] * len(ys)

    def rec(i):
        if i == len(xs):
            return True
        for j, y in enumerate(ys):
            if not used[j] and variant(xs[i], y, fmap):
                used[j] = True
                if rec(i + 1):
                    return True
                used[j] = False
        return False

    return rec(0)


def _functions(m: SchemaMapping):
    out = set()
    for c in list(m.st) + list(m.t):
        if isinstance(c, SOTgd):
            out |= {f for f, _ in c.functions}
    for rel in list(m.source) + list(m.target):
        sp = split_skel_relation(rel)
        if sp:
            stack = list(sp[1])
            while stack:
                s = stack.pop()
                if s.fn is not None:
                    out.add(s.fn)
                    stack.extend(s.children)
    return sorted(out)


def _fmaps(fa, fb):
    if len(fa) != len(fb):
        return
    for perm in itertools.permutations(fb):
        yield dict(zip(fa, perm))


def same_constraints(xs, ys, fmap=None) -> bool:
    """Multiset equality of constraint lists up to variants."""
    return _match_list(list(xs), list(ys), fmap or {})


def same_mapping(a: SchemaMapping, b: SchemaMapping) -> bool:
    """Equal up to constraint order, variable names and function symbol names."""
    for fmap in _fmaps(_functions(a), _functions(b)):
        if {_rel(r, fmap) for r in a.source} != set(b.source):
            continue
        if {(_rel(r, fmap), n) for r, n in a.target.arities} != set(b.target.arities):
            continue
        if same_constraints(a.st, b.st, fmap) and same_constraints(a.t, b.t, fmap):
            return True
    return False


def same_query(a: UCQ, b: UCQ, fmap=None) -> bool:
    return a.arity == b.arity and _match_list(list(a.disjuncts), list(b.disjuncts), fmap or {})


def same_mapping_and_query(ma, qa, mb, qb) -> bool:
    for fmap in _fmaps(_functions(ma), _functions(mb)):
        if same_query(qa, qb, fmap) and same_mapping(
                _rename_mapping(ma, fmap), mb):
            return True
    return False


def _rename_mapping(m, fmap):
    if not fmap:
        return m
    from .core import Atom, Schema

    def term(t):
        if isinstance(t, Compound):
            return Compound(fmap.get(t.fn, t.fn), tuple(term(x) for x in t.args))
        return t

    def atom(a):
        return Atom(_rel(a.relation, fmap), tuple(term(t) for t in a.args))

    def con(c):
        if isinstance(c, Tgd):
            return Tgd(tuple(map(atom, c.body)), tuple(map(atom, c.head)))
        if isinstance(c, Egd):
            return Egd(tuple(map(atom, c.body)), c.lhs, c.rhs)
        return SOTgd(tuple((fmap.get(f, f), n) for f, n in c.functions),
                     tuple(SOClause(tuple(map(atom, cl.body)),
                                    tuple((term(s), term(t)) for s, t in cl.equalities),
                                    tuple(map(atom, cl.head))) for cl in c.clauses))

    return SchemaMapping(Schema.of([(_rel(r, fmap), n) for r, n in m.source.arities]),
                         Schema.of([(_rel(r, fmap), n) for r, n in m.target.arities]),
                         tuple(map(con, m.st)), tuple(map(con, m.t)))
