"""Skeleton rewriting: encode the shape of function terms in relation names."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..chase import term_depth_bound
from ..core import (
    UCQ, Atom, Compound, ConjunctiveQuery, Egd, Schema, SchemaMapping,
    SOClause, SOTgd, Tgd, Var, atoms_vars,
)
from ..errors import InvariantViolation, PreconditionError
from .skeleton import (
    BULLET, Skeleton, leaf_vars, skel_relation, skeleton_of, skeletons_upto,
    split_skel_relation,
)
from .skolem import functions_of


def clauses_of(c):
    if isinstance(c, SOTgd):
        return [cl for cl in c.clauses]
    if isinstance(c, Tgd):
        if not c.is_full:
            raise PreconditionError(f"{c} has existential variables; skolemize first")
        return [SOClause(c.body, (), c.head)]
    raise PreconditionError(f"cannot skeleton-rewrite {c}")


@dataclass(frozen=True)
class SkeletonSetting:
    functions: dict
    bound: int


def skeleton_setting(m: SchemaMapping, bound=None) -> SkeletonSetting:
    """Function arities plus the depth bound; the bound defaults to the
    mapping's own, which requires it to be weakly acyclic."""
    cs = [c for c in list(m.st) + list(m.t) if not isinstance(c, Egd)]
    if bound is None:
        bound = term_depth_bound(cs)
    return SkeletonSetting(functions_of(cs), bound)


def _term(t, env, leaves_of):
    """Skeleton and leaf list of a term once each variable has a skeleton."""
    if isinstance(t, Var):
        return env[t], list(leaves_of[t])
    if isinstance(t, Compound):
        kids, leaves = [], []
        for a in t.args:
            s, ls = _term(a, env, leaves_of)
            kids.append(s)
            leaves += ls
        return Skeleton(t.fn, tuple(kids)), leaves
    return BULLET, [t]


def _rewrite_atom(a, env, leaves_of):
    skels, args = [], []
    for t in a.args:
        s, ls = _term(t, env, leaves_of)
        skels.append(s)
        args += ls
    return Atom(skel_relation(a.relation, skels), tuple(args)), skels


def _leaves(clause_vars, env):
    taken = {v.name for v in clause_vars}
    return {v: leaf_vars(v, env[v], taken) for v in clause_vars}


def _emit(cl, env, bound):
    """Rewritten body and the heads within the bound, or None if the body itself is out of bound."""
    vs = atoms_vars(cl.body)
    lv = _leaves(vs, env)
    body = []
    for a in cl.body:
        atom, skels = _rewrite_atom(a, env, lv)
        if any(s.depth > bound for s in skels):
            return None
        body.append(atom)
    heads = []
    for k, h in enumerate(cl.head):
        atom, skels = _rewrite_atom(h, env, lv)
        if all(s.depth <= bound for s in skels):
            heads.append((k, atom))
    return body, heads


def _match(t, s, env):
    """Extend env so that term t has skeleton s; returns False on mismatch."""
    if isinstance(t, Var):
        cur = env.get(t)
        if cur is None:
            env[t] = s
            return True
        return cur == s
    if isinstance(t, Compound):
        if s.fn != t.fn or len(s.children) != len(t.args):
            return False
        return all(_match(a, c, env) for a, c in zip(t.args, s.children))
    return s.is_bullet


def _assignments(body, derivable_by_base):
    """Skeleton assignments under which every body atom names a derivable relation."""
    def rec(i, env):
        if i == len(body):
            yield dict(env)
            return
        a = body[i]
        for skels in derivable_by_base.get((a.relation, len(a.args)), ()):
            trial = dict(env)
            if all(_match(t, s, trial) for t, s in zip(a.args, skels)):
                yield from rec(i + 1, trial)

    yield from rec(0, {})


def _env_key(vs, env):
    return tuple(env[v].sort_key() for v in vs)


def _st_rewrite(m, bound):
    st, origins = [], []
    for i, c in enumerate(m.st):
        for j, cl in enumerate(clauses_of(c)):
            for k, h in enumerate(cl.head):
                skels, args = [], []
                for t in h.args:
                    s, ls = skeleton_of(t)
                    if s.depth > bound:
                        raise InvariantViolation(f"s-t head term {t} deeper than the bound {bound}")
                    skels.append(s)
                    args += ls
                st.append(Tgd(cl.body, (Atom(skel_relation(h.relation, skels), tuple(args)),)))
                origins.append({"from": f"st[{i}]", "clause": j, "head": k})
    return st, origins


def skeleton_rewrite(m: SchemaMapping, bound=None, reachable_only=False):
    """Rewrite an equality-free, weakly acyclic SO mapping into a GAV one.

    ``reachable_only`` generates just the tgds whose body relations can be
    derived from the s-t heads; this equals ``prune_unreachable`` applied to
    the full rewriting but avoids enumerating every skeleton assignment.

    Returns ``(mapping, setting, origins)``.
    """
    for c in m.t:
        if isinstance(c, Egd):
            raise PreconditionError("singularize egds before skeleton rewriting")
        for cl in clauses_of(c):
            if cl.equalities:
                raise PreconditionError("singularize equalities before skeleton rewriting")
    setting = skeleton_setting(m, bound)
    B = setting.bound
    st, st_origins = _st_rewrite(m, B)
    clauses = [(i, j, cl) for i, c in enumerate(m.t) for j, cl in enumerate(clauses_of(c))]
    found = {}
    if not reachable_only:
        pool = skeletons_upto(setting.functions, B)
        for n, (i, j, cl) in enumerate(clauses):
            vs = atoms_vars(cl.body)
            for combo in itertools.product(pool, repeat=len(vs)):
                env = dict(zip(vs, combo))
                res = _emit(cl, env, B)
                if res is None:
                    continue
                body, heads = res
                for k, h in heads:
                    found[(n, _env_key(vs, env), k)] = (Tgd(tuple(body), (h,)), i, j, env)
    else:
        derivable = {}
        known = set()

        def note(rel):
            if rel in known:
                return False
            known.add(rel)
            base, skels = split_skel_relation(rel)
            arity = sum(1 for _ in skels)
            derivable.setdefault((base, arity), []).append(tuple(skels))
            return True

        for t in st:
            note(t.head[0].relation)
        changed = True
        while changed:
            changed = False
            for n, (i, j, cl) in enumerate(clauses):
                vs = atoms_vars(cl.body)
                for env in list(_assignments(cl.body, derivable)):
                    key_env = _env_key(vs, env)
                    res = _emit(cl, env, B)
                    if res is None:
                        continue
                    body, heads = res
                    for k, h in heads:
                        key = (n, key_env, k)
                        if key not in found:
                            found[key] = (Tgd(tuple(body), (h,)), i, j, env)
                            changed |= note(h.relation)
    t, t_origins = [], []
    for key in sorted(found):
        tgd, i, j, env = found[key]
        t.append(tgd)
        t_origins.append({"from": f"t[{i}]", "clause": j,
                          "skeletons": {v.name: str(s) for v, s in env.items()}})
    rels = {}
    for c in st + t:
        for a in c.body + c.head:
            if a.relation not in m.source:
                rels[a.relation] = a.arity
    out = SchemaMapping(m.source, Schema.of(rels), tuple(st), tuple(t))
    return out, setting, st_origins + t_origins


def _derivable_index(relations):
    idx = {}
    for rel in sorted(relations):
        sp = split_skel_relation(rel)
        if sp is None:
            continue
        base, skels = sp
        idx.setdefault((base, len(skels)), []).append(tuple(skels))
    return idx


def skeleton_rewrite_query(q: UCQ, setting: SkeletonSetting, derivable=None) -> UCQ:
    """Free variables get the bullet skeleton; existential ones range over skeletons.

    With ``derivable`` (a set of relation names) only disjuncts over those
    relations are produced.
    """
    out = []
    for d in q.disjuncts:
        head_vars = [t for t in d.head if isinstance(t, Var)]
        ex = d.existentials
        vs = atoms_vars(d.body)
        if derivable is None:
            pool = skeletons_upto(setting.functions, setting.bound)
            envs = []
            for combo in itertools.product(pool, repeat=len(ex)):
                env = {x: BULLET for x in head_vars}
                env.update(zip(ex, combo))
                envs.append(env)
        else:
            start = {x: BULLET for x in head_vars}
            envs = []
            for env in _assignments(d.body, _derivable_index(derivable)):
                if all(env[x] == s for x, s in start.items()):
                    envs.append(env)
            envs.sort(key=lambda e: _env_key(ex, e))
        for env in envs:
            lv = _leaves(vs, env)
            body = []
            ok = True
            for a in d.body:
                atom, skels = _rewrite_atom(a, env, lv)
                if any(s.depth > setting.bound for s in skels):
                    ok = False
                    break
                body.append(atom)
            if ok:
                out.append(ConjunctiveQuery(d.head, tuple(body)))
    return UCQ(q.name, q.arity, tuple(dict.fromkeys(out)))


def derivable_relations(m: SchemaMapping) -> set:
    """Target relations that some chase can populate, starting from the s-t heads."""
    got = {a.relation for c in m.st for a in c.head}
    tgds = [c for c in m.t if isinstance(c, Tgd)]
    changed = True
    while changed:
        changed = False
        for c in tgds:
            if all(a.relation in got for a in c.body):
                for a in c.head:
                    if a.relation not in got:
                        got.add(a.relation)
                        changed = True
    return got


def prune_unreachable(m: SchemaMapping, q: UCQ | None = None):
    """Drop relations no chase can populate, with every tgd, egd and disjunct mentioning them."""
    got = derivable_relations(m)
    t = tuple(c for c in m.t if all(a.relation in got for a in c.body))
    target = m.target.restrict(got)
    pm = SchemaMapping(m.source, target, m.st, t)
    if q is None:
        return pm, None
    pq = UCQ(q.name, q.arity, tuple(d for d in q.disjuncts if all(a.relation in got for a in d.body)))
    return pm, pq
