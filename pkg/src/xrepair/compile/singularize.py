"""Replace equality by a plain relation so that solutions become free."""
from __future__ import annotations

from ..chase import analyze_weak_acyclicity
from ..core import (
    UCQ, Atom, Compound, Const, ConjunctiveQuery, Egd, SchemaMapping, SOClause, SOTgd, Tgd, Var,
    atoms_vars,
)
from ..errors import PreconditionError
from .skolem import has_equalities


def eq_name(m: SchemaMapping, base="Eq"):
    taken = set(m.source) | set(m.target)
    n = base
    while n in taken:
        n += "_"
    return n


def _fresh(name, taken):
    n = name + "'"
    while n in taken:
        n += "'"
    taken.add(n)
    return Var(n)


def singularize_atoms(atoms, eq, taken=None, seen=None):
    """Give every variable occurrence after the first a fresh name linked by ``eq``.

    Constants in argument positions are also replaced by a fresh variable
    linked to the constant. Link atoms go right before the atom they serve.
    """
    taken = set(taken if taken is not None else (v.name for v in atoms_vars(atoms)))
    seen = set() if seen is None else seen
    out = []
    for a in atoms:
        links, args = [], []
        for t in a.args:
            if isinstance(t, Var):
                if t in seen:
                    z = _fresh(t.name, taken)
                    links.append(Atom(eq, (t, z)))
                    args.append(z)
                else:
                    seen.add(t)
                    args.append(t)
            elif isinstance(t, Const):
                z = _fresh("c", taken)
                links.append(Atom(eq, (z, t)))
                args.append(z)
            else:
                args.append(t)
        out += links + [Atom(a.relation, tuple(args))]
    return out


def eq_axioms(target, eq) -> list:
    """Reflexivity per position (one tgd each), symmetry and transitivity."""
    out = []
    for rel, n in target.arities:
        if rel == eq:
            continue
        xs = tuple(Var(f"x{i}") for i in range(1, n + 1))
        for x in xs:
            out.append((Tgd((Atom(rel, xs),), (Atom(eq, (x, x)),)), f"reflexivity {rel}.{xs.index(x) + 1}"))
    x1, x2, x3 = Var("x1"), Var("x2"), Var("x3")
    out.append((Tgd((Atom(eq, (x1, x2)),), (Atom(eq, (x2, x1)),)), "symmetry"))
    out.append((Tgd((Atom(eq, (x1, x2)), Atom(eq, (x2, x3))), (Atom(eq, (x1, x3)),)), "transitivity"))
    return out


def _single_clause(body, head):
    return Tgd(tuple(body), tuple(head))


def equality_singularize(m: SchemaMapping, eq=None):
    """Egds become tgds into ``eq``, joins go through ``eq``, and the eq axioms are added.

    Returns ``(mapping, eq, origins)`` where ``origins[i]`` describes where
    target constraint i came from.
    """
    if has_equalities(m.st):
        raise PreconditionError("s-t constraints carry equalities; copy them into the target first")
    eq = eq or eq_name(m)
    target = m.target.union([(eq, 2)])
    out, origins = [], []
    for i, c in enumerate(m.t):
        if isinstance(c, Egd):
            if c.lhs == c.rhs:
                continue
            body = singularize_atoms(c.body, eq)
            out.append(_single_clause(body, [Atom(eq, (c.lhs, c.rhs))]))
            origins.append(f"t[{i}] egd")
        elif isinstance(c, Tgd):
            if not c.is_full:
                raise PreconditionError(f"t[{i}] ({c}) has existential variables; skolemize first")
            out.append(Tgd(tuple(singularize_atoms(c.body, eq)), c.head))
            origins.append(f"t[{i}]")
        else:
            clauses = []
            for cl in c.clauses:
                body = singularize_atoms(cl.body, eq)
                body += [Atom(eq, (s, t)) for s, t in cl.equalities]
                clauses.append(SOClause(tuple(body), (), cl.head))
            out.append(SOTgd(c.functions, tuple(clauses)))
            origins.append(f"t[{i}]")
    for tgd, what in eq_axioms(m.target, eq):
        out.append(tgd)
        origins.append(f"eq axiom {what}")
    return SchemaMapping(m.source, target, m.st, tuple(out)), eq, origins


def term_positions(m: SchemaMapping) -> set:
    """Positions that may hold function terms in a free solution.

    These are the positions where some head builds a term, closed under
    the edges of the dependency graph.
    """
    g = analyze_weak_acyclicity([c for c in list(m.st) + list(m.t) if not isinstance(c, Egd)])
    succ = {}
    for u, v in g.normal_edges | g.special_edges:
        succ.setdefault(u, set()).add(v)
    todo = [(a.relation, i + 1) for c in list(m.st) + list(m.t) if not isinstance(c, Egd)
            for cl in (c.clauses if isinstance(c, SOTgd) else (c,))
            for a in cl.head for i, t in enumerate(a.args) if isinstance(t, Compound)]
    seen = set()
    while todo:
        p = todo.pop()
        if p not in seen:
            seen.add(p)
            todo.extend(succ.get(p, ()))
    return seen


def singularize_query(q: UCQ, eq, term_pos=frozenset()) -> UCQ:
    """Singularize each disjunct.

    A free variable whose first occurrence sits in one of ``term_pos`` is
    read through ``eq`` as well, so answers equal to a term only up to eq
    still reach the head.
    """
    out = []
    for d in q.disjuncts:
        body = list(d.body)
        taken = {v.name for v in atoms_vars(body)}
        links = []
        head_vars = [t for t in dict.fromkeys(d.head) if isinstance(t, Var)]
        for x in head_vars:
            first = next((a.relation, i + 1) for a in body for i, t in enumerate(a.args) if t == x)
            if first in term_pos:
                x0 = _fresh(x.name, taken)
                body = [Atom(a.relation, tuple(x0 if t == x else t for t in a.args)) for a in body]
                links.append(Atom(eq, (x0, x)))
        new = singularize_atoms(body, eq, taken) + links
        out.append(ConjunctiveQuery(d.head, tuple(new)))
    return UCQ(q.name, q.arity, tuple(out))
