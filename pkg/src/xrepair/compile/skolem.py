from __future__ import annotations

from ..core import (
    Atom, Compound, Egd, SchemaMapping, SOClause, SOTgd, Tgd, Var, term_functions,
)


def _used_functions(m):
    out = {}
    for c in list(m.st) + list(m.t):
        if isinstance(c, SOTgd):
            for f, n in c.functions:
                out[f] = n
    return out


def skolemize_tgd(tgd: Tgd, names) -> SOTgd:
    """One function per existential variable, applied to the frontier variables.

    Each head atom becomes its own clause so every clause has a single head.
    """
    fr = tuple(tgd.frontier)
    asg, fns = {}, []
    for z in tgd.existentials:
        f = next(names)
        fns.append((f, len(fr)))
        asg[z] = Compound(f, fr)
    clauses = tuple(SOClause(tgd.body, (), (h.substitute(asg),)) for h in tgd.head)
    return SOTgd(tuple(fns), clauses)


def skolemize(m: SchemaMapping, prefix="f") -> SchemaMapping:
    taken = set(_used_functions(m))

    def names():
        k = 1
        while True:
            n = f"{prefix}{k}"
            k += 1
            if n not in taken:
                taken.add(n)
                yield n

    gen = names()

    def conv(c):
        if isinstance(c, Tgd):
            return skolemize_tgd(c, gen)
        return c

    return m.with_constraints(st=[conv(c) for c in m.st], t=[conv(c) for c in m.t])


def _rename(atom, ren):
    return Atom(ren.get(atom.relation, atom.relation), atom.args)


def copy_extend(m: SchemaMapping):
    """Copy every source relation into a primed target relation and move the
    s-t constraints into the target, reading from the copies.

    Returns the new mapping and the map from source relation to its copy.
    """
    taken = set(m.source) | set(m.target)
    ren = {}
    for r in m.source:
        n = r + "'"
        while n in taken:
            n += "'"
        taken.add(n)
        ren[r] = n
    copies = []
    for r, n in m.source.arities:
        xs = tuple(Var(f"x{i}") for i in range(1, n + 1))
        copies.append(Tgd((Atom(r, xs),), (Atom(ren[r], xs),)))
    moved = []
    for c in m.st:
        if isinstance(c, Tgd):
            moved.append(Tgd(tuple(_rename(a, ren) for a in c.body), c.head))
        else:
            moved.append(SOTgd(c.functions, tuple(
                SOClause(tuple(_rename(a, ren) for a in cl.body), cl.equalities, cl.head)
                for cl in c.clauses)))
    target = m.target.union([(ren[r], n) for r, n in m.source.arities])
    return SchemaMapping(m.source, target, tuple(copies), tuple(moved) + tuple(m.t)), ren


def functions_of(constraints) -> dict:
    out = {}
    for c in constraints:
        if isinstance(c, SOTgd):
            for cl in c.clauses:
                for a in cl.body + cl.head:
                    for t in a.args:
                        term_functions(t, out)
                for s, t in cl.equalities:
                    term_functions(s, out)
                    term_functions(t, out)
    return out


def has_equalities(constraints) -> bool:
    return any(isinstance(c, SOTgd) and any(cl.equalities for cl in c.clauses) for c in constraints)


def is_egd(c):
    return isinstance(c, Egd)
