"""Values, atoms, instances, dependencies and queries.

Homomorphism search and (U)CQ evaluation live here too since every other
module is built on them.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .errors import SchemaError


# -- terms -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Const:
    value: Union[str, int]

    def __str__(self):
        if isinstance(self.value, int):
            return str(self.value)
        return json.dumps(self.value)


@dataclass(frozen=True, slots=True)
class Null:
    id: int

    def __str__(self):
        return f"_N{self.id}"


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Compound:
    """Function term. Ground when no Var occurs inside."""

    fn: str
    args: tuple

    def __str__(self):
        return f"{self.fn}({', '.join(str(a) for a in self.args)})"


Term = Union[Const, Null, Var, Compound]
Value = Union[Const, Null, Compound]


def term_key(t):
    """Total order on terms used for every deterministic sort."""
    if isinstance(t, Const):
        v = t.value
        return (0, 0, v, "") if isinstance(v, int) else (0, 1, 0, v)
    if isinstance(t, Null):
        return (1, t.id)
    if isinstance(t, Compound):
        return (2, t.fn, tuple(term_key(a) for a in t.args))
    return (3, t.name)


def term_vars(t, out=None):
    if out is None:
        out = {}
    if isinstance(t, Var):
        out.setdefault(t, None)
    elif isinstance(t, Compound):
        for a in t.args:
            term_vars(a, out)
    return out


def is_ground(t) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


def term_depth(t) -> int:
    if isinstance(t, Compound):
        return 1 + max((term_depth(a) for a in t.args), default=0)
    return 0


def is_constant_value(v) -> bool:
    return isinstance(v, Const)


def substitute(t, asg):
    if isinstance(t, Var):
        return asg.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.fn, tuple(substitute(a, asg) for a in t.args))
    return t


def term_functions(t, out):
    if isinstance(t, Compound):
        out.setdefault(t.fn, len(t.args))
        for a in t.args:
            term_functions(a, out)
    return out


# -- atoms -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Atom:
    relation: str
    args: tuple

    def __str__(self):
        return f"{self.relation}({', '.join(str(a) for a in self.args)})"

    @property
    def arity(self):
        return len(self.args)

    def substitute(self, asg) -> "Atom":
        return Atom(self.relation, tuple(substitute(a, asg) for a in self.args))

    def variables(self):
        out = {}
        for a in self.args:
            term_vars(a, out)
        return out

    def is_ground(self):
        return all(is_ground(a) for a in self.args)

    def sort_key(self):
        return (self.relation, tuple(term_key(a) for a in self.args))


Fact = Atom


def atoms_vars(atoms) -> list:
    """Variables of a conjunction in order of first occurrence."""
    out = {}
    for a in atoms:
        for t in a.args:
            term_vars(t, out)
    return list(out)


def fact(relation, *values) -> Atom:
    """Build a ground atom from plain Python values; ints and strings become constants."""
    vals = []
    for v in values:
        if isinstance(v, (str, int)) and not isinstance(v, bool):
            vals.append(Const(v))
        else:
            vals.append(v)
    return Atom(relation, tuple(vals))


# -- schemas ---------------------------------------------------------------

@dataclass(frozen=True)
class Schema:
    arities: tuple = ()

    @classmethod
    def of(cls, rels) -> "Schema":
        if isinstance(rels, Schema):
            return rels
        items = rels.items() if isinstance(rels, Mapping) else rels
        d = {}
        for name, n in items:
            if name in d and d[name] != n:
                raise SchemaError(f"relation {name} declared with arities {d[name]} and {n}")
            d[name] = n
        return cls(tuple(sorted(d.items())))

    @classmethod
    def from_atoms(cls, atoms) -> "Schema":
        return cls.of([(a.relation, a.arity) for a in atoms])

    def as_dict(self):
        return dict(self.arities)

    def __contains__(self, name):
        return name in self.as_dict()

    def __getitem__(self, name):
        return self.as_dict()[name]

    def __iter__(self):
        return iter(n for n, _ in self.arities)

    def __len__(self):
        return len(self.arities)

    @property
    def names(self):
        return tuple(n for n, _ in self.arities)

    def union(self, other) -> "Schema":
        return Schema.of(list(self.arities) + list(Schema.of(other).arities))

    def restrict(self, names) -> "Schema":
        keep = set(names)
        return Schema(tuple((n, a) for n, a in self.arities if n in keep))

    def check_atom(self, atom):
        d = self.as_dict()
        if atom.relation not in d:
            raise SchemaError(f"unknown relation {atom.relation}")
        if d[atom.relation] != atom.arity:
            raise SchemaError(
                f"relation {atom.relation} has arity {d[atom.relation]}, got {atom.arity} in {atom}")


# -- instances -------------------------------------------------------------

class Instance:
    """Immutable finite set of ground facts.

    When no schema is given it is inferred from the facts, and lookups of
    relations outside it simply come back empty.
    """

    __slots__ = ("_facts", "_schema", "_declared", "_by_rel", "_index", "_sorted", "_hash")

    def __init__(self, facts: Iterable[Atom] = (), schema=None):
        fs = frozenset(facts)
        for f in fs:
            if not isinstance(f, Atom) or not f.is_ground():
                raise SchemaError(f"instance facts must be ground atoms, got {f}")
        self._facts = fs
        self._declared = schema is not None
        if schema is None:
            self._schema = Schema.from_atoms(fs)
        else:
            self._schema = Schema.of(schema)
            for f in fs:
                self._schema.check_atom(f)
        self._by_rel = None
        self._index = None
        self._sorted = None
        self._hash = None

    @property
    def facts(self) -> frozenset:
        return self._facts

    @property
    def schema(self) -> Schema:
        return self._schema

    @property
    def declared(self) -> bool:
        return self._declared

    def _build(self):
        by_rel = {}
        for f in sorted(self._facts, key=Atom.sort_key):
            by_rel.setdefault(f.relation, []).append(f)
        self._by_rel = {r: tuple(fs) for r, fs in by_rel.items()}

    def relation(self, name) -> tuple:
        if self._by_rel is None:
            self._build()
        return self._by_rel.get(name, ())

    def lookup(self, name, pos, value) -> tuple:
        if self._index is None:
            if self._by_rel is None:
                self._build()
            idx = {}
            for r, fs in self._by_rel.items():
                for f in fs:
                    for i, v in enumerate(f.args):
                        idx.setdefault((r, i, v), []).append(f)
            self._index = idx
        return self._index.get((name, pos, value), ())

    def has_relation(self, name) -> bool:
        return (not self._declared) or name in self._schema

    def __iter__(self) -> Iterator[Atom]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._facts, key=Atom.sort_key))
        return iter(self._sorted)

    def __len__(self):
        return len(self._facts)

    def __contains__(self, f):
        return f in self._facts

    def __eq__(self, other):
        if isinstance(other, Instance):
            return self._facts == other._facts
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._facts)
        return self._hash

    def __repr__(self):
        return "Instance({" + ", ".join(str(f) for f in self) + "})"

    def with_schema(self, schema) -> "Instance":
        return Instance(self._facts, schema)

    def union(self, other) -> "Instance":
        other_facts = other.facts if isinstance(other, Instance) else frozenset(other)
        schema = None
        if self._declared and isinstance(other, Instance) and other._declared:
            schema = self._schema.union(other._schema)
        return Instance(self._facts | other_facts, schema)

    def difference(self, other) -> "Instance":
        other_facts = other.facts if isinstance(other, Instance) else frozenset(other)
        return Instance(self._facts - other_facts, self._schema if self._declared else None)

    def restrict(self, relations) -> "Instance":
        keep = set(relations)
        schema = self._schema.restrict(keep) if self._declared else None
        return Instance((f for f in self._facts if f.relation in keep), schema)

    def active_domain(self) -> set:
        return {v for f in self._facts for v in f.args}

    def constants(self) -> set:
        return {v for f in self._facts for v in f.args if isinstance(v, Const)}

    def nulls(self) -> set:
        return {v for f in self._facts for v in f.args if isinstance(v, Null)}

    def map_values(self, fn) -> "Instance":
        return Instance((Atom(f.relation, tuple(fn(v) for v in f.args)) for f in self._facts),
                        self._schema if self._declared else None)

    def is_null_free(self) -> bool:
        return all(isinstance(v, Const) for f in self._facts for v in f.args)


def symmetric_difference(a: Instance, b: Instance) -> Instance:
    return Instance(a.facts ^ b.facts)


# -- dependencies ----------------------------------------------------------

def _check_atoms(atoms, what):
    if not atoms:
        raise SchemaError(f"{what} must contain at least one atom")
    for a in atoms:
        if not isinstance(a, Atom):
            raise SchemaError(f"{what} contains a non-atom {a!r}")


@dataclass(frozen=True)
class Tgd:
    body: tuple
    head: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        _check_atoms(self.body, "tgd body")
        _check_atoms(self.head, "tgd head")
        for a in self.body + self.head:
            for t in a.args:
                if isinstance(t, (Compound, Null)):
                    raise SchemaError(f"tgd atoms may not contain {t}")

    @property
    def body_vars(self) -> list:
        return atoms_vars(self.body)

    @property
    def existentials(self) -> list:
        bv = set(self.body_vars)
        return [v for v in atoms_vars(self.head) if v not in bv]

    @property
    def frontier(self) -> list:
        hv = set(atoms_vars(self.head))
        return [v for v in self.body_vars if v in hv]

    @property
    def is_full(self):
        return not self.existentials

    @property
    def is_gav(self):
        return self.is_full and len(self.head) == 1

    @property
    def is_lav(self):
        return len(self.body) == 1

    def split(self) -> tuple:
        """A full tgd as an equivalent list of single-head tgds."""
        if not self.is_full:
            return (self,)
        return tuple(Tgd(self.body, (h,)) for h in self.head)

    def relations(self):
        return {a.relation for a in self.body + self.head}

    def __str__(self):
        return " & ".join(map(str, self.body)) + " -> " + " & ".join(map(str, self.head))


@dataclass(frozen=True)
class Egd:
    body: tuple
    lhs: object
    rhs: object

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        _check_atoms(self.body, "egd body")
        bv = set(atoms_vars(self.body))
        for t in (self.lhs, self.rhs):
            if isinstance(t, Var) and t not in bv:
                raise SchemaError(f"egd equates {t}, which does not occur in the body")
            if not isinstance(t, (Var, Const)):
                raise SchemaError(f"egd sides must be variables or constants, got {t}")

    def relations(self):
        return {a.relation for a in self.body}

    def __str__(self):
        return " & ".join(map(str, self.body)) + f" -> {self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class SOClause:
    body: tuple
    equalities: tuple
    head: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "equalities", tuple(tuple(e) for e in self.equalities))
        object.__setattr__(self, "head", tuple(self.head))
        _check_atoms(self.body, "SO clause body")
        _check_atoms(self.head, "SO clause head")
        bv = set(atoms_vars(self.body))
        for s, t in self.equalities:
            for v in list(term_vars(s)) + list(term_vars(t)):
                if v not in bv:
                    raise SchemaError(f"variable {v} of an equality does not occur in a body atom")
        for v in atoms_vars(self.head):
            if v not in bv:
                raise SchemaError(f"head variable {v} of an SO clause does not occur in the body")

    def relations(self):
        return {a.relation for a in self.body + self.head}

    def __str__(self):
        parts = [str(a) for a in self.body] + [f"{s} = {t}" for s, t in self.equalities]
        return " & ".join(parts) + " -> " + " & ".join(map(str, self.head))


@dataclass(frozen=True)
class SOTgd:
    functions: tuple
    clauses: tuple

    def __post_init__(self):
        fns = tuple(tuple(f) for f in self.functions)
        object.__setattr__(self, "functions", fns)
        object.__setattr__(self, "clauses", tuple(self.clauses))
        if not self.clauses:
            raise SchemaError("SO tgd needs at least one clause")
        declared = dict(fns)
        used = {}
        for c in self.clauses:
            for a in c.body + c.head:
                for t in a.args:
                    term_functions(t, used)
            for s, t in c.equalities:
                term_functions(s, used)
                term_functions(t, used)
        for fn, n in used.items():
            if fn not in declared:
                raise SchemaError(f"function {fn} is not declared")
            if declared[fn] != n:
                raise SchemaError(f"function {fn} declared with arity {declared[fn]} but used with {n}")

    def relations(self):
        out = set()
        for c in self.clauses:
            out |= c.relations()
        return out

    def __str__(self):
        fns = ", ".join(f"{f}/{n}" for f, n in self.functions)
        return f"exists {fns}: " + "; ".join(map(str, self.clauses))


Constraint = Union[Tgd, Egd, SOTgd]


def constraint_atoms(c) -> list:
    if isinstance(c, SOTgd):
        out = []
        for cl in c.clauses:
            out += list(cl.body) + list(cl.head)
        return out
    if isinstance(c, Tgd):
        return list(c.body) + list(c.head)
    return list(c.body)


def constraint_body_relations(c) -> set:
    if isinstance(c, SOTgd):
        return {a.relation for cl in c.clauses for a in cl.body}
    return {a.relation for a in c.body}


def constraint_head_relations(c) -> set:
    if isinstance(c, SOTgd):
        return {a.relation for cl in c.clauses for a in cl.head}
    if isinstance(c, Tgd):
        return {a.relation for a in c.head}
    return set()


# -- schema mappings -------------------------------------------------------

@dataclass(frozen=True)
class SchemaMapping:
    source: Schema
    target: Schema
    st: tuple = ()
    t: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "source", Schema.of(self.source))
        object.__setattr__(self, "target", Schema.of(self.target))
        object.__setattr__(self, "st", tuple(self.st))
        object.__setattr__(self, "t", tuple(self.t))
        self.validate()

    def validate(self):
        clash = set(self.source) & set(self.target)
        if clash:
            raise SchemaError(f"source and target share relations {sorted(clash)}")
        for i, c in enumerate(self.st):
            if isinstance(c, Egd):
                raise SchemaError(f"st[{i}]: source-to-target egds are not supported")
            for a in (c.body if isinstance(c, Tgd) else [x for cl in c.clauses for x in cl.body]):
                self._check(self.source, a, f"st[{i}] body")
            for a in (c.head if isinstance(c, Tgd) else [x for cl in c.clauses for x in cl.head]):
                self._check(self.target, a, f"st[{i}] head")
        for i, c in enumerate(self.t):
            for a in constraint_atoms(c):
                self._check(self.target, a, f"t[{i}]")

    @staticmethod
    def _check(schema, atom, where):
        try:
            schema.check_atom(atom)
        except SchemaError as e:
            raise SchemaError(f"{where}: {e}") from None

    @property
    def egds(self) -> tuple:
        return tuple(c for c in self.t if isinstance(c, Egd))

    @property
    def target_tgds(self) -> tuple:
        return tuple(c for c in self.t if not isinstance(c, Egd))

    def with_constraints(self, st=None, t=None) -> "SchemaMapping":
        return SchemaMapping(self.source, self.target,
                             self.st if st is None else st, self.t if t is None else t)


def mapping_class(m: SchemaMapping) -> dict:
    """Describe which syntactic fragment a mapping belongs to."""
    st = m.st
    if any(isinstance(c, SOTgd) for c in st):
        st_cls = "SO"
    elif all(c.is_full for c in st):
        st_cls = "GAV"
    elif all(c.is_lav for c in st):
        st_cls = "LAV"
    else:
        st_cls = "GLAV"
    tt = m.target_tgds
    if not tt:
        t_cls = None
    elif any(isinstance(c, SOTgd) for c in tt):
        t_cls = "SO"
    elif all(c.is_full for c in tt):
        t_cls = "GAV"
    else:
        t_cls = "GLAV"
    parts = [st_cls] + ([t_cls] if t_cls else []) + (["egd"] if m.egds else [])
    return {"st": st_cls, "t": t_cls, "egds": bool(m.egds), "name": "+".join(parts)}


# -- queries ---------------------------------------------------------------

@dataclass(frozen=True)
class ConjunctiveQuery:
    head: tuple
    body: tuple

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "body", tuple(self.body))
        _check_atoms(self.body, "query body")
        bv = set(atoms_vars(self.body))
        for t in self.head:
            if isinstance(t, Var) and t not in bv:
                raise SchemaError(f"head variable {t} does not occur in the query body")
            if not isinstance(t, (Var, Const)):
                raise SchemaError(f"query head terms must be variables or constants, got {t}")

    @property
    def arity(self):
        return len(self.head)

    @property
    def existentials(self) -> list:
        hv = {t for t in self.head if isinstance(t, Var)}
        return [v for v in atoms_vars(self.body) if v not in hv]


@dataclass(frozen=True)
class UCQ:
    """Union of CQs sharing a name and arity. May be empty (no answers ever)."""

    name: str
    arity: int
    disjuncts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        for d in self.disjuncts:
            if d.arity != self.arity:
                raise SchemaError(f"disjunct of arity {d.arity} in a query of arity {self.arity}")

    @classmethod
    def single(cls, cq: ConjunctiveQuery, name="q") -> "UCQ":
        return cls(name, cq.arity, (cq,))

    def relations(self):
        return {a.relation for d in self.disjuncts for a in d.body}


# -- homomorphisms ---------------------------------------------------------

def _match(p, v, asg, trail) -> bool:
    if isinstance(p, Var):
        cur = asg.get(p)
        if cur is None:
            asg[p] = v
            trail.append(p)
            return True
        return cur == v
    if isinstance(p, Compound):
        if not isinstance(v, Compound) or v.fn != p.fn or len(v.args) != len(p.args):
            return False
        for pa, va in zip(p.args, v.args):
            if not _match(pa, va, asg, trail):
                return False
        return True
    return p == v


def _bound_value(t, asg):
    if isinstance(t, Var):
        return asg.get(t)
    if isinstance(t, Compound):
        if is_ground(t):
            return t
        return None
    return t


def _candidates(atom, target, asg):
    best = None
    for i, t in enumerate(atom.args):
        v = _bound_value(t, asg)
        if v is not None:
            c = target.lookup(atom.relation, i, v)
            if best is None or len(c) < len(best):
                best = c
                if not best:
                    return best
    if best is None:
        best = target.relation(atom.relation)
    return best


def iter_homomorphisms(pattern, target, partial=None) -> Iterator[dict]:
    """Yield every assignment mapping the pattern atoms into target.

    Constants, nulls and ground compound terms in the pattern must match
    themselves. Yields fresh dicts keyed by Var.
    """
    atoms = tuple(pattern)
    for a in atoms:
        if not target.has_relation(a.relation):
            raise SchemaError(f"unknown relation {a.relation}")
    asg = dict(partial) if partial else {}

    def rec(remaining):
        if not remaining:
            yield dict(asg)
            return
        best_i, best_c = 0, None
        for i, a in enumerate(remaining):
            c = _candidates(a, target, asg)
            if best_c is None or len(c) < len(best_c):
                best_i, best_c = i, c
                if not c:
                    return
        atom = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1:]
        n = len(atom.args)
        for f in tuple(best_c):
            if len(f.args) != n:
                continue
            trail = []
            ok = True
            for p, v in zip(atom.args, f.args):
                if not _match(p, v, asg, trail):
                    ok = False
                    break
            if ok:
                yield from rec(rest)
            for x in trail:
                del asg[x]

    return rec(atoms)


def assignment_key(asg):
    return tuple(sorted((v.name, term_key(x)) for v, x in asg.items()))


def find_homomorphisms(pattern, target, partial=None) -> list:
    """All homomorphisms, sorted by variable name then value."""
    return sorted(iter_homomorphisms(pattern, target, partial), key=assignment_key)


def exists_homomorphism(pattern, target, partial=None) -> bool:
    return next(iter_homomorphisms(pattern, target, partial), None) is not None


def eval_cq(q: ConjunctiveQuery, inst) -> set:
    out = set()
    for h in iter_homomorphisms(q.body, inst):
        out.add(tuple(substitute(t, h) for t in q.head))
    return out


def eval_ucq(q, inst) -> set:
    if isinstance(q, ConjunctiveQuery):
        return eval_cq(q, inst)
    out = set()
    for d in q.disjuncts:
        out |= eval_cq(d, inst)
    return out


def eval_ucq_nullfree(q, inst) -> set:
    """Answers consisting of constants only."""
    return {t for t in eval_ucq(q, inst) if all(isinstance(v, Const) for v in t)}


def sorted_answers(answers) -> list:
    return sorted(answers, key=lambda t: tuple(term_key(v) for v in t))


class _NoSolution:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NO_SOLUTION"

    def __bool__(self):
        return False


NO_SOLUTION = _NoSolution()
