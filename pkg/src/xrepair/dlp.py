"""Disjunctive logic program whose minimal models are the source repairs.

For every source relation S the program guesses whether each fact is kept
(``S_k``) or deleted (``S_d``); the mapping's GAV rules then run over the
kept facts and every egd becomes a constraint. Deleted facts are minimized,
source facts stay fixed.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field

from .chase import _Store
from .core import (
    UCQ, Atom, Const, Egd, Instance, SchemaMapping, Tgd, Var,
    atoms_vars, eval_ucq, iter_homomorphisms, substitute, term_key,
)
from .errors import ParseError, PreconditionError, ResourceError
from .repair import max_facts_cap


@dataclass(frozen=True)
class DlpRule:
    head: tuple
    body: tuple
    neq: tuple = ()
    kind: str = field(default="", compare=False)

    @property
    def is_constraint(self):
        return not self.head

    @property
    def is_disjunctive(self):
        return len(self.head) > 1


@dataclass(frozen=True)
class DlpArtifact:
    rules: tuple
    minimize: tuple
    fixed: tuple
    kept: dict = field(default_factory=dict, compare=False)
    deleted: dict = field(default_factory=dict, compare=False)
    target: tuple = ()
    query_rules: tuple = ()

    @property
    def relations(self):
        out = set()
        for r in self.rules + self.query_rules:
            out |= {a.relation for a in r.head + r.body}
        return out


def _fresh(name, taken):
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def _check_class(m: SchemaMapping):
    for i, c in enumerate(m.st):
        if not isinstance(c, Tgd) or not c.is_full:
            raise PreconditionError(f"st[{i}] ({c}) is not GAV; compile the mapping first")
    for i, c in enumerate(m.t):
        if isinstance(c, Egd):
            continue
        if not isinstance(c, Tgd) or not c.is_full:
            raise PreconditionError(f"t[{i}] ({c}) is not a GAV tgd or egd; compile the mapping first")


def build_dlp(m: SchemaMapping, q: UCQ | None = None) -> DlpArtifact:
    _check_class(m)
    taken = set(m.source) | set(m.target)
    kept, deleted = {}, {}
    rules = []
    for rel, n in m.source.arities:
        k = _fresh(rel + "_k", taken)
        d = _fresh(rel + "_d", taken)
        kept[rel], deleted[rel] = k, d
        xs = tuple(Var(f"x{i}") for i in range(1, n + 1))
        rules.append(DlpRule((Atom(k, xs), Atom(d, xs)), (Atom(rel, xs),), kind="guess"))
        rules.append(DlpRule((), (Atom(k, xs), Atom(d, xs)), kind="exclusive"))
        rules.append(DlpRule((Atom(rel, xs),), (Atom(k, xs),), kind="support"))
    for c in m.st:
        for g in c.split():
            body = tuple(Atom(kept[a.relation], a.args) for a in g.body)
            rules.append(DlpRule(g.head, body, kind="st"))
    for c in m.t:
        if isinstance(c, Egd):
            rules.append(DlpRule((), c.body, ((c.lhs, c.rhs),), kind="egd"))
        else:
            for g in c.split():
                rules.append(DlpRule(g.head, g.body, kind="t"))
    qrules = ()
    if q is not None:
        qname = _fresh(q.name, taken)
        qrules = tuple(DlpRule((Atom(qname, d.head),), d.body, kind="query") for d in q.disjuncts)
    return DlpArtifact(tuple(rules), tuple(deleted[r] for r in m.source),
                       tuple(m.source), kept, deleted, tuple(m.target), qrules)


# -- grounding -------------------------------------------------------------

@dataclass(frozen=True)
class GroundProgram:
    facts: frozenset
    rules: tuple


def _neq_holds(neq, h):
    return all(substitute(a, h) != substitute(b, h) for a, b in neq)


def _ground_rule(r, h):
    return DlpRule(tuple(a.substitute(h) for a in r.head), tuple(a.substitute(h) for a in r.body),
                   kind=r.kind)


def ground(art: DlpArtifact, data: Instance, naive=False) -> GroundProgram:
    """Instantiate the rules over the active domain of ``data``.

    The default keeps only instantiations whose body atoms can all become
    true, which leaves the minimal models unchanged. ``naive`` enumerates
    every assignment over the active domain.
    """
    rules = list(art.rules) + list(art.query_rules)
    facts = frozenset(data.facts)
    out = []
    if naive:
        dom = sorted(data.active_domain() | {t for r in rules for a in r.body for t in a.args
                                             if isinstance(t, Const)}, key=term_key)
        for r in rules:
            vs = atoms_vars(r.body)
            for vals in itertools.product(dom, repeat=len(vs)):
                h = dict(zip(vs, vals))
                if _neq_holds(r.neq, h):
                    out.append(_ground_rule(r, h))
        return GroundProgram(facts, tuple(dict.fromkeys(out)))
    store = _Store(facts)
    changed = True
    while changed:
        changed = False
        for r in rules:
            if not r.head:
                continue
            for h in list(iter_homomorphisms(r.body, store)):
                if _neq_holds(r.neq, h):
                    for a in r.head:
                        if store.add(a.substitute(h)):
                            changed = True
    for r in rules:
        for h in iter_homomorphisms(r.body, store):
            if _neq_holds(r.neq, h):
                out.append(_ground_rule(r, h))
    return GroundProgram(facts, tuple(dict.fromkeys(out)))


# -- minimal models --------------------------------------------------------

class _Propagator:
    """Least fixpoint of ground definite rules by body counting."""

    def __init__(self, rules):
        self.rules = [r for r in rules if len(r.head) == 1]
        self.constraints = [r for r in rules if not r.head]
        self.watch = {}
        for i, r in enumerate(self.rules):
            for a in set(r.body):
                self.watch.setdefault(a, []).append(i)

    def lfp(self, seed):
        model = set()
        need = [len(set(r.body)) for r in self.rules]
        todo = list(seed)
        for i, n in enumerate(need):
            if n == 0:
                todo.append(self.rules[i].head[0])
        while todo:
            a = todo.pop()
            if a in model:
                continue
            model.add(a)
            for i in self.watch.get(a, ()):
                need[i] -= 1
                if need[i] == 0:
                    todo.append(self.rules[i].head[0])
        return model

    def violated(self, model):
        return any(all(a in model for a in r.body) for r in self.constraints)


def minimal_models(gp: GroundProgram, minimize, fixed, max_choices=None) -> list:
    """Models minimal on the ``minimize`` relations with ``fixed`` relations held
    to the input facts, each with a least non-guessed part.

    Disjunctive rules must have two head atoms, exactly one of them in a
    minimized relation, and a body over fixed relations only.
    """
    minimize, fixed = set(minimize), set(fixed)
    guesses = []
    for r in gp.rules:
        if not r.is_disjunctive:
            continue
        mins = [a for a in r.head if a.relation in minimize]
        others = [a for a in r.head if a.relation not in minimize]
        if len(r.head) != 2 or len(mins) != 1:
            raise PreconditionError(f"unsupported disjunctive rule {r}")
        if any(a.relation not in fixed for a in r.body):
            raise PreconditionError(f"disjunctive rule body must use fixed relations only: {r}")
        if all(a in gp.facts for a in r.body):
            guesses.append((mins[0], others[0]))
    guesses = sorted(set(guesses), key=lambda g: g[0].sort_key())
    cap = max_facts_cap(max_choices)
    if len(guesses) > cap:
        raise ResourceError(f"{len(guesses)} guessed facts, above the cap of {cap}")
    prop = _Propagator([r for r in gp.rules if not r.is_disjunctive])
    fixed_facts = {a for a in gp.facts if a.relation in fixed}
    found = []
    models = []
    n = len(guesses)
    for size in range(n + 1):
        for pick in itertools.combinations(range(n), size):
            chosen = frozenset(pick)
            if any(f <= chosen for f in found):
                continue
            seed = set(gp.facts)
            for i, (mn, other) in enumerate(guesses):
                seed.add(mn if i in chosen else other)
            model = prop.lfp(seed)
            if prop.violated(model):
                continue
            if {a for a in model if a.relation in fixed} != fixed_facts:
                continue
            found.append(chosen)
            models.append(Instance(model))
    return models


def xr_certain_via_dlp(q: UCQ, data: Instance, m: SchemaMapping, max_facts=None) -> set:
    art = build_dlp(m)
    gp = ground(art, data)
    out = None
    for model in minimal_models(gp, art.minimize, art.fixed, max_facts):
        ans = eval_ucq(q, model.restrict(m.target.names))
        out = ans if out is None else out & ans
    return out or set()


def source_repairs_via_dlp(data: Instance, m: SchemaMapping) -> list:
    """The kept source facts of each minimal model."""
    art = build_dlp(m)
    gp = ground(art, data)
    back = {v: k for k, v in art.kept.items()}
    out = []
    for model in minimal_models(gp, art.minimize, art.fixed):
        out.append(Instance(Atom(back[f.relation], f.args) for f in model if f.relation in back))
    return out


# -- text export -----------------------------------------------------------

def mangle_relation(name):
    s = name
    for a, b in (("{", "__"), ("}", ""), ("*", "o"), ("(", "_"), (")", "_"), (",", "_"), ("'", "p")):
        s = s.replace(a, b)
    s = s.lower()
    if not s[:1].isalpha():
        s = "r" + s
    return s


def _mangle_var(name):
    s = name.replace("'", "p")
    return s[:1].upper() + s[1:]


class _Namer:
    def __init__(self):
        self.to = {}
        self.used = {}

    def rel(self, name):
        if name in self.to:
            return self.to[name]
        base = mangle_relation(name)
        s = base
        k = 1
        while s in self.used:
            s = f"{base}_r{k}"
            k += 1
        self.to[name] = s
        self.used[s] = name
        return s


def _fmt_term(t, vnames):
    if isinstance(t, Var):
        return vnames[t]
    if isinstance(t, Const):
        return json.dumps(t.value) if isinstance(t.value, str) else str(t.value)
    raise PreconditionError(f"cannot export term {t}")


def _fmt_atom(a, namer, vnames):
    return f"{namer.rel(a.relation)}(" + ", ".join(_fmt_term(t, vnames) for t in a.args) + ")"


def _var_names(rule):
    out = {}
    used = set()
    for v in atoms_vars(rule.body + rule.head):
        s = _mangle_var(v.name)
        base, k = s, 1
        while s in used:
            s = f"{base}_{k}"
            k += 1
        used.add(s)
        out[v] = s
    return out


def format_rule(r, namer) -> str:
    vn = _var_names(r)
    head = " v ".join(_fmt_atom(a, namer, vn) for a in r.head)
    body = [_fmt_atom(a, namer, vn) for a in r.body]
    body += [f"{_fmt_term(a, vn)} != {_fmt_term(b, vn)}" for a, b in r.neq]
    if not body:
        return head + "."
    return (head + " " if head else "") + ":- " + ", ".join(body) + "."


def export_dlp_text(art: DlpArtifact, facts: Instance | None = None, with_query=True) -> str:
    namer = _Namer()
    for r in art.rules + art.query_rules:
        for a in r.head + r.body:
            namer.rel(a.relation)
    lines = ["% xr-dlp program",
             "% minimize: " + ", ".join(namer.rel(r) for r in art.minimize),
             "% fixed: " + ", ".join(namer.rel(r) for r in art.fixed)]
    for orig, mangled in sorted(namer.to.items(), key=lambda p: p[1]):
        lines.append(f"% relation {mangled} = {orig}")
    lines += [format_rule(r, namer) for r in art.rules]
    if with_query:
        lines += [format_rule(r, namer) for r in art.query_rules]
    if facts is not None:
        empty = {}
        lines += [_fmt_atom(f, namer, empty) + "." for f in facts]
    return "\n".join(lines) + "\n"


_HDR = re.compile(r"%\s*(minimize|fixed):\s*(.*)$")
_REL = re.compile(r"%\s*relation\s+(\S+)\s*=\s*(\S+)\s*$")


def _split_top(s, sep):
    parts, depth, cur, i = [], 0, [], 0
    in_str = False
    while i < len(s):
        ch = s[i]
        if in_str:
            cur.append(ch)
            if ch == "\\":
                cur.append(s[i + 1])
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
            cur.append(ch)
        elif ch == "(":
            depth += 1
            cur.append(ch)
        elif ch == ")":
            depth -= 1
            cur.append(ch)
        elif depth == 0 and s.startswith(sep, i):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        else:
            cur.append(ch)
        i += 1
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


_ATOM = re.compile(r"^([a-z][A-Za-z0-9_]*)\((.*)\)$")


def _parse_term(s, n):
    s = s.strip()
    if s.startswith('"'):
        return Const(json.loads(s))
    if re.fullmatch(r"-?\d+", s):
        return Const(int(s))
    if re.fullmatch(r"[A-Z_][A-Za-z0-9_]*", s):
        return Var(s)
    raise ParseError(f"bad term {s!r}", n)


def _parse_atom(s, rels, n):
    m = _ATOM.match(s.strip())
    if not m:
        raise ParseError(f"bad atom {s!r}", n)
    args = tuple(_parse_term(a, n) for a in _split_top(m.group(2), ",")) if m.group(2).strip() else ()
    return Atom(rels.get(m.group(1), m.group(1)), args)


def parse_dlp_text(text) -> DlpArtifact:
    """Read back the ASP-style text written by ``export_dlp_text``.

    Ground facts are skipped. Relation names are restored from the header
    when it lists them.
    """
    rels, minimize, fixed = {}, [], []
    rules = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            m = _REL.match(line)
            if m:
                rels[m.group(1)] = m.group(2)
                continue
            m = _HDR.match(line)
            if m:
                names = [x.strip() for x in m.group(2).split(",") if x.strip()]
                (minimize if m.group(1) == "minimize" else fixed).extend(names)
            continue
        if not line.endswith("."):
            raise ParseError("rule must end with '.'", n)
        line = line[:-1]
        if ":-" in line:
            head_s, body_s = line.split(":-", 1)
        else:
            head_s, body_s = line, ""
        head = tuple(_parse_atom(h, rels, n) for h in _split_top(head_s, " v "))
        body, neq = [], []
        for b in _split_top(body_s, ","):
            if "!=" in b and not b.startswith(tuple("abcdefghijklmnopqrstuvwxyz")):
                x, y = b.split("!=", 1)
                neq.append((_parse_term(x, n), _parse_term(y, n)))
            else:
                body.append(_parse_atom(b, rels, n))
        if not body and not neq and all(a.is_ground() for a in head):
            continue
        rules.append(DlpRule(head, tuple(body), tuple(neq)))
    return DlpArtifact(tuple(rules), tuple(rels.get(r, r) for r in minimize),
                       tuple(rels.get(r, r) for r in fixed))
