"""Plain-text formats for mappings (.xmap), instances (.xinst) and queries (.xq).

Grammar, one item per line, ``#`` starts a comment::

    source: R/2; S/1
    target: T/2
    st-tgd: R(x, y) & S(y) -> T(x, z)
    t-tgd:  T(x, y) -> U(y)
    t-egd:  T(x, y) & T(x, y') -> y = y'
    st-so:  exists f/2: R(x, y) -> T(x, f(x, y)); R(x, y) -> T(y, f(x, y))
    query q(x) :- T(x, y) & U(y)
    T("a", _N1).

Variables are bare identifiers (primes allowed), constants are double-quoted
strings or integers, labelled nulls are ``_N<k>``. Existential variables of
a tgd are the head variables missing from its body. Relation names may carry
a skeleton subscript such as ``T{*,f(*,*)}``.
"""
from __future__ import annotations

import json
import re

from .core import (
    UCQ, Atom, Compound, ConjunctiveQuery, Const, Egd, Instance, Null,
    Schema, SchemaMapping, SOClause, SOTgd, Tgd, Var, constraint_body_relations,
    constraint_head_relations, constraint_atoms, sorted_answers,
)
from .errors import ParseError, SchemaError

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<null>_N\d+(?![A-Za-z0-9_']))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<int>-?\d+)
  | (?P<op>:-|->|!=|[&,()=;:./])
""", re.VERBOSE)


class _Tok:
    __slots__ = ("kind", "text", "col")

    def __init__(self, kind, text, col):
        self.kind, self.text, self.col = kind, text, col

    def __repr__(self):
        return f"{self.kind}:{self.text}"


def _strip_comment(line):
    out = []
    in_str = False
    esc = False
    for ch in line:
        if in_str:
            out.append(ch)
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
            continue
        if ch == "#":
            break
        if ch == '"':
            in_str = True
        out.append(ch)
    return "".join(out)


def _tokenize(text, lineno, offset=0):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", lineno, offset + i + 1)
        kind = m.lastgroup
        val = m.group()
        if kind == "ident" and m.end() < n and text[m.end()] == "{":
            depth = 0
            j = m.end()
            while j < n:
                if text[j] == "{":
                    depth += 1
                elif text[j] == "}":
                    depth -= 1
                    if depth == 0:
                        break
                elif text[j].isspace():
                    raise ParseError("whitespace inside a relation subscript", lineno, offset + j + 1)
                j += 1
            if depth != 0:
                raise ParseError("unterminated relation subscript", lineno, offset + m.end() + 1)
            val = text[m.start():j + 1]
            i = j + 1
            toks.append(_Tok("relname", val, offset + m.start() + 1))
            continue
        if kind != "ws":
            toks.append(_Tok(kind, val, offset + m.start() + 1))
        i = m.end()
    return toks


class _Parser:
    def __init__(self, toks, lineno, ground=False):
        self.toks = toks
        self.i = 0
        self.line = lineno
        self.ground = ground

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        col = tok.col if tok else None
        raise ParseError(msg, self.line, col)

    def at(self, text):
        t = self.peek()
        return t is not None and t.kind == "op" and t.text == text

    def expect(self, text):
        t = self.peek()
        if t is None or t.text != text:
            self.error(f"expected {text!r}" + (f", found {t.text!r}" if t else " at end of line"))
        self.i += 1
        return t

    def done(self):
        return self.i >= len(self.toks)

    def expect_end(self):
        if not self.done():
            self.error(f"unexpected {self.peek().text!r}")

    def ident(self, what="identifier"):
        t = self.peek()
        if t is None or t.kind != "ident":
            self.error(f"expected {what}")
        self.i += 1
        return t.text

    def term(self):
        t = self.peek()
        if t is None:
            self.error("expected a term")
        if t.kind == "null":
            self.i += 1
            return Null(int(t.text[2:]))
        if t.kind == "string":
            self.i += 1
            return Const(json.loads(t.text))
        if t.kind == "int":
            self.i += 1
            return Const(int(t.text))
        if t.kind in ("ident", "relname"):
            self.i += 1
            if self.at("("):
                args = self.args()
                return Compound(t.text, args)
            if t.kind == "relname":
                self.error("relation name used as a term", t)
            if self.ground:
                self.error(f"variable {t.text} not allowed here", t)
            return Var(t.text)
        self.error(f"expected a term, found {t.text!r}")

    def args(self):
        self.expect("(")
        out = []
        if self.at(")"):
            self.i += 1
            return tuple(out)
        while True:
            out.append(self.term())
            if self.at(","):
                self.i += 1
                continue
            self.expect(")")
            return tuple(out)

    def atom(self):
        t = self.peek()
        if t is None or t.kind not in ("ident", "relname"):
            self.error("expected an atom")
        self.i += 1
        if not self.at("("):
            self.error(f"expected '(' after relation {t.text}")
        return Atom(t.text, self.args())

    def conj(self, allow_eq=False):
        atoms, eqs = [], []
        while True:
            start = self.peek()
            left = self.term()
            if self.at("="):
                if not allow_eq:
                    self.error("equality not allowed in this body", start)
                self.i += 1
                eqs.append((left, self.term()))
            else:
                if not isinstance(left, Compound):
                    self.error("expected an atom", start)
                atoms.append(Atom(left.fn, left.args))
            if self.at("&"):
                self.i += 1
                continue
            return atoms, eqs


_KIND = re.compile(r"\s*([A-Za-z][A-Za-z-]*)\s*:(?!-)")


def _lines(text):
    for n, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if line.strip():
            yield n, line


def _split_kind(line, n):
    m = _KIND.match(line)
    if not m:
        raise ParseError("expected '<kind>:' at start of line", n, 1)
    return m.group(1), line[m.end():], m.end()


def _parse_schema_decl(rest, n, off):
    p = _Parser(_tokenize(rest, n, off), n)
    rels = []
    while not p.done():
        t = p.peek()
        if t.kind not in ("ident", "relname"):
            p.error("expected a relation name")
        p.i += 1
        p.expect("/")
        a = p.peek()
        if a is None or a.kind != "int":
            p.error("expected an arity")
        p.i += 1
        rels.append((t.text, int(a.text)))
        if not p.done():
            p.expect(";")
    return rels


def _parse_tgd_or_egd(rest, n, off, egd_ok, tgd_ok=True):
    p = _Parser(_tokenize(rest, n, off), n)
    body, _ = p.conj()
    p.expect("->")
    save = p.i
    first = p.term()
    if p.at("="):
        if not egd_ok:
            p.error("egd not allowed here")
        p.i += 1
        second = p.term()
        p.expect_end()
        try:
            return Egd(tuple(body), first, second)
        except SchemaError as e:
            raise ParseError(str(e), n) from None
    if not tgd_ok:
        p.error("expected an equality")
    p.i = save
    head, _ = p.conj()
    p.expect_end()
    try:
        return Tgd(tuple(body), tuple(head))
    except SchemaError as e:
        raise ParseError(str(e), n) from None


def _parse_so(rest, n, off):
    p = _Parser(_tokenize(rest, n, off), n)
    fns = []
    t = p.peek()
    if t is not None and t.kind == "ident" and t.text == "exists" and p.peek(1) is not None \
            and p.peek(1).kind == "ident" and p.peek(2) is not None and p.peek(2).text == "/":
        p.i += 1
        while True:
            name = p.ident("function name")
            p.expect("/")
            a = p.peek()
            if a is None or a.kind != "int":
                p.error("expected an arity")
            p.i += 1
            fns.append((name, int(a.text)))
            if p.at(","):
                p.i += 1
                continue
            p.expect(":")
            break
    clauses = []
    while True:
        body, eqs = p.conj(allow_eq=True)
        p.expect("->")
        head, _ = p.conj()
        try:
            clauses.append(SOClause(tuple(body), tuple(eqs), tuple(head)))
        except SchemaError as e:
            raise ParseError(str(e), n) from None
        if p.at(";"):
            p.i += 1
            continue
        p.expect_end()
        break
    try:
        return SOTgd(tuple(fns), tuple(clauses))
    except SchemaError as e:
        raise ParseError(str(e), n) from None


def parse_mapping(text) -> SchemaMapping:
    src, tgt = [], []
    src_declared = tgt_declared = False
    st, t = [], []
    for n, line in _lines(text):
        kind, rest, off = _split_kind(line, n)
        if kind == "source":
            src += _parse_schema_decl(rest, n, off)
            src_declared = True
        elif kind == "target":
            tgt += _parse_schema_decl(rest, n, off)
            tgt_declared = True
        elif kind == "st-tgd":
            st.append((n, _parse_tgd_or_egd(rest, n, off, egd_ok=False)))
        elif kind == "st-so":
            st.append((n, _parse_so(rest, n, off)))
        elif kind == "t-tgd":
            t.append((n, _parse_tgd_or_egd(rest, n, off, egd_ok=False)))
        elif kind == "t-egd":
            t.append((n, _parse_tgd_or_egd(rest, n, off, egd_ok=True, tgd_ok=False)))
        elif kind == "t-so":
            t.append((n, _parse_so(rest, n, off)))
        else:
            raise ParseError(f"unknown line kind {kind!r}", n, 1)
    if not src_declared:
        src = [(a.relation, a.arity) for _, c in st for a in constraint_atoms(c)
               if a.relation in constraint_body_relations(c)]
    if not tgt_declared:
        names = {r for r, _ in src}
        tgt = [(a.relation, a.arity) for _, c in st + t for a in constraint_atoms(c)
               if a.relation not in names]
    try:
        source = Schema.of(src)
        target = Schema.of(tgt)
    except SchemaError as e:
        raise ParseError(str(e)) from None
    for where, items in (("st", st), ("t", t)):
        for n, c in items:
            try:
                SchemaMapping(source, target, (c,) if where == "st" else (),
                              (c,) if where == "t" else ())
            except SchemaError as e:
                raise ParseError(str(e), n) from None
    return SchemaMapping(source, target, tuple(c for _, c in st), tuple(c for _, c in t))


def parse_constraints(text):
    """Parse a single-schema constraint set: ``schema:``, ``tgd:``, ``egd:``, ``so:`` lines.

    Returns ``(schema, constraints)``.
    """
    rels, declared, cs = [], False, []
    for n, line in _lines(text):
        kind, rest, off = _split_kind(line, n)
        if kind == "schema":
            rels += _parse_schema_decl(rest, n, off)
            declared = True
        elif kind == "tgd":
            cs.append((n, _parse_tgd_or_egd(rest, n, off, egd_ok=False)))
        elif kind == "egd":
            cs.append((n, _parse_tgd_or_egd(rest, n, off, egd_ok=True, tgd_ok=False)))
        elif kind == "so":
            cs.append((n, _parse_so(rest, n, off)))
        else:
            raise ParseError(f"unknown line kind {kind!r}", n, 1)
    if not declared:
        rels = [(a.relation, a.arity) for _, c in cs for a in constraint_atoms(c)]
    try:
        schema = Schema.of(rels)
        for n, c in cs:
            for a in constraint_atoms(c):
                try:
                    schema.check_atom(a)
                except SchemaError as e:
                    raise ParseError(str(e), n) from None
    except SchemaError as e:
        raise ParseError(str(e)) from None
    return schema, tuple(c for _, c in cs)


def parse_instance(text, schema=None, source=False) -> Instance:
    """One fact per statement. With ``source`` set, nulls are rejected."""
    facts = []
    for n, line in _lines(text):
        p = _Parser(_tokenize(line, n), n, ground=True)
        while not p.done():
            a = p.atom()
            if source and any(isinstance(v, Null) for v in a.args):
                raise ParseError(f"source instances cannot hold nulls: {a}", n)
            if schema is not None:
                try:
                    Schema.of(schema).check_atom(a)
                except SchemaError as e:
                    raise ParseError(str(e), n) from None
            facts.append(a)
            p.expect(".")
    return Instance(facts, schema)


def parse_queries(text) -> dict:
    """Parse query lines; lines sharing a name form one UCQ."""
    found = {}
    for n, line in _lines(text):
        m = re.match(r"\s*query\b", line)
        if not m:
            raise ParseError("expected a line starting with 'query'", n, 1)
        p = _Parser(_tokenize(line[m.end():], n, m.end()), n)
        name = p.ident("query name")
        head = p.args()
        for h in head:
            if not isinstance(h, (Var, Const)):
                raise ParseError("query head terms must be variables or constants", n)
        p.expect(":-")
        t = p.peek()
        if t is not None and t.kind == "ident" and t.text == "false" and p.peek(1) is None:
            body = None
            p.i += 1
        else:
            body, _ = p.conj()
        p.expect_end()
        if name in found and found[name][0] != len(head):
            raise ParseError(f"query {name} used with two arities", n)
        entry = found.setdefault(name, [len(head), []])
        if body is not None:
            try:
                entry[1].append(ConjunctiveQuery(head, tuple(body)))
            except SchemaError as e:
                raise ParseError(str(e), n) from None
    return {k: UCQ(k, a, tuple(ds)) for k, (a, ds) in found.items()}


def parse_query(text) -> UCQ:
    qs = parse_queries(text)
    if len(qs) != 1:
        raise ParseError(f"expected exactly one query, found {len(qs)}")
    return next(iter(qs.values()))


# -- serialization ---------------------------------------------------------

def _schema_line(kind, schema):
    return f"{kind}: " + "; ".join(f"{r}/{a}" for r, a in Schema.of(schema).arities)


def format_constraint(c) -> str:
    if isinstance(c, SOTgd):
        clauses = "; ".join(str(cl) for cl in c.clauses)
        if c.functions:
            return "exists " + ", ".join(f"{f}/{n}" for f, n in c.functions) + ": " + clauses
        return clauses
    return str(c)


def _kind(c, prefix):
    if isinstance(c, SOTgd):
        return f"{prefix}so"
    if isinstance(c, Egd):
        return f"{prefix}egd"
    return f"{prefix}tgd"


def serialize_mapping(m: SchemaMapping) -> str:
    lines = [_schema_line("source", m.source), _schema_line("target", m.target)]
    lines += [f"{_kind(c, 'st-')}: {format_constraint(c)}" for c in m.st]
    lines += [f"{_kind(c, 't-')}: {format_constraint(c)}" for c in m.t]
    return "\n".join(lines) + "\n"


def serialize_constraints(schema, constraints) -> str:
    lines = [_schema_line("schema", schema)]
    lines += [f"{_kind(c, '')}: {format_constraint(c)}" for c in constraints]
    return "\n".join(lines) + "\n"


def serialize_instance(inst: Instance) -> str:
    return "".join(f"{f}.\n" for f in inst)


def format_cq(name, cq: ConjunctiveQuery) -> str:
    head = ", ".join(str(t) for t in cq.head)
    return f"query {name}({head}) :- " + " & ".join(str(a) for a in cq.body)


def serialize_query(q: UCQ) -> str:
    if not q.disjuncts:
        head = ", ".join(f"x{i}" for i in range(1, q.arity + 1))
        return f"query {q.name}({head}) :- false\n"
    return "".join(format_cq(q.name, d) + "\n" for d in q.disjuncts)


def value_to_json(v):
    if isinstance(v, Const):
        return v.value
    return str(v)


def answers_to_json(answers) -> list:
    return [[value_to_json(v) for v in t] for t in sorted_answers(answers)]


def answers_json(answers) -> str:
    """Canonical JSON text: a sorted array of answer tuples."""
    return json.dumps(answers_to_json(answers))


def constraint_relations(c):
    return constraint_body_relations(c) | constraint_head_relations(c)
