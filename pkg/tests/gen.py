"""Seeded random fixtures for the property suites."""
from __future__ import annotations

import random

from xrepair.chase import analyze_weak_acyclicity
from xrepair.core import (
    UCQ, Atom, ConjunctiveQuery, Const, Egd, Instance, Schema, SchemaMapping, Tgd, Var,
    iter_homomorphisms, substitute,
)

DOMAIN = ("a", "b", "c")
SOURCE = (("S1", 2), ("S2", 2), ("S3", 1))
TARGET = (("T1", 2), ("T2", 2), ("T3", 2))
VARS = tuple(Var(n) for n in ("x", "y", "z", "w"))


def random_instance(rng: random.Random, schema, n_facts, domain=DOMAIN) -> Instance:
    facts = set()
    rels = list(schema)
    for _ in range(n_facts * 4):
        if len(facts) >= n_facts:
            break
        rel, n = rng.choice(rels)
        facts.add(Atom(rel, tuple(Const(rng.choice(domain)) for _ in range(n))))
    return Instance(facts, Schema.of(schema))


def _atom(rng, rels, pool):
    rel, n = rng.choice(rels)
    return Atom(rel, tuple(rng.choice(pool) for _ in range(n)))


def _body_atom(rng, rels, pool):
    rel, n = rng.choice(rels)
    if rng.random() < 0.8 and n <= len(pool):
        return Atom(rel, tuple(rng.sample(pool, n)))
    return Atom(rel, tuple(rng.choice(pool) for _ in range(n)))


def _body(rng, rels, max_atoms=2):
    return tuple(_body_atom(rng, rels, VARS[:3]) for _ in range(rng.randint(1, max_atoms)))


def _gav(rng, body_rels, head_rels, max_atoms=2):
    body = _body(rng, body_rels, max_atoms)
    vs = sorted({v for a in body for v in a.args}, key=lambda v: v.name)
    return Tgd(body, (_atom(rng, head_rels, vs),))


def _glav(rng, body_rels, head_rels, max_atoms=2):
    body = _body(rng, body_rels, max_atoms)
    vs = sorted({v for a in body for v in a.args}, key=lambda v: v.name)
    pool = vs + [Var("u")]
    head = tuple(_atom(rng, head_rels, pool) for _ in range(rng.randint(1, 2)))
    return Tgd(body, head)


def key_egd(rel, arity=2):
    x, y, y2 = Var("x"), Var("y"), Var("y'")
    return Egd((Atom(rel, (x, y)), Atom(rel, (x, y2))), y, y2)


def _egds(rng, constraints):
    """Keys on one or two relations that the tgds actually populate."""
    heads = sorted({a.relation for c in constraints for a in c.head})
    picked = rng.sample(heads, min(len(heads), rng.randint(1, 2)))
    return tuple(key_egd(r) for r in sorted(picked))


def random_gav_egd(rng: random.Random) -> SchemaMapping:
    st = tuple(_gav(rng, SOURCE, TARGET) for _ in range(rng.randint(1, 3)))
    return SchemaMapping(Schema.of(SOURCE), Schema.of(TARGET), st, _egds(rng, st))


def random_gav_gav_egd(rng: random.Random) -> SchemaMapping:
    st = tuple(_gav(rng, SOURCE, TARGET) for _ in range(rng.randint(1, 3)))
    t = tuple(_gav(rng, TARGET, TARGET) for _ in range(rng.randint(1, 2)))
    return SchemaMapping(Schema.of(SOURCE), Schema.of(TARGET), st, t + _egds(rng, st + t))


def random_glav_gav_egd(rng: random.Random) -> SchemaMapping:
    st = tuple(_glav(rng, SOURCE, TARGET) for _ in range(rng.randint(1, 2)))
    t = tuple(_gav(rng, TARGET, TARGET) for _ in range(rng.randint(0, 1)))
    return SchemaMapping(Schema.of(SOURCE), Schema.of(TARGET), st, t + _egds(rng, st + t))


def random_glav_wa_egd(rng: random.Random, max_rank=2) -> SchemaMapping:
    """GLAV s-t tgds and weakly acyclic target tgds whose positions have rank at most ``max_rank``."""
    while True:
        # one copying tgd so that keys can clash on constants
        copy = _gav(rng, SOURCE[:2], TARGET, max_atoms=1)
        st = (copy,) + tuple(_glav(rng, SOURCE[:2], TARGET, max_atoms=1)
                             for _ in range(rng.randint(0, 1)))
        t = tuple(_glav(rng, TARGET, TARGET, max_atoms=1) if rng.random() < 0.7
                  else _gav(rng, TARGET, TARGET) for _ in range(rng.randint(0, 2)))
        g = analyze_weak_acyclicity(st + t)
        if g.weakly_acyclic and g.max_rank <= max_rank:
            egds = _egds(rng, st + t)
            keyed = copy.head[0].relation
            if keyed not in {e.body[0].relation for e in egds}:
                egds = (key_egd(keyed),) + egds
            return SchemaMapping(Schema.of(SOURCE[:2]), Schema.of(TARGET), st, t + egds)


def random_query(rng: random.Random, rels=TARGET, arity=None) -> UCQ:
    disjuncts = []
    for _ in range(rng.randint(1, 2)):
        body = _body(rng, rels)
        vs = sorted({v for a in body for v in a.args}, key=lambda v: v.name)
        if arity is None:
            arity = 0 if rng.random() < 0.15 else rng.randint(1, 2)
        k = arity
        head = tuple(rng.choice(vs) for _ in range(k))
        disjuncts.append(ConjunctiveQuery(head, body))
    return UCQ("q", arity, tuple(disjuncts))


def random_graph(rng: random.Random, max_nodes=8):
    n = rng.randint(1, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    edges = {(rng.choice(nodes), rng.choice(nodes)) for _ in range(rng.randint(0, n + 2))}
    return sorted(edges)


KB_SCHEMA = (("P", 2), ("Q", 2), ("U", 1))


def random_kb(rng: random.Random, max_facts=6):
    """Facts plus key egds and weakly acyclic tgds over one schema."""
    while True:
        tgds = tuple(_glav(rng, KB_SCHEMA, KB_SCHEMA, max_atoms=1) for _ in range(rng.randint(1, 2)))
        if analyze_weak_acyclicity(tgds).weakly_acyclic:
            break
    egds = tuple(key_egd(r) for r in sorted(rng.sample(["P", "Q"], rng.randint(1, 2))))
    data = random_instance(rng, KB_SCHEMA, rng.randint(1, max_facts))
    return data, tgds + egds


def satisfies(inst, constraints):
    """Independent model check by brute-force homomorphisms."""
    for c in constraints:
        for h in iter_homomorphisms(c.body, inst):
            if isinstance(c, Egd):
                if substitute(c.lhs, h) != substitute(c.rhs, h):
                    return False
            elif next(iter_homomorphisms(c.head, inst, h), None) is None:
                return False
    return True


def pair_satisfies(source, target, m):
    both = source.union(target)
    return satisfies(both, m.st) and satisfies(target, m.t)


# criterion number -> (passed, description); filled by test_acceptance
ACCEPTANCE = {}
