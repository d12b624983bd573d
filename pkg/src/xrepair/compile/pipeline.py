from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..chase import _format_cycle, analyze_weak_acyclicity, term_depth_bound
from ..core import UCQ, Atom, Egd, Instance, SchemaMapping, Var
from ..errors import PreconditionError
from .rewrite import SkeletonSetting, skeleton_rewrite, skeleton_rewrite_query
from .singularize import equality_singularize, singularize_query, term_positions
from .skeleton import BULLET, skel_relation
from .skolem import copy_extend, has_equalities, skolemize


@dataclass(frozen=True)
class CompiledMapping:
    mapping: SchemaMapping
    setting: SkeletonSetting
    eq: str
    term_positions: frozenset
    provenance: tuple
    stages: dict = field(compare=False, default_factory=dict)
    pruned: bool = True

    def transform(self, q: UCQ) -> UCQ:
        """Rewrite a query over the original target into one over the compiled target."""
        qe = singularize_query(q, self.eq, self.term_positions)
        derivable = set(self.mapping.target) if self.pruned else None
        return skeleton_rewrite_query(qe, self.setting, derivable)

    def provenance_json(self) -> str:
        return json.dumps({"eq": self.eq, "bound": self.setting.bound,
                           "functions": self.setting.functions,
                           "constraints": list(self.provenance)}, indent=2, sort_keys=True)


def compile_to_gav(m: SchemaMapping, prune=True, bound=None) -> CompiledMapping:
    """Chain skolemization, equality singularization and skeleton rewriting.

    The result is a GAV mapping with one egd that reports failure exactly
    when the input mapping has no solution, and on which transformed
    queries have the same certain answers.
    """
    g = analyze_weak_acyclicity([c for c in list(m.st) + list(m.t) if not isinstance(c, Egd)])
    if not g.weakly_acyclic:
        raise PreconditionError("mapping is not weakly acyclic: " + _format_cycle(g.cycle_witness()))
    sk = skolemize(m)
    stages = {"skolemized": sk}
    if has_equalities(sk.st):
        sk, _ = copy_extend(sk)
        stages["copy_extended"] = sk
    if bound is None:
        # the singularized mapping may look cyclic through Eq; its terms
        # are still bounded by the rank of the mapping before it
        bound = term_depth_bound(list(sk.st) + list(sk.t))
    eqm, eq, eq_origins = equality_singularize(sk)
    stages["singularized"] = eqm
    skel, setting, origins = skeleton_rewrite(eqm, bound=bound, reachable_only=prune)
    stages["skeleton"] = skel
    eq_rel = skel_relation(eq, [BULLET, BULLET])
    t = list(skel.t)
    target = skel.target
    prov = []
    n_st = len(skel.st)
    for k, o in enumerate(origins):
        entry = dict(o)
        if k >= n_st:
            src = int(o["from"][2:-1])
            entry["stage"] = eq_origins[src]
            entry["part"] = "t"
        else:
            entry["part"] = "st"
        prov.append(entry)
    if not prune or eq_rel in target:
        x, y = Var("x"), Var("y")
        t.append(Egd((Atom(eq_rel, (x, y)),), x, y))
        target = target.union([(eq_rel, 2)])
        prov.append({"part": "t", "stage": "equality check", "from": None})
    out = SchemaMapping(m.source, target, skel.st, tuple(t))
    return CompiledMapping(out, setting, eq, frozenset(term_positions(eqm)), tuple(prov), stages, prune)


def xr_certain_via_compile(q: UCQ, source: Instance, m: SchemaMapping, max_facts=None, prune=True,
                           bound=None) -> set:
    """Compile to GAV+GAV+egd and answer through the disjunctive program."""
    from ..dlp import xr_certain_via_dlp
    cm = compile_to_gav(m, prune=prune, bound=bound)
    return xr_certain_via_dlp(cm.transform(q), source, cm.mapping, max_facts)
