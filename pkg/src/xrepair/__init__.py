"""Exchange-repair semantics for schema mappings.

Source instances that have no solution under a mapping are repaired by
dropping source facts; certain answers are taken over every such repair.
Three routes compute them: brute-force repair enumeration, unfolding to
consistent query answering, and a disjunctive logic program.
"""
from .chase import (
    ChaseResult, analyze_weak_acyclicity, certain_answers, chase, chase_kb, core_of,
    has_solution, skolem_chase,
)
from .core import (
    NO_SOLUTION, UCQ, Atom, Compound, ConjunctiveQuery, Const, Egd, Instance, Null,
    Schema, SchemaMapping, SOClause, SOTgd, Tgd, Var, eval_ucq, fact, mapping_class,
)
from .errors import (
    InvariantViolation, ParseError, PreconditionError, ResourceError, SchemaError, XRError,
)
from .repair import (
    ar_certain, enumerate_source_repairs, exchange_as_repair_cqa,
    materialize_then_repair_cqa, obda_to_xr, oplus_source_repairs, xr_certain,
)
from .textio import (
    parse_constraints, parse_instance, parse_mapping, parse_query, parse_queries,
    serialize_instance, serialize_mapping, serialize_query,
)
from .unfold import gav_unfold_egds, gav_unfold_query, source_rewriting, xr_certain_via_cqa
from .dlp import build_dlp, export_dlp_text, minimal_models, xr_certain_via_dlp
from .compile import compile_to_gav, xr_certain_via_compile

__all__ = [
    "Atom", "ChaseResult", "Compound", "ConjunctiveQuery", "Const", "Egd", "Instance",
    "InvariantViolation", "NO_SOLUTION", "Null", "ParseError", "PreconditionError",
    "ResourceError", "SOClause", "SOTgd", "Schema", "SchemaError", "SchemaMapping", "Tgd",
    "UCQ", "Var", "XRError", "analyze_weak_acyclicity", "ar_certain", "build_dlp",
    "certain_answers", "chase", "chase_kb", "compile_to_gav", "core_of",
    "enumerate_source_repairs", "eval_ucq", "exchange_as_repair_cqa", "export_dlp_text",
    "fact", "gav_unfold_egds", "gav_unfold_query", "has_solution", "mapping_class",
    "materialize_then_repair_cqa", "minimal_models", "obda_to_xr", "oplus_source_repairs",
    "parse_constraints", "parse_instance", "parse_mapping", "parse_queries", "parse_query",
    "serialize_instance", "serialize_mapping", "serialize_query", "skolem_chase",
    "source_rewriting", "xr_certain", "xr_certain_via_compile", "xr_certain_via_cqa",
    "xr_certain_via_dlp",
]
