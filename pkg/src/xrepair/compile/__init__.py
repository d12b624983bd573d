"""Compile weakly acyclic GLAV/SO mappings with egds into GAV+GAV+egd ones."""
from .pipeline import CompiledMapping, compile_to_gav, xr_certain_via_compile
from .rewrite import (
    SkeletonSetting, derivable_relations, prune_unreachable, skeleton_rewrite,
    skeleton_rewrite_query, skeleton_setting,
)
from .singularize import eq_axioms, equality_singularize, singularize_query, term_positions
from .skeleton import (
    BULLET, Skeleton, build_term, parse_skeleton, skel_relation, skeleton_of,
    skeletons_upto, split_skel_relation,
)
from .skolem import copy_extend, skolemize

__all__ = [
    "BULLET", "CompiledMapping", "Skeleton", "SkeletonSetting", "build_term",
    "compile_to_gav", "copy_extend", "derivable_relations", "eq_axioms",
    "equality_singularize", "parse_skeleton", "prune_unreachable", "singularize_query",
    "skel_relation", "skeleton_of", "skeleton_rewrite", "skeleton_rewrite_query",
    "skeleton_setting", "skeletons_upto", "skolemize", "split_skel_relation",
    "term_positions", "xr_certain_via_compile",
]
