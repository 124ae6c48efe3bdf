"""Exact computation in finitely generated self-similar groups acting on
d-regular rooted trees, with finite-stage certificate machinery for
weakly-maximal-style subgroup constructions."""

from .presets import (
    GroupPreset,
    builtin_preset,
    ggs_preset,
    grigorchuk_preset,
    gupta_sidki_preset,
    load_preset,
    regular_branch_vector_check,
    save_preset,
    validate_preset,
)
from .quotients import (
    PermSubgroup,
    full_level_group,
    is_level_transitive,
    level_action,
    point_stabilizer_words,
    quotient_order,
    subgroup_index_in_quotient,
)
from .subgroups import (
    NotInLevelStabilizerError,
    SubgroupHandle,
    conjugate_escaping,
    enumerate_reduced_words,
    fixed_tree,
    fixed_vertices,
    in_rigid_stabilizer,
    index_growth_profile,
    minimal_non_fixing_level,
    psi_sections,
)
from .construction import (
    CertificateBuildError,
    WMCertificate,
    build_certificate,
    conjugate_count_lower_bound,
    fix_separation_witness,
    iter_rist_elements,
    level_trap_check,
    parabolic_approximation,
    pullback_subgroup,
    rist_element_search,
    transporter_word,
    trap_subgroup,
    validate_certificate,
)
from .tree import ROOT, InvalidDegreeError, format_vertex, level_vertices, parse_vertex, vertex_leq
from .words import BudgetExhausted, Portrait, Word

__version__ = "0.1.0"

__all__ = [
    "BudgetExhausted",
    "CertificateBuildError",
    "GroupPreset",
    "InvalidDegreeError",
    "NotInLevelStabilizerError",
    "PermSubgroup",
    "Portrait",
    "ROOT",
    "SubgroupHandle",
    "WMCertificate",
    "Word",
    "build_certificate",
    "builtin_preset",
    "conjugate_count_lower_bound",
    "conjugate_escaping",
    "enumerate_reduced_words",
    "fix_separation_witness",
    "fixed_tree",
    "fixed_vertices",
    "format_vertex",
    "full_level_group",
    "ggs_preset",
    "grigorchuk_preset",
    "gupta_sidki_preset",
    "in_rigid_stabilizer",
    "index_growth_profile",
    "is_level_transitive",
    "iter_rist_elements",
    "level_action",
    "level_trap_check",
    "level_vertices",
    "load_preset",
    "minimal_non_fixing_level",
    "parabolic_approximation",
    "parse_vertex",
    "point_stabilizer_words",
    "psi_sections",
    "pullback_subgroup",
    "quotient_order",
    "regular_branch_vector_check",
    "rist_element_search",
    "save_preset",
    "subgroup_index_in_quotient",
    "transporter_word",
    "trap_subgroup",
    "validate_certificate",
    "validate_preset",
    "vertex_leq",
]
