"""Classical core of lattice-based factoring and discrete logarithms, at desk scale."""

from .arith import is_probable_prime, mod_pow, mulexp_product_tree, plan_mulexp
from .characters import (
    DirichletCharacter,
    char_eval,
    char_order,
    characters,
    count_by_characters,
    f_chi_h,
)
from .errors import InputError, RegevError, ResourceError
from .group import dlog_vector, element_order, kernel_size, m_star, unit_group_structure
from .lattice import RelationLattice, hnf, lll_reduce, relation_lattice
from .pipelines import PipelineOutcome, Status, derive_params, dlog, factor, find_order
from .sampler import SeededStream, sample_primes, sample_unit

__version__ = "0.1.0"

__all__ = [
    "DirichletCharacter",
    "InputError",
    "PipelineOutcome",
    "RegevError",
    "RelationLattice",
    "ResourceError",
    "SeededStream",
    "Status",
    "char_eval",
    "char_order",
    "characters",
    "count_by_characters",
    "derive_params",
    "dlog",
    "dlog_vector",
    "element_order",
    "f_chi_h",
    "factor",
    "find_order",
    "hnf",
    "is_probable_prime",
    "kernel_size",
    "lll_reduce",
    "m_star",
    "mod_pow",
    "mulexp_product_tree",
    "plan_mulexp",
    "relation_lattice",
    "sample_primes",
    "sample_unit",
    "unit_group_structure",
]
