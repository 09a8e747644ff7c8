"""Lie closures (dynamical Lie algebras) of Pauli-sum and dense operator sets."""

from .closure import (
    METHODS,
    ClosureConfig,
    ClosureResult,
    ClosureStats,
    GramState,
    LoopCursor,
    check_matrix_inversion,
    close_matrix_inversion,
    close_orthonormalization,
    close_standard,
    expand_gram,
    project_residual,
    run_closure,
)
from .dense import (
    DenseOperator,
    StackedBasisMatrix,
    from_pauli,
    rank_independence_check,
    restrict,
    to_dense,
    zero_magnetization_projector,
)
from .errors import (
    CapacityError,
    ClosureTimeout,
    ConditioningWarning,
    InvalidInputError,
    LieClosureError,
    NumericalDegeneracyError,
    PauliParseError,
)
from .generators import AnsatzSpec, SplitMix64, build_generators, expected_dimension, list_families
from .ops import Operator, axpy_dot, commutator, inner_product, is_zero, norm
from .pauli import (
    PauliString,
    PauliSum,
    format_pauli_file,
    format_pauli_sum,
    parse_pauli_file,
    parse_pauli_sum,
    sum_commutator,
    sum_inner_product,
)

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "AnsatzSpec",
    "CapacityError",
    "ClosureConfig",
    "ClosureResult",
    "ClosureStats",
    "ClosureTimeout",
    "ConditioningWarning",
    "DenseOperator",
    "GramState",
    "InvalidInputError",
    "LieClosureError",
    "LoopCursor",
    "NumericalDegeneracyError",
    "Operator",
    "PauliParseError",
    "PauliString",
    "PauliSum",
    "SplitMix64",
    "StackedBasisMatrix",
    "axpy_dot",
    "build_generators",
    "check_matrix_inversion",
    "close_matrix_inversion",
    "close_orthonormalization",
    "close_standard",
    "commutator",
    "expand_gram",
    "expected_dimension",
    "format_pauli_file",
    "format_pauli_sum",
    "from_pauli",
    "inner_product",
    "is_zero",
    "list_families",
    "norm",
    "parse_pauli_file",
    "parse_pauli_sum",
    "project_residual",
    "rank_independence_check",
    "restrict",
    "run_closure",
    "sum_commutator",
    "sum_inner_product",
    "to_dense",
    "zero_magnetization_projector",
]
