"""Composite quantum systems under minimal, quantum and maximal tensor products."""

__version__ = "0.1.0"

from .catalog import (
    Measurement,
    StateLabel8,
    StateLabel24,
    s8,
    s24,
    table1_measurement,
    table2_measurement,
)
from .cones import (
    PoptReport,
    PoptSearchConfig,
    SeparableDecomposition,
    StateClass,
    classify_state,
    complement_in_popt_cone,
    is_popt,
    is_psd,
    min_product_expectation,
    verify_separable_decomposition,
)
from .decomposition import Prop1Decomposition, correlation_identity_check, prop1_decompose, verify_prop1
from .distinguish import (
    info_dim_lower_bound,
    quantum_information_dimension,
    verify_family,
    verify_pair,
    verify_single_measurement,
)
from .game import GameSpec, GameStrategy, exact_win_probability, simulate
from .operators import (
    ChoiOperator,
    HermitianOperator,
    UnitaryOperator,
    apply_map,
    choi_of_map_adjoint,
    eig_hermitian,
    frobenius_distance,
    partial_trace,
    partial_transpose,
    psd_sqrt_pinv,
    support_projector,
    tensor,
)

__all__ = [
    "ChoiOperator", "GameSpec", "GameStrategy", "HermitianOperator", "Measurement",
    "PoptReport", "PoptSearchConfig", "Prop1Decomposition", "SeparableDecomposition",
    "StateClass", "StateLabel8", "StateLabel24", "UnitaryOperator", "apply_map",
    "choi_of_map_adjoint", "classify_state", "complement_in_popt_cone",
    "correlation_identity_check", "eig_hermitian", "exact_win_probability",
    "frobenius_distance", "info_dim_lower_bound", "is_popt", "is_psd",
    "min_product_expectation", "partial_trace", "partial_transpose", "prop1_decompose",
    "psd_sqrt_pinv", "quantum_information_dimension", "s8", "s24", "simulate",
    "support_projector", "table1_measurement", "table2_measurement", "tensor",
    "verify_family", "verify_pair", "verify_prop1", "verify_separable_decomposition",
    "verify_single_measurement",
]
