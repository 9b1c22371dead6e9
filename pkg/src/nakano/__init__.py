"""Computations in variable-exponent Lebesgue spaces over finite atomic measures."""

from .errors import ContractError, DomainError, NotIsometricError
from .measures import AtomicMeasureSpace, SimpleFunction, integrate, radon_nikodym, restrict
from .spaces import (
    NakanoSpace,
    density_change,
    essential_range,
    join,
    luxemburg_norm,
    meet,
    modular,
    neg_part,
    pos_part,
    signed_power,
)
from .embeddings import (
    RefinementEmbedding,
    RigidityReport,
    apply_embedding,
    check_integral_preservation,
    normalize,
    rigidity_check,
)
from .perturbation import (
    PerturbationCheck,
    PerturbationConstants,
    check_almost_isometry,
    check_concave_tangent_bound,
    check_map_modulus,
    check_signed_power_gap,
    compute_constants,
    delta_modulus,
    eta,
    eta_hat,
    exponent_map,
    is_epsilon_perturbation,
    log_complement_ratio,
    perturbation_budget,
    quantize_exponent,
)
from .approximation import (
    Chunk,
    ChunkPartition,
    DyadicFit,
    check_entropy_sum_bound,
    check_norm_power_estimate,
    chunk,
    chunk_error_bound,
    chunked_estimate,
    dyadic_sum,
    entropy_sum_constant,
    fit_dyadic,
    theta_scaled,
)
from .reports import CheckReport, CheckResult

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasureSpace",
    "Chunk",
    "ChunkPartition",
    "CheckReport",
    "CheckResult",
    "ContractError",
    "DomainError",
    "DyadicFit",
    "NakanoSpace",
    "NotIsometricError",
    "PerturbationCheck",
    "PerturbationConstants",
    "RefinementEmbedding",
    "RigidityReport",
    "SimpleFunction",
    "apply_embedding",
    "check_almost_isometry",
    "check_concave_tangent_bound",
    "check_entropy_sum_bound",
    "check_integral_preservation",
    "check_map_modulus",
    "check_norm_power_estimate",
    "check_signed_power_gap",
    "chunk",
    "chunk_error_bound",
    "chunked_estimate",
    "compute_constants",
    "delta_modulus",
    "density_change",
    "dyadic_sum",
    "entropy_sum_constant",
    "essential_range",
    "eta",
    "eta_hat",
    "exponent_map",
    "fit_dyadic",
    "integrate",
    "is_epsilon_perturbation",
    "join",
    "log_complement_ratio",
    "luxemburg_norm",
    "meet",
    "modular",
    "neg_part",
    "normalize",
    "perturbation_budget",
    "pos_part",
    "quantize_exponent",
    "radon_nikodym",
    "restrict",
    "rigidity_check",
    "signed_power",
    "theta_scaled",
]
