"""Finsler metrics, Minkowskian product metrics and their curvature.

Derivatives come from truncated Taylor jets, so every connection and
curvature tensor is an exact derivative of the metric expression rather than a
finite-difference estimate.
"""
from .classify import ClassificationReport, TheoremReport, classify, verify_product
from .errors import (
    ConfigError,
    DeltaNearZero,
    DimensionError,
    DomainError,
    FinslerError,
    SamplerExhausted,
    SingularMatrix,
)
from .jets import DerivSpec, Jet, fd_oracle
from .metrics import (
    MetricSpec,
    ValidationReport,
    custom,
    euclidean,
    mroot,
    randers,
    riemannian,
    round_sphere,
    validate,
)
from .product import (
    ProductFunction,
    ProductMetric,
    custom_function,
    eps_sqrt,
    minkowski_product,
    pnorm,
    sum_function,
)
from .sampling import SamplePoint, SamplerConfig, sample_points
from .tensors import TensorFrame, compute_frame

__all__ = [
    "ClassificationReport", "TheoremReport", "classify", "verify_product",
    "ConfigError", "DeltaNearZero", "DimensionError", "DomainError", "FinslerError",
    "SamplerExhausted", "SingularMatrix",
    "DerivSpec", "Jet", "fd_oracle",
    "MetricSpec", "ValidationReport", "custom", "euclidean", "mroot", "randers",
    "riemannian", "round_sphere", "validate",
    "ProductFunction", "ProductMetric", "custom_function", "eps_sqrt", "minkowski_product",
    "pnorm", "sum_function",
    "SamplePoint", "SamplerConfig", "sample_points",
    "TensorFrame", "compute_frame",
]
