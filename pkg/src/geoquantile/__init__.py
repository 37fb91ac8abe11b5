"""Geometric quantiles of atomic measures: certified estimation and inference."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateError,
    DomainError,
    EmptyError,
    FormatError,
    InvalidDirection,
    SingularHessian,
    UnsupportedNorm,
)
from .inference import (  # noqa: E402
    InferenceReport,
    QuadraticSurrogate,
    beta_hat,
    confint_functional,
    estimate_H,
    estimate_V,
    infer,
    sandwich_sigma,
    surrogate_eval,
)
from .measure import (  # noqa: E402
    AtomicMeasure,
    NormKind,
    QuantileDirection,
    line_mass_sup,
    load_measure,
    norm,
)
from .objective import (  # noqa: E402
    ObjectiveContext,
    phi,
    radius_bound,
    subgradient,
    uniform_convergence_gap,
)
from .optimizer import QuantileSolution, SolverConfig, grid_minimize_2d, solve  # noqa: E402
from .univariate import QuantileInterval, univariate_quantile, univariate_uniqueness  # noqa: E402

__all__ = [
    "AtomicMeasure",
    "ConfigError",
    "DegenerateError",
    "DomainError",
    "EmptyError",
    "FormatError",
    "InferenceReport",
    "InvalidDirection",
    "NormKind",
    "ObjectiveContext",
    "QuadraticSurrogate",
    "QuantileDirection",
    "QuantileInterval",
    "QuantileSolution",
    "SingularHessian",
    "SolverConfig",
    "UnsupportedNorm",
    "beta_hat",
    "confint_functional",
    "estimate_H",
    "estimate_V",
    "grid_minimize_2d",
    "infer",
    "line_mass_sup",
    "load_measure",
    "norm",
    "phi",
    "radius_bound",
    "sandwich_sigma",
    "solve",
    "subgradient",
    "surrogate_eval",
    "uniform_convergence_gap",
    "univariate_quantile",
    "univariate_uniqueness",
]
