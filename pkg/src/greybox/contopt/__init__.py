"""Continuous-optimization core: box normalization, simplex initialization
rules and their conditioning diagnostics, a Nelder-Mead optimizer, standard
test functions, and a benchmark runner for comparing initialization rules."""

from .domain import (
    AffineNormalization,
    BoxDomain,
    DomainWarning,
    EvalCounter,
    normalization_map,
    wrap_objective,
)
from .simplex import (
    DimensionZero,
    InitRule,
    InitRuleKind,
    Simplex,
    SimplexQuality,
    build_simplex,
    simplex_quality,
)
from .neldermead import (
    BudgetZero,
    NMConfig,
    NMCoefficients,
    NMResult,
    Termination,
    evals_to_target,
    nelder_mead,
)
from .testfunctions import TestFunction, ellipsoid, rosenbrock, shifted_sphere, sphere
from .bench import BenchRow, BenchTable, benchmark_init_rules

__all__ = [
    "AffineNormalization",
    "BenchRow",
    "BenchTable",
    "BoxDomain",
    "BudgetZero",
    "DimensionZero",
    "DomainWarning",
    "EvalCounter",
    "InitRule",
    "InitRuleKind",
    "NMConfig",
    "NMCoefficients",
    "NMResult",
    "Simplex",
    "SimplexQuality",
    "Termination",
    "TestFunction",
    "benchmark_init_rules",
    "build_simplex",
    "ellipsoid",
    "evals_to_target",
    "nelder_mead",
    "normalization_map",
    "rosenbrock",
    "shifted_sphere",
    "simplex_quality",
    "sphere",
    "wrap_objective",
]
