"""Divergence-only projection onto flat submanifolds of discrete distributions."""

from .core import (
    ConvergenceTrace,
    LearningFunction,
    ProjectionProblem,
    RunConfig,
    current_estimate,
    gamma_vector,
    objective,
    run_A,
    step_A,
)
from .geometry import Connection, canonical_divergence, e_mixture, kl_divergence, m_mixture
from .oracle import oracle_grid, oracle_k2
from .variants import VariantConfig, run

__all__ = [
    "Connection",
    "ConvergenceTrace",
    "LearningFunction",
    "ProjectionProblem",
    "RunConfig",
    "VariantConfig",
    "canonical_divergence",
    "current_estimate",
    "e_mixture",
    "gamma_vector",
    "kl_divergence",
    "m_mixture",
    "objective",
    "oracle_grid",
    "oracle_k2",
    "run",
    "run_A",
    "step_A",
]
