"""Divergence-only projection onto a flat submanifold.

The estimate ``q_hat`` is parametrized by simplex weights over a basis.  For
each basis member the residual

    gamma_k = D(q_hat, q) + D(p_k, q_hat) - D(p_k, q)

vanishes for every ``k`` exactly at the projection, is negative when
``q_hat`` sits too close to ``p_k`` and positive when it sits too far.  The
basic iteration multiplies each weight by ``f(gamma_k)`` for an increasing
positive ``f`` with ``f(0) = 1`` and renormalizes.  Nothing but divergence
values is needed, so the update is coordinate-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, GeoProjError, NumericalUnderflow
from .geometry import (
    Connection,
    _e_mix,
    _kl,
    _m_mix,
    affine_coordinates,
    as_basis,
    as_distribution,
    as_weights,
)

W_MIN = 1e-300


@dataclass(frozen=True, eq=False)
class ProjectionProblem:
    """Target ``q``, basis ``p_1..p_K`` (rows) and connection orientation."""

    target: np.ndarray
    basis: np.ndarray
    connection: Connection = Connection.E_AS_NABLA
    log_target: np.ndarray = field(init=False, repr=False)
    log_basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        target = as_distribution(self.target, "target")
        basis = as_basis(self.basis)
        if basis.shape[1] != target.size:
            raise DimensionMismatch(
                f"target has dimension {target.size} but basis members have dimension {basis.shape[1]}"
            )
        target.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "connection", Connection(self.connection))
        object.__setattr__(self, "log_target", np.log(target))
        object.__setattr__(self, "log_basis", np.log(basis))

    @property
    def K(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    def with_basis(self, basis) -> "ProjectionProblem":
        return ProjectionProblem(self.target, basis, self.connection)


@dataclass(frozen=True)
class LearningFunction:
    """Sigmoid ``f(gamma) = 2 / (1 + exp(-beta * gamma))``; ``f'(0) = beta / 2``."""

    beta: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")

    def __call__(self, gamma):
        return 2.0 * expit(self.beta * np.asarray(gamma, dtype=float))

    @property
    def slope(self) -> float:
        return self.beta / 2.0

    @classmethod
    def from_slope(cls, slope: float) -> "LearningFunction":
        return cls(beta=2.0 * slope)


def f_eval(lf: LearningFunction, gamma: float) -> float:
    return float(lf(gamma))


@dataclass
class RunConfig:
    tol_gamma: float = 1e-10
    max_iters: int = 20000
    learning: LearningFunction | None = None
    record_trace: bool = True
    w0: np.ndarray | None = None

    def __post_init__(self):
        if not self.tol_gamma > 0:
            raise ValueError("tol_gamma must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    w: np.ndarray
    gamma: np.ndarray
    divergence: float
    max_abs_gamma: float


@dataclass
class ConvergenceTrace:
    records: list[IterationRecord] = field(default_factory=list)
    reason: str = ""

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0


# -- residuals ---------------------------------------------------------------------


def _estimate(problem: ProjectionProblem, w: np.ndarray) -> np.ndarray:
    if problem.connection is Connection.E_AS_NABLA:
        return _m_mix(problem.basis, w)
    return _e_mix(problem.log_basis, w)


def _check_w(problem: ProjectionProblem, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.K,):
        raise DimensionMismatch(f"expected {problem.K} weights, got shape {w.shape}")
    return w


def current_estimate(problem: ProjectionProblem, w) -> np.ndarray:
    """Point of the submanifold with weights ``w`` (m-mixture for E_AS_NABLA, e-mixture otherwise)."""
    return _estimate(problem, _check_w(problem, w))


def objective(problem: ProjectionProblem, w) -> float:
    """``D(q_hat, q)``, the quantity the projection minimizes."""
    q_hat = _estimate(problem, _check_w(problem, w))
    if problem.connection is Connection.E_AS_NABLA:
        return _kl(q_hat, problem.target)
    return _kl(problem.target, q_hat)


def _gamma(problem: ProjectionProblem, w: np.ndarray) -> np.ndarray:
    P, logP = problem.basis, problem.log_basis
    q, logq = problem.target, problem.log_target
    q_hat = _estimate(problem, w)
    log_qh = np.log(q_hat)
    if problem.connection is Connection.E_AS_NABLA:
        d_hat_q = float(np.dot(q_hat, log_qh - logq))
        d_p_hat = np.einsum("ki,ki->k", P, logP - log_qh)
        d_p_q = np.einsum("ki,ki->k", P, logP - logq)
    else:
        d_hat_q = float(np.dot(q, logq - log_qh))
        d_p_hat = (log_qh - logP) @ q_hat
        d_p_q = (logq - logP) @ q
    return d_hat_q + d_p_hat - d_p_q


def gamma_vector(problem: ProjectionProblem, w) -> np.ndarray:
    """Pythagorean residuals ``gamma_k`` at weights ``w``, from divergence values only."""
    return _gamma(problem, _check_w(problem, w))


def gamma_via_coordinates(problem: ProjectionProblem, w, w_star) -> np.ndarray:
    """Residuals from affine coordinates, given the true projection weights ``w_star``.

    ``gamma_k = <theta(q_hat) - theta(q*), eta(q_hat) - eta(p_k)>``.
    """
    q_hat = current_estimate(problem, w)
    q_star = current_estimate(problem, w_star)
    c = problem.connection
    th_hat, eta_hat = affine_coordinates(q_hat, c)
    th_star, _ = affine_coordinates(q_star, c)
    eta_p = np.array([affine_coordinates(p, c)[1] for p in problem.basis])
    return (eta_hat - eta_p) @ (th_hat - th_star)


# -- the basic multiplicative update ---------------------------------------------


def _normalize(w_new: np.ndarray) -> np.ndarray:
    if w_new.min() < W_MIN:
        raise NumericalUnderflow(f"weight {w_new.min()!r} underflowed before normalization")
    return w_new / w_new.sum()


def multiplicative_update(w: np.ndarray, gamma: np.ndarray, lf: LearningFunction) -> np.ndarray:
    return _normalize(w * lf(gamma))


def step_A(problem: ProjectionProblem, w, lf: LearningFunction) -> np.ndarray:
    """One multiplicative step ``w_k <- w_k f(gamma_k)`` followed by renormalization."""
    w = _check_w(problem, w)
    return multiplicative_update(w, _gamma(problem, w), lf)


def default_learning(problem: ProjectionProblem, margin: float = 0.9) -> LearningFunction:
    """Sigmoid whose slope at 0 is ``margin`` times the uniform stability bound.

    Falls back to ``beta = 1`` when the bound is infinite (degenerate basis).
    """
    from .stability import uniform_bound

    bound = uniform_bound(problem.basis, problem.connection)
    if not np.isfinite(bound):
        return LearningFunction(1.0)
    return LearningFunction.from_slope(margin * bound)


def initial_weights(problem: ProjectionProblem, w0=None) -> np.ndarray:
    if w0 is None:
        return np.full(problem.K, 1.0 / problem.K)
    return as_weights(w0, problem.K, "w0").copy()


def _record(problem, t, w, gamma) -> IterationRecord:
    return IterationRecord(
        iteration=t,
        w=w.copy(),
        gamma=gamma.copy(),
        divergence=objective(problem, w),
        max_abs_gamma=float(np.max(np.abs(gamma))),
    )


def iterate(
    problem: ProjectionProblem,
    config: RunConfig,
    advance: Callable[[np.ndarray, np.ndarray], np.ndarray],
    residual: Callable[[np.ndarray, np.ndarray], float] | None = None,
) -> tuple[np.ndarray, ConvergenceTrace]:
    """Drive ``advance(w, gamma) -> w`` until the residual drops below tolerance.

    The residual defaults to ``max_k |gamma_k|``.  ``advance`` may return
    ``None`` to signal that no further progress is possible ("stalled").
    """
    w = initial_weights(problem, config.w0)
    trace = ConvergenceTrace()
    max_iters = int(config.max_iters)
    t = 0
    while True:
        gamma = _gamma(problem, w)
        res = residual(w, gamma) if residual is not None else float(np.max(np.abs(gamma)))
        done = None
        if res <= config.tol_gamma:
            done = "converged"
        elif t >= max_iters:
            done = "max_iters"
        if config.record_trace or done:
            trace.records.append(_record(problem, t, w, gamma))
        if done:
            trace.reason = done
            return w, trace
        try:
            w_next = advance(w, gamma)
        except GeoProjError as e:
            raise type(e)(f"iteration {t}: {e}") from e
        if w_next is None:
            if not config.record_trace:
                trace.records.append(_record(problem, t, w, gamma))
            trace.reason = "stalled"
            return w, trace
        w = w_next
        t += 1


def run_A(problem: ProjectionProblem, config: RunConfig | None = None) -> tuple[np.ndarray, ConvergenceTrace]:
    """Iterate :func:`step_A` from ``config.w0`` (uniform by default)."""
    config = config or RunConfig()
    lf = config.learning or default_learning(problem)
    return iterate(problem, config, lambda w, g: multiplicative_update(w, g, lf))
