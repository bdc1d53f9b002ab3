"""Component-wise, batch, gradient and boundary-tolerant relatives of the basic update.

Indices ``k`` are 0-based throughout.

The component-wise family reduces the K-point problem to a sequence of
two-point problems: for component ``k`` the current estimate lies on the line
from ``p_k`` to its antipode ``p_k_dag``, the boundary point obtained by
dropping ``p_k`` and renormalizing the remaining weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ConvergenceTrace,
    LearningFunction,
    ProjectionProblem,
    RunConfig,
    _check_w,
    _gamma,
    _normalize,
    current_estimate,
    default_learning,
    iterate,
    multiplicative_update,
    objective,
)
from .errors import DegeneratePencil, OutOfRange, OutOfSimplex
from .geometry import Connection, _e_mix, _m_mix, as_basis, pencil_fisher

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class AntipodePoint:
    k: int
    weights: np.ndarray
    rho: float


@dataclass
class VariantConfig(RunConfig):
    inner_L: int = 1

    def __post_init__(self):
        super().__post_init__()
        if int(self.inner_L) < 1:
            raise ValueError("inner_L must be at least 1")


def antipode(w, k: int) -> AntipodePoint:
    """Weights of the boundary point where the line from ``p_k`` through ``q_hat`` exits."""
    w = np.asarray(w, dtype=float)
    if not 0 <= k < w.size:
        raise OutOfRange(f"component index {k} out of range for {w.size} weights")
    if w[k] >= 1.0 - DEGENERATE_TOL:
        raise DegeneratePencil(f"w[{k}] = {w[k]!r} is too close to 1 for an antipode")
    out = w / (1.0 - w[k])
    out[k] = 0.0
    return AntipodePoint(k=k, weights=out, rho=1.0 / (1.0 - w[k]))


# -- weight-space update rules -------------------------------------------------------


def step_update_rule1(w, k: int, delta: float) -> np.ndarray:
    """Move ``w_k`` by ``delta`` and rescale the others proportionally."""
    w = np.asarray(w, dtype=float)
    wk_new = w[k] + delta
    if not 0.0 < wk_new < 1.0:
        raise OutOfSimplex(f"w[{k}] + delta = {wk_new!r} leaves (0, 1)")
    out = w - (delta / (1.0 - w[k])) * w
    out[k] = wk_new
    return out


def step_update_rule2(w, k: int, delta: float) -> np.ndarray:
    """Add ``delta`` to ``w_k`` alone, then renormalize everything by ``1 + delta``."""
    w = np.asarray(w, dtype=float)
    if not 1.0 + delta > 0.0 or w[k] + delta <= 0.0:
        raise OutOfSimplex(f"delta = {delta!r} makes component {k} non-positive")
    out = w / (1.0 + delta)
    out[k] = (w[k] + delta) / (1.0 + delta)
    return out


# -- exact component-wise step -------------------------------------------------------


def step_B(problem: ProjectionProblem, w, k: int, config: VariantConfig | None = None) -> np.ndarray:
    """Run ``inner_L`` exact two-point updates between ``p_k`` and its antipode.

    Both residuals are evaluated from divergences at the actual points
    ``p_k`` and ``p_k_dag``; the result is mapped back to K weights.
    """
    config = config or VariantConfig()
    lf = config.learning or default_learning(problem)
    w = _check_w(problem, w)
    ap = antipode(w, k)
    p_dag = current_estimate(problem, ap.weights)
    pair = problem.with_basis([problem.basis[k], p_dag])
    omega = np.array([w[k], 1.0 - w[k]])
    for _ in range(int(config.inner_L)):
        omega = multiplicative_update(omega, _gamma(pair, omega), lf)
    out = (1.0 - omega[0]) / (1.0 - w[k]) * w
    out[k] = omega[0]
    return out


def _inner_L(config) -> int:
    return int(getattr(config, "inner_L", 1))


def _sweep_runner(problem, config, component_step):
    inner_L = _inner_L(config)

    def advance(w, gamma):
        first = True
        for k in range(problem.K):
            for _ in range(inner_L):
                g = gamma if first else _gamma(problem, w)
                first = False
                w = component_step(w, g, k)
        return w

    return iterate(problem, config, advance)


def run_B(problem: ProjectionProblem, config: VariantConfig | None = None):
    config = config or VariantConfig()
    lf = config.learning or default_learning(problem)
    inner = VariantConfig(inner_L=_inner_L(config), learning=lf)

    def advance(w, gamma):
        for k in range(problem.K):
            w = step_B(problem, w, k, inner)
        return w

    return iterate(problem, config, advance)


def _component_delta(w, g, k, lf):
    return w[k] * (float(lf(g[k])) - 1.0)


def run_Ba(problem: ProjectionProblem, config: VariantConfig | None = None):
    """Sweeps of first-order component-wise updates (rule 1)."""
    config = config or VariantConfig()
    lf = config.learning or default_learning(problem)
    return _sweep_runner(problem, config, lambda w, g, k: step_update_rule1(w, k, _component_delta(w, g, k, lf)))


def run_C(problem: ProjectionProblem, config: VariantConfig | None = None):
    """Sweeps of one-sided component-wise updates (rule 2)."""
    config = config or VariantConfig()
    lf = config.learning or default_learning(problem)
    return _sweep_runner(problem, config, lambda w, g, k: step_update_rule2(w, k, _component_delta(w, g, k, lf)))


def step_Cb(problem: ProjectionProblem, w, lf: LearningFunction, gamma=None) -> np.ndarray:
    """Simultaneous version of rule 2: every component's change is computed from one residual vector and summed."""
    w = _check_w(problem, w)
    if gamma is None:
        gamma = _gamma(problem, w)
    total = np.zeros_like(w)
    for k in range(problem.K):
        total += step_update_rule2(w, k, _component_delta(w, gamma, k, lf)) - w
    # Far from the projection the summed contributions can overdraw a weight;
    # shrink the step so no weight loses more than half its mass.  Near the
    # fixed point the factor is 1 and the step is untouched.
    shrink = total < 0
    if shrink.any():
        total *= min(1.0, float(np.min(0.5 * w[shrink] / -total[shrink])))
    return _normalize(w + total)


def run_Cb(problem: ProjectionProblem, config: RunConfig | None = None):
    config = config or RunConfig()
    lf = config.learning or default_learning(problem)
    return iterate(problem, config, lambda w, g: step_Cb(problem, w, lf, g))


# -- gradient baseline ---------------------------------------------------------------


def divergence_gradient(problem: ProjectionProblem, w) -> np.ndarray:
    """``dD(q_hat, q)/dw_k`` for ``k < K`` in the chart ``w_K = 1 - sum(others)``.

    Equals ``gamma_K - gamma_k``, so no coordinates are needed.
    """
    g = _gamma(problem, _check_w(problem, w))
    return g[-1] - g[:-1]


def _gradient_direction(w, gamma, lam):
    step = lam * (gamma[:-1] - gamma[-1])
    out = np.empty_like(w)
    out[:-1] = step
    out[-1] = -step.sum()
    return out


def _gradient_update(w, gamma, lam):
    out = w + _gradient_direction(w, gamma, lam)
    if out.min() <= 0.0 or out.max() >= 1.0:
        raise OutOfSimplex(f"gradient step with lambda={lam} leaves the open simplex: {out}")
    return out


def gradient_step(problem: ProjectionProblem, w, lam: float) -> np.ndarray:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    w = _check_w(problem, w)
    return _gradient_update(w, _gamma(problem, w), lam)


def default_gradient_rate(problem: ProjectionProblem, margin: float = 0.9) -> float:
    """Step size below ``2 / L`` where ``L`` bounds the trace of the reduced Hessian on the whole hull."""
    P = problem.basis
    diff = P[:-1] - P[-1]
    if problem.connection is Connection.E_AS_NABLA:
        trace_bound = float(np.sum(diff**2) / P.min())
    else:
        a = problem.log_basis[:-1] - problem.log_basis[-1]
        trace_bound = float(np.sum((a.max(axis=1) - a.min(axis=1)) ** 2) / 4.0)
    if trace_bound == 0.0:
        return 1.0
    return 2.0 * margin / trace_bound


def run_gradient(problem: ProjectionProblem, config: RunConfig | None = None, lam: float | None = None):
    config = config or RunConfig()
    lam = lam or default_gradient_rate(problem)

    def advance(w, gamma):
        # A curvature-stable rate can still cross the boundary far from the
        # optimum, so never move more than half way to it.
        step = _gradient_direction(w, gamma, lam)
        neg = step < 0
        t_max = float(np.min(w[neg] / -step[neg])) if neg.any() else np.inf
        return w + min(1.0, 0.5 * t_max) * step

    return iterate(problem, config, advance)


# -- refinements -----------------------------------------------------------------------


def _rescaled_update(w, gamma, lf):
    return _normalize(w * lf(gamma / (1.0 - w)))


def step_A_rescaled(problem: ProjectionProblem, w, lf: LearningFunction) -> np.ndarray:
    """Multiplicative step with residuals rescaled by ``1 / (1 - w_k)``."""
    w = _check_w(problem, w)
    return _rescaled_update(w, _gamma(problem, w), lf)


def rescaled_learning(problem: ProjectionProblem, margin: float = 0.9) -> LearningFunction:
    """Default sigmoid for the rescaled step.

    Rescaling by ``1 / (1 - w_k)`` doubles the two-point linear gain, so the
    K-scaled bound applies here even when K = 2.
    """
    from .stability import bound_general_uniform

    bound = bound_general_uniform(problem.basis, problem.connection)
    if not np.isfinite(bound):
        return LearningFunction(1.0)
    return LearningFunction.from_slope(margin * bound)


def run_A_rescaled(problem: ProjectionProblem, config: RunConfig | None = None):
    config = config or RunConfig()
    lf = config.learning or rescaled_learning(problem)
    return iterate(problem, config, lambda w, g: _rescaled_update(w, g, lf))


def pencil_fisher_vector(basis, w, connection: Connection) -> np.ndarray:
    """Fisher information of each ``p_k``-to-antipode line at coordinate ``w_k``."""
    basis = as_basis(basis)
    connection = Connection(connection)
    w = np.asarray(w, dtype=float)
    out = np.empty(basis.shape[0])
    for k in range(basis.shape[0]):
        dag_w = antipode(w, k).weights
        if connection is Connection.E_AS_NABLA:
            p_dag = _m_mix(basis, dag_w)
        else:
            p_dag = _e_mix(np.log(basis), dag_w)
        out[k] = pencil_fisher(basis[k], p_dag, w[k], connection)
    return out


def run_adaptive(problem: ProjectionProblem, config: RunConfig | None = None, margin: float = 0.9):
    """Basic update with the sigmoid slope re-chosen every step from the local stability bound.

    The unknown optimum in the bound is replaced by the current weights.
    """
    from .stability import bound_general_K, bound_k2_at_optimum

    config = config or RunConfig()
    state = {"lf": config.learning or default_learning(problem)}

    def advance(w, gamma):
        g = pencil_fisher_vector(problem.basis, w, problem.connection)
        if problem.K == 2:
            bound = bound_k2_at_optimum(w[0], g[0])
        else:
            bound = bound_general_K(w, g)
        if np.isfinite(bound):
            state["lf"] = LearningFunction.from_slope(margin * bound)
        return multiplicative_update(w, gamma, state["lf"])

    return iterate(problem, config, advance)


# -- boundary-tolerant update ---------------------------------------------------------


def _boundary_update(w, gamma, eps):
    pos, neg = gamma > 0, gamma < 0
    if not pos.any() or not neg.any():
        return w.copy()
    out = w.copy()
    out[pos] += eps * gamma[pos] / gamma[pos].sum()
    out[neg] -= eps * gamma[neg] / gamma[neg].sum()
    out = np.clip(out, 0.0, 1.0)
    return out / out.sum()


def boundary_safe_step(problem: ProjectionProblem, w, epsilon: float) -> np.ndarray:
    """Shift a total mass ``epsilon`` from negative-residual to positive-residual weights.

    Weights may reach exactly zero and can later become positive again.  The
    result is clipped to [0, 1] and renormalized.  If the residuals do not
    have both signs there is no admissible direction and ``w`` is returned.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    w = np.asarray(w, dtype=float)
    if w.shape != (problem.K,) or w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
        raise OutOfSimplex(f"w must be a closed-simplex point of length {problem.K}")
    return _boundary_update(w, _gamma(problem, w), epsilon)


def kkt_residual(w: np.ndarray, gamma: np.ndarray) -> float:
    """Zero exactly when ``gamma`` vanishes on the support and is non-positive off it."""
    on = w > 0
    r = np.max(np.abs(gamma[on])) if on.any() else 0.0
    if (~on).any():
        r = max(r, float(np.max(np.maximum(gamma[~on], 0.0))))
    return float(r)


def run_boundary(problem: ProjectionProblem, config: RunConfig | None = None, epsilon: float = 0.1):
    """Iterate :func:`boundary_safe_step`, halving the step whenever the divergence would increase."""
    config = config or RunConfig()
    state = {"eps": float(epsilon)}

    def advance(w, gamma):
        d0 = objective(problem, w)
        while state["eps"] > 1e-16:
            cand = _boundary_update(w, gamma, state["eps"])
            if np.array_equal(cand, w):
                return None
            if objective(problem, cand) <= d0:
                return cand
            state["eps"] *= 0.5
        return None

    return iterate(problem, config, advance, residual=kkt_residual)


ALGORITHMS = {
    "A": None,
    "B": run_B,
    "Ba": run_Ba,
    "C": run_C,
    "Cb": run_Cb,
    "grad": run_gradient,
    "rescaled": run_A_rescaled,
    "adaptive": run_adaptive,
    "boundary": run_boundary,
}


def run(problem: ProjectionProblem, algorithm: str, config: RunConfig | None = None) -> tuple[np.ndarray, ConvergenceTrace]:
    """Dispatch by algorithm name."""
    from .core import run_A

    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    fn = ALGORITHMS[algorithm] or run_A
    return fn(problem, config)
