"""Brute-force ground truth for projections, independent of the residual machinery.

Everything here minimizes ``w -> D(q_hat(w), q)`` directly by golden-section
search and lattice enumeration; nothing uses ``gamma``.  The module also
builds test instances whose projection weights are known in closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq

from ._search import golden_section
from .core import ProjectionProblem, objective
from .errors import BudgetExceeded, OutOfRange
from .geometry import Connection, _e_mix, _m_mix, divergence

K2_DELTA = 1e-9
K2_TOL = 1e-12
GRID_TOL = 1e-8
GRID_BUDGET = 10_000_000
MAX_GRID_K = 5


@dataclass
class OracleSolution:
    w_star: np.ndarray
    divergence_at_star: float
    method: str
    tolerance: float
    resolution: int | None = None
    history: list[float] = field(default_factory=list)


def _line_objective(problem: ProjectionProblem):
    def f(w1: float) -> float:
        return objective(problem, np.array([w1, 1.0 - w1]))

    return f


def _line_slope(problem: ProjectionProblem):
    """Closed-form derivative of the objective in ``w_1`` (plain calculus, no residuals)."""
    p1, p2 = problem.basis
    q, logq = problem.target, problem.log_target
    a = problem.log_basis[0] - problem.log_basis[1]

    def slope(w1: float) -> float:
        if problem.connection is Connection.E_AS_NABLA:
            mix = w1 * p1 + (1.0 - w1) * p2
            return float(np.dot(p1 - p2, np.log(mix) - logq))
        mix = _e_mix(problem.log_basis, np.array([w1, 1.0 - w1]))
        return float(np.dot(mix - q, a))

    return slope


def oracle_k2(problem: ProjectionProblem, delta: float = K2_DELTA, tol: float = K2_TOL) -> OracleSolution:
    """Golden-section minimization over ``w_1`` in ``[delta, 1 - delta]``.

    The objective is convex along the flat coordinate in both orientations.
    Function values alone resolve a smooth minimum only to about the square
    root of machine precision, so an interior result is polished by a root
    search on the closed-form slope.
    """
    if problem.K != 2:
        raise OutOfRange(f"oracle_k2 needs K = 2, got K = {problem.K}")
    f = _line_objective(problem)
    w1, fmin = golden_section(f, delta, 1.0 - delta, tol=tol)
    slope = _line_slope(problem)
    lo, hi = max(delta, w1 - 1e-6), min(1.0 - delta, w1 + 1e-6)
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo < 0.0 < s_hi:
        w_root = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        # objective values are at noise level here; compare slopes instead
        if abs(slope(w_root)) <= abs(slope(w1)):
            w1, fmin = w_root, f(w_root)
    return OracleSolution(np.array([w1, 1.0 - w1]), float(fmin), "golden_k2", tol)


def _lattice(K: int, resolution: int):
    for cuts in itertools.combinations(range(1, resolution), K - 1):
        bounds = (0,) + cuts + (resolution,)
        yield [bounds[i + 1] - bounds[i] for i in range(K)]


def _batch_objective(problem: ProjectionProblem, W: np.ndarray) -> np.ndarray:
    q, logq = problem.target, problem.log_target
    if problem.connection is Connection.E_AS_NABLA:
        Q = W @ problem.basis
        return np.einsum("ni,ni->n", Q, np.log(Q) - logq)
    Z = W @ problem.log_basis
    Z -= Z.max(axis=1, keepdims=True)
    logQ = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
    return (logq - logQ) @ q


def _pair_search(problem, w, k, l, lo):
    """Best transfer of mass between ``w_k`` and ``w_l`` (others fixed)."""
    a, b = -(w[k] - lo), w[l] - lo
    if b - a <= 0:
        return w, objective(problem, w)

    def f(t):
        v = w.copy()
        v[k] += t
        v[l] -= t
        return objective(problem, v)

    f0 = f(0.0)
    t, ft = golden_section(f, a, b, tol=1e-13)
    if ft >= f0:
        return w, f0
    v = w.copy()
    v[k] += t
    v[l] -= t
    return v, ft


def _direction_search(problem, w, direction, lo):
    """Line search along a zero-sum direction, staying above ``lo``."""
    neg, pos = direction < 0, direction > 0
    if not (neg.any() and pos.any()):
        return w, objective(problem, w)
    t_max = float(np.min((w[neg] - lo) / -direction[neg]))
    t_min = -float(np.min((w[pos] - lo) / direction[pos]))
    f0 = objective(problem, w)
    t, ft = golden_section(lambda t: objective(problem, w + t * direction), t_min, t_max, tol=1e-13)
    if ft >= f0:
        return w, f0
    return w + t * direction, ft


def oracle_grid(
    problem: ProjectionProblem,
    resolution: int = 60,
    tol: float = GRID_TOL,
    max_passes: int = 2000,
    floor: float = 1e-12,
) -> OracleSolution:
    """Exhaustive lattice search followed by coordinate-wise golden refinement.

    The lattice is ``{w : w_k = n_k / resolution, n_k >= 1}``.  Refinement
    cycles golden-section searches over every pairwise mass transfer, then a
    search along the net displacement of the pass, until a pass moves the
    weights by less than ``tol``.  ``history`` holds the divergence after each
    pass and is non-increasing.
    """
    K = problem.K
    if K > MAX_GRID_K:
        raise OutOfRange(f"oracle_grid supports K <= {MAX_GRID_K}, got {K}")
    if resolution < 10:
        raise OutOfRange(f"resolution must be at least 10, got {resolution}")
    if resolution < K:
        raise OutOfRange(f"resolution {resolution} is too small for K = {K}")
    size = math.comb(resolution - 1, K - 1)
    if size > GRID_BUDGET:
        raise BudgetExceeded(f"lattice has {size} points, budget is {GRID_BUDGET}")

    best_val, best_w = np.inf, None
    chunk = 50_000
    it = _lattice(K, resolution)
    while True:
        rows = list(itertools.islice(it, chunk))
        if not rows:
            break
        W = np.asarray(rows, dtype=float) / resolution
        vals = _batch_objective(problem, W)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_w = float(vals[j]), W[j].copy()

    w = best_w
    history = [objective(problem, w)]
    pairs = list(itertools.combinations(range(K), 2))
    for _ in range(max_passes):
        start = w.copy()
        for k, l in pairs:
            w, _ = _pair_search(problem, w, k, l, floor)
        w, fw = _direction_search(problem, w, w - start, floor)
        history.append(fw)
        if np.max(np.abs(w - start)) < tol:
            break
    w = w / w.sum()
    return OracleSolution(w, objective(problem, w), "grid", tol, resolution, history)


def oracle(problem: ProjectionProblem, resolution: int = 60) -> OracleSolution:
    if problem.K == 2:
        return oracle_k2(problem)
    return oracle_grid(problem, resolution)


def pythagorean_residuals(problem: ProjectionProblem, w_star) -> np.ndarray:
    """``D(p_k, q) - D(q*, q) - D(p_k, q*)`` for every basis member; zero at the projection."""
    c = problem.connection
    q = problem.target
    q_star = _m_mix(problem.basis, np.asarray(w_star)) if c is Connection.E_AS_NABLA else _e_mix(
        problem.log_basis, np.asarray(w_star)
    )
    d_star = divergence(q_star, q, c)
    return np.array([divergence(p, q, c) - d_star - divergence(p, q_star, c) for p in problem.basis])


# -- instances with known projection -------------------------------------------------


def random_basis(rng: np.random.Generator, d: int, K: int, concentration: float = 2.0, mix: float = 0.2) -> np.ndarray:
    """``K`` random distributions, shrunk toward uniform by ``mix`` to stay well inside the simplex."""
    B = rng.dirichlet(np.full(d, concentration), size=K)
    B = (1.0 - mix) * B + mix / d
    return B / B.sum(axis=1, keepdims=True)


def random_interior_weights(rng: np.random.Generator, K: int, floor: float = 0.1) -> np.ndarray:
    w = rng.dirichlet(np.ones(K))
    w = (1.0 - floor * K) * w + floor
    return w / w.sum()


def _orthogonal_component(rng, directions: np.ndarray, d: int) -> np.ndarray:
    # rank-aware: the rows p_k - q* are linearly dependent (they span K - 1 dims)
    basis = null_space(directions)
    if basis.shape[1] == 0:
        return np.zeros(d)
    return basis @ rng.standard_normal(basis.shape[1])


def make_interior_problem(
    rng: np.random.Generator,
    d: int,
    K: int,
    connection: Connection,
    w_star=None,
    offset: float = 0.5,
    basis=None,
) -> tuple[ProjectionProblem, np.ndarray]:
    """Random problem whose projection has weights ``w_star`` exactly.

    The target is moved off the submanifold along a direction orthogonal to
    it at ``q*`` (in the Fisher metric), which leaves the projection fixed.
    ``offset = 0`` puts the target on the submanifold.  Needs ``d > K``.
    """
    connection = Connection(connection)
    if d <= K:
        raise OutOfRange(f"need d > K for an off-manifold target, got d={d}, K={K}")
    P = random_basis(rng, d, K) if basis is None else np.asarray(basis, dtype=float)
    w = random_interior_weights(rng, K) if w_star is None else np.asarray(w_star, dtype=float)
    if connection is Connection.E_AS_NABLA:
        q_star = _m_mix(P, w)
        # exp-tilt by v with v orthogonal to every p_k - q* (and to constants)
        v = _orthogonal_component(rng, np.vstack([P - q_star, np.ones(d)]), d)
        scale = np.max(np.abs(v))
        q = q_star * np.exp(offset * v / scale) if scale > 0 else q_star
    else:
        logP = np.log(P)
        q_star = _e_mix(logP, w)
        # additive shift u orthogonal to every log p_k - log q* (constants included)
        u = _orthogonal_component(rng, np.vstack([logP - np.log(q_star), np.ones(d)]), d)
        neg = u < 0
        s = min(offset, 0.9) * np.min(q_star[neg] / -u[neg]) if neg.any() else 0.0
        q = q_star + s * u
    q = q / q.sum()
    return ProjectionProblem(q, P, connection), w
