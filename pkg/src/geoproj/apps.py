"""Mixture decomposition of nonnegative matrices.

Columns of a nonnegative matrix are normalized into distributions and each is
expressed as a mixture of dictionary columns by e-projection (minimizing
``KL(P w || x)``, not the likelihood ``KL(x || P w)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ProjectionProblem, RunConfig, objective, run_A
from .errors import NumericalUnderflow, RankTooLarge, ZeroColumn
from .geometry import P_FLOOR, Connection
from .variants import run_boundary


NMF_COLUMN_ITERS = 2000


@dataclass
class FactorizationResult:
    P: np.ndarray
    W: np.ndarray
    divergences: np.ndarray
    objective_log: list[dict] = field(default_factory=list)
    reasons: list[str] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return float(self.divergences.sum())


def column_normalize(X) -> np.ndarray:
    """Scale each column to sum 1, lifting entries below the floor to exactly the floor."""
    X = np.array(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError(f"expected a d x N matrix with d >= 2, got shape {X.shape}")
    if not np.all(np.isfinite(X)) or X.min() < 0:
        raise ValueError("matrix entries must be finite and nonnegative")
    sums = X.sum(axis=0)
    if np.any(sums <= 0):
        raise ZeroColumn(f"column {int(np.argmax(sums <= 0))} is all zero")
    out = X / sums
    for j in range(out.shape[1]):
        col = out[:, j]
        low = col < P_FLOOR
        if low.any():
            col[~low] *= (1.0 - low.sum() * P_FLOOR) / col[~low].sum()
            col[low] = P_FLOOR
    return out


def _kl_columns(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.sum(Q * (np.log(Q) - np.log(X)), axis=0)


def _clamped(w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, P_FLOOR)
    return w / w.sum()


def _boundary_column(problem: ProjectionProblem, cfg: RunConfig, w_prev):
    """Fallback for a column whose optimum sits on the simplex boundary."""
    w, _ = run_boundary(problem, RunConfig(tol_gamma=cfg.tol_gamma, max_iters=cfg.max_iters, record_trace=False, w0=cfg.w0))
    w = _clamped(w)
    if w_prev is not None and objective(problem, w_prev) < objective(problem, w):
        w = w_prev
    return w, "boundary"


def decompose_columns(
    X, P, config: RunConfig | None = None, W_init=None, boundary_fallback: bool = False
) -> FactorizationResult:
    """Weights ``W`` (K x N) with ``P @ W[:, j]`` the e-projection of column ``j`` onto the mixtures of ``P``.

    With ``boundary_fallback`` a column whose weights underflow (optimum on
    the simplex boundary) is re-solved with the boundary-tolerant variant and
    clamped to the floor instead of raising.
    """
    X = np.asarray(X, dtype=float)
    P = np.asarray(P, dtype=float)
    base = config or RunConfig(record_trace=False)
    K, N = P.shape[1], X.shape[1]
    W = np.empty((K, N))
    divs = np.empty(N)
    reasons = []
    for j in range(N):
        problem = ProjectionProblem(X[:, j], P.T, Connection.E_AS_NABLA)
        cfg = RunConfig(
            tol_gamma=base.tol_gamma,
            max_iters=base.max_iters,
            learning=base.learning,
            record_trace=False,
            w0=None if W_init is None else W_init[:, j],
        )
        try:
            w, trace = run_A(problem, cfg)
            reason = trace.reason
        except NumericalUnderflow:
            if not boundary_fallback:
                raise
            w_prev = None if W_init is None else _clamped(np.asarray(W_init[:, j], dtype=float))
            w, reason = _boundary_column(problem, cfg, w_prev)
        W[:, j] = w
        divs[j] = objective(problem, w)
        reasons.append(reason)
    return FactorizationResult(P.copy(), W, divs, reasons=reasons)


def _initial_dictionary(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    d = X.shape[0]
    cols = rng.choice(X.shape[1], size=K, replace=False)
    P = 0.99 * X[:, cols] + 0.01 / d
    return column_normalize(P)


def _dictionary_step(X, P, W, max_halvings: int = 40):
    """Exponentiated-gradient step on each dictionary column with backtracking.

    Heuristic: returns the first candidate that does not increase the
    objective, or ``P`` itself.
    """
    f0 = _kl_columns(P @ W, X).sum()
    grad = np.log(P @ W) - np.log(X)
    G = grad @ W.T
    eta = 1.0
    for _ in range(max_halvings):
        cand = P * np.exp(-eta * (G - G.max(axis=0)))
        cand = column_normalize(cand)
        f1 = _kl_columns(cand @ W, X).sum()
        if f1 <= f0:
            return cand, f1
        eta *= 0.5
    return P, f0


def nmf(
    X,
    K: int,
    config: RunConfig | None = None,
    P_init=None,
    max_outer: int = 50,
    tol: float = 1e-6,
    seed: int = 0,
) -> FactorizationResult:
    """Alternate exact weight updates with a heuristic dictionary update.

    Stops when the objective after a weight step changes by less than ``tol``
    relative to the previous weight step, or after ``max_outer`` rounds.
    """
    Xn = column_normalize(X)
    d, N = Xn.shape
    # warm starts carry unfinished columns over to the next round
    config = config or RunConfig(max_iters=NMF_COLUMN_ITERS, record_trace=False)
    if not 2 <= K < min(d, N):
        raise RankTooLarge(f"need 2 <= K < min(d, N) = {min(d, N)}, got K = {K}")
    rng = np.random.default_rng(seed)
    P = _initial_dictionary(Xn, K, rng) if P_init is None else column_normalize(P_init)
    W = None
    log: list[dict] = []
    prev = None
    res = None
    for it in range(max_outer):
        res = decompose_columns(Xn, P, config, W_init=W, boundary_fallback=True)
        W = res.W
        obj = res.objective
        log.append({"iteration": it, "step": "W", "objective": obj})
        if prev is not None and abs(prev - obj) <= tol * max(abs(prev), 1e-300):
            break
        prev = obj
        if it == max_outer - 1:
            break
        P, obj_p = _dictionary_step(Xn, P, W)
        log.append({"iteration": it, "step": "P", "objective": float(obj_p)})
    res.objective_log = log
    return res
