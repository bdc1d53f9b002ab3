"""Upper limits on the sigmoid slope ``f'(0)`` that guarantee local stability.

All functions return a bound on ``f'(0) = beta / 2``.  ``math.inf`` means the
criterion imposes no constraint (the relevant Fisher information vanishes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from ._search import golden_section
from .errors import OutOfRange
from .geometry import Connection, as_basis, as_distribution, hellinger_sq, log_ratio, pencil_fisher

GRID_POINTS = 1024
SUP_TOL = 1e-10


class StabilityKind(str, Enum):
    K2_AT_OPTIMUM = "k2_at_optimum"
    K2_UNIFORM = "k2_uniform"
    E_PROJ_HELLINGER = "e_proj_hellinger"
    M_PROJ_POPOVICIU = "m_proj_popoviciu"
    GENERAL_K = "general_k"
    GENERAL_K_UNIFORM = "general_k_uniform"


@dataclass(frozen=True)
class StabilityReport:
    kind: StabilityKind
    bound_on_f_prime: float
    inputs: dict = field(default_factory=dict)

    @property
    def beta(self) -> float:
        """Largest admissible sigmoid ``beta`` (twice the slope bound)."""
        return 2.0 * self.bound_on_f_prime


def _safe_inv(num: float, den: float) -> float:
    return math.inf if den <= 0.0 else num / den


def bound_k2_at_optimum(w_star: float, g_at_star: float) -> float:
    """``2 / (w* (1 - w*) g(w*))`` for a two-point basis."""
    if not 0.0 < w_star < 1.0:
        raise OutOfRange(f"w_star must be in (0, 1), got {w_star}")
    if g_at_star < 0.0:
        raise OutOfRange(f"Fisher information must be non-negative, got {g_at_star}")
    return _safe_inv(2.0, w_star * (1.0 - w_star) * g_at_star)


def _wgw_on_grid(p1: np.ndarray, p2: np.ndarray, w: np.ndarray, connection: Connection) -> np.ndarray:
    if connection is Connection.E_AS_NABLA:
        mix = np.outer(w, p1) + np.outer(1.0 - w, p2)
        g = np.sum((p1 - p2) ** 2 / mix, axis=1)
    else:
        a = np.log(p1) - np.log(p2)
        z = np.outer(w, a) + np.log(p2)
        a = a - a[0]
        pw = np.exp(z - logsumexp(z, axis=1, keepdims=True))
        mean = pw @ a
        g = np.einsum("ni,ni->n", pw, (a[None, :] - mean[:, None]) ** 2)
    return w * (1.0 - w) * g


def sup_weighted_fisher(p1, p2, connection: Connection) -> tuple[float, float]:
    """``(argmax, max)`` of ``w (1 - w) g(w)`` over ``w`` in (0, 1).

    Dense grid, then golden-section refinement on the cells around the best
    grid point.
    """
    p1 = as_distribution(p1, "p1")
    p2 = as_distribution(p2, "p2")
    connection = Connection(connection)
    grid = (np.arange(GRID_POINTS) + 0.5) / GRID_POINTS
    vals = _wgw_on_grid(p1, p2, grid, connection)
    j = int(np.argmax(vals))
    lo = grid[j - 1] if j > 0 else 0.0
    hi = grid[j + 1] if j < GRID_POINTS - 1 else 1.0

    def neg(w):
        return -float(_wgw_on_grid(p1, p2, np.array([w]), connection)[0])

    w_best, f_best = golden_section(neg, lo, hi, tol=SUP_TOL)
    if -f_best < vals[j]:
        return float(grid[j]), float(vals[j])
    return float(w_best), -float(f_best)


def bound_k2_uniform(p1, p2, connection: Connection) -> float:
    """``2 / sup_w w (1 - w) g(w)``; valid without knowing the optimum."""
    _, sup = sup_weighted_fisher(p1, p2, connection)
    return _safe_inv(2.0, sup)


def bound_e_projection(p1, p2) -> float:
    """Closed-form e-projection bound ``2 / H^2(p1, p2)``; never below 1."""
    return _safe_inv(2.0, hellinger_sq(p1, p2))


def log_ratio_range(p1, p2) -> float:
    a = log_ratio(p1, p2)
    return float(a.max() - a.min())


def bound_m_projection(p1, p2) -> float:
    """Closed-form m-projection bound ``32 / (max_i a_i - min_i a_i)^2`` with ``a = log(p1/p2)``."""
    return _safe_inv(32.0, log_ratio_range(p1, p2) ** 2)


def bound_general_K(w_star, g_per_k) -> float:
    """``2 / (K max_k w_k (1 - w_k) g_k)``.

    ``g_k`` is the Fisher information of the line through ``p_k`` and its
    antipode at ``w*``, evaluated at coordinate ``w_k*`` (see
    :func:`geoproj.variants.pencil_fisher_vector`).
    """
    w = np.asarray(w_star, dtype=float)
    g = np.asarray(g_per_k, dtype=float)
    if w.shape != g.shape or w.ndim != 1:
        raise OutOfRange("w_star and g_per_k must be vectors of equal length")
    if w.min() <= 0.0 or w.max() >= 1.0:
        raise OutOfRange("w_star must be an interior simplex point")
    if g.min() < 0.0:
        raise OutOfRange("Fisher information must be non-negative")
    return _safe_inv(2.0, w.size * float(np.max(w * (1.0 - w) * g)))


def bound_general_uniform(basis, connection: Connection) -> float:
    """Optimum-free version of :func:`bound_general_K`.

    Each antipode is a mixture of the other members, and both the squared
    Hellinger distance and the range of a log ratio are convex in that
    mixture, so the worst pair of basis members caps every line at once.
    """
    P = as_basis(basis)
    K = P.shape[0]
    worst = 0.0
    if Connection(connection) is Connection.E_AS_NABLA:
        S = np.sqrt(P)
        for k in range(K):
            worst = max(worst, float(np.max(np.sum((S[k] - S) ** 2, axis=1))))
        return _safe_inv(2.0, K * worst)
    L = np.log(P)
    for k in range(K):
        a = L[k] - L
        worst = max(worst, float(np.max(a.max(axis=1) - a.min(axis=1))))
    return _safe_inv(32.0, K * worst**2)


def uniform_bound(basis, connection: Connection) -> float:
    """Best optimum-free bound available for this basis size."""
    P = as_basis(basis)
    if P.shape[0] == 2:
        return bound_k2_uniform(P[0], P[1], connection)
    return bound_general_uniform(P, connection)


def stability_reports(basis, connection: Connection, w_star=None) -> list[StabilityReport]:
    """Every applicable bound, sorted ascending (tightest first)."""
    from .variants import pencil_fisher_vector

    P = as_basis(basis)
    connection = Connection(connection)
    K = P.shape[0]
    out: list[StabilityReport] = []
    if K == 2:
        p1, p2 = P
        if connection is Connection.E_AS_NABLA:
            h = hellinger_sq(p1, p2)
            b = bound_e_projection(p1, p2)
            out.append(
                StabilityReport(
                    StabilityKind.E_PROJ_HELLINGER,
                    b,
                    {"hellinger_sq": h, "provable_floor": 1.0, "at_least_sqrt2": bool(b >= math.sqrt(2.0))},
                )
            )
        else:
            out.append(
                StabilityReport(
                    StabilityKind.M_PROJ_POPOVICIU,
                    bound_m_projection(p1, p2),
                    {"log_ratio_range": log_ratio_range(p1, p2)},
                )
            )
        w_arg, sup = sup_weighted_fisher(p1, p2, connection)
        out.append(StabilityReport(StabilityKind.K2_UNIFORM, _safe_inv(2.0, sup), {"argsup_w": w_arg, "sup": sup}))
        if w_star is not None:
            w1 = float(np.asarray(w_star, dtype=float)[0])
            g = pencil_fisher(p1, p2, w1, connection)
            out.append(
                StabilityReport(StabilityKind.K2_AT_OPTIMUM, bound_k2_at_optimum(w1, g), {"w_star": w1, "g": g})
            )
    else:
        out.append(StabilityReport(StabilityKind.GENERAL_K_UNIFORM, bound_general_uniform(P, connection), {"K": K}))
        if w_star is not None:
            w = np.asarray(w_star, dtype=float)
            g = pencil_fisher_vector(P, w, connection)
            out.append(
                StabilityReport(
                    StabilityKind.GENERAL_K,
                    bound_general_K(w, g),
                    {"K": K, "w_star": w.tolist(), "g": g.tolist()},
                )
            )
    out.sort(key=lambda r: r.bound_on_f_prime)
    return out


def recommended_beta(reports: list[StabilityReport], margin: float = 0.9) -> float:
    """``beta`` placing ``f'(0)`` at ``margin`` times the tightest finite bound (1.0 if none is finite)."""
    finite = [r.bound_on_f_prime for r in reports if math.isfinite(r.bound_on_f_prime)]
    if not finite:
        return 1.0
    return 2.0 * margin * min(finite)
