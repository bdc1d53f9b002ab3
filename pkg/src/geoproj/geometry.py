"""Discrete distributions as a dually flat exponential family.

A point is a strictly positive probability vector ``p`` of length ``d``.  The
last outcome is the reference: e-coordinates are ``log(p_i / p_d)`` and
m-coordinates are ``p_i`` for ``i < d``.

Which coordinate plays the role of the primal affine chart is selected by a
:class:`Connection`.  With ``E_AS_NABLA`` the primal chart is the
e-coordinate, the canonical divergence is ``KL(p || q)`` and the flat
submanifolds spanned by a basis are m-mixtures.  ``M_AS_NABLA`` swaps all of
that: the divergence becomes ``KL(q || p)`` and the submanifolds are
e-mixtures (normalized geometric means).
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, InvalidDistribution, InvalidWeights, ZeroProbability

P_FLOOR = 1e-12
SUM_TOL = 1e-12


class Connection(str, Enum):
    E_AS_NABLA = "e_as_nabla"
    M_AS_NABLA = "m_as_nabla"

    @property
    def dual(self) -> "Connection":
        if self is Connection.E_AS_NABLA:
            return Connection.M_AS_NABLA
        return Connection.E_AS_NABLA


def as_distribution(p, name: str = "p") -> np.ndarray:
    """Validate and return ``p`` as a float array on the open simplex."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidDistribution(f"{name}: expected a 1-D vector with at least 2 entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistribution(f"{name}: entries must be finite")
    if arr.min() < P_FLOOR:
        i = int(arr.argmin())
        raise ZeroProbability(f"{name}[{i}] = {arr[i]!r} is below the positivity floor {P_FLOOR}")
    s = arr.sum()
    if abs(s - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"{name}: entries sum to {s!r}, expected 1")
    return arr


def as_basis(basis, name: str = "basis") -> np.ndarray:
    """Validate a basis and return it as a ``(K, d)`` array."""
    rows = [as_distribution(b, f"{name}[{k}]") for k, b in enumerate(_rows(basis, name))]
    if len(rows) < 2:
        raise InvalidDistribution(f"{name}: need at least 2 members, got {len(rows)}")
    d = rows[0].size
    for k, r in enumerate(rows):
        if r.size != d:
            raise DimensionMismatch(f"{name}[{k}] has dimension {r.size}, expected {d}")
    return np.vstack(rows)


def _rows(basis, name):
    if isinstance(basis, np.ndarray):
        if basis.ndim != 2:
            raise InvalidDistribution(f"{name}: expected a 2-D array, got shape {basis.shape}")
        return list(basis)
    return list(basis)


def as_weights(w, K: int | None = None, name: str = "w") -> np.ndarray:
    """Validate an interior simplex point (all entries > 0, sum 1)."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1:
        raise InvalidWeights(f"{name}: expected a 1-D vector, got shape {arr.shape}")
    if K is not None and arr.size != K:
        raise DimensionMismatch(f"{name}: expected {K} weights, got {arr.size}")
    if not np.all(np.isfinite(arr)) or arr.min() <= 0.0:
        raise InvalidWeights(f"{name}: weights must be finite and strictly positive")
    if abs(arr.sum() - 1.0) > SUM_TOL * max(1, arr.size):
        raise InvalidWeights(f"{name}: weights sum to {arr.sum()!r}, expected 1")
    return arr


def _same_dim(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape != q.shape:
        raise DimensionMismatch(f"dimension mismatch: {p.shape} vs {q.shape}")


# -- coordinates and potentials ------------------------------------------------


def to_e_coordinates(p) -> np.ndarray:
    p = as_distribution(p)
    return np.log(p[:-1]) - np.log(p[-1])


def from_e_coordinates(xi) -> np.ndarray:
    z = np.append(np.asarray(xi, dtype=float), 0.0)
    return np.exp(z - logsumexp(z))


def to_m_coordinates(p) -> np.ndarray:
    return as_distribution(p)[:-1].copy()


def from_m_coordinates(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    return np.append(zeta, 1.0 - zeta.sum())


def potentials(p) -> tuple[float, float]:
    """Return ``(psi, phi)`` for the e-connection orientation.

    ``psi = -log p_d`` is the log-partition in e-coordinates and ``phi`` is the
    negative Shannon entropy, its Legendre dual.
    """
    p = as_distribution(p)
    return float(-np.log(p[-1])), float(np.dot(p, np.log(p)))


def affine_coordinates(p, connection: Connection) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(theta, eta)``: primal and dual affine coordinates of ``p``."""
    e, m = to_e_coordinates(p), to_m_coordinates(p)
    if Connection(connection) is Connection.E_AS_NABLA:
        return e, m
    return m, e


def dual_potentials(p, connection: Connection) -> tuple[float, float]:
    """``(psi(theta), phi(eta))`` with the roles fixed by ``connection``."""
    psi, phi = potentials(p)
    if Connection(connection) is Connection.E_AS_NABLA:
        return psi, phi
    return phi, psi


def legendre_residual(p, connection: Connection = Connection.E_AS_NABLA) -> float:
    theta, eta = affine_coordinates(p, connection)
    psi, phi = dual_potentials(p, connection)
    return psi + phi - float(np.dot(theta, eta))


# -- divergences ---------------------------------------------------------------


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.dot(p, np.log(p) - np.log(q)))


def kl_divergence(p, q) -> float:
    p = as_distribution(p, "p")
    q = as_distribution(q, "q")
    _same_dim(p, q)
    return _kl(p, q)


def canonical_divergence(p, q, connection: Connection) -> float:
    """Canonical divergence ``D(p, q)`` from the potentials.

    Computed as ``psi(theta_q) + phi(eta_p) - <eta_p, theta_q>``; equals
    ``KL(p||q)`` for ``E_AS_NABLA`` and ``KL(q||p)`` for ``M_AS_NABLA``.
    """
    p = as_distribution(p, "p")
    q = as_distribution(q, "q")
    _same_dim(p, q)
    theta_q, _ = affine_coordinates(q, connection)
    _, eta_p = affine_coordinates(p, connection)
    psi_q, _ = dual_potentials(q, connection)
    _, phi_p = dual_potentials(p, connection)
    return psi_q + phi_p - float(np.dot(eta_p, theta_q))


def divergence_theta_form(p, q, connection: Connection) -> float:
    """Bregman divergence of ``psi`` in the primal chart."""
    theta_p, eta_p = affine_coordinates(p, connection)
    theta_q, _ = affine_coordinates(q, connection)
    psi_p, _ = dual_potentials(p, connection)
    psi_q, _ = dual_potentials(q, connection)
    return psi_q - psi_p - float(np.dot(eta_p, theta_q - theta_p))


def divergence_eta_form(p, q, connection: Connection) -> float:
    """Bregman divergence of ``phi`` in the dual chart."""
    _, eta_p = affine_coordinates(p, connection)
    theta_q, eta_q = affine_coordinates(q, connection)
    _, phi_p = dual_potentials(p, connection)
    _, phi_q = dual_potentials(q, connection)
    return phi_p - phi_q - float(np.dot(theta_q, eta_p - eta_q))


def divergence(p: np.ndarray, q: np.ndarray, connection: Connection) -> float:
    """Unvalidated fast path for ``canonical_divergence``."""
    if connection is Connection.E_AS_NABLA:
        return _kl(p, q)
    return _kl(q, p)


def hellinger_sq(p1, p2) -> float:
    """Squared Hellinger distance ``sum_i (sqrt(p1_i) - sqrt(p2_i))**2``, in [0, 2]."""
    p1 = as_distribution(p1, "p1")
    p2 = as_distribution(p2, "p2")
    _same_dim(p1, p2)
    # extended precision so the result is correctly rounded on x86 (closed-form bounds stay exact)
    r1, r2 = np.sqrt(p1.astype(np.longdouble)), np.sqrt(p2.astype(np.longdouble))
    return float(np.sum((r1 - r2) ** 2))


def log_ratio(p1, p2) -> np.ndarray:
    p1 = as_distribution(p1, "p1")
    p2 = as_distribution(p2, "p2")
    _same_dim(p1, p2)
    return np.log(p1) - np.log(p2)


# -- mixtures --------------------------------------------------------------------


def _m_mix(basis: np.ndarray, w: np.ndarray) -> np.ndarray:
    q = w @ basis
    return q / q.sum()


def _e_mix(log_basis: np.ndarray, w: np.ndarray) -> np.ndarray:
    # hot path: inline max-shift instead of scipy's logsumexp (its per-call overhead dominates at small d)
    z = w @ log_basis
    e = np.exp(z - z.max())
    return e / e.sum()


def _check_weights_len(basis: np.ndarray, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size != basis.shape[0]:
        raise DimensionMismatch(f"expected {basis.shape[0]} weights, got shape {w.shape}")
    return w


def m_mixture(basis, w) -> np.ndarray:
    """Convex combination ``sum_k w_k p_k``."""
    basis = as_basis(basis)
    return _m_mix(basis, _check_weights_len(basis, w))


def e_mixture(basis, w) -> np.ndarray:
    """Log-linear mixture ``p ∝ exp(sum_k w_k log p_k)``."""
    basis = as_basis(basis)
    return _e_mix(np.log(basis), _check_weights_len(basis, w))


# -- Fisher information on one-dimensional pencils ------------------------------


def _unit_interval(w: float) -> float:
    w = float(w)
    if not 0.0 <= w <= 1.0:
        raise InvalidWeights(f"pencil coordinate must be in [0, 1], got {w}")
    return w


def fisher_m_pair(p1, p2, w: float) -> float:
    """Fisher information of ``w -> w p1 + (1-w) p2`` at ``w``."""
    p1 = as_distribution(p1, "p1")
    p2 = as_distribution(p2, "p2")
    _same_dim(p1, p2)
    w = _unit_interval(w)
    return float(np.sum((p1 - p2) ** 2 / (w * p1 + (1.0 - w) * p2)))


def fisher_e_pair(p1, p2, w: float) -> float:
    """Fisher information of the log-linear pencil between ``p1`` and ``p2``.

    Equal to the variance of ``a = log(p1/p2)`` under the pencil point at ``w``.
    """
    a = log_ratio(p1, p2)
    w = _unit_interval(w)
    z = w * a + np.log(p2)
    a = a - a[0]  # shift-invariant; makes a constant ratio give exactly zero
    pw = np.exp(z - logsumexp(z))
    mean = np.dot(pw, a)
    return float(np.dot(pw, (a - mean) ** 2))


def pencil_fisher(p1, p2, w: float, connection: Connection) -> float:
    """Fisher information along the flat line that ``connection`` projects onto."""
    if Connection(connection) is Connection.E_AS_NABLA:
        return fisher_m_pair(p1, p2, w)
    return fisher_e_pair(p1, p2, w)


def pencil_point(p1, p2, w: float, connection: Connection) -> np.ndarray:
    basis = as_basis([p1, p2])
    ww = np.array([w, 1.0 - w])
    if Connection(connection) is Connection.E_AS_NABLA:
        return _m_mix(basis, ww)
    return _e_mix(np.log(basis), ww)
