"""Unconstrained parameterisation of the ESAG family.

An ESAG on the unit sphere in R^d is indexed by ``omega = (mu, gamma)``, a
point of R^p with ``p = (d - 1)(d + 2) / 2``.  ``mu`` is the Gaussian mean
and ``gamma`` is split into ``d - 2`` groups ``gamma_j`` of length ``j + 1``.
Each group is read as Cartesian coordinates of a point whose spherical
coordinates give one radial parameter (an eigenvalue gap of ``V``) and the
orientation angles of a plane-rotation product.  The map always produces a
covariance with ``V mu = mu`` and ``det V = 1``.

The array-level helpers (leading underscore) accept arbitrary leading batch
axes so that the optimiser can evaluate many parameter vectors at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from .errors import InvalidParameterError, ShapeError


def n_params(d: int) -> int:
    """Length of ``omega`` for dimension ``d``."""
    return (d - 1) * (d + 2) // 2


def gamma_length(d: int) -> int:
    return (d - 2) * (d + 1) // 2


def dim_from_gamma_length(length: int) -> int:
    """Invert ``gamma_length``; raise :class:`ShapeError` when impossible."""
    disc = 9 + 8 * length
    root = math.isqrt(disc)
    if length < 2 or root * root != disc or (1 + root) % 2:
        raise ShapeError(f"gamma of length {length} matches no dimension d >= 3")
    return (1 + root) // 2


def dim_from_omega_length(length: int) -> int:
    disc = 9 + 8 * length
    root = math.isqrt(disc)
    if length < 5 or root * root != disc or (root - 1) % 2:
        raise ShapeError(f"omega of length {length} matches no dimension d >= 3")
    return (root - 1) // 2


@lru_cache(maxsize=None)
def group_slices(d: int) -> tuple[slice, ...]:
    """Slices of the flat ``gamma`` vector holding ``gamma_1 .. gamma_{d-2}``."""
    out, start = [], 0
    for j in range(1, d - 1):
        out.append(slice(start, start + j + 1))
        start += j + 1
    return tuple(out)


@dataclass(frozen=True)
class OmegaParams:
    """Unconstrained ESAG parameters ``(mu, gamma)``."""

    mu: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        d = mu.size
        if d < 3:
            raise ShapeError(f"dimension must be at least 3, got {d}")
        if gamma.size != gamma_length(d):
            raise ShapeError(
                f"gamma must have length {gamma_length(d)} for d={d}, got {gamma.size}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(gamma))):
            raise InvalidParameterError("parameters must be finite")
        if not np.any(mu):
            raise InvalidParameterError("mu must be nonzero")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self) -> int:
        return self.mu.size

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.mu, self.gamma])

    @classmethod
    def from_vector(cls, omega, d: int | None = None) -> "OmegaParams":
        omega = np.asarray(omega, dtype=float).reshape(-1)
        if d is None:
            d = dim_from_omega_length(omega.size)
        if omega.size != n_params(d):
            raise ShapeError(f"omega must have length {n_params(d)} for d={d}")
        return cls(omega[:d], omega[d:])

    def groups(self) -> list[np.ndarray]:
        return [self.gamma[s] for s in group_slices(self.d)]


@dataclass(frozen=True)
class SphericalGroups:
    """Radial and orientation parameters obtained from ``gamma``.

    ``phi[j - 1]`` holds the latitudes of group ``j`` (empty for ``j = 1``).
    """

    r: np.ndarray
    theta: np.ndarray
    phi: tuple[np.ndarray, ...]

    @property
    def d(self) -> int:
        return self.r.size + 2

    def flat_phi(self) -> np.ndarray:
        """Latitudes in the order ``phi_1, phi_2, ...`` used by the rotation product."""
        if len(self.phi) <= 1:
            return np.zeros(0)
        return np.concatenate(self.phi[1:])


@dataclass(frozen=True)
class EsagMoments:
    """Constrained moments ``(mu, V)`` with their spectral factors.

    ``eigvecs[:, j]`` pairs with ``lam[j]``; the last column is ``mu / |mu|``
    and ``lam[-1] == 1``.
    """

    mu: np.ndarray
    V: np.ndarray
    lam: np.ndarray
    eigvecs: np.ndarray

    @property
    def d(self) -> int:
        return self.mu.size

    @classmethod
    def from_spectral(cls, mu, lam, eigvecs) -> "EsagMoments":
        mu = np.asarray(mu, dtype=float)
        lam = np.asarray(lam, dtype=float)
        eigvecs = np.asarray(eigvecs, dtype=float)
        V = (eigvecs * lam) @ eigvecs.T
        return cls(mu, 0.5 * (V + V.T), lam, eigvecs)


# ---------------------------------------------------------------------------
# array-level pipeline


def _basis(mu: np.ndarray) -> np.ndarray:
    """Orthonormal basis with columns ``u_j / |u_j|``; ``mu`` has shape (..., d)."""
    mu = np.asarray(mu, dtype=float)
    d = mu.shape[-1]
    scale = np.max(np.abs(mu), axis=-1, keepdims=True)
    if np.any(scale == 0):
        raise InvalidParameterError("mu must be nonzero")
    # every column is scaled by its own entries, never by a global factor, so
    # subnormal components survive
    u = np.zeros(mu.shape[:-1] + (d, d))
    c1 = np.max(np.abs(mu[..., :2]), axis=-1)
    c1 = np.where(c1 > 0, c1, 1.0)
    u[..., 0, 0] = -mu[..., 1] / c1
    u[..., 1, 0] = mu[..., 0] / c1
    for j in range(2, d):  # 1-based index j; column j - 1
        # column u_j / (s t) with s = max|m_1..m_j|, t = max(s, |m_{j+1}|), so
        # no product of two small entries can underflow to zero
        head, nxt = mu[..., :j], mu[..., j]
        s = np.max(np.abs(head), axis=-1)
        t = np.maximum(s, np.abs(nxt))
        ok = s > 0
        s1, t1 = np.where(ok, s, 1.0), np.where(ok, t, 1.0)
        a = head / s1[..., None]
        u[..., :j, j - 1] = np.where(ok[..., None], a * (nxt / t1)[..., None], 0.0)
        u[..., j, j - 1] = np.where(ok, -np.sum(a * a, axis=-1) * (s1 / t1), 0.0)
    u[..., :, d - 1] = mu / scale
    # bring every column to unit max entry so the norm cannot underflow
    cmax = np.max(np.abs(u), axis=-2)
    zero = cmax == 0
    if np.any(zero):
        idx = np.nonzero(zero)
        u[idx[:-1] + (idx[-1], idx[-1])] = 1.0
        cmax = np.where(zero, 1.0, cmax)
    u = u / cmax[..., None, :]
    norms = np.linalg.norm(u, axis=-2)
    return u / norms[..., None, :]


def _group_angles(gamma: np.ndarray, d: int):
    """Return ``r`` (..., d-2), ``theta`` (..., d-2) and a list of latitude arrays."""
    gamma = np.asarray(gamma, dtype=float)
    r, theta, phi = [], [], []
    for j, sl in enumerate(group_slices(d), start=1):
        g = gamma[..., sl]
        r.append(np.sqrt(np.sum(g * g, axis=-1)))
        a, b = g[..., j - 1], g[..., j]
        ab = np.hypot(a, b)
        if j == 1:
            theta.append(np.arctan2(b, a))
        else:
            safe = np.where(ab > 0, ab, 1.0)
            t = np.arccos(np.clip(a / safe, -1.0, 1.0))
            theta.append(np.where(ab > 0, np.where(b < 0, -t, t), 0.0))
        # tail[k] = sqrt(sum_{l >= k} gamma_{j,l}^2)
        tail = np.sqrt(np.cumsum((g * g)[..., ::-1], axis=-1)[..., ::-1])
        lat = np.empty(g.shape[:-1] + (j - 1,))
        for k in range(j - 1):
            den = tail[..., k]
            safe = np.where(den > 0, den, 1.0)
            lat[..., k] = np.where(den > 0, np.arccos(np.clip(g[..., k] / safe, -1.0, 1.0)), 0.0)
        phi.append(lat)
    return np.stack(r, axis=-1), np.stack(theta, axis=-1), phi


def _eigenvalues(r: np.ndarray) -> np.ndarray:
    """Eigenvalues ``lambda_1 .. lambda_d`` from radial parameters (..., d-2)."""
    r = np.asarray(r, dtype=float)
    d = r.shape[-1] + 2
    logs = np.log1p(r)
    weights = d - 1 - np.arange(1, d - 1)  # d - (j + 1)
    log_l1 = -np.sum(weights * logs, axis=-1) / (d - 1)
    log_lam = np.concatenate(
        [log_l1[..., None], log_l1[..., None] + np.cumsum(logs, axis=-1)], axis=-1)
    lam = np.exp(log_lam)
    return np.concatenate([lam, np.ones(lam.shape[:-1] + (1,))], axis=-1)


@lru_cache(maxsize=None)
def rotation_factors(d: int) -> tuple[tuple[int, int, str, int, int], ...]:
    """Ordered plane rotations making up ``R_{d-1}``.

    Each entry is ``(j, k, kind, group, pos)`` with 1-based plane indices
    ``j < k``; ``kind`` is ``"theta"`` (angle ``theta_group``) or ``"phi"``
    (angle ``phi_group[pos]``, 1-based position within the group).
    """
    out = []
    for m in range(1, d - 2):
        g = d - m - 1
        out.append((1, 2, "theta", g, 0))
        for jj in range(1, g):
            out.append((jj + 1, jj + 2, "phi", g, g - jj))
    out.append((1, 2, "theta", 1, 0))
    return tuple(out)


def _rotate_columns(A: np.ndarray, theta, phi, d: int) -> np.ndarray:
    """Right-multiply ``A`` (..., n, d-1) by ``R_{d-1}`` built from the angles."""
    A = np.array(A, dtype=float, copy=True)
    for j, k, kind, g, pos in rotation_factors(d):
        ang = theta[..., g - 1] if kind == "theta" else phi[g - 1][..., pos - 1]
        c = np.cos(ang)[..., None]
        s = np.sin(ang)[..., None]
        aj = A[..., :, j - 1].copy()
        ak = A[..., :, k - 1]
        A[..., :, j - 1] = c * aj + s * ak
        A[..., :, k - 1] = c * ak - s * aj
    return A


def _spectral(mu: np.ndarray, gamma: np.ndarray):
    """Eigenvalues (..., d) and eigenvector matrices (..., d, d) for batches."""
    mu = np.asarray(mu, dtype=float)
    d = mu.shape[-1]
    basis = _basis(mu)
    r, theta, phi = _group_angles(gamma, d)
    P = basis.copy()
    P[..., :, : d - 1] = _rotate_columns(basis[..., :, : d - 1], theta, phi, d)
    return _eigenvalues(r), P


# ---------------------------------------------------------------------------
# public operations


def orthonormal_basis(mu) -> np.ndarray:
    """Columns ``v~_1 .. v~_d``; the last column is ``mu / |mu|``.

    Raises
    ------
    InvalidParameterError
        If ``mu`` is the zero vector.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size < 3:
        raise ShapeError("mu must have at least 3 entries")
    return _basis(mu)


def gamma_to_groups(gamma) -> SphericalGroups:
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    d = dim_from_gamma_length(gamma.size)
    r, theta, phi = _group_angles(gamma, d)
    return SphericalGroups(r, theta, tuple(phi))


def radial_to_eigenvalues(r, d: int | None = None) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(-1)
    if d is not None and r.size != d - 2:
        raise ShapeError(f"expected {d - 2} radial parameters, got {r.size}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise InvalidParameterError("radial parameters must be finite and nonnegative")
    return _eigenvalues(r)


def plane_rotation(j: int, k: int, angle: float, dim: int) -> np.ndarray:
    """Identity with ``cos, -sin, sin, cos`` at rows/cols ``(j, k)`` (1-based)."""
    if not (1 <= j < k <= dim):
        raise ShapeError(f"need 1 <= j < k <= dim, got j={j}, k={k}, dim={dim}")
    R = np.eye(dim)
    c, s = math.cos(angle), math.sin(angle)
    R[j - 1, j - 1] = c
    R[j - 1, k - 1] = -s
    R[k - 1, j - 1] = s
    R[k - 1, k - 1] = c
    return R


def assemble_rotation(groups: SphericalGroups, d: int | None = None) -> np.ndarray:
    """The (d-1) x (d-1) rotation ``R_{d-1}``."""
    if d is None:
        d = groups.d
    if d < 3 or groups.r.size != d - 2 or groups.theta.size != d - 2:
        raise ShapeError(f"groups do not match dimension {d}")
    return _rotate_columns(np.eye(d - 1), groups.theta, list(groups.phi), d)


def omega_to_moments(omega: OmegaParams) -> EsagMoments:
    lam, P = _spectral(omega.mu, omega.gamma)
    return EsagMoments.from_spectral(omega.mu, lam, P)


def ag_moments(mu, lam, eigvecs) -> EsagMoments:
    """Moments of a general angular Gaussian given its spectral factors.

    No ESAG constraint is enforced; used for the misspecified scenarios.
    """
    return EsagMoments.from_spectral(mu, lam, eigvecs)
