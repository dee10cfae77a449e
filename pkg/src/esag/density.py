"""ESAG density, its normaliser ``M_k`` and the sample log-likelihood."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

from .errors import DataError, InvalidParameterError, ShapeError
from .param import EsagMoments, OmegaParams, _spectral, dim_from_omega_length

LOG_2PI = math.log(2.0 * math.pi)
UNIT_TOL = 1e-8

# forward recursion in the scaled variable is used while 2|t|sqrt(k) <= this
_FORWARD_LIMIT = 8.0


def _log_mfun_nonneg(k: int, t: np.ndarray) -> np.ndarray:
    # all recursion terms are positive for t >= 0
    if k == 0:
        return log_ndtr(t)
    phi = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    prev = ndtr(t)
    cur = phi + t * prev
    for j in range(2, k + 1):
        prev, cur = cur, t * cur + (j - 1) * prev
    return np.log(cur)


def _log_scaled_forward(k: int, t: np.ndarray) -> np.ndarray:
    """log of ``M_k(t) / phi(t)`` by forward recursion (moderate negative t)."""
    m0 = math.sqrt(math.pi / 2.0) * erfcx(-t / math.sqrt(2.0))
    if k == 0:
        return np.log(m0)
    prev, cur = m0, 1.0 + t * m0
    for j in range(2, k + 1):
        prev, cur = cur, t * cur + (j - 1) * prev
    return np.log(cur)


def _log_scaled_backward(k: int, t: np.ndarray) -> np.ndarray:
    """log of ``M_k(t) / phi(t)`` via the continued fraction for the ratios.

    The wanted solution is the minimal one of the three-term recurrence when
    ``t < 0``, so ratios ``rho_j = m_j / m_{j-1}`` are run backwards from a
    depth chosen so the truncation error falls below double precision.
    """
    m0 = math.sqrt(math.pi / 2.0) * erfcx(-t / math.sqrt(2.0))
    out = np.log(m0)
    if k == 0:
        return out
    tmin = float(np.min(np.abs(t)))
    depth = k + max(20, math.ceil((math.sqrt(k) + 19.0 / tmin) ** 2) - k)
    rho = np.zeros_like(t)
    for j in range(depth + 1, 1, -1):
        rho = (j - 1) / (rho - t)
        if j - 1 <= k:
            out = out + np.log(rho)
    return out


def log_mfun(k: int, t) -> np.ndarray:
    """``log M_k(t)`` where ``M_k(t) = (2 pi)^{-1/2} int_0^inf x^k exp(-(x-t)^2/2) dx``."""
    if int(k) != k or k < 0:
        raise InvalidParameterError(f"order must be a nonnegative integer, got {k}")
    k = int(k)
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, np.nan)
    pos = t >= 0
    if np.any(pos):
        out[pos] = _log_mfun_nonneg(k, t[pos])
    neg = t < 0
    if np.any(neg):
        tn = t[neg]
        fwd = 2.0 * np.abs(tn) * math.sqrt(k) <= _FORWARD_LIMIT
        res = np.empty(tn.shape)
        if np.any(fwd):
            res[fwd] = _log_scaled_forward(k, tn[fwd])
        if np.any(~fwd):
            res[~fwd] = _log_scaled_backward(k, tn[~fwd])
        out[neg] = res - 0.5 * tn * tn - 0.5 * LOG_2PI
    return out


def mfun(k: int, t) -> np.ndarray:
    """``M_k(t)``; see :func:`log_mfun`."""
    return np.exp(log_mfun(k, t))


def check_directions(y, tol: float = UNIT_TOL, normalize: bool = False) -> np.ndarray:
    """Validate rows of ``y`` as unit vectors and return a float (n, d) array."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    if y.ndim != 2:
        raise ShapeError("directional data must be a vector or an (n, d) matrix")
    if y.shape[0] == 0:
        raise DataError("empty sample")
    if not np.all(np.isfinite(y)):
        raise DataError("non-finite entries in directional data")
    norms = np.linalg.norm(y, axis=1)
    if normalize:
        if np.any(norms == 0):
            raise DataError("cannot normalise a zero row")
        return y / norms[:, None]
    bad = np.abs(norms - 1.0) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DataError(f"row {i} has norm {norms[i]!r}, not 1 within {tol}")
    return y


def _log_density_spectral(Y, mu, lam, P) -> np.ndarray:
    """Log density of rows of ``Y`` (n, d) for batched factors; shape (..., n)."""
    d = Y.shape[-1]
    proj = Y @ P
    q = ((proj * proj) @ (1.0 / lam)[..., None])[..., 0]
    a = (Y @ mu[..., None])[..., 0]
    t = a / np.sqrt(q)
    mu2 = np.sum(mu * mu, axis=-1)[..., None]
    return (-0.5 * (d - 1) * LOG_2PI - 0.5 * d * np.log(q)
            + 0.5 * (t * t - mu2) + log_mfun(d - 1, t))


def log_density(y, moments: EsagMoments, normalize: bool = False) -> np.ndarray | float:
    """Log ESAG density at ``y`` (a unit vector or an (n, d) matrix of them)."""
    scalar = np.ndim(y) == 1
    Y = check_directions(y, normalize=normalize)
    if Y.shape[1] != moments.d:
        raise ShapeError(f"data have dimension {Y.shape[1]}, moments {moments.d}")
    if not np.all(moments.lam > 0):
        raise InvalidParameterError("V must be positive definite")
    out = _log_density_spectral(Y, moments.mu, moments.lam, moments.eigvecs)
    return float(out[0]) if scalar else out


def density(y, moments: EsagMoments) -> np.ndarray | float:
    return np.exp(log_density(y, moments))


def log_likelihood(data, omega: OmegaParams) -> float:
    Y = check_directions(data)
    if Y.shape[1] != omega.d:
        raise ShapeError(f"data have dimension {Y.shape[1]}, parameters {omega.d}")
    lam, P = _spectral(omega.mu, omega.gamma)
    return float(np.sum(_log_density_spectral(Y, omega.mu, lam, P)))


def log_likelihood_batch(Y: np.ndarray, omegas: np.ndarray) -> np.ndarray:
    """Log-likelihoods of validated data ``Y`` at each row of ``omegas`` (m, p).

    Rows with a zero mean vector give ``-inf``.
    """
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    d = Y.shape[1]
    if dim_from_omega_length(omegas.shape[1]) != d:
        raise ShapeError("parameter length does not match data dimension")
    mu, gamma = omegas[:, :d], omegas[:, d:]
    ok = np.any(mu != 0, axis=1) & np.all(np.isfinite(omegas), axis=1)
    out = np.full(omegas.shape[0], -np.inf)
    if np.any(ok):
        lam, P = _spectral(mu[ok], gamma[ok])
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            ll = np.sum(_log_density_spectral(Y, mu[ok], lam, P), axis=-1)
        out[ok] = np.where(np.isfinite(ll), ll, -np.inf)
    return out
