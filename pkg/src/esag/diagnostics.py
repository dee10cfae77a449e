"""Residual diagnostics and the bootstrap goodness-of-fit test for ESAG."""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import kolmogorov

from ._parallel import pmap
from .density import check_directions
from .errors import DataError, InsufficientDataError, OptimizationError, ShapeError
from .fit import MAX_DROP_FRACTION, FitOptions, FitResult, fit_mle
from .param import EsagMoments
from .sampling import SeededRng, sample_esag, sample_gaussian


@dataclass
class ResidualSet:
    r: np.ndarray
    Q: np.ndarray
    T0: np.ndarray
    T1: np.ndarray


@dataclass
class KsResult:
    statistic: float
    pvalue: float


@dataclass
class GofResult:
    ks_p: float
    ks_stat: float
    boot_ks_p: np.ndarray
    p_value: float
    B: int
    dropped: int
    t1_obs: np.ndarray
    t1_ref: np.ndarray
    fit: FitResult

    @property
    def qq(self) -> np.ndarray:
        """Two columns: sorted observed and sorted reference ``T1``."""
        return np.column_stack([np.sort(self.t1_obs), np.sort(self.t1_ref)])


def _quad_form(R: np.ndarray, m: EsagMoments) -> np.ndarray:
    proj = R @ m.eigvecs
    return (proj * proj) @ (1.0 / m.lam)


# residuals this short are rounding noise of a direction parallel to mu
_PARALLEL_TOL = 8.0 * np.finfo(float).eps


def _project_out(Y: np.ndarray, u: np.ndarray) -> np.ndarray:
    R = Y - np.outer(Y @ u, u)
    R[np.linalg.norm(R, axis=1) <= _PARALLEL_TOL] = 0.0
    return R


def _residuals_shared(Y: np.ndarray, m: EsagMoments):
    yhat = m.mu / np.linalg.norm(m.mu)
    R = _project_out(Y, yhat)
    Q = np.maximum(_quad_form(R, m), 0.0)
    mu2 = float(m.mu @ m.mu)
    return R, Q, mu2 * Q, (mu2 + float(np.sum(m.lam))) * Q


def residuals(data, moments: EsagMoments | Sequence[EsagMoments]) -> ResidualSet:
    """Directional residuals, their quadratic forms and the ``T0``/``T1`` statistics.

    ``moments`` is either one fitted model shared by every observation or a
    sequence with one entry per row of ``data``.
    """
    Y = check_directions(data)
    if isinstance(moments, EsagMoments):
        if moments.d != Y.shape[1]:
            raise ShapeError("moments and data differ in dimension")
        return ResidualSet(*_residuals_shared(Y, moments))
    moments = list(moments)
    if len(moments) != Y.shape[0]:
        raise ShapeError("need one set of moments per observation")
    parts = [_residuals_shared(Y[i : i + 1], m) for i, m in enumerate(moments)]
    return ResidualSet(*(np.concatenate([p[k] for p in parts]) for k in range(4)))


def residual_identity(z, moments: EsagMoments):
    """Both sides of ``Q = |U_{-d}|^2 / |X|^2`` for Gaussian draws ``z``.

    ``z`` holds standard normal rows; ``X = V^{1/2} z + mu`` and ``U = P^T z``.
    Returns ``(Q, rhs)``; rows with ``X = 0`` are not allowed.
    """
    Z = np.atleast_2d(np.asarray(z, dtype=float))
    P, lam = moments.eigvecs, moments.lam
    X = moments.mu + Z @ ((P * np.sqrt(lam)) @ P.T).T
    nx2 = np.sum(X * X, axis=1)
    Y = X / np.sqrt(nx2)[:, None]
    R = _project_out(Y, P[:, -1])
    Q = _quad_form(R, moments)
    U = Z @ P
    rhs = np.sum(U[:, :-1] ** 2, axis=1) / nx2
    return Q, rhs


def ks_statistic(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DataError("KS test needs two nonempty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    D = ks_statistic(a, b)
    na, nb = np.size(a), np.size(b)
    en = na * nb / (na + nb)
    return KsResult(D, float(kolmogorov(np.sqrt(en) * D)))


def ks_one_sample_distance(x, cdf) -> float:
    """``sup |F_n - F|`` for a sample and a vectorised CDF."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _ks_p(Y: np.ndarray, ref_rng: SeededRng, options: FitOptions):
    fit = fit_mle(Y, options)
    m = fit.moments
    t1_obs = _residuals_shared(Y, m)[3]
    Yref = sample_esag(m, Y.shape[0], ref_rng)
    t1_ref = _residuals_shared(Yref, m)[3]
    return fit, t1_obs, t1_ref, ks_two_sample(t1_obs, t1_ref)


def _boot_replicate(b: int, moments: EsagMoments, n: int, rng: SeededRng,
                    options: FitOptions) -> float | None:
    stream = rng.child(b)
    Yb = sample_esag(moments, n, stream.child(0))
    try:
        fit, _, _, ks = _ks_p(Yb, stream.child(1), options)
    except (OptimizationError, InsufficientDataError):
        return None
    return ks.pvalue if fit.converged else None


def gof_test(data, B: int, rng: SeededRng, options: FitOptions | None = None,
             threads: int = 1) -> GofResult:
    """Parametric-bootstrap goodness-of-fit test of the ESAG model.

    The statistic ``KS_p`` compares observed ``T1`` values with a reference
    sample simulated from the fitted model.  Its null distribution is
    estimated from ``B`` datasets drawn from the fit, each refitted; the
    returned ``p_value`` is the fraction of bootstrap ``KS_p`` strictly below
    the observed one.  Replicate ``b`` uses the stream ``rng.child(b)``.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    Y = check_directions(data)
    opts = options or FitOptions()
    fit, t1_obs, t1_ref, ks = _ks_p(Y, rng.child(0).child(1), opts)
    if not fit.converged:
        raise OptimizationError("fit to the observed data did not converge")
    boot_opts = replace(opts, start=None)
    out = pmap(partial(_boot_replicate, moments=fit.moments, n=Y.shape[0], rng=rng,
                       options=boot_opts), range(1, B + 1), threads)
    kept = np.array([v for v in out if v is not None])
    dropped = B - kept.size
    if dropped > MAX_DROP_FRACTION * B or kept.size == 0:
        raise OptimizationError(f"{dropped} of {B} bootstrap fits failed")
    s = int(np.sum(kept < ks.pvalue))
    return GofResult(ks.pvalue, ks.statistic, kept, s / kept.size, B, dropped,
                     t1_obs, t1_ref, fit)


def t1_pivot_quality(moments: EsagMoments, n: int, rng) -> tuple[float, float]:
    """KS distances of exact-parameter ``T0`` and ``T1`` draws to chi-square(d-1)."""
    if n < 100:
        raise ValueError("need n >= 100 draws")
    X, _ = sample_gaussian(moments, n, rng)
    Y = X / np.linalg.norm(X, axis=1, keepdims=True)
    _, _, T0, T1 = _residuals_shared(Y, moments)
    cdf = stats.chi2(moments.d - 1).cdf
    return ks_one_sample_distance(T0, cdf), ks_one_sample_distance(T1, cdf)
