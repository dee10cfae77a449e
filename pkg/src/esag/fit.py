"""Maximum-likelihood fitting over the unconstrained parameter space."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import partial
import logging

import numpy as np

from ._parallel import pmap
from .density import check_directions, log_likelihood_batch
from .errors import InsufficientDataError, InvalidParameterError, OptimizationError
from .param import EsagMoments, OmegaParams, group_slices, n_params, omega_to_moments
from .sampling import SeededRng, as_generator

log = logging.getLogger(__name__)

# offset applied to gamma groups that start exactly at zero; the likelihood
# is even in each group there, so central differences see a zero gradient
KINK_OFFSET = 1e-2
MAX_DROP_FRACTION = 0.2


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 500
    gtol: float = 1e-8
    xtol: float = 1e-10
    restarts: int = 3
    fd_step: float = 1e-6
    start: OmegaParams | None = None
    restart_seed: int = 0

    def __post_init__(self):
        if self.gtol <= 0 or self.xtol <= 0 or self.fd_step <= 0:
            raise InvalidParameterError("tolerances and step scale must be positive")
        if self.max_iter < 1 or self.restarts < 0:
            raise InvalidParameterError("max_iter must be >= 1 and restarts >= 0")


@dataclass
class FitResult:
    omega: OmegaParams
    moments: EsagMoments
    loglik: float
    converged: bool
    iterations: int
    trace: list[tuple[int, float]] = field(default_factory=list)
    grad_norm: float = float("nan")
    starts_tried: int = 1

    @property
    def mu(self) -> np.ndarray:
        return self.omega.mu

    @property
    def gamma(self) -> np.ndarray:
        return self.omega.gamma

    @property
    def V(self) -> np.ndarray:
        return self.moments.V


@dataclass
class BootstrapSummary:
    B: int
    mu_se: np.ndarray
    lam_se: np.ndarray
    V_dispersion: float
    dropped: int = 0
    mu_reps: np.ndarray | None = None
    lam_reps: np.ndarray | None = None


class _Objective:
    """Mean negative log-likelihood with a batched central-difference gradient."""

    def __init__(self, Y: np.ndarray, fd_step: float):
        self.Y = Y
        self.n = Y.shape[0]
        self.fd_step = fd_step
        self.evals = 0

    def values(self, X: np.ndarray) -> np.ndarray:
        self.evals += X.shape[0]
        return -log_likelihood_batch(self.Y, X) / self.n

    def steps(self, x: np.ndarray) -> np.ndarray:
        return self.fd_step * (1.0 + np.abs(x))

    def value_and_grad(self, x: np.ndarray):
        h = self.steps(x)
        p = x.size
        E = np.diag(h)
        X = np.vstack([x[None, :], x + E, x - E])
        f = self.values(X)
        g = (f[1 : p + 1] - f[p + 1 :]) / (2.0 * h)
        return f[0], g

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.value_and_grad(x)[1]


def _bfgs(obj: _Objective, x0: np.ndarray, opts: FitOptions):
    """Quasi-Newton minimisation with inverse-Hessian updates and backtracking.

    Returns ``(x, f, g, converged, iterations, trace)``.
    """
    x = x0.astype(float).copy()
    f, g = obj.value_and_grad(x)
    if not np.isfinite(f):
        return x, f, g, False, 0, []
    p = x.size
    H = np.eye(p)
    scaled = False
    trace = [(0, -f * obj.n)]
    converged = False
    it = 0
    while it < opts.max_iter:
        if not np.all(np.isfinite(g)):
            break
        if np.max(np.abs(g)) <= opts.gtol:
            converged = True
            break
        direction = -H @ g
        slope = g @ direction
        if not slope < 0:
            H = np.eye(p)
            direction, slope = -g, -(g @ g)
        alpha = 1.0 if scaled else min(1.0, 1.0 / max(np.max(np.abs(g)), 1e-12))
        # speculative: value and gradient at the full step in one batch
        z = x + alpha * direction
        fz, gz = obj.value_and_grad(z)
        accepted = np.isfinite(fz) and fz <= f + 1e-4 * alpha * slope
        tries = 0
        while not accepted and tries < 60:
            if np.isfinite(fz):
                # safeguarded quadratic interpolation
                denom = 2.0 * (fz - f - alpha * slope)
                new = -slope * alpha * alpha / denom if denom > 0 else 0.5 * alpha
                alpha = float(np.clip(new, 0.1 * alpha, 0.5 * alpha))
            else:
                alpha *= 0.5
            z = x + alpha * direction
            fz = obj.values(z[None, :])[0]
            accepted = np.isfinite(fz) and fz <= f + 1e-4 * alpha * slope
            tries += 1
            gz = None
        if not accepted:
            if not np.allclose(H, np.eye(p)):
                H = np.eye(p)
                scaled = False
                continue
            # no descent left that function values can resolve
            converged = np.max(np.abs(g)) <= np.sqrt(opts.gtol) * 10.0
            break
        if gz is None:
            gz = obj.grad(z)
        s = z - x
        y = gz - g
        x, f_old, f, g = z, f, fz, gz
        it += 1
        trace.append((it, -f * obj.n))
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                H = np.eye(p) * (sy / (y @ y))
                scaled = True
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * (y @ Hy) + rho) * np.outer(s, s)
        if np.max(np.abs(s)) <= opts.xtol * (1.0 + np.max(np.abs(x))) and abs(f_old - f) <= opts.xtol * (1.0 + abs(f)):
            converged = True
            break
    return x, f, g, converged, it, trace


def default_start(Y: np.ndarray) -> OmegaParams:
    """Mean direction scaled by ``d`` and isotropic ``gamma = 0``."""
    d = Y.shape[1]
    ybar = Y.mean(axis=0)
    norm = np.linalg.norm(ybar)
    mu0 = ybar * d / (norm + 1e-12)
    if not np.any(mu0):
        mu0 = np.zeros(d)
        mu0[-1] = d
    return OmegaParams(mu0, np.zeros((d - 2) * (d + 1) // 2))


def _off_kink(x: np.ndarray, d: int) -> np.ndarray:
    x = x.copy()
    gamma = x[d:]
    for sl in group_slices(d):
        if not np.any(gamma[sl]):
            gamma[sl] = KINK_OFFSET / np.sqrt(sl.stop - sl.start)
    x[d:] = gamma
    return x


def fit_mle(data, options: FitOptions | None = None) -> FitResult:
    """Maximise the ESAG log-likelihood of ``data`` over the full parameter space.

    The primary start is ``options.start`` or :func:`default_start`.  When it
    fails to converge, up to ``options.restarts`` further starts perturb the
    mean by 10% relative noise; the highest-likelihood solution is returned.

    Raises
    ------
    InsufficientDataError
        If there are fewer observations than parameters.
    OptimizationError
        If the objective is non-finite at every start.
    """
    opts = options or FitOptions()
    Y = check_directions(data)
    n, d = Y.shape
    p = n_params(d)
    if n < p:
        raise InsufficientDataError(f"need at least {p} observations for d={d}, got {n}")
    start = opts.start if opts.start is not None else default_start(Y)
    if start.d != d:
        raise InvalidParameterError("starting value has the wrong dimension")
    obj = _Objective(Y, opts.fd_step)
    x0 = _off_kink(start.to_vector(), d)

    best = None
    tried = 0
    gen = as_generator(SeededRng(opts.restart_seed))
    for attempt in range(opts.restarts + 1):
        if attempt:
            x0 = start.to_vector()
            x0[:d] = x0[:d] * (1.0 + 0.1 * gen.standard_normal(d))
            x0[d:] = x0[d:] + 0.1 * gen.standard_normal(p - d)
            x0 = _off_kink(x0, d)
        tried += 1
        x, f, g, conv, it, trace = _bfgs(obj, x0, opts)
        if np.isfinite(f) and (best is None or (conv, -f) > (best[3], -best[1])):
            best = (x, f, g, conv, it, trace)
        if best is not None and best[3]:
            break
        log.debug("start %d did not converge (f=%s)", attempt, f)
    if best is None:
        raise OptimizationError("log-likelihood is not finite at any starting value")
    x, f, g, conv, it, trace = best
    omega = OmegaParams(x[:d], x[d:])
    return FitResult(omega, omega_to_moments(omega), float(-f * n), bool(conv), it, trace,
                     float(np.max(np.abs(g))), tried)


def _resample_indices(rng: SeededRng, n: int) -> np.ndarray:
    return as_generator(rng).integers(0, n, size=n)


def _bootstrap_one(b: int, Y: np.ndarray, rng: SeededRng, options: FitOptions):
    idx = _resample_indices(rng.child(b), Y.shape[0])
    try:
        res = fit_mle(Y[idx], options)
    except (OptimizationError, InsufficientDataError):
        return None
    if not res.converged:
        return None
    return res.omega.mu, res.moments.lam, res.moments.V


def bootstrap_se(data, B: int, rng: SeededRng, options: FitOptions | None = None,
                 threads: int = 1) -> BootstrapSummary:
    """Nonparametric bootstrap standard errors of ``mu`` and the free eigenvalues.

    Replicate ``b`` resamples rows with the stream ``rng.child(b)``.  No
    standard errors are produced for ``gamma``.
    """
    if B < 2:
        raise InvalidParameterError("bootstrap needs B >= 2")
    Y = check_directions(data)
    opts = options or FitOptions()
    if opts.start is not None:
        opts = replace(opts, start=None)
    out = pmap(partial(_bootstrap_one, Y=Y, rng=rng, options=opts), range(B), threads)
    kept = [o for o in out if o is not None]
    dropped = B - len(kept)
    if dropped > MAX_DROP_FRACTION * B:
        raise OptimizationError(f"{dropped} of {B} bootstrap fits failed")
    if len(kept) < 2:
        raise OptimizationError("fewer than two bootstrap fits converged")
    d = Y.shape[1]
    mus = np.array([k[0] for k in kept])
    lams = np.array([k[1][: d - 1] for k in kept])
    Vs = np.array([k[2] for k in kept])
    disp = float(np.sqrt(np.mean(np.sum((Vs - Vs.mean(axis=0)) ** 2, axis=(1, 2)))))
    return BootstrapSummary(B, mus.std(axis=0, ddof=1), lams.std(axis=0, ddof=1), disp,
                            dropped, mus, lams)
