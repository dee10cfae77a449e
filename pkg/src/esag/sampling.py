"""Seeded samplers for ESAG, general angular Gaussians and the angular Cauchy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .param import EsagMoments

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededRng:
    """A reproducible random stream identified by ``(seed, stream)``.

    Every call to :meth:`generator` restarts the stream, so passing the same
    ``SeededRng`` twice yields identical draws.  Independent sub-streams are
    derived with :meth:`child`.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream <= _MASK64):
            raise ValueError("seed and stream must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, i: int) -> "SeededRng":
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, int(i)))
        lo, hi = ss.generate_state(2, dtype=np.uint32)
        return SeededRng(self.seed, (int(hi) << 32) | int(lo))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)) and not isinstance(rng, bool):
        return SeededRng(int(rng)).generator()
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"sample size must be a positive integer, got {n}")
    return int(n)


def sample_gaussian(moments: EsagMoments, n: int, rng):
    """Draw ``X = mu + P D^{1/2} P^T Z`` and return ``(X, Z)``."""
    n = _check_n(n)
    gen = as_generator(rng)
    Z = gen.standard_normal((n, moments.d))
    root = (moments.eigvecs * np.sqrt(moments.lam)) @ moments.eigvecs.T
    return moments.mu + Z @ root.T, Z


def sample_esag(moments: EsagMoments, n: int, rng) -> np.ndarray:
    """``n`` draws of ``X / |X|`` with ``X ~ N(mu, V)``.

    The same routine samples any angular Gaussian; ESAG constraints are a
    property of ``moments``, not of the sampler.
    """
    X, _ = sample_gaussian(moments, n, rng)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


sample_ag = sample_esag


def sample_angular_cauchy(mu, n: int, rng, scale: np.ndarray | None = None) -> np.ndarray:
    """Normalised multivariate Cauchy draws ``mu + S^{1/2} Z / |W|``.

    ``scale`` defaults to the identity.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if not np.any(mu):
        raise InvalidParameterError("mu must be nonzero")
    n = _check_n(n)
    gen = as_generator(rng)
    Z = gen.standard_normal((n, mu.size))
    W = gen.standard_normal(n)
    if scale is not None:
        scale = np.asarray(scale, dtype=float)
        lam, vec = np.linalg.eigh(scale)
        if np.any(lam <= 0):
            raise InvalidParameterError("Cauchy scale matrix must be positive definite")
        Z = Z @ ((vec * np.sqrt(lam)) @ vec.T).T
    C = mu + Z / np.abs(W)[:, None]
    return C / np.linalg.norm(C, axis=1, keepdims=True)


def mix_samples(a, b, alpha: float, rng) -> np.ndarray:
    """Row-wise mixture: row ``i`` comes from ``b`` with probability ``alpha``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"mixing proportion must lie in [0, 1], got {alpha}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError("samples to mix must have identical shapes")
    pick = as_generator(rng).random(a.shape[0]) < alpha
    return np.where(pick[:, None], b, a)
