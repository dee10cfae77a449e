import mpmath as mp
import numpy as np
import pytest

from esag.param import plane_rotation

mp.mp.dps = 40

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def mfun_quad(k: int, t: float) -> float:
    """M_k(t) by adaptive high-precision quadrature of its defining integral."""
    t = mp.mpf(t)
    c = max(t, 0)
    pts = sorted({mp.mpf(0), 1 / (1 + abs(t)), c + 1, c + 5, c + 15, c + 60})
    val = mp.quad(lambda x: x**k * mp.exp(-((x - t) ** 2) / 2), pts + [mp.inf])
    return float(val / mp.sqrt(2 * mp.pi))


def basis_literal(mu):
    """Columns u_j / |u_j| written out entry by entry, zero columns -> e_j.

    Runs in mpmath so that products of tiny entries do not underflow.
    """
    mu = [mp.mpf(float(v)) for v in mu]
    d = len(mu)
    cols = []
    for j in range(1, d + 1):
        u = [mp.mpf(0)] * d
        if j == 1:
            u[0], u[1] = -mu[1], mu[0]
        elif j < d:
            for i in range(j):
                u[i] = mu[i] * mu[j]
            u[j] = -sum(m * m for m in mu[:j])
        else:
            u = list(mu)
        norm = mp.sqrt(sum(v * v for v in u))
        if norm == 0:
            u = [mp.mpf(0)] * d
            u[j - 1] = mp.mpf(1)
            norm = mp.mpf(1)
        cols.append([float(v / norm) for v in u])
    return np.array(cols).T


def rotation_literal(theta, phi_flat, d):
    """R_{d-1} from the product formula with the flat latitude subscripts."""
    R = np.eye(d - 1)
    for m in range(1, d - 2):
        R = R @ plane_rotation(1, 2, theta[d - m - 2], d - 1)
        for j in range(1, d - m - 1):
            idx = 1 - j + (d - m - 1) * (d - m - 2) // 2
            R = R @ plane_rotation(j + 1, j + 2, phi_flat[idx - 1], d - 1)
    return R @ plane_rotation(1, 2, theta[0], d - 1)


def random_omega(rng, d, mu_scale=3.0, gamma_scale=3.0):
    from esag.param import OmegaParams, gamma_length
    return OmegaParams(rng.normal(0, mu_scale, d), rng.normal(0, gamma_scale, gamma_length(d)))


@pytest.fixture
def study_omega():
    from esag.param import OmegaParams
    return OmegaParams([2.0, -2.0, -1.0, -3.0], [-2.0, 5.0, 3.0, 5.0, -8.0])
