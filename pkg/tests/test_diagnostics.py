import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from esag.diagnostics import (residual_identity, gof_test, ks_one_sample_distance,
                              ks_statistic, ks_two_sample, residuals, t1_pivot_quality)
from esag.errors import DataError, OptimizationError, ShapeError
from esag.fit import FitOptions
from esag.param import OmegaParams, ag_moments, omega_to_moments
from esag.sampling import SeededRng, sample_esag

from conftest import random_omega


def _ecdf_sup_brute(a, b):
    pts = np.concatenate([a, b])
    return max(abs(np.mean(a <= x) - np.mean(b <= x)) for x in pts)


def _kolmogorov_series(x, terms=200):
    k = np.arange(1, terms + 1)
    return float(2 * np.sum((-1.0) ** (k - 1) * np.exp(-2 * k * k * x * x)))


# --- residuals ----------------------------------------------------------------------

def test_residual_at_mean_direction(study_omega):
    m = omega_to_moments(study_omega)
    y = m.mu / np.linalg.norm(m.mu)
    res = residuals(np.vstack([y, y]), m)
    assert np.all(res.Q == 0) and np.all(res.T1 == 0)
    assert np.max(np.abs(res.r)) <= 1e-15


def test_residual_orthogonal_to_mean(study_omega):
    m = omega_to_moments(study_omega)
    Y = sample_esag(m, 500, SeededRng(0))
    res = residuals(Y, m)
    assert np.max(np.abs(res.r @ m.mu)) <= 1e-13
    assert np.all(res.Q >= 0)


def test_t1_isotropic_factor():
    mu = np.array([2.0, -2.0, -1.0, -3.0])
    m = omega_to_moments(OmegaParams(mu, np.zeros(5)))
    Y = sample_esag(m, 50, SeededRng(1))
    res = residuals(Y, m)
    np.testing.assert_allclose(res.T1, 22.0 * res.Q, rtol=1e-14)
    np.testing.assert_allclose(res.T0, 18.0 * res.Q, rtol=1e-14)


def test_residual_quadratic_form_oracle(study_omega):
    m = omega_to_moments(study_omega)
    Y = sample_esag(m, 20, SeededRng(2))
    res = residuals(Y, m)
    yhat = m.mu / np.linalg.norm(m.mu)
    Pr = np.eye(4) - np.outer(yhat, yhat)
    Vinv = np.linalg.inv(m.V)
    for i, y in enumerate(Y):
        r = Pr @ y
        np.testing.assert_allclose(res.r[i], r, atol=1e-15)
        assert res.Q[i] == pytest.approx(r @ Vinv @ r, rel=1e-10)
        assert res.T1[i] == pytest.approx((18 + np.trace(m.V)) * (r @ Vinv @ r), rel=1e-10)


def test_per_observation_moments(study_omega):
    m = omega_to_moments(study_omega)
    other = omega_to_moments(OmegaParams([1.0, 1.0, 1.0, 1.0], np.ones(5)))
    Y = sample_esag(m, 6, SeededRng(3))
    res = residuals(Y, [m, other] * 3)
    a, b = residuals(Y[0::2], m), residuals(Y[1::2], other)
    np.testing.assert_allclose(res.T1[0::2], a.T1, rtol=1e-15)
    np.testing.assert_allclose(res.T1[1::2], b.T1, rtol=1e-15)
    with pytest.raises(ShapeError):
        residuals(Y, [m] * 5)
    with pytest.raises(ShapeError):
        residuals(Y[:, :3] / np.linalg.norm(Y[:, :3], axis=1, keepdims=True), m)


def test_projector_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = rng.normal(size=5)
        u /= np.linalg.norm(u)
        P = np.eye(5) - np.outer(u, u)
        assert np.max(np.abs(P @ P - P)) <= 1e-14


def test_rotation_equivariance(study_omega):
    m = omega_to_moments(study_omega)
    U, _ = np.linalg.qr(np.random.default_rng(4).normal(size=(4, 4)))
    rot = ag_moments(U @ m.mu, m.lam, U @ m.eigvecs)
    Y = sample_esag(m, 300, SeededRng(5))
    Yref = sample_esag(m, 300, SeededRng(6))
    a, b = residuals(Y, m), residuals(Y @ U.T, rot)
    np.testing.assert_allclose(a.Q, b.Q, rtol=1e-9, atol=1e-13)
    np.testing.assert_allclose(a.T1, b.T1, rtol=1e-9, atol=1e-13)
    ka = ks_two_sample(a.T1, residuals(Yref, m).T1)
    kb = ks_two_sample(b.T1, residuals(Yref @ U.T, rot).T1)
    assert ka.statistic == kb.statistic and ka.pvalue == pytest.approx(kb.pvalue, rel=1e-12)


# --- residual identity ----------------------------------------------------------------

def test_identity_zero_draw(study_omega):
    Q, rhs = residual_identity(np.zeros(4), omega_to_moments(study_omega))
    assert Q[0] == 0 and rhs[0] == 0


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_identity_random(d):
    rng = np.random.default_rng(d)
    m = omega_to_moments(random_omega(rng, d))
    Z = rng.standard_normal((2000, d))
    Q, rhs = residual_identity(Z, m)
    assert np.max(np.abs(Q - rhs) / np.maximum(1.0, rhs)) <= 1e-12


@pytest.mark.parametrize("d", [3, 5])
def test_chi_square_numerator(d):
    m = omega_to_moments(random_omega(np.random.default_rng(10 + d), d))
    Z = SeededRng(d).generator().standard_normal((100000, d))
    U = Z @ m.eigvecs
    assert np.mean(np.sum(U[:, :-1] ** 2, axis=1)) == pytest.approx(d - 1, rel=0.01)


# --- KS ------------------------------------------------------------------------------

def test_ks_examples():
    a = np.linspace(0, 1, 50)
    r = ks_two_sample(a, a)
    assert r.statistic == 0 and r.pvalue == 1.0
    r = ks_two_sample(a, a + 10)
    assert r.statistic == 1.0 and r.pvalue < 1e-15
    x, y = np.array([1.0, 2.0, 3.0]), np.array([1.5, 2.5, 3.5])
    assert ks_statistic(x, y) == pytest.approx(1 / 3, abs=1e-15)
    assert _ecdf_sup_brute(x, y) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(DataError):
        ks_statistic([], [1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30),
       st.lists(st.integers(-5, 5), min_size=1, max_size=30))
def test_ks_statistic_brute_force_with_ties(a, b):
    a, b = np.array(a, float), np.array(b, float)
    D = ks_statistic(a, b)
    assert D == pytest.approx(_ecdf_sup_brute(a, b), abs=1e-15)
    assert D == pytest.approx(stats.ks_2samp(a, b).statistic, abs=1e-15)


def test_ks_asymptotic_pvalue():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=300), rng.normal(0.1, 1, size=200)
    r = ks_two_sample(a, b)
    en = 300 * 200 / 500
    assert r.pvalue == pytest.approx(_kolmogorov_series(np.sqrt(en) * r.statistic), rel=1e-10)


def test_ks_one_sample():
    x = stats.chi2(3).rvs(size=400, random_state=1)
    D = ks_one_sample_distance(x, stats.chi2(3).cdf)
    assert D == pytest.approx(stats.kstest(x, stats.chi2(3).cdf).statistic, abs=1e-15)
    assert D < 1.63 / np.sqrt(400)


# --- pivots ------------------------------------------------------------------------------

def test_pivot_concentrated_isotropic():
    m = omega_to_moments(OmegaParams(100 / np.sqrt(4) * np.ones(4), np.zeros(5)))
    D0, D1 = t1_pivot_quality(m, 500, SeededRng(0))
    assert D0 < 0.05 and D1 < 0.05


def test_pivot_t1_better(study_omega):
    D0, D1 = t1_pivot_quality(omega_to_moments(study_omega), 500, SeededRng(1))
    assert D1 < D0


def test_pivot_needs_draws(study_omega):
    with pytest.raises(ValueError):
        t1_pivot_quality(omega_to_moments(study_omega), 50, SeededRng(0))


# --- GOF -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def gof_data():
    om = OmegaParams([2.0, -2.0, 3.0], [1.0, -1.5])
    return sample_esag(omega_to_moments(om), 150, SeededRng(31))


def test_gof_single_replicate(gof_data):
    res = gof_test(gof_data, 1, SeededRng(0))
    assert res.p_value in (0.0, 1.0)
    assert res.B == 1 and res.boot_ks_p.size == 1


def test_gof_reproducible(gof_data):
    a = gof_test(gof_data, 8, SeededRng(5))
    b = gof_test(gof_data, 8, SeededRng(5))
    c = gof_test(gof_data, 8, SeededRng(5), threads=2)
    assert a.p_value == b.p_value == c.p_value
    assert a.boot_ks_p.tobytes() == b.boot_ks_p.tobytes() == c.boot_ks_p.tobytes()
    assert a.qq.tobytes() == b.qq.tobytes()
    s = int(np.sum(a.boot_ks_p < a.ks_p))
    assert a.p_value == s / (a.B - a.dropped)
    assert a.qq.shape == (150, 2) and np.all(np.diff(a.qq, axis=0) >= 0)


def test_gof_reference_uses_fitted_parameters(gof_data):
    res = gof_test(gof_data, 2, SeededRng(9))
    t1 = residuals(gof_data, res.fit.moments).T1
    np.testing.assert_array_equal(np.sort(t1), res.qq[:, 0])
    k = ks_two_sample(res.t1_obs, res.t1_ref)
    assert k.pvalue == res.ks_p


def test_gof_rejects_unconverged(gof_data):
    with pytest.raises(OptimizationError):
        gof_test(gof_data, 2, SeededRng(0), FitOptions(max_iter=1, restarts=0))
    with pytest.raises(ValueError):
        gof_test(gof_data, 0, SeededRng(0))


def test_gof_detects_gross_misfit():
    # two tight clusters a right angle apart: no unimodal ESAG fits them
    a = sample_esag(omega_to_moments(OmegaParams([0.0, 0.0, 8.0], [0.0, 0.0])), 100,
                    SeededRng(3))
    b = sample_esag(omega_to_moments(OmegaParams([8.0, 0.0, 0.0], [0.0, 0.0])), 100,
                    SeededRng(3).child(1))
    Y = np.vstack([a, b])
    res = gof_test(Y, 20, SeededRng(4))
    assert res.p_value <= 0.1
