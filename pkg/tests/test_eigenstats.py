import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from mimostats.channel import MimoConfig
from mimostats.eigenstats import (
    EigenPdfContext,
    eigen_afd,
    eigen_corr,
    eigen_lcr,
    eigen_moments,
    joint_pdf,
    laguerre_integral_I1,
    laguerre_integral_I2,
    level_stats,
    marginal_pdf,
    phi_lambda,
    unordered_pair_pdf,
    varphi_lambda,
)
from mimostats.errors import DegenerateConfigError


def _ctx(m, n):
    return EigenPdfContext(MimoConfig(m, n))


def _legendre_nodes(upper, pieces, order=64):
    """Composite Gauss-Legendre nodes and weights on [0, upper]."""
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, upper, pieces + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(a + (b - a) * (t + 1) / 2)
        ws.append(w * (b - a) / 2)
    return np.concatenate(xs), np.concatenate(ws)


def _bivariate_single(x, y, n, z):
    """Bivariate gamma density of a scalar-output MRC/MRT gain pair."""
    a = 2 * np.sqrt(x * y * z) / (1 - z)
    scale = (x * y / z) ** ((n - 1) / 2) / (math.factorial(n - 1) * (1 - z))
    return scale * special.ive(n - 1, a) * np.exp(a - (x + y) / (1 - z))


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def test_marginal_single_mode_is_gamma():
    x = np.linspace(0, 30, 61)
    np.testing.assert_allclose(marginal_pdf(_ctx(1, 1), x), np.exp(-x), rtol=1e-13, atol=1e-300)
    for n in (2, 5, 12):
        ref = x ** (n - 1) * np.exp(-x) / math.factorial(n - 1)
        np.testing.assert_allclose(marginal_pdf(_ctx(1, n), x), ref, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [4, 7, 12])
def test_marginal_normalized(m, n):
    if n < m:
        pytest.skip("N >= M by definition")
    ctx = _ctx(m, n)
    # Gauss-Laguerre is exact for polynomial times e^{-x} of this degree
    x, w = special.roots_laguerre(60)
    vals = marginal_pdf(ctx, x) * np.exp(x)
    assert abs(np.dot(w, vals) - 1) < 1e-9


def test_marginal_rejects_negative():
    with pytest.raises(ValueError):
        marginal_pdf(_ctx(2, 2), -1.0)


def test_joint_pdf_factorizes_at_zero_correlation():
    ctx = _ctx(3, 5)
    x = np.array([0.1, 2.0, 7.5])
    y = np.array([4.0, 0.3, 11.0])
    ref = marginal_pdf(ctx, x) * marginal_pdf(ctx, y)
    np.testing.assert_allclose(joint_pdf(ctx, x, y, 0.0), ref, rtol=0, atol=1e-15)
    np.testing.assert_allclose(joint_pdf(ctx, x, y, 1e-6), ref, rtol=0, atol=1e-9)


@pytest.mark.parametrize("n", [1, 3])
@pytest.mark.parametrize("rho", [0.3, 0.8])
def test_joint_pdf_single_mode_matches_bivariate_gamma(n, rho):
    ctx = _ctx(1, n)
    g = np.array([0.05, 0.5, 1.0, 3.0, 8.0])
    x, y = np.meshgrid(g, g)
    got = joint_pdf(ctx, x, y, rho)
    ref = _bivariate_single(x, y, n, rho * rho)
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-14)


def test_joint_pdf_normalized_4x4():
    ctx = _ctx(4, 4)
    x, w = _legendre_nodes(70.0, 14, 48)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    total = w @ joint_pdf(ctx, xx, yy, 0.5) @ w
    assert abs(total - 1) < 1e-6


def test_joint_pdf_rejects_bad_rho():
    with pytest.raises(ValueError):
        joint_pdf(_ctx(2, 2), 1.0, 1.0, 1.0)


def test_pair_pdf_symmetric():
    ctx = _ctx(3, 6)
    rng = np.random.default_rng(1)
    a, b = rng.uniform(0, 15, (2, 50))
    np.testing.assert_allclose(unordered_pair_pdf(ctx, a, b), unordered_pair_pdf(ctx, b, a), rtol=1e-13)


def test_pair_pdf_normalized_and_marginalizes():
    ctx = _ctx(2, 2)
    x, w = _legendre_nodes(60.0, 12, 48)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    dens = unordered_pair_pdf(ctx, xx, yy)
    assert abs(w @ dens @ w - 1) < 1e-6
    for x1 in (0.2, 1.5, 6.0):
        marg = np.dot(w, unordered_pair_pdf(ctx, np.full_like(x, x1), x))
        assert marg == pytest.approx(marginal_pdf(ctx, x1), abs=1e-6)


def test_pair_pdf_requires_two_modes():
    with pytest.raises(DegenerateConfigError):
        unordered_pair_pdf(_ctx(1, 4), 1.0, 2.0)


# ---------------------------------------------------------------------------
# Moments and correlation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("m, n, ref", [(1, 1, (1, 2)), (4, 4, (4, 32)), (3, 12, (12, 180))])
def test_eigen_moments(m, n, ref):
    assert eigen_moments(MimoConfig(m, n)) == ref


@pytest.mark.parametrize("m, n", [(1, 3), (2, 2), (3, 12), (4, 4)])
def test_moments_match_quadrature(m, n):
    ctx = _ctx(m, n)
    x, w = special.roots_laguerre(80)
    p = marginal_pdf(ctx, x) * np.exp(x)
    mean, second = eigen_moments(ctx.mimo)
    assert abs(np.dot(w, x * p) - mean) < 1e-8 * mean
    assert abs(np.dot(w, x * x * p) - second) < 1e-8 * second


def test_moments_match_simulated_eigenvalues():
    rng = np.random.default_rng(12)
    h = (rng.standard_normal((40000, 12, 3)) + 1j * rng.standard_normal((40000, 12, 3))) / math.sqrt(2)
    lam = np.linalg.eigvalsh(np.conj(np.swapaxes(h, 1, 2)) @ h).ravel()
    mean, second = eigen_moments(MimoConfig(3, 12))
    assert np.mean(lam) == pytest.approx(mean, rel=0.02)
    assert np.mean(lam**2) == pytest.approx(second, rel=0.02)


def test_eigen_corr_branches():
    mimo = MimoConfig(2, 2)
    assert eigen_corr(mimo, 0, 0.0, True).corr_coeff == 1.0
    assert eigen_corr(mimo, 0, 0.0, False).corr_coeff == pytest.approx(-0.5)
    assert eigen_corr(mimo, 3, 0.5, True).corr_coeff == pytest.approx(0.0625)
    r0 = eigen_corr(MimoConfig(4, 6), 0, 0.7, True)
    assert r0.normalized_corr == pytest.approx(4 / 10)
    with pytest.raises(ValueError):
        eigen_corr(mimo, 1, 1.5, True)


@pytest.mark.parametrize("rho", [0.3, 0.7])
def test_eigen_corr_matches_joint_density(rho):
    mimo = MimoConfig(2, 2)
    ctx = EigenPdfContext(mimo)
    x, w = _legendre_nodes(70.0, 14, 48)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    exy = w @ (xx * yy * joint_pdf(ctx, xx, yy, rho)) @ w
    mean, second = eigen_moments(mimo)
    res = eigen_corr(mimo, 1, rho, True)
    assert exy / second == pytest.approx(res.normalized_corr, abs=1e-5)
    assert (exy - mean**2) / (second - mean**2) == pytest.approx(res.corr_coeff, abs=1e-5)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.integers(0, 6), st.floats(0.01, 1.0))
def test_eigen_corr_decreases_with_modes(m, extra, rho):
    a = eigen_corr(MimoConfig(m, m + extra), 2, rho, True).corr_coeff
    b = eigen_corr(MimoConfig(m + 1, m + 1 + extra), 2, rho, True).corr_coeff
    assert b < a
    assert abs(a) <= 1


@pytest.mark.parametrize("m", [2, 3, 8])
def test_eigen_corr_discontinuous_at_zero_lag(m):
    mimo = MimoConfig(m, m)
    near = eigen_corr(mimo, 1, 1.0, True).corr_coeff
    assert near == pytest.approx(1 / m**2)
    assert eigen_corr(mimo, 0, 1.0, True).corr_coeff == 1.0


# ---------------------------------------------------------------------------
# Exceedance and level crossings
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("lam", [0.01, 0.5, 3.0, 20.0])
def test_phi_closed_forms(lam):
    assert phi_lambda(_ctx(1, 1), lam) == pytest.approx(math.exp(-lam), rel=1e-13)
    assert phi_lambda(_ctx(1, 2), lam) == pytest.approx((1 + lam) * math.exp(-lam), rel=1e-13)


@pytest.mark.parametrize("m, n, lam", [(4, 4, 4.0), (3, 12, 10.0), (2, 5, 0.7)])
def test_phi_matches_quadrature(m, n, lam):
    ctx = _ctx(m, n)
    ref, _ = integrate.quad(lambda x: marginal_pdf(ctx, x), lam, np.inf, epsabs=1e-13, epsrel=1e-12)
    assert abs(phi_lambda(ctx, lam) - ref) < 1e-9


def test_varphi_uncorrelated_is_square():
    ctx = _ctx(3, 4)
    for lam in (0.5, 3.0, 9.0):
        assert varphi_lambda(ctx, lam, 0.0) == phi_lambda(ctx, lam) ** 2


def test_varphi_matches_bivariate_quadrature():
    rho, lam = 0.9, 0.5
    z = rho * rho
    ref, _ = integrate.dblquad(
        lambda y, x: float(_bivariate_single(x, y, 1, z)), lam, 60, lam, 60, epsabs=1e-11, epsrel=1e-10
    )
    assert abs(varphi_lambda(_ctx(1, 1), lam, rho) - ref) < 1e-6


@pytest.mark.parametrize("m, n, rho", [(2, 2, 0.5), (4, 4, 0.95), (3, 12, 0.98)])
def test_varphi_matches_joint_density_quadrature(m, n, rho):
    ctx = _ctx(m, n)
    lam = float(n)
    x, w = _legendre_nodes(40.0 + 3 * n, 10, 40)
    x = lam + x
    xx, yy = np.meshgrid(x, x, indexing="ij")
    ref = w @ joint_pdf(ctx, xx, yy, rho) @ w
    assert varphi_lambda(ctx, lam, rho) == pytest.approx(ref, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 8), st.floats(0.05, 30.0), st.floats(0.0, 0.999))
def test_level_stats_sandwich_and_bounds(m, extra, lam, rho):
    ctx = _ctx(m, m + extra)
    ts = 0.005
    s = level_stats(ctx, lam, rho, ts)
    assert s.exceed_prob**2 - 1e-12 <= s.joint_exceed <= s.exceed_prob + 1e-15
    assert 0.0 <= s.lcr <= 1 / (2 * ts)
    assert s.lcr == pytest.approx((s.exceed_prob - s.joint_exceed) / ts, abs=1e-12)
    assert (s.joint_lower, s.joint_upper) == (s.exceed_prob**2, s.exceed_prob)


def test_lcr_vanishes_at_extreme_thresholds():
    ctx = _ctx(4, 4)
    rho = 0.9755
    assert eigen_lcr(ctx, 1e-9, rho, 0.005) < 1e-6
    assert eigen_lcr(ctx, 200.0, rho, 0.005) < 1e-30
    assert eigen_lcr(ctx, 4.0, rho, 0.005) > 1.0


def test_afd_uncorrelated_and_deep_threshold():
    ctx = _ctx(2, 3)
    for lam in (0.5, 2.0, 6.0):
        assert eigen_afd(ctx, lam, 0.0, 0.01) == pytest.approx(0.01 / phi_lambda(ctx, lam), rel=1e-12)
    t = eigen_afd(_ctx(2, 2), 20.0, 0.9, 0.005)
    assert math.isfinite(t) and t > 0


def test_level_stats_domain():
    ctx = _ctx(2, 2)
    with pytest.raises(ValueError):
        level_stats(ctx, 0.0, 0.5, 0.005)
    with pytest.raises(ValueError):
        level_stats(ctx, 1.0, 1.0, 0.005)
    with pytest.raises(ValueError):
        level_stats(ctx, 1.0, 0.5, 0.0)


# ---------------------------------------------------------------------------
# Laguerre integrals
# ---------------------------------------------------------------------------


def test_I1_closed_form_cases():
    assert laguerre_integral_I1(3, 3, 2) == 180
    assert laguerre_integral_I1(5, 2, 0) == 0
    assert laguerre_integral_I1(4, 3, 1) == -20
    with pytest.raises(ValueError):
        laguerre_integral_I1(-1, 0, 0)


@pytest.mark.parametrize("j, k, nu", [(4, 3, 1), (3, 3, 2), (0, 1, 0), (6, 2, 3), (5, 5, 0)])
def test_I1_matches_quadrature(j, k, nu):
    x, w = special.roots_genlaguerre(40, nu + 1)
    ref = np.dot(w, special.eval_genlaguerre(j, nu, x) * special.eval_genlaguerre(k, nu, x))
    assert laguerre_integral_I1(j, k, nu) == pytest.approx(ref, abs=1e-8 * max(1.0, abs(ref)))


def test_I2_closed_form_cases():
    assert laguerre_integral_I2(2, 0, 1) == pytest.approx(-0.5)
    assert laguerre_integral_I2(0, 3, 0) == pytest.approx(-1 / 3)
    with pytest.raises(ValueError):
        laguerre_integral_I2(2, 2, 0)


@pytest.mark.parametrize("j, k, nu", [(4, 1, 2), (2, 0, 1), (1, 3, 0), (5, 2, 4)])
def test_I2_matches_quadrature(j, k, nu):
    def f(x):
        return math.log(x) * x**nu * math.exp(-x) * special.eval_genlaguerre(j, nu, x) * special.eval_genlaguerre(k, nu, x)

    ref = sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0] for a, b in [(0, 1), (1, 20), (20, np.inf)])
    assert laguerre_integral_I2(j, k, nu) == pytest.approx(ref, abs=1e-7)
