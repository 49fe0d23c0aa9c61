import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from mimostats.channel import MimoConfig
from mimostats.imistats import (
    SnrConfig,
    gaussian_aod,
    gaussian_lcr,
    imi_acf,
    imi_asymptotic_coeff,
    imi_corr,
    imi_corr_maxgap,
    imi_corr_taylor,
    imi_exceed_exact,
    imi_exceed_mc,
    imi_gaussian_aod,
    imi_gaussian_lcr,
    imi_joint_exceed_exact,
    imi_level_stats,
    imi_mean,
    imi_moments,
    imi_second_moment,
    logdet_wishart_moments,
    regime_moments,
)

EULER = 0.5772156649015329
TS = 0.005


def _snr(eta, n_tx, n_rx):
    return SnrConfig(eta, MimoConfig(n_tx, n_rx))


def _pair_density(nu):
    """Unordered joint eigenvalue density of a 2x2 complex Wishart matrix."""
    norm = 2 * (math.gamma(nu + 3) * math.gamma(nu + 1) - math.gamma(nu + 2) ** 2)
    return lambda x, y: (x - y) ** 2 * (x * y) ** nu * math.exp(-x - y) / norm


def _bivariate_exp(x, y, z):
    a = 2 * np.sqrt(x * y * z) / (1 - z)
    return special.ive(0, a) * np.exp(a - (x + y) / (1 - z)) / (1 - z)


def _simulate_imi_pairs(snr, rho, n, seed):
    """Independent simulation of IMI at two instants with channel correlation ``rho``."""
    rng = np.random.default_rng(seed)
    shape = (n, snr.mimo.n_rx, snr.mimo.n_tx)

    def cn():
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)

    h1 = cn()
    h2 = rho * h1 + math.sqrt(1 - rho * rho) * cn()
    eye = np.eye(snr.mimo.n_rx)
    out = []
    for h in (h1, h2):
        g = eye + snr.omega * (h @ np.conj(np.swapaxes(h, 1, 2)))
        out.append(np.linalg.slogdet(g)[1])
    return out


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


def test_snr_config():
    s = SnrConfig.from_db(20.0, MimoConfig(4, 2))
    assert s.eta == pytest.approx(100.0)
    assert s.omega == pytest.approx(25.0)
    assert s.snr_db == pytest.approx(20.0)
    with pytest.raises(ValueError):
        SnrConfig(0.0, MimoConfig(1, 1))


def test_siso_mean_is_ergodic_capacity():
    ref, _ = integrate.quad(lambda x: math.exp(-x) * math.log1p(x), 0, np.inf, epsabs=1e-14)
    assert imi_mean(_snr(1.0, 1, 1)) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(math.e * special.exp1(1.0), abs=1e-12)
    assert ref == pytest.approx(0.59634736, abs=1e-8)


@pytest.mark.parametrize("n_tx, n_rx", [(1, 1), (2, 3), (4, 4), (3, 12)])
def test_low_snr_mean(n_tx, n_rx):
    eta = 1e-6
    assert imi_mean(_snr(eta, n_tx, n_rx)) == pytest.approx(eta * n_rx, rel=1e-3)


def test_high_snr_mean_and_variance():
    snr = _snr(1e6, 4, 4)
    psi = sum(float(mp.digamma(4 - m)) for m in range(4))
    assert imi_mean(snr) == pytest.approx(psi + 4 * math.log(1e6 / 4), rel=5e-3)
    zsum = sum(float(mp.zeta(2, 4 - m)) for m in range(4))
    assert zsum == pytest.approx(2.9686, abs=1e-4)
    assert imi_moments(snr).variance == pytest.approx(zsum, rel=0.01)


def test_siso_second_moment_matches_quadrature():
    ref, _ = integrate.quad(lambda x: math.exp(-x) * math.log1p(x) ** 2, 0, np.inf, epsabs=1e-14)
    assert imi_second_moment(_snr(1.0, 1, 1)) == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("eta", [0.5, 10.0, 1000.0])
@pytest.mark.parametrize("nu", [0, 2])
def test_two_mode_moments_match_quadrature(eta, nu):
    snr = _snr(eta, 2, 2 + nu)
    p = _pair_density(nu)
    w = snr.omega

    def moment(k):
        f = lambda y, x: (math.log1p(w * x) + math.log1p(w * y)) ** k * p(x, y)
        return integrate.dblquad(f, 0, 80, 0, 80, epsabs=1e-12, epsrel=1e-11)[0]

    assert imi_mean(snr) == pytest.approx(moment(1), rel=1e-8)
    assert imi_second_moment(snr) == pytest.approx(moment(2), rel=1e-8)


@pytest.mark.parametrize("eta", [1e-3, 1.0, 1e3])
@pytest.mark.parametrize("n_tx, n_rx", [(1, 1), (2, 2), (4, 4), (3, 12)])
def test_variance_nonnegative(eta, n_tx, n_rx):
    mom = imi_moments(_snr(eta, n_tx, n_rx))
    assert mom.variance > 0
    assert mom.variance == pytest.approx(mom.second_moment - mom.mean**2, abs=1e-12 * mom.second_moment)


def test_logdet_moments():
    assert logdet_wishart_moments(MimoConfig(1, 1)) == pytest.approx((-EULER, math.pi**2 / 6), rel=1e-14)
    assert logdet_wishart_moments(MimoConfig(2, 2)) == pytest.approx((1 - 2 * EULER, math.pi**2 / 3 - 1), rel=1e-14)


def test_logdet_variance_matches_simulation():
    rng = np.random.default_rng(31)
    x = (rng.standard_normal((100000, 4, 4)) + 1j * rng.standard_normal((100000, 4, 4))) / math.sqrt(2)
    ld = np.linalg.slogdet(x @ np.conj(np.swapaxes(x, 1, 2)))[1]
    mean, var = logdet_wishart_moments(MimoConfig(4, 4))
    assert np.var(ld) == pytest.approx(var, rel=0.02)
    assert np.mean(ld) == pytest.approx(mean, abs=0.02)


def test_regime_moments():
    snr = _snr(1e-5, 2, 3)
    low = regime_moments(snr, "low_snr")
    assert low.mean == pytest.approx(3e-5)
    assert low.variance == pytest.approx(imi_moments(snr).variance, rel=1e-3)
    with pytest.raises(ValueError):
        regime_moments(snr, "medium")


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------


def test_acf_uncorrelated_is_mean_squared():
    snr = _snr(10.0, 3, 5)
    assert imi_acf(snr, 0.0) == imi_mean(snr) ** 2


def test_siso_acf_matches_bivariate_quadrature():
    z = 0.25
    t, wt = np.polynomial.legendre.leggauss(48)
    edges = np.linspace(0, 70, 15)
    x = np.concatenate([a + (b - a) * (t + 1) / 2 for a, b in zip(edges[:-1], edges[1:])])
    w = np.concatenate([wt * (b - a) / 2 for a, b in zip(edges[:-1], edges[1:])])
    xx, yy = np.meshgrid(x, x, indexing="ij")
    ref = w @ (np.log1p(xx) * np.log1p(yy) * _bivariate_exp(xx, yy, z)) @ w
    assert imi_acf(_snr(1.0, 1, 1), 0.5) == pytest.approx(ref, abs=1e-5)


def test_acf_approaches_second_moment():
    snr = _snr(1.0, 1, 1)
    assert imi_acf(snr, 0.999) == pytest.approx(imi_second_moment(snr), rel=5e-3)
    assert imi_acf(snr, 0.999) < imi_second_moment(snr)


def test_acf_matches_simulation():
    snr = _snr(10.0, 4, 4)
    rho = abs(special.j0(2 * math.pi * 0.05))
    a, b = _simulate_imi_pairs(snr, rho, 1 << 16, seed=4)
    assert np.mean(a * b) == pytest.approx(imi_acf(snr, rho), rel=0.02)


def test_corr_zero_lag_is_one():
    snr = _snr(5.0, 2, 2)
    for regime in ("exact", "low_snr", "high_snr"):
        r = imi_corr(snr, 0.3, regime, lag=0)
        assert r.coeff == 1.0 and r.nacf == 1.0


def test_low_snr_corr():
    for snr in (_snr(0.01, 2, 2), _snr(1e3, 3, 12)):
        r = imi_corr(snr, 0.6, "low_snr")
        assert r.coeff == pytest.approx(0.36)
        nrt = snr.mimo.n_rx * snr.mimo.n_tx
        assert r.nacf == pytest.approx((nrt + 0.36) / (nrt + 1))


def test_high_snr_corr_limits():
    for n_tx, n_rx in [(1, 1), (2, 2), (4, 8)]:
        assert imi_corr(_snr(1e4, n_tx, n_rx), 0.0, "high_snr").coeff == 0.0
    c2, c4 = imi_corr_taylor(MimoConfig(1, 1))
    assert c2 == pytest.approx(6 / math.pi**2, abs=1e-12)
    assert c2 == pytest.approx(0.608, abs=5e-4)
    assert c4 == pytest.approx(0.152, abs=5e-4)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
@pytest.mark.parametrize("rho", [0.2, 0.7, 0.95])
def test_high_snr_single_mode_reduces_to_3f2(n, rho):
    z = rho * rho
    with mp.workdps(30):
        ref = z / n * mp.hyp3f2(1, 1, 1, 2, n + 1, z) / mp.zeta(2, n)
    got = imi_corr(_snr(1e4, 1, n), rho, "high_snr").coeff
    assert got == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize(
    "m, n, ref",
    [((1), 1, (0.608, 0.152)), (2, 2, (0.437, 0.218)), (4, 8, (0.725, 0.178)), (4, 16, (0.870, 0.107))],
)
def test_taylor_coefficients_table(m, n, ref):
    got = imi_corr_taylor(MimoConfig(m, n))
    assert got == pytest.approx(ref, abs=5e-4)


def test_taylor_domain():
    with pytest.raises(ValueError):
        imi_corr_taylor(MimoConfig(9, 9))
    with pytest.raises(ValueError):
        imi_corr_taylor(MimoConfig(2, 2), order=3)


@pytest.mark.parametrize("m, n, ref", [(1, 1, 0.160), (4, 4, 0.304), (4, 12, 0.050)])
def test_maxgap_table(m, n, ref):
    assert imi_corr_maxgap(MimoConfig(m, n)) == pytest.approx(ref, abs=5e-3)


def test_maxgap_matches_dense_scan():
    mimo = MimoConfig(3, 3)
    snr = SnrConfig(1e4, mimo)
    r = np.linspace(0, 0.995, 4001)
    scan = max(abs(x * x - imi_corr(snr, float(x), "high_snr").coeff) for x in r)
    got = imi_corr_maxgap(mimo)
    assert scan - 1e-9 <= got <= scan + 1e-5


def test_maxgap_trends():
    diag = [imi_corr_maxgap(MimoConfig(m, m)) for m in (1, 2, 3, 4)]
    assert all(a < b for a, b in zip(diag, diag[1:]))
    wide = [imi_corr_maxgap(MimoConfig(4, n)) for n in (4, 8, 12, 16)]
    assert all(a > b for a, b in zip(wide, wide[1:]))


@pytest.mark.parametrize("rho", [0.3, 0.6, 0.9])
def test_regime_consistency(rho):
    low = _snr(1e-4, 2, 2)
    assert abs(imi_corr(low, rho).coeff - rho * rho) <= 0.01
    high = _snr(1e5, 2, 2)
    assert abs(imi_corr(high, rho).coeff - imi_corr(high, rho, "high_snr").coeff) <= 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.floats(-10, 30), st.floats(0.0, 0.99))
def test_corr_coefficient_bounds(m, extra, snr_db, rho):
    snr = SnrConfig.from_db(snr_db, MimoConfig(m, m + extra))
    r = imi_corr(snr, rho)
    assert -1e-12 <= r.coeff <= 1 + 1e-12
    assert 0 <= r.nacf <= 1 + 1e-12


def test_asymptotic_coeff():
    assert imi_asymptotic_coeff(0.0, 5) == 0.0
    assert imi_asymptotic_coeff(0.9, 10**4) < imi_asymptotic_coeff(0.9, 100)
    h100 = sum(1 / k for k in range(1, 101))
    assert imi_asymptotic_coeff(0.9, 100) == pytest.approx(-math.log(0.19) / h100, rel=1e-12)
    assert imi_asymptotic_coeff(0.9, 100) == pytest.approx(0.3201, abs=1e-4)
    with pytest.raises(ValueError):
        imi_asymptotic_coeff(1.0, 3)


# ---------------------------------------------------------------------------
# Exact exceedance
# ---------------------------------------------------------------------------


def test_single_mode_exceed_closed_form():
    r = imi_exceed_exact(_snr(1.0, 1, 2), math.log(2))
    assert r.value == pytest.approx(2 / math.e, rel=1e-13)
    ref, _ = integrate.quad(lambda x: x * math.exp(-x), 1.0, np.inf)
    assert r.value == pytest.approx(ref, rel=1e-10)


def test_exceed_tends_to_one_at_high_snr():
    for n_tx, n_rx in [(1, 1), (2, 2), (2, 4)]:
        assert imi_exceed_exact(_snr(1e9, n_tx, n_rx), 3.0).value > 0.999


@pytest.mark.parametrize("eta, nu, i_th", [(1.0, 0, 0.8), (10.0, 0, 3.0), (10.0, 2, 4.5), (100.0, 1, 8.0)])
def test_two_mode_exceed_matches_region_quadrature(eta, nu, i_th):
    snr = _snr(eta, 2, 2 + nu)
    w = snr.omega
    p = _pair_density(nu)
    e = math.exp(i_th)
    a = math.expm1(i_th) / w
    inside, _ = integrate.dblquad(
        lambda y, x: p(x, y), 0, a, 0, lambda x: (e / (1 + w * x) - 1) / w, epsabs=1e-12, epsrel=1e-10
    )
    assert imi_exceed_exact(snr, i_th).value == pytest.approx(1 - inside, abs=1e-8)


def test_single_mode_joint_exceed_matches_quadrature():
    snr = _snr(1.0, 1, 1)
    i_th, rho = 0.5, 0.8
    lam = math.expm1(i_th)
    ref, _ = integrate.dblquad(
        lambda y, x: float(_bivariate_exp(x, y, rho * rho)), lam, 60, lam, 60, epsabs=1e-11, epsrel=1e-10
    )
    assert imi_joint_exceed_exact(snr, i_th, rho).value == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("n_tx, n_rx", [(1, 3), (2, 2), (2, 4)])
def test_joint_exceed_factorizes_when_uncorrelated(n_tx, n_rx):
    snr = _snr(10.0, n_tx, n_rx)
    i_th = imi_mean(snr)
    p = imi_exceed_exact(snr, i_th).value
    assert imi_joint_exceed_exact(snr, i_th, 0.0).value == pytest.approx(p * p, abs=1e-9)


@pytest.mark.parametrize("nu, rho", [(0, 0.5), (0, 0.9755), (2, 0.9)])
def test_two_mode_joint_exceed_matches_simulation(nu, rho):
    snr = _snr(10.0, 2, 2 + nu)
    i_th = imi_mean(snr) + 0.3
    a, b = _simulate_imi_pairs(snr, rho, 1 << 18, seed=nu + 17)
    ea, eb = a > i_th, b > i_th
    p = imi_exceed_exact(snr, i_th).value
    pp = imi_joint_exceed_exact(snr, i_th, rho).value
    se_pp = math.sqrt(pp * (1 - pp) / a.size)
    assert np.mean(ea & eb) == pytest.approx(pp, abs=4 * se_pp)
    # the crossing probability has far smaller variance than either probability
    d = (ea & ~eb).astype(float) + (eb & ~ea)
    assert np.mean(d) / 2 == pytest.approx(p - pp, abs=4 * np.std(d) / 2 / math.sqrt(a.size) + 1e-12)


def test_monte_carlo_exceed_is_reproducible_and_consistent():
    snr = _snr(10.0, 2, 3)
    i_th = imi_mean(snr)
    r1 = imi_exceed_mc(snr, i_th, 0.9, trials=1 << 16, seed=3, workers=1)
    r2 = imi_exceed_mc(snr, i_th, 0.9, trials=1 << 16, seed=3, workers=2)
    assert r1 == r2
    p, pp, d = r1
    assert d.value == pytest.approx(p.value - pp.value, abs=1e-12)
    assert p.value == pytest.approx(imi_exceed_exact(snr, i_th).value, abs=4 * p.std_error)
    assert pp.value == pytest.approx(imi_joint_exceed_exact(snr, i_th, 0.9).value, abs=4 * pp.std_error)


def test_exact_lcr_near_mean_agrees_with_gaussian_for_large_arrays():
    snr = _snr(1e3, 3, 12)
    rho = abs(special.j0(2 * math.pi * 0.05))
    mu = imi_mean(snr)
    exact = imi_level_stats(snr, mu, rho, TS, method="exact", trials=1 << 18, seed=5)
    gauss = imi_level_stats(snr, mu, rho, TS)
    assert exact.method == "monte_carlo" and exact.std_error > 0
    assert abs(exact.lcr - gauss.lcr) <= 0.10 * gauss.lcr


# ---------------------------------------------------------------------------
# Gaussian approximation
# ---------------------------------------------------------------------------


def _bvn_downcross(u, rho):
    """P(X_0 > u, X_1 <= u) for a unit Gaussian pair with correlation ``rho``."""
    s = math.sqrt(1 - rho * rho)
    f = lambda x: stats.norm.pdf(x) * stats.norm.cdf((u - rho * x) / s)
    return integrate.quad(f, u, np.inf, epsabs=1e-14, epsrel=1e-12)[0]


def test_gaussian_lcr_examples():
    assert gaussian_lcr(0.3, 1.0, TS) == 0.0
    assert gaussian_lcr(0.0, 0.0, TS) == pytest.approx(1 / (4 * TS))
    ref = (math.pi - 2 * math.asin(0.9)) / (4 * math.pi * TS)
    assert gaussian_lcr(0.0, 0.9, TS) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(14.36, abs=5e-3)


def test_gaussian_aod_examples():
    assert gaussian_aod(0.0, 0.0, TS) == pytest.approx(2 * TS)
    ref = 2 * math.pi * TS / (math.pi - 2 * math.asin(0.9))
    assert gaussian_aod(0.0, 0.9, TS) == pytest.approx(ref, rel=1e-13)
    assert ref == pytest.approx(0.03482, abs=1e-5)
    assert gaussian_aod(0.0, 0.9, TS) * gaussian_lcr(0.0, 0.9, TS) == pytest.approx(0.5)
    assert gaussian_aod(1.0, 1.0, TS) == math.inf


@pytest.mark.parametrize("u", [-2.5, -1.0, 0.0, 0.4, 2.0])
@pytest.mark.parametrize("rho", [-0.5, 0.0, 0.6, 0.97])
def test_gaussian_lcr_matches_bivariate_normal(u, rho):
    assert gaussian_lcr(u, rho, TS) * TS == pytest.approx(_bvn_downcross(u, rho), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 4.0), st.floats(-0.99, 0.99))
def test_gaussian_lcr_symmetric_aod_not(u, rho):
    a, b = gaussian_lcr(u, rho, TS), gaussian_lcr(-u, rho, TS)
    assert a == pytest.approx(b, rel=1e-12)
    assert gaussian_aod(u, rho, TS) > gaussian_aod(-u, rho, TS)


def test_gaussian_lcr_domain():
    with pytest.raises(ValueError):
        gaussian_lcr(0.0, 1.5, TS)
    with pytest.raises(ValueError):
        gaussian_lcr(0.0, 0.5, 0.0)


def test_imi_gaussian_wrappers_use_regime_moments():
    snr = _snr(100.0, 2, 2)
    mom = imi_moments(snr)
    th = mom.mean + 0.7 * math.sqrt(mom.variance)
    assert imi_gaussian_lcr(snr, th, 0.8, TS) == pytest.approx(gaussian_lcr(0.7, 0.8, TS), rel=1e-12)
    assert imi_gaussian_aod(snr, th, 0.8, TS) == pytest.approx(gaussian_aod(0.7, 0.8, TS), rel=1e-12)
    st_ = imi_level_stats(snr, th, 0.9, TS)
    rho_i = imi_corr(snr, 0.9).coeff
    assert st_.lcr == pytest.approx(gaussian_lcr(0.7, rho_i, TS), rel=1e-12)
    assert st_.normalized_threshold == pytest.approx(0.7)
    with pytest.raises(ValueError):
        imi_level_stats(snr, th, 0.9, TS, method="bogus")


def test_exact_level_stats_two_modes():
    snr = _snr(10.0, 2, 2)
    mu = imi_mean(snr)
    s = imi_level_stats(snr, mu, 0.95, TS, method="exact")
    assert s.method == "quadrature"
    assert s.lcr == pytest.approx((s.exceed - s.joint_exceed) / TS)
    assert s.aod == pytest.approx((1 - s.exceed) / s.lcr)
    assert 0 < s.lcr <= 1 / (2 * TS)
