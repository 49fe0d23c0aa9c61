"""Statistics of the instantaneous mutual information (IMI).

The IMI of one channel use is ``I = ln det(I + omega H H^dag)`` with
``omega = eta / N_T`` and equals ``sum_m ln(1 + omega lambda_m)`` over the
unordered eigenvalues. Its moments and autocorrelation reduce to
one-dimensional log-moment integrals against Laguerre-function products:

    E[I]            = sum_m int u_m^2 f,
    Var[I]          = sum_m int u_m^2 f^2 - sum_{j,k<M} b_jk^2,
    E[I_l I_{l-i}]  = E[I]^2 + sum_{j>=M} sum_{k<M} z^{j-k} b_jk^2,

with ``f(x) = ln(1 + omega x)``, ``b_jk = int u_j u_k f`` and
``z = varrho_i^2``. The first two use exact polynomial expansions and
closed-form gamma moments; the series uses quadrature on a grid in
``sqrt(x)`` that resolves the oscillations of high-order functions.

Low- and high-SNR closed forms, exact exceedance probabilities (for use
in level crossing rates) and the Gaussian-approximation LCR/AOD are also
provided.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .channel import MimoConfig
from .eigenstats import EigenPdfContext, clamp_probability, varphi_lambda
from .errors import QuadratureBudgetError, TruncationError
from .kernels import laguerre_functions, laguerre_projection, laguerre_segment_projection
from .specfun import (
    QuadratureRule,
    digamma_int,
    gaussian_q,
    harmonic,
    hyper_4f3,
    log_moment_expectation,
    upper_gamma_reg_int,
    zeta2,
)

__all__ = [
    "SnrConfig",
    "ImiMoments",
    "ImiCorrResult",
    "ImiLevelStats",
    "ExceedResult",
    "imi_mean",
    "imi_second_moment",
    "imi_moments",
    "imi_acf",
    "imi_corr",
    "imi_corr_taylor",
    "imi_corr_maxgap",
    "imi_asymptotic_coeff",
    "imi_exceed_exact",
    "imi_joint_exceed_exact",
    "imi_exceed_mc",
    "imi_gaussian_lcr",
    "imi_gaussian_aod",
    "imi_level_stats",
    "gaussian_lcr",
    "gaussian_aod",
    "logdet_wishart_moments",
    "regime_moments",
    "high_snr_series",
]

REGIMES = ("exact", "low_snr", "high_snr")
MAX_SERIES_TERMS = 4096
ACF_TOL = 1e-10
NODE_BUDGET = 6_000_000


@dataclass(frozen=True)
class SnrConfig:
    """Average receive SNR ``eta`` (linear) together with the antenna setup."""

    eta: float
    mimo: MimoConfig

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError("eta must be positive and finite")

    @classmethod
    def from_db(cls, snr_db: float, mimo: MimoConfig) -> "SnrConfig":
        return cls(10.0 ** (snr_db / 10.0), mimo)

    @property
    def omega(self) -> float:
        """Per-stream SNR ``eta / N_T``."""
        return self.eta / self.mimo.n_tx

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.eta)


@dataclass(frozen=True)
class ImiMoments:
    """Mean, second moment and variance of the IMI (nats)."""

    mean: float
    second_moment: float
    variance: float


@dataclass(frozen=True)
class ImiCorrResult:
    """IMI autocorrelation ``acf``, its normalized form and correlation coefficient."""

    lag: int | None
    acf: float
    nacf: float
    coeff: float
    regime: str


@dataclass(frozen=True)
class ExceedResult:
    """A probability with its standard error and the method that produced it."""

    value: float
    std_error: float
    method: str


@dataclass(frozen=True)
class ImiLevelStats:
    """Level-crossing statistics of the IMI at one threshold."""

    threshold: float
    normalized_threshold: float
    exceed: float
    joint_exceed: float
    lcr: float
    aod: float
    method: str = "gaussian"
    std_error: float = 0.0


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _gamma_log(k: int, omega: float, power: int) -> float:
    return log_moment_expectation(k, omega, power)


@lru_cache(maxsize=64)
def _ctx(mimo: MimoConfig) -> EigenPdfContext:
    return EigenPdfContext(mimo)


def _weighted(weights: dict, omega: float, power: int) -> float:
    return math.fsum(float(c) * _gamma_log(k, omega, power) for k, c in weights.items() if k != "norm2")


def imi_mean(snr: SnrConfig) -> float:
    """Ergodic mutual information ``E[I]`` in nats."""
    return _weighted(_ctx(snr.mimo).diagonal_weights, snr.omega, 1)


def _variance_parts(snr: SnrConfig) -> tuple[float, float]:
    ctx = _ctx(snr.mimo)
    first = _weighted(ctx.diagonal_weights, snr.omega, 2)
    cross = []
    for (j, k), w in ctx.cross_weights.items():
        b = _weighted(w, snr.omega, 1)
        cross.append(float(w["norm2"]) * b * b)
    return first, math.fsum(cross)


def imi_moments(snr: SnrConfig) -> ImiMoments:
    """Mean, second moment and variance; the variance is formed without ``E[I^2] - E[I]^2``."""
    mean = imi_mean(snr)
    first, cross = _variance_parts(snr)
    var = max(first - cross, 0.0)
    return ImiMoments(mean, var + mean * mean, var)


def imi_second_moment(snr: SnrConfig) -> float:
    """``E[I^2]`` in nats squared."""
    return imi_moments(snr).second_moment


def logdet_wishart_moments(mimo: MimoConfig) -> tuple[float, float]:
    """Mean and variance of ``ln det`` of an ``M x M`` complex Wishart matrix with ``N`` degrees of freedom."""
    m, n = mimo.m, mimo.n
    mean = math.fsum(digamma_int(n - k) for k in range(m))
    var = math.fsum(zeta2(n - k) for k in range(m))
    return mean, var


def regime_moments(snr: SnrConfig, regime: str = "exact") -> ImiMoments:
    """IMI moments under the exact model or the low/high-SNR approximations."""
    if regime == "exact":
        return imi_moments(snr)
    if regime == "low_snr":
        mean = snr.eta * snr.mimo.n_rx
        var = snr.eta**2 * snr.mimo.n_rx / snr.mimo.n_tx
        return ImiMoments(mean, var + mean * mean, var)
    if regime == "high_snr":
        off, var = logdet_wishart_moments(snr.mimo)
        mean = off + snr.mimo.m * math.log(snr.omega)
        return ImiMoments(mean, var + mean * mean, var)
    raise ValueError(f"regime must be one of {REGIMES}")


# ---------------------------------------------------------------------------
# Exact autocorrelation series
# ---------------------------------------------------------------------------


def _support_limit(nu: int, m: int, omega: float, rel: float = 1e-34) -> float:
    """Abscissa beyond which ``u_k(x)^2 ln^2(1+omega x)`` is negligible for every ``k < M``."""
    xs = np.arange(1.0, 4000.0, 1.0)
    u = laguerre_functions(m - 1, nu, xs)
    g = (u**2).max(axis=0) * np.log1p(omega * xs) ** 2
    peak = g.max()
    big = np.nonzero(g > rel * peak)[0]
    return float(xs[big[-1]] + 2.0) if big.size else 50.0


def _sqrt_grid(t_max: float, jmax: int, nu: int, omega: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights in ``x`` from a composite Gauss-Legendre rule in ``t = sqrt(x)``.

    Panels are at most one oscillation of ``u_jmax`` wide. When ``omega``
    is given, geometrically graded panels resolve the logarithmic kink
    of ``ln(1 + omega x)`` near the origin.
    """
    h = min(0.5, math.pi / math.sqrt(jmax + nu + 1.0))
    breaks = set(np.linspace(0.0, t_max, max(2, int(math.ceil(t_max / h)) + 1)).tolist())
    if omega is not None:
        s = 4.0 / math.sqrt(omega)
        breaks.update(b for b in (s * 2.0**-e for e in range(14)) if b < t_max)
    rule = QuadratureRule.composite_legendre(sorted(breaks), 16)
    t = rule.nodes
    return t * t, rule.weights * 2.0 * t


@dataclass(frozen=True)
class _BracketTable:
    b: np.ndarray  # (J+1, M) values of int u_j u_k f
    norms: np.ndarray  # (M,) values of int u_k^2 f^2
    jmax: int


@lru_cache(maxsize=32)
def _brackets(mimo: MimoConfig, omega: float, jmax: int) -> _BracketTable:
    m, nu = mimo.m, mimo.nu
    x_max = _support_limit(nu, m, omega)
    x, w = _sqrt_grid(math.sqrt(x_max), jmax, nu, omega)
    f = np.log1p(omega * x)
    uk = laguerre_functions(m - 1, nu, x)
    g = (w * f)[:, None] * uk.T
    b = laguerre_projection(jmax, nu, x, g)
    norms = ((w * f * f)[None, :] * uk**2).sum(axis=1)
    return _BracketTable(b, norms, jmax)


def _series_tier(need: int, m: int) -> int:
    for tier in (256, 1024, MAX_SERIES_TERMS):
        if need <= tier:
            return m + tier - 1
    return m + MAX_SERIES_TERMS - 1


def _acf_series(snr: SnrConfig, rho: float, tol: float) -> tuple[float, int, float]:
    """``sum_{j>=M} sum_{k<M} z^{j-k} b_jk^2`` with a rigorous tail bound."""
    m = snr.mimo.m
    z = rho * rho
    if z == 0.0:
        return 0.0, 0, 0.0
    ctx_norm = imi_moments(snr).variance + imi_mean(snr) ** 2
    need = math.log(tol * (1.0 - z) / max(ctx_norm, 1e-300)) / math.log(z) + 2 if z < 1 else math.inf
    jmax = _series_tier(int(min(max(need, 64), 10 * MAX_SERIES_TERMS)), m)
    tab = _brackets(snr.mimo, snr.omega, jmax)
    sq = tab.b**2
    j = np.arange(jmax + 1)
    k = np.arange(m)
    expo = (j[m:, None] - k[None, :]).astype(float)
    series = math.fsum((z**expo * sq[m:]).ravel())
    # Parseval: sum_{j>=0} b_jk^2 = int u_k^2 f^2, so the residual bounds the tail
    resid = np.maximum(tab.norms - sq.sum(axis=0), 0.0)
    tail = float(np.sum(z ** (jmax + 1 - k) * resid))
    if tail > tol:
        raise TruncationError(f"IMI autocorrelation series needs more than {MAX_SERIES_TERMS} terms (tail {tail:.2e})")
    return series, jmax + 1 - m, tail


def imi_acf(snr: SnrConfig, rho: float, tol: float = ACF_TOL) -> float:
    """``E[I_l I_{l-i}]`` for channel correlation magnitude ``rho`` in [0, 1)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    mean = imi_mean(snr)
    series, _, _ = _acf_series(snr, rho, tol)
    return mean * mean + series


# ---------------------------------------------------------------------------
# High-SNR closed form
# ---------------------------------------------------------------------------


def _high_snr_coeffs(mimo: MimoConfig) -> list[tuple[int, Fraction]]:
    m, n, nu = mimo.m, mimo.n, mimo.nu
    out = []
    for k in range(m):
        c = Fraction(math.factorial(m) * math.factorial(k + nu), (m - k) ** 2 * math.factorial(n) * math.factorial(k))
        out.append((m - k, c))
    return out


def high_snr_series(mimo: MimoConfig, rho: float) -> float:
    """Covariance of the high-SNR IMI approximation at channel correlation ``rho``."""
    z = rho * rho
    m, n = mimo.m, mimo.n
    total = []
    for d, c in _high_snr_coeffs(mimo):
        total.append(float(c) * z**d * hyper_4f3((d, d, m + 1, 1), (d + 1, d + 1, n + 1), z))
    return math.fsum(total)


def _high_snr_coeff(mimo: MimoConfig, rho: float) -> float:
    return high_snr_series(mimo, rho) / logdet_wishart_moments(mimo)[1]


# ---------------------------------------------------------------------------
# Correlation in the three regimes
# ---------------------------------------------------------------------------


def imi_corr(snr: SnrConfig, rho: float, regime: str = "exact", lag: int | None = None, tol: float = ACF_TOL) -> ImiCorrResult:
    """IMI autocorrelation, normalized autocorrelation and correlation coefficient.

    Parameters
    ----------
    rho : float
        Channel correlation magnitude ``varrho_i`` in [0, 1]. ``rho = 1``
        (or ``lag = 0``) yields perfect correlation in every regime.
    regime : {"exact", "low_snr", "high_snr"}
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    mom = regime_moments(snr, regime)
    if lag == 0 or rho == 1.0:
        return ImiCorrResult(lag, mom.second_moment, 1.0, 1.0, regime)
    if regime == "exact":
        series, _, _ = _acf_series(snr, rho, tol)
        coeff = series / mom.variance
    elif regime == "low_snr":
        coeff = rho * rho
        series = coeff * mom.variance
    else:
        series = high_snr_series(snr.mimo, rho)
        coeff = series / mom.variance
    acf = mom.mean**2 + series
    if regime == "low_snr":
        nrt = snr.mimo.n_rx * snr.mimo.n_tx
        nacf = (nrt + rho * rho) / (nrt + 1.0)
    else:
        nacf = acf / mom.second_moment
    return ImiCorrResult(lag, acf, nacf, coeff, regime)


def imi_corr_taylor(mimo: MimoConfig, order: int = 4) -> list[float]:
    """Taylor coefficients of the high-SNR correlation coefficient in powers of ``varrho^2``.

    ``order`` is the highest power of ``varrho`` (even); ``order = 4``
    returns the coefficients of ``varrho^2`` and ``varrho^4``.
    """
    if order < 2 or order % 2:
        raise ValueError("order must be a positive even integer")
    m, n = mimo.m, mimo.n
    if m > 8 or n > 32:
        raise ValueError("supported for M <= 8 and N <= 32")
    den = logdet_wishart_moments(mimo)[1]
    coeffs = []
    for power in range(1, order // 2 + 1):
        acc = Fraction(0)
        for d, c in _high_snr_coeffs(mimo):
            p = power - d
            if p < 0:
                continue
            # p-th term of 4F3(d, d, M+1, 1; d+1, d+1, N+1; z)
            t = Fraction(d, d + p) ** 2
            for r in range(p):
                t *= Fraction(m + 1 + r, n + 1 + r)
            acc += c * t
        coeffs.append(float(acc) / den)
    return coeffs


def _golden_max(f, a: float, b: float, tol: float = 1e-10) -> tuple[float, float]:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def imi_corr_maxgap(mimo: MimoConfig) -> float:
    """``max_rho |rho^2 - rho_I(rho)|`` for the high-SNR correlation coefficient."""
    if mimo.m > 8 or mimo.n > 32:
        raise ValueError("supported for M <= 8 and N <= 32")

    def gap(r):
        return abs(r * r - _high_snr_coeff(mimo, r))

    grid = np.arange(256) / 256.0
    vals = [gap(r) for r in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], min(grid[min(i + 1, 255)], 1.0 - 1e-9)
    if i == 255:
        hi = 1.0 - 1e-9
    _, best = _golden_max(gap, lo, hi)
    return float(max(best, vals[i]))


def imi_asymptotic_coeff(rho: float, m: int) -> float:
    """``-ln(1 - rho^2) / H_M``, whose decay in ``M`` shows high-SNR decorrelation."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    if m < 1:
        raise ValueError("M must be positive")
    h = harmonic(m) if m <= 10**6 else math.log(m) + 0.5772156649015329 + 1.0 / (2 * m)
    return -math.log1p(-rho * rho) / h


# ---------------------------------------------------------------------------
# Exact exceedance probabilities
# ---------------------------------------------------------------------------


def _threshold_eigen(snr: SnrConfig, i_th: float) -> float:
    return math.expm1(i_th) / snr.omega


def _pair_region_table(snr: SnrConfig, i_th: float, jmax: int, x_cut: float) -> np.ndarray:
    """``A[a, b] = int_{R} d0(x) u_a(x1) u_b(x2) dx`` over the low-IMI region ``R``.

    ``R = {(1 + omega x1)(1 + omega x2) <= e^{I_th}}`` intersected with
    ``[0, x_cut]^2``; ``d0 = u_0(x1) u_1(x2) - u_1(x1) u_0(x2)``.
    """
    nu, omega = snr.mimo.nu, snr.omega
    a_max = min(_threshold_eigen(snr, i_th), x_cut)
    if a_max <= 0:
        return np.zeros((jmax + 1, jmax + 1))
    x1, w1 = _sqrt_grid(math.sqrt(a_max), jmax, nu, None)
    g = np.minimum((math.exp(i_th) / (1.0 + omega * x1) - 1.0) / omega, x_cut)
    h = min(0.5, math.pi / math.sqrt(jmax + nu + 1.0))
    gl_t, gl_w = np.polynomial.legendre.leggauss(16)
    xs, ws, seg = [], [], [0]
    for gi in g:
        rt = math.sqrt(max(gi, 0.0))
        npan = max(1, int(math.ceil(rt / h)))
        edges = np.linspace(0.0, rt, npan + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = (mid[:, None] + half[:, None] * gl_t).ravel()
        wt = (half[:, None] * gl_w).ravel()
        xs.append(t * t)
        ws.append(wt * 2.0 * t)
        seg.append(seg[-1] + t.size)
    if seg[-1] > NODE_BUDGET:
        raise QuadratureBudgetError(f"exact IMI exceedance grid needs {seg[-1]} nodes (budget {NODE_BUDGET})")
    x2 = np.concatenate(xs)
    w2 = np.concatenate(ws)
    u1_small = laguerre_functions(1, nu, x1)
    u2_small = laguerre_functions(1, nu, x2)
    rep = np.repeat(np.arange(x1.size), np.diff(seg))
    d0 = u1_small[0][rep] * u2_small[1] - u1_small[1][rep] * u2_small[0]
    v = laguerre_segment_projection(jmax, nu, x2, w2 * d0, np.array(seg))  # (J+1, n1)
    u1 = laguerre_functions(jmax, nu, x1)
    return (u1 * w1[None, :]) @ v.T


def _mass_limit(mimo: MimoConfig) -> float:
    xs = np.arange(1.0, 4000.0, 1.0)
    u = laguerre_functions(mimo.m - 1, mimo.nu, xs)
    g = (u**2).max(axis=0)
    big = np.nonzero(g > 1e-34 * g.max())[0]
    return float(xs[big[-1]] + 2.0)


def _check_exact_args(snr: SnrConfig, i_th: float):
    if not math.isfinite(i_th):
        raise ValueError("threshold must be finite")


def imi_exceed_exact(snr: SnrConfig, i_th: float, trials: int = 1 << 20, seed: int = 0) -> ExceedResult:
    """``P(I > I_th)``.

    Closed form for ``M = 1``, two-dimensional quadrature for ``M = 2`` and a
    Monte Carlo estimate (with standard error) for ``M > 2``.
    """
    _check_exact_args(snr, i_th)
    m = snr.mimo.m
    if i_th <= 0:
        return ExceedResult(1.0, 0.0, "closed_form")
    if m == 1:
        lam = _threshold_eigen(snr, i_th)
        return ExceedResult(upper_gamma_reg_int(snr.mimo.n, lam), 0.0, "closed_form")
    if m == 2:
        tab = _pair_region_table(snr, i_th, 1, _mass_limit(snr.mimo))
        return ExceedResult(clamp_probability(1.0 - tab[0, 1]), 0.0, "quadrature")
    est = imi_exceed_mc(snr, i_th, 0.0, trials=trials, seed=seed)
    return est[0]


def imi_joint_exceed_exact(
    snr: SnrConfig,
    i_th: float,
    rho1: float,
    trials: int = 1 << 20,
    seed: int = 0,
    tol: float = 1e-9,
) -> ExceedResult:
    """``P(I_l > I_th, I_{l-1} > I_th)`` for channel correlation magnitude ``rho1``.

    For ``M = 2`` the joint density of the two eigenvalue pairs is expanded
    in products of antisymmetrized Laguerre functions (Cauchy-Binet applied
    to the Hille-Hardy kernel), which reduces the four-dimensional integral
    to the two-dimensional coefficients ``A_K`` of that expansion:

        P = sum_K z^{|K| - 1} A_K(R)^2,  z = rho1^2,

    over index pairs ``K = (k1 < k2)``. The complement region is used so that
    all integrals are over a bounded set, and Bessel's inequality gives a
    rigorous truncation bound.
    """
    _check_exact_args(snr, i_th)
    if not 0.0 <= rho1 < 1.0:
        raise ValueError("rho1 must lie in [0, 1)")
    m = snr.mimo.m
    if i_th <= 0:
        return ExceedResult(1.0, 0.0, "closed_form")
    if m == 1:
        lam = _threshold_eigen(snr, i_th)
        ctx = _ctx(snr.mimo)
        if lam <= 0:
            return ExceedResult(1.0, 0.0, "closed_form")
        return ExceedResult(varphi_lambda(ctx, lam, rho1), 0.0, "closed_form")
    if m == 2:
        return _joint_exceed_pair(snr, i_th, rho1, tol)
    return imi_exceed_mc(snr, i_th, rho1, trials=trials, seed=seed)[1]


def _joint_exceed_pair(snr: SnrConfig, i_th: float, rho1: float, tol: float) -> ExceedResult:
    z = rho1 * rho1
    x_cut = _mass_limit(snr.mimo)
    base = _pair_region_table(snr, i_th, 1, x_cut)
    q = base[0, 1]  # probability of the low-IMI region
    phi = clamp_probability(1.0 - q)
    if z == 0.0 or q <= 0.0:
        return ExceedResult(phi * phi if z == 0.0 else phi, 0.0, "quadrature")
    need = math.log(tol / q) / math.log(z) + 2
    if need > MAX_SERIES_TERMS:
        raise TruncationError("joint exceedance series for M = 2 needs too many terms")
    jmax = max(8, int(math.ceil(need)))
    tab = _pair_region_table(snr, i_th, jmax, x_cut)
    iu = np.triu_indices(jmax + 1, 1)
    expo = (iu[0] + iu[1] - 1).astype(float)
    a2 = tab[iu] ** 2
    series = math.fsum((z**expo * a2)[expo > 0])
    resid = max(q - a2.sum(), 0.0)
    if z**jmax * resid > tol:
        raise TruncationError("joint exceedance series for M = 2 did not converge")
    pp = clamp_probability(phi * phi + series)
    return ExceedResult(min(pp, phi), 0.0, "quadrature")


def _mc_block(args):
    seq, n, mimo, omega, rho1, i_th = args
    rng = np.random.default_rng(seq)
    shape = (n, mimo.n_rx, mimo.n_tx)

    def cn():
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)

    h1 = cn()
    h2 = rho1 * h1 + math.sqrt(1.0 - rho1 * rho1) * cn()
    out = []
    for h in (h1, h2):
        g = h @ np.conj(np.swapaxes(h, 1, 2)) if mimo.n_rx <= mimo.n_tx else np.conj(np.swapaxes(h, 1, 2)) @ h
        lam = np.linalg.eigvalsh(g)
        out.append(np.log1p(omega * np.clip(lam, 0.0, None)).sum(axis=1))
    a = out[0] > i_th
    b = out[1] > i_th
    return int(a.sum()), int(b.sum()), int((a & b).sum())


def imi_exceed_mc(
    snr: SnrConfig,
    i_th: float,
    rho1: float,
    trials: int = 1 << 20,
    seed: int = 0,
    block: int = 1 << 15,
    workers: int | None = None,
) -> tuple[ExceedResult, ExceedResult, ExceedResult]:
    """Monte Carlo estimates of ``P(I > I_th)``, the joint exceedance and their difference.

    The difference ``P(I_1 > I_th) - P(I_1 > I_th, I_2 > I_th)`` is estimated
    directly from the pairs that straddle the threshold, so its standard
    error is much smaller than that of either probability.

    Pairs of channel matrices with correlation ``rho1`` are drawn in
    independent blocks, each seeded from ``SeedSequence(seed).spawn``;
    results are merged in block order so they do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    nblocks = -(-trials // block)
    seqs = np.random.SeedSequence(int(seed)).spawn(nblocks)
    sizes = [min(block, trials - b * block) for b in range(nblocks)]
    args = [(seqs[b], sizes[b], snr.mimo, snr.omega, rho1, i_th) for b in range(nblocks)]
    if workers == 1 or nblocks == 1:
        res = [_mc_block(a) for a in args]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(_mc_block, args))
    n_a = sum(r[0] + r[1] for r in res)  # both members of a pair have the marginal law
    n_ab = sum(r[2] for r in res)
    n = float(trials)
    p = n_a / (2 * n)
    pp = n_ab / n
    d = p - pp  # P(I_1 > I_th >= I_2), estimated from both orderings
    var_p = (n_a + 2 * n_ab) / (4 * n) - p * p
    var_d = (n_a - 2 * n_ab) / (4 * n) - d * d
    return (
        ExceedResult(p, math.sqrt(max(var_p, 0.0) / n), "monte_carlo"),
        ExceedResult(pp, math.sqrt(max(pp * (1 - pp), 0.0) / n), "monte_carlo"),
        ExceedResult(d, math.sqrt(max(var_d, 0.0) / n), "monte_carlo"),
    )


# ---------------------------------------------------------------------------
# Gaussian approximation
# ---------------------------------------------------------------------------


def gaussian_lcr(i_norm: float, rho1: float, symbol_time: float) -> float:
    """Down-crossing rate of a discrete Gaussian process at normalized level ``i_norm``.

    ``rho1`` is the lag-one correlation coefficient of the process.
    """
    if not -1.0 <= rho1 <= 1.0:
        raise ValueError("rho1 must lie in [-1, 1]")
    if not symbol_time > 0:
        raise ValueError("symbol_time must be positive")
    lo = 0.25 * math.pi + 0.5 * math.asin(rho1)
    hi = 0.5 * math.pi
    if hi - lo <= 0:
        return 0.0
    if i_norm == 0:
        return (hi - lo) / (math.pi * symbol_time)
    c = 0.5 * i_norm * i_norm
    val, _ = integrate.quad(lambda t: math.exp(-c / math.sin(t) ** 2), lo, hi, epsabs=0.0, epsrel=1e-12)
    return val / (math.pi * symbol_time)


def gaussian_aod(i_norm: float, rho1: float, symbol_time: float) -> float:
    """Average outage duration ``(1 - Q(i_norm)) / LCR``; ``inf`` if the LCR vanishes."""
    lcr = gaussian_lcr(i_norm, rho1, symbol_time)
    if lcr <= 0:
        return math.inf
    return (1.0 - gaussian_q(i_norm)) / lcr


def _normalized(snr: SnrConfig, i_th: float, regime: str) -> float:
    mom = regime_moments(snr, regime)
    if not mom.variance > 0:
        raise ValueError("IMI variance must be positive")
    return (i_th - mom.mean) / math.sqrt(mom.variance)


def imi_gaussian_lcr(snr: SnrConfig, i_th: float, rho1_i: float, symbol_time: float, regime: str = "exact") -> float:
    """IMI level crossing rate under the Gaussian approximation."""
    return gaussian_lcr(_normalized(snr, i_th, regime), rho1_i, symbol_time)


def imi_gaussian_aod(snr: SnrConfig, i_th: float, rho1_i: float, symbol_time: float, regime: str = "exact") -> float:
    """IMI average outage duration under the Gaussian approximation."""
    return gaussian_aod(_normalized(snr, i_th, regime), rho1_i, symbol_time)


def imi_level_stats(
    snr: SnrConfig,
    i_th: float,
    rho1: float,
    symbol_time: float,
    regime: str = "exact",
    method: str = "gaussian",
    trials: int = 1 << 20,
    seed: int = 0,
) -> ImiLevelStats:
    """LCR and AOD of the IMI at ``i_th`` for channel correlation magnitude ``rho1``.

    ``method="gaussian"`` uses the Gaussian approximation with moments and
    lag-one correlation from ``regime``; ``method="exact"`` uses the exact
    exceedance probabilities (Monte Carlo for ``M > 2``).
    """
    mom = regime_moments(snr, regime)
    i_norm = (i_th - mom.mean) / math.sqrt(mom.variance)
    if method == "gaussian":
        rho_i = imi_corr(snr, rho1, regime).coeff
        lcr = gaussian_lcr(i_norm, rho_i, symbol_time)
        phi = gaussian_q(i_norm)
        aod = math.inf if lcr <= 0 else (1.0 - phi) / lcr
        return ImiLevelStats(i_th, i_norm, phi, phi - lcr * symbol_time, lcr, aod, "gaussian", 0.0)
    if method != "exact":
        raise ValueError("method must be 'gaussian' or 'exact'")
    if snr.mimo.m > 2:
        p, pp, d = imi_exceed_mc(snr, i_th, rho1, trials=trials, seed=seed)
        diff = d.value
        se = d.std_error / symbol_time
        tag = "monte_carlo"
    else:
        p = imi_exceed_exact(snr, i_th)
        pp = imi_joint_exceed_exact(snr, i_th, rho1)
        diff = max(p.value - pp.value, 0.0)
        se = 0.0
        tag = pp.method
    lcr = diff / symbol_time
    aod = math.inf if diff <= 0 else (1.0 - p.value) * symbol_time / diff
    return ImiLevelStats(i_th, i_norm, p.value, pp.value, lcr, aod, tag, se)
