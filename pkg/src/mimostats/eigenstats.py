"""Statistics of the unordered eigenvalues of ``H(l) H(l)^dag``.

With ``M = min(N_T, N_R)``, ``N = max(N_T, N_R)`` and ``nu = N - M`` an
unordered eigenvalue has density

    p(x) = (1/M) sum_{m<M} u_m(x)^2,

where ``u_m(x) = sqrt(m!/(m+nu)!) x^{nu/2} e^{-x/2} L_m^nu(x)`` are the
orthonormal Laguerre functions. Two eigenvalues of the same matrix
process taken ``i`` steps apart have the bivariate density

    p(x, y) = p(x) p(y) + (1/M^2) sum_{j>=M} sum_{k<M}
              z^{j-k} u_j(x) u_k(x) u_j(y) u_k(y),    z = varrho_i^2,

from which the level crossing rate follows through the probability of
exceeding a threshold at two consecutive steps.

Tail integrals of products of Laguerre functions are evaluated through
the Christoffel-Darboux-type identity

    int_lam^inf u_j u_k dx = u_j u_k
        - [sqrt(j(j+nu)) u_{j-1} u_k - sqrt(k(k+nu)) u_{k-1} u_j] / (j - k)

(all at ``lam``, ``j != k``), which avoids the catastrophic cancellation of
the expanded incomplete-gamma sums once ``j`` exceeds a few dozen.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .channel import MimoConfig
from .errors import ClampWarning, DegenerateConfigError, TruncationError
from .kernels import laguerre_functions
from .specfun import upper_gamma_reg_int

__all__ = [
    "EigenPdfContext",
    "EigenCorrResult",
    "LevelStats",
    "marginal_pdf",
    "joint_pdf",
    "unordered_pair_pdf",
    "eigen_moments",
    "eigen_corr",
    "phi_lambda",
    "varphi_lambda",
    "tail_brackets",
    "level_stats",
    "eigen_lcr",
    "eigen_afd",
    "laguerre_integral_I1",
    "laguerre_integral_I2",
]

MAX_SERIES_TERMS = 4096
SERIES_TOL = 1e-10
PDF_SERIES_TOL = 1e-12
PDF_SERIES_FAIL = 1e-8
CLAMP_WARN = 1e-8
JOINT_PDF_CHUNK = 2048


def clamp_probability(p: float, what: str = "probability") -> float:
    """Clamp to [0, 1], warning when the excursion exceeds rounding level."""
    if p < -CLAMP_WARN or p > 1.0 + CLAMP_WARN:
        warnings.warn(f"{what} {p!r} clamped to [0, 1]", ClampWarning, stacklevel=3)
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class EigenPdfContext:
    """Precomputed coefficient tables for one antenna configuration.

    The context is immutable and can be shared between workers.
    """

    mimo: MimoConfig

    @property
    def m(self) -> int:
        return self.mimo.m

    @property
    def n(self) -> int:
        return self.mimo.n

    @property
    def nu(self) -> int:
        return self.mimo.nu

    @cached_property
    def diagonal_weights(self) -> dict[int, Fraction]:
        """Exact weights ``W_k`` with ``sum_m u_m(x)^2 = sum_k W_k x^k e^{-x}/k!``.

        Expanding ``[L_m^nu]^2`` term by term gives, for the power
        ``x^{p+q+nu}``, the coefficient
        ``m! C(m+nu, m-p) C(m+nu, m-q) (-1)^{p+q} / ((m+nu)! p! q!)``;
        multiplying by ``k!`` with ``k = p+q+nu`` turns each power into a
        unit-mass gamma density.
        """
        w: dict[int, Fraction] = {}
        nu = self.nu
        for mm in range(self.m):
            base = Fraction(math.factorial(mm), math.factorial(mm + nu))
            for p in range(mm + 1):
                for q in range(mm + 1):
                    k = p + q + nu
                    c = base * math.comb(mm + nu, mm - p) * math.comb(mm + nu, mm - q)
                    c *= Fraction(math.factorial(k), math.factorial(p) * math.factorial(q))
                    w[k] = w.get(k, Fraction(0)) + (c if (p + q) % 2 == 0 else -c)
        return {k: v for k, v in sorted(w.items()) if v != 0}

    @cached_property
    def cross_weights(self) -> dict[tuple[int, int], dict[int, Fraction]]:
        """Exact weights for ``u_j(x) u_k(x) = sum_s V_s x^s e^{-x}/s!`` with ``j, k < M``."""
        nu = self.nu
        out: dict[tuple[int, int], dict[int, Fraction]] = {}
        for j in range(self.m):
            for k in range(self.m):
                norm2 = Fraction(math.factorial(j) * math.factorial(k), math.factorial(j + nu) * math.factorial(k + nu))
                w: dict[int, Fraction] = {}
                for p in range(j + 1):
                    for q in range(k + 1):
                        s = p + q + nu
                        c = Fraction(
                            math.comb(j + nu, j - p) * math.comb(k + nu, k - q) * math.factorial(s),
                            math.factorial(p) * math.factorial(q),
                        )
                        w[s] = w.get(s, Fraction(0)) + (c if (p + q) % 2 == 0 else -c)
                out[(j, k)] = {"norm2": norm2, **{s: v for s, v in w.items() if v != 0}}
        return out

    def u(self, nmax: int, x) -> np.ndarray:
        """Orthonormal Laguerre functions ``u_0..u_nmax`` at ``x``."""
        return laguerre_functions(nmax, self.nu, x)


@dataclass(frozen=True)
class EigenCorrResult:
    """Normalized correlation and correlation coefficient of two eigen-channels."""

    lag: int
    normalized_corr: float
    corr_coeff: float
    same_mode: bool


@dataclass(frozen=True)
class LevelStats:
    """Level-crossing statistics of an unordered eigen-channel.

    ``joint_lower`` and ``joint_upper`` are the sandwich values ``phi^2``
    and ``phi``; ``terms`` and ``tail_bound`` describe the series truncation.
    """

    threshold: float
    exceed_prob: float
    joint_exceed: float
    lcr: float
    afd: float
    joint_lower: float
    joint_upper: float
    terms: int
    tail_bound: float


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def marginal_pdf(ctx: EigenPdfContext, x):
    """Density of an unordered eigenvalue."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("x must be nonnegative")
    u = ctx.u(ctx.m - 1, xa.ravel())
    out = (u**2).sum(axis=0).reshape(xa.shape) / ctx.m
    return float(out) if out.ndim == 0 else out


def joint_pdf(ctx: EigenPdfContext, x, y, rho: float):
    """Joint density of one unordered eigenvalue now and one ``i`` steps later.

    Parameters
    ----------
    x, y : array_like
        Evaluation points (broadcast together).
    rho : float
        ``varrho_i`` in [0, 1).

    Raises
    ------
    TruncationError
        If 4096 series terms leave an estimated tail above 1e-8.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = xa.shape
    xa, ya = xa.ravel(), ya.ravel()
    if np.any(xa < 0) or np.any(ya < 0):
        raise ValueError("x and y must be nonnegative")
    if rho == 0.0:
        base = marginal_pdf(ctx, xa) * marginal_pdf(ctx, ya)
        return base.reshape(shape) if shape else float(base[0])
    # bound the (terms x points) Laguerre tables by working in point chunks
    out = np.empty(xa.size)
    for s in range(0, xa.size, JOINT_PDF_CHUNK):
        sl = slice(s, s + JOINT_PDF_CHUNK)
        out[sl] = _joint_pdf_flat(ctx, xa[sl], ya[sl], rho)
    return out.reshape(shape) if shape else float(out[0])


def _joint_pdf_flat(ctx: EigenPdfContext, xa: np.ndarray, ya: np.ndarray, rho: float) -> np.ndarray:
    m = ctx.m
    base = marginal_pdf(ctx, xa) * marginal_pdf(ctx, ya)
    z = rho * rho
    chunk = 128
    nmax = m + chunk - 1
    while True:
        ux = ctx.u(nmax, xa)
        uy = ctx.u(nmax, ya)
        k = np.arange(m)
        # A[j] = sum_k z^{j-k} u_k(x) u_k(y) u_j(x) u_j(y)
        low = (ux[:m] * uy[:m]) * z ** (-k.astype(float))[:, None]
        pair = ux[m:] * uy[m:]
        zj = z ** np.arange(m, nmax + 1, dtype=float)
        terms = zj[:, None] * pair * low.sum(axis=0)[None, :]
        # geometric tail estimate from the last block of term magnitudes
        window = np.abs(pair[-min(32, pair.shape[0]) :]).max(axis=0)
        tail = z ** (nmax + 1) * window * np.abs(low).sum(axis=0) / (1.0 - z)
        if np.all(tail <= PDF_SERIES_TOL * (1.0 + np.abs(base))) or nmax + 1 - m >= MAX_SERIES_TERMS:
            break
        nmax = min(m + MAX_SERIES_TERMS - 1, 2 * nmax + 1)
    if np.any(tail > PDF_SERIES_FAIL):
        raise TruncationError(f"joint density series tail {tail.max():.2e} exceeds tolerance")
    return np.maximum(base + terms.sum(axis=0) / (m * m), 0.0)


def unordered_pair_pdf(ctx: EigenPdfContext, x1, x2):
    """Joint density of two distinct eigenvalues of the same matrix.

    Raises
    ------
    DegenerateConfigError
        When ``M = 1`` (there is no second eigenvalue).
    """
    m = ctx.m
    if m < 2:
        raise DegenerateConfigError("a pair of eigenvalues requires M >= 2")
    a, b = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    shape = a.shape
    u1 = ctx.u(m - 1, a.ravel())
    u2 = ctx.u(m - 1, b.ravel())
    s1 = (u1**2).sum(axis=0)
    s2 = (u2**2).sum(axis=0)
    c = (u1 * u2).sum(axis=0)
    # sum_{p != q} [u_p(a)^2 u_q(b)^2 - u_p(a) u_q(a) u_p(b) u_q(b)] = s1 s2 - c^2
    out = np.maximum(s1 * s2 - c * c, 0.0) / (m * (m - 1))
    return out.reshape(shape) if shape else float(out[0])


# ---------------------------------------------------------------------------
# Moments and correlation
# ---------------------------------------------------------------------------


def eigen_moments(mimo: MimoConfig) -> tuple[float, float]:
    """Mean ``N`` and second moment ``N (N + M)`` of an unordered eigenvalue."""
    return float(mimo.n), float(mimo.n * (mimo.n + mimo.m))


def eigen_corr(mimo: MimoConfig, lag: int, rho: float, same_mode: bool) -> EigenCorrResult:
    """Normalized correlation and correlation coefficient of eigen-channels.

    Parameters
    ----------
    lag : int
        Time lag ``i``. At ``i = 0`` the result depends on ``same_mode``.
    rho : float
        ``varrho_i`` in [0, 1]; ignored at ``i = 0``.
    same_mode : bool
        Whether both eigenvalues carry the same (random) label.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    m, n = mimo.m, mimo.n
    if lag == 0:
        off = 0 if same_mode else 1
        nacf = (m - (m + 1) * off) / (n + m)
        coeff = 1.0 - (m + 1) / m * off
    else:
        z = rho * rho
        nacf = (m * n + z) / (m * n + m * m)
        coeff = z / (m * m)
    return EigenCorrResult(int(lag), float(nacf), float(coeff), bool(same_mode))


# ---------------------------------------------------------------------------
# Exceedance probabilities
# ---------------------------------------------------------------------------


def phi_lambda(ctx: EigenPdfContext, lambda_th: float) -> float:
    """Probability that an unordered eigenvalue exceeds ``lambda_th``."""
    if not lambda_th > 0:
        raise ValueError("lambda_th must be positive")
    w = ctx.diagonal_weights
    terms = [float(c) * upper_gamma_reg_int(k + 1, lambda_th) for k, c in w.items()]
    return clamp_probability(math.fsum(terms) / ctx.m, "exceedance probability")


def tail_brackets(ctx: EigenPdfContext, lambda_th: float, jmax: int) -> np.ndarray:
    """``B[j, k] = int_lam^inf u_j u_k dx`` for ``j = 0..jmax`` and ``k < M``.

    Off-diagonal entries use the closed-form tail identity; diagonal
    entries ``j = k < M`` use the exact finite incomplete-gamma sums.
    """
    m, nu = ctx.m, ctx.nu
    u = ctx.u(max(jmax, m - 1), np.array([lambda_th]))[:, 0]
    j = np.arange(jmax + 1)
    aj = np.sqrt(j * (j + float(nu)))
    uj_prev = np.concatenate(([0.0], u[:jmax]))
    out = np.empty((jmax + 1, m))
    for k in range(m):
        ak = math.sqrt(k * (k + nu))
        uk_prev = u[k - 1] if k > 0 else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            col = u[: jmax + 1] * u[k] - (aj * uj_prev * u[k] - ak * uk_prev * u[: jmax + 1]) / (j - k)
        if k <= jmax:
            col[k] = _diag_tail(ctx, k, lambda_th)
        out[:, k] = col
    return out


def _diag_tail(ctx: EigenPdfContext, k: int, lam: float) -> float:
    cw = ctx.cross_weights[(k, k)]
    norm2 = float(cw["norm2"])
    terms = [float(c) * upper_gamma_reg_int(s + 1, lam) for s, c in cw.items() if s != "norm2"]
    return norm2 * math.fsum(terms)


def _joint_series(ctx: EigenPdfContext, lambda_th: float, rho1: float, tol: float):
    """Correction series of the joint exceedance probability.

    Returns ``(value, terms, tail_bound)``. The tail bound is rigorous:
    ``sum_{j>J} B[j,k]^2 <= int_lam^inf u_k^2 - sum_{j<=J} B[j,k]^2`` by
    Bessel's inequality for the orthonormal system ``u_j``.
    """
    m = ctx.m
    z = rho1 * rho1
    if z == 0.0:
        return 0.0, 0, 0.0
    # estimate the number of terms from the crude bound B <= 1
    need = math.log(tol * (1.0 - z) * m) / math.log(z) + m + 2
    jmax = int(min(m + MAX_SERIES_TERMS - 1, max(m + 16, math.ceil(need))))
    br = tail_brackets(ctx, lambda_th, jmax)
    norms = np.array([br[k, k] for k in range(m)])
    sq = br**2
    j = np.arange(jmax + 1)
    k = np.arange(m)
    expo = (j[m:, None] - k[None, :]).astype(float)
    series = math.fsum((z**expo * sq[m:]).ravel()) / (m * m)
    resid = np.maximum(norms - sq.sum(axis=0), 0.0)
    tail = float(np.sum(z ** (jmax + 1 - k) * resid)) / (m * m)
    if tail > tol:
        raise TruncationError(
            f"joint exceedance series needs more than {MAX_SERIES_TERMS} terms (tail bound {tail:.2e})"
        )
    return series, jmax + 1 - m, tail


def varphi_lambda(ctx: EigenPdfContext, lambda_th: float, rho1: float, tol: float = SERIES_TOL) -> float:
    """Probability that an unordered eigenvalue exceeds ``lambda_th`` at two consecutive steps."""
    if not lambda_th > 0:
        raise ValueError("lambda_th must be positive")
    if not 0.0 <= rho1 < 1.0:
        raise ValueError("rho1 must lie in [0, 1)")
    phi = phi_lambda(ctx, lambda_th)
    series, _, _ = _joint_series(ctx, lambda_th, rho1, tol)
    return clamp_probability(phi * phi + series, "joint exceedance probability")


def level_stats(ctx: EigenPdfContext, lambda_th: float, rho1: float, symbol_time: float, tol: float = SERIES_TOL) -> LevelStats:
    """Exceedance, joint exceedance, LCR and AFD at one threshold."""
    if not lambda_th > 0:
        raise ValueError("lambda_th must be positive")
    if not 0.0 <= rho1 < 1.0:
        raise ValueError("rho1 must lie in [0, 1)")
    if not symbol_time > 0:
        raise ValueError("symbol_time must be positive")
    phi = phi_lambda(ctx, lambda_th)
    series, terms, tail = _joint_series(ctx, lambda_th, rho1, tol)
    pp = clamp_probability(phi * phi + series, "joint exceedance probability")
    pp = min(pp, phi)
    diff = phi - pp
    lcr = diff / symbol_time
    afd = math.inf if diff <= 0 else (1.0 - phi) * symbol_time / diff
    return LevelStats(lambda_th, phi, pp, lcr, afd, phi * phi, phi, terms, tail)


def eigen_lcr(ctx: EigenPdfContext, lambda_th: float, rho1: float, symbol_time: float) -> float:
    """Expected down-crossing rate (per second) of an unordered eigen-channel."""
    return level_stats(ctx, lambda_th, rho1, symbol_time).lcr


def eigen_afd(ctx: EigenPdfContext, lambda_th: float, rho1: float, symbol_time: float) -> float:
    """Average fade duration in seconds; ``inf`` when no crossings occur."""
    return level_stats(ctx, lambda_th, rho1, symbol_time).afd


# ---------------------------------------------------------------------------
# Laguerre integrals with closed forms
# ---------------------------------------------------------------------------


def laguerre_integral_I1(j: int, k: int, nu: int) -> float:
    """``int_0^inf x^{nu+1} e^{-x} L_j^nu(x) L_k^nu(x) dx``."""
    if min(j, k, nu) < 0:
        raise ValueError("j, k and nu must be nonnegative")
    if j == k:
        return float((2 * k + nu + 1) * math.factorial(k + nu) // math.factorial(k))
    if abs(j - k) == 1:
        s = min(j, k)
        return -float(math.factorial(s + nu + 1) // math.factorial(s))
    return 0.0


def laguerre_integral_I2(j: int, k: int, nu: int) -> float:
    """``int_0^inf ln(x) x^nu e^{-x} L_j^nu(x) L_k^nu(x) dx`` for ``j != k``."""
    if min(j, k, nu) < 0:
        raise ValueError("j, k and nu must be nonnegative")
    if j == k:
        raise ValueError("j and k must differ")
    s, b = min(j, k), max(j, k)
    return math.factorial(s + nu) / (math.factorial(s) * (s - b))
