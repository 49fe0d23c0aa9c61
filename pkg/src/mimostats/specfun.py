"""Special functions and quadrature rules.

Only integer orders and integer shape parameters are needed by the
analytic formulas, so incomplete gamma, digamma and Hurwitz zeta values
are produced from exact finite sums. Every Meijer-G instance that shows
up in the mutual-information moments is replaced by a one-dimensional
log-moment integral evaluated by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Final, Sequence

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError

EULER_GAMMA: Final[float] = 0.57721566490153286061
SERIES_RTOL: Final[float] = 1e-14
SERIES_MAX_TERMS: Final[int] = 1_000_000

__all__ = [
    "EULER_GAMMA",
    "SERIES_RTOL",
    "SERIES_MAX_TERMS",
    "QuadratureRule",
    "bessel_i",
    "laguerre",
    "upper_gamma_int",
    "upper_gamma_reg_int",
    "digamma_int",
    "zeta2",
    "hyper_pfq",
    "hyper_4f3",
    "log_moment_expectation",
    "log_moment_integral",
    "log2_moment_integral",
    "gaussian_q",
]


# ---------------------------------------------------------------------------
# Quadrature rules
# ---------------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuadratureRule:
    """Immutable set of quadrature nodes and positive weights.

    Parameters
    ----------
    nodes, weights : array_like
        Abscissae and weights. Weights must be strictly positive.
    kind : {"gauss_laguerre", "adaptive_interval"}
        ``gauss_laguerre`` rules integrate ``f(x) e^{-x} x^alpha`` on the
        half line; ``adaptive_interval`` rules integrate ``f(x)`` on a
        finite interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    alpha: float = 0.0
    interval: tuple[float, float] | None = field(default=None)

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        weights = _frozen(self.weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size < 2:
            raise ValueError("a quadrature rule needs at least two nodes")
        if not np.all(weights > 0):
            raise ValueError("quadrature weights must be positive")
        if self.kind not in ("gauss_laguerre", "adaptive_interval"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Apply the rule to a vectorized integrand."""
        return float(np.dot(self.weights, f(self.nodes)))

    @classmethod
    def gauss_laguerre(cls, n: int, alpha: float = 0.0) -> "QuadratureRule":
        """Generalized Gauss-Laguerre rule for the weight ``x^alpha e^{-x}``."""
        if n < 2:
            raise ValueError("n must be at least 2")
        x, w = special.roots_genlaguerre(n, alpha)
        keep = w > 0  # the last weights underflow for large n
        return cls(x[keep], w[keep], "gauss_laguerre", alpha=float(alpha))

    @classmethod
    def composite_legendre(cls, breaks: Sequence[float], order: int = 16) -> "QuadratureRule":
        """Composite Gauss-Legendre rule over consecutive break points."""
        b = np.asarray(breaks, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must be strictly increasing with at least two entries")
        t, w = np.polynomial.legendre.leggauss(order)
        half = 0.5 * np.diff(b)
        mid = 0.5 * (b[1:] + b[:-1])
        nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return cls(nodes, weights, "adaptive_interval", interval=(float(b[0]), float(b[-1])))

    @classmethod
    def adaptive(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        a: float,
        b: float,
        rtol: float = 1e-12,
        order: int = 16,
        max_panels: int = 4096,
    ) -> "QuadratureRule":
        """Adaptive composite Gauss-Legendre rule refined for integrand ``f``.

        A panel is split whenever its ``order``-point estimate differs from
        the two half-panel estimates by more than ``rtol`` times the running
        total. The resulting rule can be reused for integrands of similar
        shape.
        """
        t, w = np.polynomial.legendre.leggauss(order)

        def panel(lo, hi):
            h = 0.5 * (hi - lo)
            return h * np.dot(w, f(0.5 * (hi + lo) + h * t))

        total = panel(a, b)
        stack = [(a, b, total)]
        accepted: list[tuple[float, float]] = []
        while stack:
            lo, hi, est = stack.pop()
            mid = 0.5 * (lo + hi)
            left, right = panel(lo, mid), panel(mid, hi)
            if abs(left + right - est) <= rtol * max(abs(total), 1e-300) or hi - lo < 1e-12 * (b - a):
                accepted.extend([(lo, mid), (mid, hi)])
            else:
                stack.extend([(lo, mid, left), (mid, hi, right)])
            if len(accepted) + len(stack) > max_panels:
                raise ConvergenceError("adaptive rule exceeded its panel budget")
        edges = sorted({p for pair in accepted for p in pair})
        return cls.composite_legendre(edges, order)


# ---------------------------------------------------------------------------
# Bessel and Laguerre
# ---------------------------------------------------------------------------


def bessel_i(order: int, z: complex) -> complex:
    """Modified Bessel function of the first kind for integer order.

    Parameters
    ----------
    order : int
        Nonnegative order, at most 64.
    z : complex
        Argument with ``|z| <= 1e4``.

    Raises
    ------
    OverflowError
        If the value is not representable as a double.
    """
    if int(order) != order or order < 0 or order > 64:
        raise ValueError("order must be an integer in [0, 64]")
    z = complex(z)
    if abs(z) > 1e4:
        raise ValueError("|z| must not exceed 1e4")
    val = complex(special.iv(int(order), z))
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise OverflowError(f"I_{order}({z}) is not representable")
    return val


def laguerre(n: int, nu: int, x):
    """Associated Laguerre polynomial ``L_n^nu(x)`` by forward recurrence.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    if n < 0 or nu < 0:
        raise ValueError("n and nu must be nonnegative")
    if n > 256:
        raise ValueError("n must not exceed 256")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = nu + 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + nu + 1 - x) * cur - (k + nu) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


# ---------------------------------------------------------------------------
# Integer-parameter gamma family
# ---------------------------------------------------------------------------


def upper_gamma_reg_int(a: int, z: float) -> float:
    """Regularized upper incomplete gamma ``Gamma(a, z)/(a-1)!`` for integer ``a``.

    Equals the probability that a Poisson(z) count is below ``a``.
    """
    if a < 1:
        raise ValueError("a must be a positive integer")
    if z < 0:
        raise ValueError("z must be nonnegative")
    if z == 0:
        return 1.0
    lz = math.log(z)
    terms = [math.exp(k * lz - math.lgamma(k + 1) - z) for k in range(a)]
    return min(1.0, math.fsum(terms))


def upper_gamma_int(a: int, z: float) -> float:
    """Upper incomplete gamma ``Gamma(a, z)`` for positive integer ``a <= 512``.

    Raises
    ------
    OverflowError
        If the value exceeds the double range (possible for ``a > 171``).
    """
    if a > 512:
        raise ValueError("a must not exceed 512")
    q = upper_gamma_reg_int(a, z)
    if a <= 171:
        return math.factorial(a - 1) * q
    if q == 0.0:
        return 0.0
    logval = math.lgamma(a) + math.log(q)
    if logval > 709.78:
        raise OverflowError(f"Gamma({a}, {z}) exceeds the double range")
    return math.exp(logval)


def digamma_int(k: int) -> float:
    """Digamma at a positive integer, ``psi(k) = H_{k-1} - C``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return math.fsum(1.0 / j for j in range(1, k)) - EULER_GAMMA


def zeta2(q: int) -> float:
    """Hurwitz zeta ``zeta(2, q) = pi^2/6 - sum_{k<q} 1/k^2`` at a positive integer."""
    if q < 1:
        raise ValueError("q must be a positive integer")
    return math.fsum([math.pi**2 / 6.0] + [-1.0 / (k * k) for k in range(1, q)])


def harmonic(n: int) -> float:
    """Harmonic number ``H_n``."""
    return math.fsum(1.0 / j for j in range(1, n + 1))


# ---------------------------------------------------------------------------
# Generalized hypergeometric series
# ---------------------------------------------------------------------------


def hyper_pfq(a: Sequence[float], b: Sequence[float], z: float) -> float:
    """Generalized hypergeometric series ``pFq(a; b; z)`` by term recurrence.

    Summation stops once a term falls below ``SERIES_RTOL`` relative to the
    partial sum or after ``SERIES_MAX_TERMS`` terms.

    Raises
    ------
    ConvergenceError
        If the term cap is reached with ``|z| > 0.999``.
    """
    for bj in b:
        if bj <= 0 and float(bj).is_integer():
            raise ValueError("lower parameters must not be nonpositive integers")
    if z == 0:
        return 1.0
    term = 1.0
    terms = [1.0]
    total = 1.0
    for p in range(SERIES_MAX_TERMS):
        num = 1.0
        for ai in a:
            num *= ai + p
        den = 1.0
        for bj in b:
            den *= bj + p
        term *= num / den * z / (p + 1)
        terms.append(term)
        total += term
        if term == 0.0 or abs(term) < SERIES_RTOL * abs(total):
            return math.fsum(terms)
    if abs(z) > 0.999:
        raise ConvergenceError(f"hypergeometric series did not converge at z={z}")
    return math.fsum(terms)


def hyper_4f3(a: Sequence[float], b: Sequence[float], z: float) -> float:
    """``4F3(a1..a4; b1..b3; z)`` for ``z`` in ``[0, 1)``."""
    if len(a) != 4 or len(b) != 3:
        raise ValueError("4F3 takes four upper and three lower parameters")
    if not 0.0 <= z < 1.0:
        raise ValueError("z must lie in [0, 1)")
    return hyper_pfq(a, b, z)


# ---------------------------------------------------------------------------
# Log-moment integrals (replacements for the Meijer-G instances)
# ---------------------------------------------------------------------------


def _check_log_args(k: int, omega: float) -> None:
    if k < 0 or k > 256:
        raise ValueError("k must lie in [0, 256]")
    if not omega > 0:
        raise ValueError("omega must be positive")


def log_moment_expectation(k: int, omega: float, power: int = 1) -> float:
    """``E[ln^power(1 + omega X)]`` for ``X ~ Gamma(k+1, 1)``.

    This is the normalized form ``(1/k!) int_0^inf x^k e^{-x} ln^p(1+omega x) dx``
    and stays finite for every admissible ``k``. The integral is split at
    ``k + 40 sqrt(k+1)``; the remainder beyond that point is bounded
    analytically and only integrated when the bound is not negligible.
    """
    _check_log_args(k, omega)
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    lg = math.lgamma(k + 1)

    def f(x):
        if x <= 0.0:
            return 0.0
        return math.exp(k * math.log(x) - x - lg) * math.log1p(omega * x) ** power

    upper = k + 40.0 * math.sqrt(k + 1.0)
    pts = sorted({p for p in (1.0 / omega, 10.0 / omega, float(k), float(k) + math.sqrt(k + 1.0)) if 0 < p < upper})
    main, _ = integrate.quad(f, 0.0, upper, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=400)
    # concavity of ln(1+wx) gives ln(1+wx) <= x ln(1+wB)/B for x >= B
    slope = math.log1p(omega * upper) / upper
    bound = slope**power * math.exp(math.lgamma(k + power + 1) - lg) * upper_gamma_reg_int(k + power + 1, upper)
    if bound > 1e-17 * abs(main):
        tail, _ = integrate.quad(f, upper, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        main += tail
    return main


def log_moment_integral(k: int, omega: float) -> float:
    """``int_0^inf x^k e^{-x} ln(1 + omega x) dx``.

    Raises
    ------
    OverflowError
        When ``k!`` times the expectation exceeds the double range.
    """
    return math.factorial(k) * log_moment_expectation(k, omega, 1)


def log2_moment_integral(k: int, omega: float) -> float:
    """``int_0^inf x^k e^{-x} ln^2(1 + omega x) dx``."""
    return math.factorial(k) * log_moment_expectation(k, omega, 2)


# ---------------------------------------------------------------------------
# Gaussian tail
# ---------------------------------------------------------------------------


def gaussian_q(x):
    """Gaussian Q-function ``Q(x) = P(Z > x)`` for a standard normal ``Z``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out
