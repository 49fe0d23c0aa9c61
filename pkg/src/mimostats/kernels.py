"""Hot loops with paired numba and numpy implementations.

Each public function takes an optional ``backend`` argument; when omitted
the backend comes from :func:`mimostats._accel.default_backend`. Both
paths compute the same quantities and are cross-checked in the tests.

Kernels
-------
jacobi_eigvalsh
    Eigenvalues of a batch of small complex Hermitian matrices by cyclic
    Jacobi rotations.
laguerre_projection
    ``P[j, c] = sum_i u_j(x_i) G[i, c]`` for orthonormal Laguerre
    functions ``u_j`` up to a given order, without storing the full table.
laguerre_segment_projection
    Same as above but each node contributes to its own segment column.
lagged_block_sums
    Per-block sums of lagged products ``x_l x_{l-i}``.
pair_crossing_sums
    Per-block sums needed by the pair-averaged exceedance estimators.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import default_backend, njit
from .errors import ConvergenceError

JACOBI_MAX_SWEEPS = 64


def _resolve(backend: str | None) -> str:
    b = default_backend() if backend is None else backend
    if b not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {b!r}")
    return b


# ---------------------------------------------------------------------------
# Batched complex Hermitian Jacobi
# ---------------------------------------------------------------------------


@njit(cache=True)
def _jacobi_numba(a, tol):  # pragma: no cover - compiled
    nb, m, _ = a.shape
    out = np.empty((nb, m))
    failed = 0
    for b in range(nb):
        A = a[b].copy()
        scale = 0.0
        for i in range(m):
            for j in range(m):
                scale += A[i, j].real ** 2 + A[i, j].imag ** 2
        scale = math.sqrt(scale)
        converged = False
        for _sweep in range(64):
            off = 0.0
            for p in range(m):
                for q in range(p + 1, m):
                    off += A[p, q].real ** 2 + A[p, q].imag ** 2
            if math.sqrt(2.0 * off) <= tol * scale:
                converged = True
                break
            for p in range(m):
                for q in range(p + 1, m):
                    bpq = A[p, q]
                    mag = abs(bpq)
                    if mag == 0.0:
                        continue
                    ph = bpq / mag
                    app = A[p, p].real
                    aqq = A[q, q].real
                    theta = (aqq - app) / (2.0 * mag)
                    t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                    if theta < 0:
                        t = -t
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    phc = ph.conjugate()
                    for k in range(m):
                        if k == p or k == q:
                            continue
                        x = A[k, p]
                        y = A[k, q] * phc
                        nkp = c * x - s * y
                        nkq = s * x + c * y
                        A[k, p] = nkp
                        A[k, q] = nkq
                        A[p, k] = nkp.conjugate()
                        A[q, k] = nkq.conjugate()
                    A[p, p] = app - t * mag
                    A[q, q] = aqq + t * mag
                    A[p, q] = 0.0
                    A[q, p] = 0.0
        if not converged:
            failed += 1
        for i in range(m):
            out[b, i] = A[i, i].real
    return out, failed


def _jacobi_numpy(a: np.ndarray, tol: float):
    A = a.copy()
    nb, m, _ = A.shape
    scale = np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2)))
    iu = np.triu_indices(m, 1)
    converged = np.zeros(nb, dtype=bool)
    for _sweep in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(np.abs(A[:, iu[0], iu[1]]) ** 2, axis=1))
        converged = off <= tol * scale
        if converged.all():
            break
        for p in range(m):
            for q in range(p + 1, m):
                bpq = A[:, p, q]
                mag = np.abs(bpq)
                nz = mag > 0
                safe = np.where(nz, mag, 1.0)
                ph = np.where(nz, bpq / safe, 1.0)
                app = A[:, p, p].real
                aqq = A[:, q, q].real
                theta = (aqq - app) / (2.0 * safe)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0, 1.0, t)
                t = np.where(nz, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                others = [k for k in range(m) if k != p and k != q]
                if others:
                    x = A[:, others, p]
                    y = A[:, others, q] * np.conj(ph)[:, None]
                    nkp = c[:, None] * x - s[:, None] * y
                    nkq = s[:, None] * x + c[:, None] * y
                    A[:, others, p] = nkp
                    A[:, others, q] = nkq
                    A[:, p, others] = np.conj(nkp)
                    A[:, q, others] = np.conj(nkq)
                A[:, p, p] = app - t * mag
                A[:, q, q] = aqq + t * mag
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
    else:
        off = np.sqrt(2.0 * np.sum(np.abs(A[:, iu[0], iu[1]]) ** 2, axis=1))
        converged = off <= tol * scale
    vals = np.real(np.diagonal(A, axis1=1, axis2=2)).copy()
    return vals, int(np.count_nonzero(~converged))


def jacobi_eigvalsh(a: np.ndarray, tol: float = 1e-14, backend: str | None = None) -> np.ndarray:
    """Eigenvalues (ascending) of a batch of complex Hermitian matrices.

    Parameters
    ----------
    a : ndarray, shape (B, M, M)
        Hermitian matrices. Only consistency with the Hermitian structure
        is assumed, not checked.
    tol : float
        Sweeps stop when the off-diagonal Frobenius norm is below
        ``tol * ||A||_F``.

    Raises
    ------
    ConvergenceError
        If any matrix is not diagonalized within 64 sweeps.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError("expected an array of shape (B, M, M)")
    if a.shape[0] == 0:
        return np.empty((0, a.shape[1]))
    if _resolve(backend) == "numba":
        vals, failed = _jacobi_numba(a, tol)
    else:
        vals, failed = _jacobi_numpy(a, tol)
    if failed:
        raise ConvergenceError(f"Jacobi iteration failed to converge for {failed} matrices")
    vals.sort(axis=1)
    return vals


# ---------------------------------------------------------------------------
# Orthonormal Laguerre functions
# ---------------------------------------------------------------------------


def laguerre_start(nu: int, x: np.ndarray) -> np.ndarray:
    """``u_0(x) = x^{nu/2} e^{-x/2} / sqrt(nu!)``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)
        lu = 0.5 * nu * logx - 0.5 * x - 0.5 * math.lgamma(nu + 1)
        out = np.exp(lu)
    if nu == 0:
        out = np.where(x == 0, 1.0, out)
    else:
        out = np.where(x == 0, 0.0, out)
    return out


def laguerre_functions(nmax: int, nu: int, x) -> np.ndarray:
    """Table ``U[n, i] = u_n(x_i)`` of orthonormal Laguerre functions.

    ``u_n(x) = sqrt(n!/(n+nu)!) x^{nu/2} e^{-x/2} L_n^nu(x)`` so that
    ``int_0^inf u_j u_k dx = delta_jk``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((nmax + 1, x.size))
    out[0] = laguerre_start(nu, x)
    if nmax >= 1:
        out[1] = (nu + 1.0 - x) / math.sqrt(nu + 1.0) * out[0]
    for n in range(1, nmax):
        out[n + 1] = ((2 * n + nu + 1 - x) * out[n] - math.sqrt(n * (n + nu)) * out[n - 1]) / math.sqrt(
            (n + 1) * (n + 1 + nu)
        )
    return out


@njit(cache=True)
def _lag_proj_numba(nmax, nu, x, u0, g):  # pragma: no cover - compiled
    n = x.size
    nc = g.shape[1]
    out = np.zeros((nmax + 1, nc))
    prev = np.zeros(n)
    cur = u0.copy()
    for j in range(nmax + 1):
        for i in range(n):
            ui = cur[i]
            if ui != 0.0:
                for c in range(nc):
                    out[j, c] += ui * g[i, c]
        if j == nmax:
            break
        a = math.sqrt(j * (j + nu))
        d = math.sqrt((j + 1) * (j + 1 + nu))
        for i in range(n):
            nxt = ((2 * j + nu + 1 - x[i]) * cur[i] - a * prev[i]) / d
            prev[i] = cur[i]
            cur[i] = nxt
    return out


def _lag_proj_numpy(nmax, nu, x, u0, g):
    out = np.empty((nmax + 1, g.shape[1]))
    prev = np.zeros_like(x)
    cur = u0.copy()
    for j in range(nmax + 1):
        out[j] = cur @ g
        if j == nmax:
            break
        nxt = ((2 * j + nu + 1 - x) * cur - math.sqrt(j * (j + nu)) * prev) / math.sqrt((j + 1) * (j + 1 + nu))
        prev, cur = cur, nxt
    return out


def laguerre_projection(nmax: int, nu: int, x, g, backend: str | None = None) -> np.ndarray:
    """``P[j, c] = sum_i u_j(x_i) g[i, c]`` for ``j = 0..nmax``.

    Streams the Laguerre recurrence so memory stays ``O(len(x))``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] != x.size:
        raise ValueError("g must have one row per node")
    u0 = laguerre_start(nu, x)
    if _resolve(backend) == "numba":
        return _lag_proj_numba(int(nmax), int(nu), x, u0, g)
    return _lag_proj_numpy(int(nmax), int(nu), x, u0, g)


@njit(cache=True)
def _lag_seg_numba(nmax, nu, x, u0, g, seg):  # pragma: no cover - compiled
    n = x.size
    ns = seg.size - 1
    out = np.zeros((nmax + 1, ns))
    prev = np.zeros(n)
    cur = u0.copy()
    for j in range(nmax + 1):
        for s in range(ns):
            acc = 0.0
            for i in range(seg[s], seg[s + 1]):
                acc += cur[i] * g[i]
            out[j, s] = acc
        if j == nmax:
            break
        a = math.sqrt(j * (j + nu))
        d = math.sqrt((j + 1) * (j + 1 + nu))
        for i in range(n):
            nxt = ((2 * j + nu + 1 - x[i]) * cur[i] - a * prev[i]) / d
            prev[i] = cur[i]
            cur[i] = nxt
    return out


def _lag_seg_numpy(nmax, nu, x, u0, g, seg):
    out = np.empty((nmax + 1, seg.size - 1))
    prev = np.zeros_like(x)
    cur = u0.copy()
    starts = seg[:-1]
    for j in range(nmax + 1):
        out[j] = np.add.reduceat(cur * g, starts)
        if j == nmax:
            break
        nxt = ((2 * j + nu + 1 - x) * cur - math.sqrt(j * (j + nu)) * prev) / math.sqrt((j + 1) * (j + 1 + nu))
        prev, cur = cur, nxt
    return out


def laguerre_segment_projection(nmax: int, nu: int, x, g, seg, backend: str | None = None) -> np.ndarray:
    """``P[j, s] = sum_{i in segment s} u_j(x_i) g_i``.

    ``seg`` holds segment boundaries ``0 = seg[0] < ... < seg[-1] = len(x)``;
    every segment must be nonempty.
    """
    x = np.ascontiguousarray(x, dtype=float)
    g = np.ascontiguousarray(g, dtype=float)
    seg = np.ascontiguousarray(seg, dtype=np.int64)
    if seg[0] != 0 or seg[-1] != x.size or np.any(np.diff(seg) <= 0):
        raise ValueError("invalid segment boundaries")
    u0 = laguerre_start(nu, x)
    if _resolve(backend) == "numba":
        return _lag_seg_numba(int(nmax), int(nu), x, u0, g, seg)
    return _lag_seg_numpy(int(nmax), int(nu), x, u0, g, seg)


# ---------------------------------------------------------------------------
# Block sums for time-series estimators
# ---------------------------------------------------------------------------


def block_edges(length: int, nblocks: int) -> np.ndarray:
    """Boundaries of ``nblocks`` contiguous, nearly equal blocks."""
    nblocks = max(1, min(nblocks, length))
    return np.linspace(0, length, nblocks + 1).round().astype(np.int64)


@njit(cache=True)
def _lagged_numba(x, y, lags, edges):  # pragma: no cover - compiled
    nb = edges.size - 1
    nl = lags.size
    sums = np.zeros((nb, nl))
    counts = np.zeros((nb, nl))
    for b in range(nb):
        for li in range(nl):
            lag = lags[li]
            lo = max(edges[b], lag)
            acc = 0.0
            for t in range(lo, edges[b + 1]):
                acc += x[t] * y[t - lag]
            sums[b, li] = acc
            counts[b, li] = max(0, edges[b + 1] - lo)
    return sums, counts


def _lagged_numpy(x, y, lags, edges):
    nb = edges.size - 1
    sums = np.zeros((nb, lags.size))
    counts = np.zeros((nb, lags.size))
    for li, lag in enumerate(lags):
        prod = x[lag:] * y[: x.size - lag] if lag else x * y
        # product index t (time of the later sample) maps to prod[t - lag]
        for b in range(nb):
            lo = max(edges[b], lag)
            hi = edges[b + 1]
            if hi > lo:
                sums[b, li] = prod[lo - lag : hi - lag].sum()
                counts[b, li] = hi - lo
    return sums, counts


def lagged_block_sums(x, lags, edges, y=None, backend: str | None = None):
    """Per-block sums of ``x_t y_{t-lag}``, attributing each product to the block of ``t``.

    Returns
    -------
    sums, counts : ndarray, shape (nblocks, len(lags))
    """
    x = np.ascontiguousarray(x, dtype=float)
    y = x if y is None else np.ascontiguousarray(y, dtype=float)
    lags = np.ascontiguousarray(lags, dtype=np.int64)
    edges = np.ascontiguousarray(edges, dtype=np.int64)
    if np.any(lags < 0):
        raise ValueError("lags must be nonnegative")
    if _resolve(backend) == "numba":
        return _lagged_numba(x, y, lags, edges)
    return _lagged_numpy(x, y, lags, edges)


@njit(cache=True)
def _crossing_numba(counts, m, edges):  # pragma: no cover - compiled
    nb = edges.size - 1
    out = np.zeros((nb, 4))
    for b in range(nb):
        s_c = 0.0
        s_pair = 0.0
        s_d = 0.0
        n_pair = 0.0
        for t in range(edges[b], edges[b + 1]):
            c = counts[t] / m
            s_c += c
            if t >= 1:
                cp = counts[t - 1] / m
                s_pair += c * cp
                s_d += c + cp - 2.0 * c * cp
                n_pair += 1.0
        out[b, 0] = s_c
        out[b, 1] = s_pair
        out[b, 2] = s_d
        out[b, 3] = n_pair
    return out


def _crossing_numpy(counts, m, edges):
    c = counts / m
    nb = edges.size - 1
    out = np.zeros((nb, 4))
    pair = np.concatenate(([0.0], c[1:] * c[:-1]))
    d = np.concatenate(([0.0], c[1:] + c[:-1] - 2.0 * c[1:] * c[:-1]))
    valid = np.ones_like(c)
    valid[0] = 0.0
    for k, arr in enumerate((c, pair, d, valid)):
        out[:, k] = np.add.reduceat(arr, edges[:-1]) if c.size else 0.0
    return out


def pair_crossing_sums(counts, m: int, edges, backend: str | None = None) -> np.ndarray:
    """Per-block sums for pair-averaged exceedance statistics.

    ``counts[t]`` is the number of the ``m`` components above a threshold at
    time ``t``. Columns of the result: sum of ``c_t/m``, sum of
    ``c_t c_{t-1}/m^2``, sum of the pair-averaged squared indicator change,
    and the number of valid consecutive pairs.
    """
    counts = np.ascontiguousarray(counts, dtype=float)
    edges = np.ascontiguousarray(edges, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _crossing_numba(counts, float(m), edges)
    return _crossing_numpy(counts, float(m), edges)
