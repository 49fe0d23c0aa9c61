"""Time correlation of nonisotropic Rayleigh fading and sample-path synthesis.

The angle of arrival follows a mixture of von Mises densities. Each
mixture component (a *cluster*) has a weight ``P``, a concentration
``kappa`` and a mean direction ``theta``. The resulting time correlation
of every subchannel is

    rho_h(i) = sum_n P_n I0(sqrt(kappa_n^2 - (2 pi fD i Ts)^2
                                 + 4j pi kappa_n fD i Ts cos theta_n)) / I0(kappa_n)

which collapses to Clarke's ``J0(2 pi fD i Ts)`` when every ``kappa_n = 0``.

Sample paths are produced by spectral synthesis on a circulant embedding
of the target autocorrelation. See :func:`generate_path` for details.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy import special

from .errors import InvalidSpectrumError, SpectrumClipWarning

log = logging.getLogger(__name__)

__all__ = [
    "ScatteringCluster",
    "ScatteringModel",
    "MimoConfig",
    "ChannelPath",
    "corr_coeff_h",
    "corr_mag",
    "generate_path",
    "generate_gram_path",
    "subchannel_seeds",
]

# Spectral mass fractions that trigger a warning / abort after clipping.
CLIP_WARN_FRACTION = 1e-2
CLIP_ABORT_FRACTION = 5e-2
MIN_EMBED_LAGS = 1024


@dataclass(frozen=True)
class ScatteringCluster:
    """One von Mises component of the angle-of-arrival distribution.

    Parameters
    ----------
    weight : float
        Mixture weight in (0, 1].
    kappa : float
        Concentration (0 means isotropic).
    mean_aoa : float
        Mean angle of arrival in radians, wrapped to [-pi, pi).
    """

    weight: float
    kappa: float
    mean_aoa: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"cluster weight must be in (0, 1], got {self.weight}")
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"cluster kappa must be finite and >= 0, got {self.kappa}")
        if not math.isfinite(self.mean_aoa):
            raise ValueError("mean_aoa must be finite")
        wrapped = (self.mean_aoa + math.pi) % (2.0 * math.pi) - math.pi
        object.__setattr__(self, "mean_aoa", float(wrapped))


@dataclass(frozen=True)
class ScatteringModel:
    """Scattering clusters plus Doppler and symbol timing."""

    clusters: tuple[ScatteringCluster, ...]
    doppler_hz: float
    symbol_time_s: float

    def __post_init__(self):
        clusters = tuple(self.clusters)
        if not clusters:
            raise ValueError("at least one scattering cluster is required")
        object.__setattr__(self, "clusters", clusters)
        total = math.fsum(c.weight for c in clusters)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"cluster weights must sum to 1, got {total!r}")
        if not (self.doppler_hz > 0 and math.isfinite(self.doppler_hz)):
            raise ValueError("doppler_hz must be positive")
        if not (self.symbol_time_s > 0 and math.isfinite(self.symbol_time_s)):
            raise ValueError("symbol_time_s must be positive")

    @classmethod
    def isotropic(cls, doppler_hz: float, symbol_time_s: float) -> "ScatteringModel":
        """Uniform angle of arrival (Clarke's model)."""
        return cls((ScatteringCluster(1.0, 0.0, 0.0),), doppler_hz, symbol_time_s)

    @property
    def normalized_doppler(self) -> float:
        """``f_D T_s``."""
        return self.doppler_hz * self.symbol_time_s

    @property
    def is_isotropic(self) -> bool:
        return all(c.kappa == 0.0 for c in self.clusters)


@dataclass(frozen=True)
class MimoConfig:
    """Antenna counts and the derived Wishart parameters."""

    n_tx: int
    n_rx: int

    def __post_init__(self):
        for name in ("n_tx", "n_rx"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def m(self) -> int:
        """``M = min(N_T, N_R)``, the number of nonzero eigenvalues."""
        return min(self.n_tx, self.n_rx)

    @property
    def n(self) -> int:
        """``N = max(N_T, N_R)``."""
        return max(self.n_tx, self.n_rx)

    @property
    def nu(self) -> int:
        """``nu = N - M``."""
        return self.n - self.m


@dataclass(frozen=True)
class ChannelPath:
    """A generated channel realization.

    Attributes
    ----------
    samples : ndarray, shape (L, N_R, N_T)
    spacing : float
        Symbol time in seconds.
    seed : int
    clipped_fraction : float
        Fraction of spectral mass removed when clipping the synthesis spectrum.
    """

    samples: np.ndarray
    spacing: float
    seed: int
    clipped_fraction: float = 0.0

    @property
    def length(self) -> int:
        return self.samples.shape[0]


# ---------------------------------------------------------------------------
# Correlation model
# ---------------------------------------------------------------------------


def corr_coeff_h(model: ScatteringModel, lag):
    """Complex time correlation ``rho_h(i)`` of a subchannel.

    ``lag`` may be an integer or an integer array; negative lags return the
    complex conjugate of the positive-lag value.
    """
    lag_arr = np.asarray(lag)
    if lag_arr.dtype.kind not in "iu":
        if not np.all(np.asarray(lag_arr, dtype=float) == np.round(lag_arr)):
            raise ValueError("lags must be integers")
        lag_arr = lag_arr.astype(np.int64)
    if np.any(np.abs(lag_arr) > 10**6):
        raise ValueError("|lag| must not exceed 1e6")
    return _rho_h(model, lag_arr)


def _rho_h(model: ScatteringModel, lag_arr: np.ndarray):
    a = np.abs(lag_arr).astype(float)
    x = 2.0 * math.pi * model.normalized_doppler * a
    out = np.zeros(a.shape, dtype=complex)
    for c in model.clusters:
        if c.kappa == 0.0:
            out += c.weight * special.j0(x)
            continue
        w = np.sqrt(complex(c.kappa**2) - x**2 + 2j * c.kappa * x * math.cos(c.mean_aoa))
        # ive(0, w) = I0(w) exp(-|Re w|) keeps large concentrations finite
        ratio = special.ive(0, w) / special.ive(0, c.kappa) * np.exp(np.abs(w.real) - c.kappa)
        out += c.weight * ratio
    out = np.where(lag_arr < 0, np.conj(out), out)
    out = np.where(lag_arr == 0, 1.0 + 0j, out)
    return complex(out) if out.ndim == 0 else out


def corr_mag(model: ScatteringModel, lag):
    """``varrho_i = |rho_h(i)|``, clipped to at most 1."""
    v = np.minimum(np.abs(corr_coeff_h(model, lag)), 1.0)
    return float(v) if np.ndim(v) == 0 else v


# ---------------------------------------------------------------------------
# Spectral synthesis
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _synthesis_filter(model: ScatteringModel, length: int) -> tuple[np.ndarray, float]:
    """Square-root spectrum for circulant synthesis of ``length`` samples.

    The target autocorrelation is kept exactly for lags up to ``K`` (with
    ``K >= length``) and tapered to zero by a raised cosine over lags
    ``(K, 2K]``. The tapered sequence is embedded in a circulant of size
    ``4K`` whose DFT is the synthesis spectrum. Residual negative spectral
    values are clipped and their mass fraction returned.
    """
    k = max(int(length), MIN_EMBED_LAGS)
    lags = np.arange(2 * k + 1)
    acf = _rho_h(model, lags)
    taper = np.ones(2 * k + 1)
    tail = lags > k
    taper[tail] = 0.5 * (1.0 + np.cos(math.pi * (lags[tail] - k) / k))
    acf = acf * taper
    acf[-1] = 0.0
    size = 4 * k
    circ = np.zeros(size, dtype=complex)
    circ[: 2 * k + 1] = acf
    circ[size - 2 * k + 1 :] = np.conj(acf[1 : 2 * k][::-1])
    spec = np.fft.fft(circ).real
    total = np.abs(spec).sum()
    neg = -spec[spec < 0].sum()
    frac = float(neg / total) if total > 0 else 1.0
    if frac > CLIP_ABORT_FRACTION:
        raise InvalidSpectrumError(
            f"synthesis spectrum has {frac:.3%} negative mass; the target correlation is not realizable"
        )
    if frac > CLIP_WARN_FRACTION:
        warnings.warn(f"clipped {frac:.3%} of the synthesis spectrum", SpectrumClipWarning, stacklevel=3)
    log.debug("synthesis spectrum: size=%d clipped fraction=%.3e", size, frac)
    spec = np.clip(spec, 0.0, None)
    spec *= size / spec.sum()  # unit power after clipping
    filt = np.sqrt(spec)
    filt.setflags(write=False)
    return filt, frac


def subchannel_seeds(seed: int, mimo: MimoConfig) -> list[np.random.SeedSequence]:
    """Independent seed sequences, one per subchannel in row-major (rx, tx) order."""
    return np.random.SeedSequence(int(seed)).spawn(mimo.n_rx * mimo.n_tx)


def _subchannel(filt: np.ndarray, length: int, seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seq)
    size = filt.size
    w = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * math.sqrt(0.5)
    z = np.fft.ifft(filt * w) * math.sqrt(size)
    return z[:length]


def _check_length(length: int) -> int:
    if int(length) != length or length < 2 or length > 2**26:
        raise ValueError("length must be an integer in [2, 2**26]")
    return int(length)


def generate_path(model: ScatteringModel, mimo: MimoConfig, length: int, seed: int) -> ChannelPath:
    """Generate ``length`` correlated channel matrices.

    Every subchannel is an independent stationary zero-mean complex
    Gaussian sequence with unit power and autocorrelation
    ``E[h(l) h*(l-i)] = rho_h(i)`` for ``|i| <= length``. Subchannel
    ``(r, t)`` draws from its own stream spawned from ``seed``.
    """
    length = _check_length(length)
    filt, frac = _synthesis_filter(model, length)
    seeds = subchannel_seeds(seed, mimo)
    out = np.empty((length, mimo.n_rx, mimo.n_tx), dtype=complex)
    for r in range(mimo.n_rx):
        for t in range(mimo.n_tx):
            out[:, r, t] = _subchannel(filt, length, seeds[r * mimo.n_tx + t])
    return ChannelPath(out, model.symbol_time_s, int(seed), frac)


def iter_subchannels(model: ScatteringModel, mimo: MimoConfig, length: int, seed: int) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield ``(r, t, h)`` one subchannel at a time, matching :func:`generate_path`."""
    length = _check_length(length)
    filt, _ = _synthesis_filter(model, length)
    seeds = subchannel_seeds(seed, mimo)
    for r in range(mimo.n_rx):
        for t in range(mimo.n_tx):
            yield r, t, _subchannel(filt, length, seeds[r * mimo.n_tx + t])


def generate_gram_path(
    model: ScatteringModel,
    mimo: MimoConfig,
    length: int,
    seed: int,
    acf_lags: Sequence[int] = (),
) -> tuple[np.ndarray, dict]:
    """Stream the ``M x M`` Gram matrices of a generated path.

    Produces ``H H^dag`` when ``N_R <= N_T`` and ``H^dag H`` otherwise, using
    the same random streams as :func:`generate_path` but holding at most one
    row (or column) of subchannels in memory.

    Returns
    -------
    gram : ndarray, shape (L, M, M)
    info : dict
        ``clipped_fraction``, ``frob2`` (squared Frobenius norm per step),
        ``power`` (per-subchannel sample power) and, if ``acf_lags`` is
        given, ``acf`` with one row of empirical normalized correlations per
        subchannel.
    """
    length = _check_length(length)
    filt, frac = _synthesis_filter(model, length)
    seeds = subchannel_seeds(seed, mimo)
    m = mimo.m
    gram = np.zeros((length, m, m), dtype=complex)
    lags = np.asarray(acf_lags, dtype=np.int64)
    acfs = []
    powers = []

    def stats(h):
        p = float(np.mean(np.abs(h) ** 2))
        powers.append(p)
        if lags.size:
            acfs.append(sample_acf(h, lags) / p)

    if mimo.n_rx <= mimo.n_tx:
        # G = H H^dag, accumulate one transmit column at a time
        for t in range(mimo.n_tx):
            col = np.empty((length, mimo.n_rx), dtype=complex)
            for r in range(mimo.n_rx):
                col[:, r] = _subchannel(filt, length, seeds[r * mimo.n_tx + t])
                stats(col[:, r])
            gram += col[:, :, None] * np.conj(col[:, None, :])
    else:
        # G = H^dag H, accumulate one receive row at a time
        for r in range(mimo.n_rx):
            row = np.empty((length, mimo.n_tx), dtype=complex)
            for t in range(mimo.n_tx):
                row[:, t] = _subchannel(filt, length, seeds[r * mimo.n_tx + t])
                stats(row[:, t])
            gram += np.conj(row[:, :, None]) * row[:, None, :]
    frob2 = np.real(np.trace(gram, axis1=1, axis2=2))
    info = {"clipped_fraction": frac, "frob2": frob2, "power": np.array(powers)}
    if lags.size:
        info["acf"] = np.array(acfs)
    return gram, info


def sample_acf(h: np.ndarray, lags) -> np.ndarray:
    """``mean_l h(l) h*(l-i)`` over the available pairs, for each lag ``i``."""
    h = np.asarray(h, dtype=complex)
    lags = np.asarray(lags, dtype=np.int64)
    n = h.size
    size = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.fft(h, size)
    full = np.fft.ifft(np.abs(spec) ** 2)
    # full[i] = sum_l h(l+i) h*(l)
    return full[lags] / (n - lags)


def gram_from_path(path: ChannelPath) -> np.ndarray:
    """Gram matrices of a stored path (``HH^dag`` or ``H^dag H``)."""
    h = path.samples
    if h.shape[1] <= h.shape[2]:
        return h @ np.conj(np.swapaxes(h, 1, 2))
    return np.conj(np.swapaxes(h, 1, 2)) @ h
