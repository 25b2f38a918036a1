"""Empirical mode decomposition and its noise-assisted ensemble variant.

The sifting loops are compiled (see :mod:`fractsect._sifting`); this module
validates inputs, draws the ensemble noise and wraps results in
dataclasses.

Conventions:

* extrema are strict interior extrema, plateaus counted at their midpoint
  (rounded down), endpoints never;
* envelopes are natural cubic splines through the extrema after mirroring
  the first/last two extrema about the end samples;
* sifting stops once ``sum(h_prev - h)^2 / sum(h_prev^2) < sd_tol`` or after
  ``max_sift`` iterations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _sifting as _k
from .errors import (DegenerateCorrelation, InsufficientExtrema,
                     MaxSiftIterationsExceeded, ThresholdPole, TooShort)

SD_TOL = _k.SD_TOL
MAX_SIFT = _k.MAX_SIFT


@dataclass(frozen=True, eq=False)
class Imf:
    values: np.ndarray
    index: int

    def extrema_count(self) -> int:
        mx, mn = find_extrema(self.values)
        return len(mx) + len(mn)

    def zero_crossings(self) -> int:
        return zero_crossings(self.values)

    def envelope_mean_ratio(self) -> float:
        """max |(upper + lower)/2| relative to the IMF's std; nan without envelopes."""
        try:
            upper, lower = envelopes(self.values)
        except InsufficientExtrema:
            return math.nan
        sd = float(np.std(self.values))
        if sd == 0.0:
            return 0.0
        return float(np.max(np.abs(0.5 * (upper + lower)))) / sd


@dataclass(frozen=True, eq=False)
class ImfDecomposition:
    imfs: tuple
    residual: np.ndarray
    source_len: int
    capped: int = 0
    noise_floor: float | None = None

    def __len__(self):
        return len(self.imfs)

    def matrix(self) -> np.ndarray:
        if not self.imfs:
            return np.empty((0, self.source_len))
        return np.vstack([imf.values for imf in self.imfs])

    def reconstruct(self) -> np.ndarray:
        return self.matrix().sum(axis=0) + self.residual

    def write_tsv(self, stream) -> None:
        """Debug dump: one column per IMF, residual last."""
        cols = [f"imf{imf.index}" for imf in self.imfs] + ["residual"]
        stream.write("\t".join(cols) + "\n")
        data = np.vstack([self.matrix(), self.residual[None, :]])
        for row in data.T:
            stream.write("\t".join(f"{v:.17g}" for v in row) + "\n")


@dataclass(frozen=True)
class EemdConfig:
    ensemble_size: int = 100
    noise_ratio: float = 0.2
    master_seed: int = 0
    sd_tol: float = SD_TOL
    max_sift: int = MAX_SIFT

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if not 0.0 < self.noise_ratio < 1.0:
            raise ValueError("noise_ratio must lie in (0, 1)")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def noise_floor(self) -> float:
        """Residual noise level left after ensemble averaging, eps / sqrt(M)."""
        return self.noise_ratio / math.sqrt(self.ensemble_size)


def _as_signal(signal) -> np.ndarray:
    return np.ascontiguousarray(signal, dtype=np.float64).ravel()


def zero_crossings(x) -> int:
    s = np.sign(_as_signal(x))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def find_extrema(signal) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict interior maxima and minima, ascending."""
    x = _as_signal(signal)
    if x.size < 3:
        raise TooShort("need at least 3 samples to locate extrema")
    mx = np.empty(x.size, dtype=np.int64)
    mn = np.empty(x.size, dtype=np.int64)
    n_max, n_min = _k.extrema(x, mx, mn)
    return mx[:n_max].copy(), mn[:n_min].copy()


def envelopes(signal, maxima=None, minima=None) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower spline envelopes evaluated at every sample."""
    x = _as_signal(signal)
    if maxima is None or minima is None:
        maxima, minima = find_extrema(x)
    maxima = np.asarray(maxima, dtype=np.int64)
    minima = np.asarray(minima, dtype=np.int64)
    if maxima.size < 2 or minima.size < 2:
        raise InsufficientExtrema(
            f"{maxima.size} maxima / {minima.size} minima; need 2 of each")
    ws = _k.workspace(x.size)
    _, _, _, _, xk, yk, M, cp, dp = ws
    upper = np.empty(x.size)
    lower = np.empty(x.size)
    _k.envelope(x, maxima, maxima.size, upper, xk, yk, M, cp, dp)
    _k.envelope(x, minima, minima.size, lower, xk, yk, M, cp, dp)
    return upper, lower


def sift(signal, sd_tol: float = SD_TOL, max_iter: int = MAX_SIFT,
         index: int = 1) -> Imf:
    """Extract one IMF by repeatedly subtracting the mean envelope.

    Hitting ``max_iter`` returns the last iterate and emits
    :class:`MaxSiftIterationsExceeded`.
    """
    x = _as_signal(signal)
    if x.size < 3:
        raise TooShort("need at least 3 samples to sift")
    out = np.empty_like(x)
    status, _ = _k.sift(x, sd_tol, max_iter, out)
    if status == -1:
        raise InsufficientExtrema("signal has fewer than 2 maxima or 2 minima")
    if status == 1:
        warnings.warn(f"sifting stopped at the {max_iter}-iteration cap",
                      MaxSiftIterationsExceeded, stacklevel=2)
    return Imf(out, index)


def sift_iterations(signal, sd_tol: float = SD_TOL, max_iter: int = MAX_SIFT) -> int:
    x = _as_signal(signal)
    _, its = _k.sift(x, sd_tol, max_iter, np.empty_like(x))
    return its


def _wrap(imfs: np.ndarray, count: int, residual: np.ndarray, capped: int,
          noise_floor=None) -> ImfDecomposition:
    items = tuple(Imf(imfs[i].copy(), i + 1) for i in range(count))
    return ImfDecomposition(items, residual, residual.size, capped, noise_floor)


def emd(signal, sd_tol: float = SD_TOL, max_sift: int = MAX_SIFT) -> ImfDecomposition:
    """Full EMD: extract IMFs until the remainder lacks 2 maxima or 2 minima."""
    x = _as_signal(signal)
    if x.size < 8:
        raise TooShort("emd needs at least 8 samples")
    imfs = np.empty((_k.max_imfs_for(x.size), x.size))
    residual = np.empty_like(x)
    count, capped = _k.emd_into(x, sd_tol, max_sift, imfs, residual)
    if capped:
        warnings.warn(f"{capped} IMF(s) hit the sift iteration cap",
                      MaxSiftIterationsExceeded, stacklevel=2)
    return _wrap(imfs, count, residual, capped)


def ensemble_noise(rng: np.random.Generator, members: int, n: int,
                   scale: float) -> np.ndarray:
    """Row i is member i's white Gaussian noise."""
    return rng.standard_normal((members, n)) * scale


def eemd_with_noise(signal, noise, sd_tol: float = SD_TOL,
                    max_sift: int = MAX_SIFT) -> tuple[np.ndarray, int, int]:
    """Ensemble-mean IMF matrix of ``signal + noise[i]``; rows beyond the count are junk."""
    x = _as_signal(signal)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    mean_imfs = np.empty((_k.max_imfs_for(x.size), x.size))
    used, capped = _k.eemd_into(x, noise, sd_tol, max_sift, mean_imfs)
    return mean_imfs, used, capped


def eemd(signal, config: EemdConfig = EemdConfig()) -> ImfDecomposition:
    """Ensemble EMD with Gaussian noise of std ``noise_ratio * std(signal)``.

    Member noise rows come from one generator seeded by ``master_seed``, so
    member i always sees the same noise. Members with fewer IMFs contribute
    zeros to the missing slots; the residual is ``signal - sum(mean IMFs)``.
    """
    x = _as_signal(signal)
    if x.size < 8:
        raise TooShort("eemd needs at least 8 samples")
    rng = np.random.default_rng(config.master_seed)
    noise = ensemble_noise(rng, config.ensemble_size, x.size,
                           config.noise_ratio * float(np.std(x)))
    mean_imfs, used, capped = eemd_with_noise(x, noise, config.sd_tol, config.max_sift)
    residual = x - mean_imfs[:used].sum(axis=0)
    return _wrap(mean_imfs, used, residual, capped, config.noise_floor)


def imf_correlations(decomposition: ImfDecomposition, original) -> np.ndarray:
    """Pearson correlation of each IMF with ``original``; zero-variance pairs give 0."""
    x = _as_signal(original)
    mu = np.empty(len(decomposition))
    degenerate = False
    for i, imf in enumerate(decomposition.imfs):
        if np.std(imf.values) == 0.0 or np.std(x) == 0.0:
            mu[i] = 0.0
            degenerate = True
        else:
            mu[i] = _k.pearson(imf.values, x)
    if degenerate:
        warnings.warn("zero-variance IMF or signal; correlation taken as 0",
                      DegenerateCorrelation, stacklevel=2)
    return mu


def correlation_threshold(mu_max: float) -> float:
    """``mu_max / (10 mu_max - 3)``; undefined (nan) for ``mu_max <= 0.3``."""
    if mu_max <= 0.3:
        return math.nan
    return mu_max / (10.0 * mu_max - 3.0)


def select_by_correlation(mu: Sequence[float]) -> tuple[int, ...]:
    """1-based indices of IMFs whose correlation exceeds the threshold.

    At or below ``max(mu) = 0.3`` the threshold formula has its pole, so
    every IMF is kept and :class:`ThresholdPole` is emitted.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.size == 0:
        return ()
    thr = correlation_threshold(float(mu.max()))
    if math.isnan(thr):
        warnings.warn(f"max correlation {mu.max():.3g} <= 0.3; keeping all IMFs",
                      ThresholdPole, stacklevel=2)
        return tuple(range(1, mu.size + 1))
    return tuple(int(i) + 1 for i in np.flatnonzero(mu > thr))


def select_imfs(decomposition: ImfDecomposition, original) -> tuple[int, ...]:
    if len(decomposition) == 0:
        raise InsufficientExtrema("decomposition has no IMFs")
    return select_by_correlation(imf_correlations(decomposition, original))


def trend(decomposition: ImfDecomposition, original, selected=None) -> np.ndarray:
    """``original`` minus the selected IMFs (all IMFs when ``selected`` is None)."""
    x = _as_signal(original)
    if selected is None:
        selected = range(1, len(decomposition) + 1)
    out = x.copy()
    for i in selected:
        out -= decomposition.imfs[i - 1].values
    return out
