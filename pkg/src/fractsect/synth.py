"""Synthetic series with known scaling, used to validate the estimator chain."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadSpec, EmbeddingFailure
from .series import Kind, Series


@dataclass(frozen=True)
class CascadeSpec:
    levels: int
    a: float
    seed: int = 0

    def __post_init__(self):
        if not 8 <= self.levels <= 24:
            raise BadSpec(f"levels must lie in [8, 24], got {self.levels}")
        if not 0.5 < self.a < 1.0:
            raise BadSpec(f"multiplier a must lie in (0.5, 1), got {self.a}")


@dataclass(frozen=True)
class FgnSpec:
    length: int
    hurst: float
    seed: int = 0

    def __post_init__(self):
        if self.length < 256:
            raise BadSpec(f"fGn length must be >= 256, got {self.length}")
        if not 0.0 < self.hurst < 1.0:
            raise BadSpec(f"Hurst exponent must lie in (0, 1), got {self.hurst}")


def _popcount(k: np.ndarray) -> np.ndarray:
    bits = np.zeros_like(k)
    while np.any(k):
        bits += k & 1
        k = k >> 1
    return bits


def binomial_cascade(spec: CascadeSpec) -> Series:
    """Deterministic binomial measure: ``a^b (1-a)^(n-b)`` with b the bit count of k-1."""
    n = spec.levels
    bits = _popcount(np.arange(2 ** n, dtype=np.int64))
    x = spec.a ** bits * (1.0 - spec.a) ** (n - bits)
    return Series(x, Kind.SYNTHETIC, f"cascade(n={n},a={spec.a:g})")


def cascade_hq_oracle(a: float, q: float) -> float:
    """Generalized Hurst exponent of the binomial cascade.

    ``h(q) = 1/q - ln(a^q + (1-a)^q) / (q ln 2)``; q = 0 takes the limit
    ``-ln(a (1-a)) / (2 ln 2)``.
    """
    if not 0.5 < a < 1.0:
        raise BadSpec(f"multiplier a must lie in (0.5, 1), got {a}")
    b = 1.0 - a
    if q == 0.0:
        return -math.log(a * b) / (2.0 * math.log(2.0))
    # log-sum-exp keeps large |q| finite
    la, lb = q * math.log(a), q * math.log(b)
    m = max(la, lb)
    lse = m + math.log(math.exp(la - m) + math.exp(lb - m))
    return 1.0 / q - lse / (q * math.log(2.0))


def fgn_autocovariance(hurst: float, k) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k - 1) ** h2 - 2 * k ** h2 + (k + 1) ** h2)


def fgn(spec: FgnSpec) -> Series:
    """Unit-variance fractional Gaussian noise by circulant embedding.

    A non-PSD embedding is retried once at double size before failing.
    """
    n = spec.length
    rng = np.random.default_rng(spec.seed)
    for m in (n, 2 * n):
        gamma = fgn_autocovariance(spec.hurst, np.arange(m + 1))
        row = np.concatenate([gamma, gamma[-2:0:-1]])
        lam = np.fft.fft(row).real
        if lam.min() >= -1e-10 * lam.max():
            break
    else:
        raise EmbeddingFailure(f"circulant embedding not PSD for H={spec.hurst}, N={n}")
    size = row.size
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    w = np.fft.fft(np.sqrt(np.clip(lam, 0.0, None) / size) * z)
    return Series(w.real[:n], Kind.SYNTHETIC, f"fgn(H={spec.hurst:g},seed={spec.seed})")


def shuffle(x: Series, seed: int) -> Series:
    """Uniform random permutation of the values (surrogate with no temporal order)."""
    if len(x) < 2:
        raise BadSpec("shuffle needs at least 2 values")
    perm = np.random.default_rng(seed).permutation(x.values)
    return Series(perm, Kind.SYNTHETIC, f"shuffle({x.label},seed={seed})")
