"""Mass exponent, singularity spectrum and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridTooCoarse, MissingQ2
from .mfdfa import HurstCurve


class Persistence(str, Enum):
    PERSISTENT = "persistent"
    ANTI_PERSISTENT = "anti-persistent"
    BOUNDARY = "boundary"


def mass_exponent(curve: HurstCurve) -> tuple[np.ndarray, np.ndarray]:
    """``tau(q) = q H(q) - 1`` on the curve's own q grid."""
    if not curve.fits:
        raise ValueError("empty Hurst curve")
    qs = curve.qs
    return qs, qs * curve.hs - 1.0


@dataclass(frozen=True, eq=False)
class SingularitySpectrum:
    """``(alpha, f(alpha))`` pairs, sorted by alpha.

    ``q`` holds the moment order each point came from; ``edge`` marks the
    two points whose alpha used a one-sided difference.
    """

    alpha: np.ndarray
    f: np.ndarray
    q: np.ndarray
    edge: np.ndarray


def singularity_spectrum(qs, tau) -> SingularitySpectrum:
    """Legendre transform by finite differences: ``alpha = tau'(q)``, ``f = q alpha - tau``.

    Interior points use central differences; the two end points use
    second-order one-sided differences.
    """
    qs = np.asarray(qs, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if qs.size < 3:
        raise GridTooCoarse(f"need at least 3 q values, got {qs.size}")
    if np.any(np.diff(qs) <= 0):
        raise ValueError("q must be strictly ascending")
    alpha = np.gradient(tau, qs, edge_order=2)
    f = qs * alpha - tau
    edge = np.zeros(qs.size, dtype=bool)
    edge[[0, -1]] = True
    order = np.argsort(alpha, kind="stable")
    return SingularitySpectrum(alpha[order], f[order], qs[order], edge[order])


def classify(h2: float, band: float = 0.02) -> Persistence:
    if not math.isfinite(h2):
        raise ValueError("H2 must be finite")
    if h2 > 0.5 + band:
        return Persistence.PERSISTENT
    if h2 < 0.5 - band:
        return Persistence.ANTI_PERSISTENT
    return Persistence.BOUNDARY


def asymmetry(alpha_min: float, alpha_0: float, alpha_max: float) -> tuple[float, float, float, float]:
    """``(delta_alpha, delta_alpha_L, delta_alpha_R, B)`` from the three alphas."""
    left = alpha_0 - alpha_min
    right = alpha_max - alpha_0
    width = alpha_max - alpha_min
    b = (left - right) / (left + right) if left + right > 0 else 0.0
    return width, left, right, b


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    q: np.ndarray
    tau: np.ndarray
    spectrum: SingularitySpectrum
    delta_alpha: float
    alpha_0: float
    alpha_min: float
    alpha_max: float
    delta_alpha_L: float
    delta_alpha_R: float
    B: float
    dH: float
    H2: float
    persistence: Persistence
    regime: str = ""

    def to_dict(self) -> dict:
        """JSON-ready mapping; ``class`` carries the persistence label."""
        return {
            "regime": self.regime,
            "tau": [[float(q), float(t)] for q, t in zip(self.q, self.tau)],
            "spectrum": [[float(a), float(f)] for a, f in zip(self.spectrum.alpha, self.spectrum.f)],
            "delta_alpha": self.delta_alpha,
            "alpha_0": self.alpha_0,
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
            "delta_alpha_L": self.delta_alpha_L,
            "delta_alpha_R": self.delta_alpha_R,
            "B": self.B,
            "dH": self.dH,
            "dH_definition": "max(H) - min(H) over fitted q",
            "H2": self.H2,
            "class": self.persistence.value,
        }


def spectrum_stats(spectrum: SingularitySpectrum, curve: HurstCurve,
                   band: float = 0.02) -> SpectrumReport:
    """Width, asymmetry, dH, H2 and persistence class for one regime."""
    if spectrum.alpha.size == 0:
        raise ValueError("empty spectrum")
    if 2.0 not in curve:
        raise MissingQ2(f"{curve.regime.value} curve has no q=2 fit")
    a_min = float(spectrum.alpha.min())
    a_max = float(spectrum.alpha.max())
    a_0 = float(spectrum.alpha[int(np.argmax(spectrum.f))])
    width, left, right, b = asymmetry(a_min, a_0, a_max)
    hs = curve.hs
    h2 = curve.h(2.0)
    qs, tau = mass_exponent(curve)
    return SpectrumReport(qs, tau, spectrum, width, a_0, a_min, a_max, left, right, b,
                          float(hs.max() - hs.min()), h2, classify(h2, band),
                          curve.regime.value)


def report_for(curve: HurstCurve, band: float = 0.02) -> SpectrumReport:
    qs, tau = mass_exponent(curve)
    return spectrum_stats(singularity_spectrum(qs, tau), curve, band)
