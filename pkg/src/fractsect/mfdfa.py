"""Overlapping-window MFDFA with EEMD or polynomial local detrending.

Every window of size ``s`` shifted by one sample is detrended; the profile
therefore yields ``N - s + 1`` windows per scale. The q-th order
fluctuation function is the generalized mean of the per-window variances,
and ``H(q)`` is the OLS slope of ``ln F_q(s)`` on ``ln s`` inside a scale
regime.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from . import _sifting as _k
from .emd import EemdConfig, eemd, select_imfs
from .errors import (BadBounds, InsufficientExtrema, RegimeTooSparse,
                     SeriesTooShort, WindowOutOfRange, WrongKind)
from .series import Kind, Series, profile

log = logging.getLogger(__name__)

MIN_WINDOWS = 16
MIN_FIT_SCALES = 5


class Regime(str, Enum):
    SHORT = "short"
    LONG = "long"


@dataclass(frozen=True)
class ScaleGrid:
    scales: tuple
    crossover: int

    def __post_init__(self):
        sc = tuple(int(s) for s in self.scales)
        object.__setattr__(self, "scales", sc)
        if not sc:
            raise BadBounds("empty scale grid")
        if any(s < 4 for s in sc):
            raise BadBounds("scales must be >= 4")
        if any(b <= a for a, b in zip(sc, sc[1:])):
            raise BadBounds("scales must be strictly ascending")
        if not sc[0] < self.crossover <= sc[-1]:
            raise BadBounds(f"crossover {self.crossover} outside ({sc[0]}, {sc[-1]}]")

    @property
    def s_max(self):
        return self.scales[-1]

    def regime_of(self, s):
        return Regime.SHORT if s < self.crossover else Regime.LONG

    def regime_scales(self, regime):
        regime = Regime(regime)
        return tuple(s for s in self.scales if self.regime_of(s) is regime)

    def truncated(self, s_limit):
        keep = tuple(s for s in self.scales if s <= s_limit)
        if not keep or keep[-1] < self.crossover:
            raise BadBounds("no long-regime scale left after truncation")
        return ScaleGrid(keep, self.crossover)


def scale_grid(s_min: int = 10, crossover: int = 200, s_max: int = 1000,
               per_regime: int = 20) -> ScaleGrid:
    """Log-uniform integer scales: ``per_regime`` in [s_min, crossover) and in [crossover, s_max]."""
    if not (4 <= s_min < crossover <= s_max):
        raise BadBounds(f"need 4 <= s_min < crossover <= s_max, got {s_min}, {crossover}, {s_max}")
    if per_regime < 2:
        raise BadBounds("per_regime must be >= 2 so both regime endpoints are included")
    short = np.geomspace(s_min, crossover - 1, per_regime)
    long = np.geomspace(crossover, s_max, per_regime)
    scales = np.unique(np.rint(np.concatenate([short, long])).astype(int))
    return ScaleGrid(tuple(scales), crossover)


def default_qs(q_max: float = 10.0, step: float = 0.5) -> np.ndarray:
    n = int(round(q_max / step))
    return np.arange(-n, n + 1) * step


def check_qs(qs) -> np.ndarray:
    qs = np.asarray(qs, dtype=np.float64)
    if qs.ndim != 1 or np.any(np.diff(qs) <= 0):
        raise ValueError("q grid must be strictly ascending")
    if not (np.any(qs == 0.0) and np.any(qs == 2.0)):
        raise ValueError("q grid must contain 0 and 2")
    return qs


@dataclass(frozen=True)
class Poly:
    """Least-squares polynomial detrending (classic MFDFA)."""
    order: int = 2

    @property
    def name(self):
        return f"poly:{self.order}"


@dataclass(frozen=True)
class Eemd:
    """Per-window EEMD detrending; window noise is seeded from (master_seed, s, v)."""
    config: EemdConfig = EemdConfig(ensemble_size=16)

    @property
    def name(self):
        return "eemd-window"


@dataclass(frozen=True)
class EemdGlobal:
    """One EEMD of the whole profile; windows see its detrended remainder."""
    config: EemdConfig = EemdConfig(ensemble_size=100)

    @property
    def name(self):
        return "eemd-global"


Detrender = Union[Poly, Eemd, EemdGlobal]


def _check_profile(prof):
    if isinstance(prof, Series):
        if prof.kind is not Kind.PROFILE:
            raise WrongKind(f"expected a profile series, got {prof.kind.value}")
        return prof.values
    return np.ascontiguousarray(prof, dtype=np.float64)


def _poly_basis(s, order):
    t = np.linspace(-1.0, 1.0, s)
    q, _ = np.linalg.qr(np.vander(t, order + 1, increasing=True))
    return q


def _poly_variances(y, s, order):
    basis = _poly_basis(s, order)
    windows = sliding_window_view(y, s)
    out = np.empty(windows.shape[0])
    chunk = max(1, (1 << 21) // s)
    for i in range(0, windows.shape[0], chunk):
        w = windows[i:i + chunk]
        # offset by the first sample so constant windows give exact zeros
        w = w - w[:, :1]
        r = w - (w @ basis) @ basis.T
        out[i:i + chunk] = np.einsum("ij,ij->i", r, r) / s
    return out


def window_seed(master_seed: int, s: int, v: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, s, v])


def _eemd_window(y, s, v, cfg):
    seg = np.ascontiguousarray(y[v - 1:v - 1 + s])
    sd = float(np.std(seg))
    noise = window_seed(cfg.master_seed, s, v).standard_normal(
        (cfg.ensemble_size, s)) * (cfg.noise_ratio * sd)
    return _k.window_eemd_f2(seg, noise, cfg.sd_tol, cfg.max_sift)


def _eemd_chunk(y, s, v_lo, v_hi, cfg):
    f2 = np.empty(v_hi - v_lo)
    poles = 0
    capped = 0
    for v in range(v_lo, v_hi):
        val, used, pole, cap = _eemd_window(y, s, v, cfg)
        f2[v - v_lo] = val if used else 0.0
        poles += pole
        capped += cap
    return f2, poles, capped


def _default_workers():
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _eemd_variances(y, s, cfg, workers, stats_out):
    n_s = y.size - s + 1
    workers = max(1, workers or _default_workers())
    n_chunks = min(n_s, workers * 4)
    bounds = np.linspace(1, n_s + 1, n_chunks + 1).astype(int)
    jobs = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_eemd_chunk(y, s, a, b, cfg) for a, b in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda ab: _eemd_chunk(y, s, ab[0], ab[1], cfg), jobs))
    # reduced in window order regardless of completion order
    out = np.concatenate([p[0] for p in parts])
    stats_out["threshold_poles"] += sum(p[1] for p in parts)
    stats_out["sift_capped"] += sum(p[2] for p in parts)
    return out


def _global_remainder(y, cfg):
    dec = eemd(y, cfg)
    if len(dec) == 0:
        raise InsufficientExtrema("profile yields no IMFs")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sel = select_imfs(dec, y)
    rem = np.zeros_like(y)
    for i in sel:
        rem += dec.imfs[i - 1].values
    return rem


def _global_variances(rem, s):
    r2 = rem * rem
    return np.convolve(r2, np.ones(s), mode="valid") / s


@dataclass(frozen=True)
class WindowFluctuation:
    f2: float
    degenerate: bool


def window_fluctuation(prof, s: int, v: int, detrender: Detrender) -> WindowFluctuation:
    """Detrended variance ``F^2(s, v)`` of the window starting at 1-based ``v``."""
    y = _check_profile(prof)
    n = y.size
    if s < 2 or s > n or not 1 <= v <= n - s + 1:
        raise WindowOutOfRange(f"window (s={s}, v={v}) outside series of length {n}")
    seg = y[v - 1:v - 1 + s]
    if isinstance(detrender, Poly):
        f2 = float(_poly_variances(np.ascontiguousarray(seg), s, detrender.order)[0])
    elif isinstance(detrender, Eemd):
        val, used, _, _ = _eemd_window(y, s, v, detrender.config)
        f2 = float(val) if used else 0.0
    elif isinstance(detrender, EemdGlobal):
        rem = _global_remainder(y, detrender.config)[v - 1:v - 1 + s]
        f2 = float(np.mean(rem * rem))
    else:
        raise TypeError(f"unknown detrender {detrender!r}")
    return WindowFluctuation(f2, f2 == 0.0)


def window_variances(prof, s: int, detrender: Detrender, workers=None,
                     _stats=None, _remainder=None) -> np.ndarray:
    """All ``N - s + 1`` window variances at scale ``s``, in window order."""
    y = _check_profile(prof)
    if s > y.size:
        raise WindowOutOfRange(f"scale {s} exceeds series length {y.size}")
    stats_out = _stats if _stats is not None else {"threshold_poles": 0, "sift_capped": 0}
    if isinstance(detrender, Poly):
        return _poly_variances(y, s, detrender.order)
    if isinstance(detrender, Eemd):
        return _eemd_variances(y, s, detrender.config, workers, stats_out)
    if isinstance(detrender, EemdGlobal):
        rem = _remainder if _remainder is not None else _global_remainder(y, detrender.config)
        return _global_variances(rem, s)
    raise TypeError(f"unknown detrender {detrender!r}")


def moments(f2: np.ndarray, qs) -> tuple[np.ndarray, np.ndarray]:
    """``F_q`` for every q from one scale's window variances.

    Returns ``(values, valid)``. Windows with zero variance make every
    q < 0 cell invalid and are left out of the q = 0 geometric mean.
    """
    qs = np.asarray(qs, dtype=np.float64)
    pos = f2 > 0.0
    n_s = f2.size
    logf2 = np.log(f2[pos])
    n_zero = n_s - logf2.size
    vals = np.full(qs.size, np.nan)
    valid = np.zeros(qs.size, dtype=bool)
    if logf2.size == 0:
        return vals, valid
    for i, q in enumerate(qs):
        if q == 0.0:
            vals[i] = math.exp(0.5 * logf2.mean())
        elif q < 0.0 and n_zero:
            continue
        else:
            a = 0.5 * q * logf2
            m = a.max()
            # zeros add nothing to the q > 0 sum but still count in N_s
            lm = m + math.log(np.sum(np.exp(a - m)) / n_s)
            vals[i] = math.exp(lm / q)
        valid[i] = np.isfinite(vals[i]) and vals[i] > 0.0
    return vals, valid


@dataclass(frozen=True, eq=False)
class FluctuationSurface:
    qs: np.ndarray
    grid: ScaleGrid
    values: np.ndarray          # (len(qs), len(scales)); nan where invalid
    valid: np.ndarray
    window_count: tuple
    zero_windows: tuple
    variances: tuple = field(repr=False)
    notes: tuple = ()
    partial: np.ndarray | None = None   # q=0 cells averaged without zero windows

    def __post_init__(self):
        if self.partial is None:
            object.__setattr__(self, "partial", np.zeros_like(self.valid))

    @property
    def scales(self):
        return np.asarray(self.grid.scales)

    def fq(self, q):
        return self.values[self._qi(q)]

    def _qi(self, q):
        hits = np.flatnonzero(np.isclose(self.qs, q, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise KeyError(q)
        return int(hits[0])

    def write_tsv(self, stream, header_comment=None):
        if header_comment:
            stream.write(f"# {header_comment}\n")
        stream.write("q\ts\tFq\tvalid\n")
        for i, q in enumerate(self.qs):
            for j, s in enumerate(self.grid.scales):
                ok = bool(self.valid[i, j])
                val = f"{self.values[i, j]:.17g}" if ok else "nan"
                flag = "degenerate" if not ok else ("partial" if self.partial[i, j] else "ok")
                stream.write(f"{q:g}\t{s}\t{val}\t{flag}\n")


def fluctuation_function(prof, grid: ScaleGrid, qs, detrender: Detrender,
                         min_windows: int = MIN_WINDOWS, workers=None) -> FluctuationSurface:
    """Evaluate ``F_q(s)`` on the whole (q, s) grid."""
    y = _check_profile(prof)
    qs = check_qs(qs)
    n = y.size
    if n < grid.s_max + min_windows:
        raise SeriesTooShort(
            f"length {n} < s_max {grid.s_max} + min_windows {min_windows}")
    counters = {"threshold_poles": 0, "sift_capped": 0}
    rem = None
    if isinstance(detrender, EemdGlobal):
        rem = _global_remainder(y, detrender.config)
    values = np.full((qs.size, len(grid.scales)), np.nan)
    valid = np.zeros_like(values, dtype=bool)
    partial = np.zeros_like(valid)
    counts, zeros, variances, notes = [], [], [], []
    for j, s in enumerate(grid.scales):
        log.debug("scale %d (%d/%d)", s, j + 1, len(grid.scales))
        f2 = window_variances(y, s, detrender, workers, counters, rem)
        variances.append(f2)
        counts.append(int(f2.size))
        nz = int(np.count_nonzero(f2 == 0.0))
        zeros.append(nz)
        if nz:
            notes.append(f"s={s}: {nz} zero-variance window(s); q<0 degenerate, excluded from q=0")
        values[:, j], valid[:, j] = moments(f2, qs)
        if nz:
            partial[:, j] = valid[:, j] & (qs == 0.0)
    if counters["threshold_poles"]:
        notes.append(f"{counters['threshold_poles']} window(s) had max IMF correlation <= 0.3; all IMFs kept")
    if counters["sift_capped"]:
        notes.append(f"{counters['sift_capped']} sift(s) hit the iteration cap")
    return FluctuationSurface(qs, grid, values, valid, tuple(counts), tuple(zeros),
                              tuple(variances), tuple(notes), partial)


@dataclass(frozen=True)
class HurstFit:
    q: float
    h: float
    stderr: float
    r2: float
    n_scales: int


@dataclass(frozen=True)
class HurstCurve:
    regime: Regime
    fits: tuple

    @property
    def qs(self):
        return np.array([f.q for f in self.fits])

    @property
    def hs(self):
        return np.array([f.h for f in self.fits])

    def h(self, q):
        for f in self.fits:
            if abs(f.q - q) < 1e-12:
                return f.h
        raise KeyError(q)

    def __contains__(self, q):
        return any(abs(f.q - q) < 1e-12 for f in self.fits)

    def write_tsv(self, stream, header=True):
        if header:
            stream.write("q\tH\tstderr\tr2\tregime\n")
        for f in self.fits:
            stream.write(f"{f.q:g}\t{f.h:.17g}\t{f.stderr:.17g}\t{f.r2:.17g}\t{self.regime.value}\n")


def hurst_exponents(surface: FluctuationSurface, regime) -> HurstCurve:
    """OLS slope of ln F_q on ln s per q over the regime's valid scales.

    q values with fewer than five usable scales are left out.
    """
    regime = Regime(regime)
    in_regime = np.array([surface.grid.regime_of(s) is regime for s in surface.grid.scales])
    logs = np.log(surface.scales.astype(float))
    fits = []
    for i, q in enumerate(surface.qs):
        mask = in_regime & surface.valid[i]
        k = int(mask.sum())
        if k < MIN_FIT_SCALES:
            continue
        res = stats.linregress(logs[mask], np.log(surface.values[i, mask]))
        fits.append(HurstFit(float(q), float(res.slope), float(res.stderr),
                             float(res.rvalue ** 2), k))
    if not fits:
        raise RegimeTooSparse(f"no q has {MIN_FIT_SCALES} valid scales in the {regime.value} regime")
    return HurstCurve(regime, tuple(fits))


@dataclass(frozen=True)
class AnalysisParams:
    s_min: int = 10
    crossover: int = 200
    s_max: int = 1000
    per_regime: int = 20
    qs: tuple = tuple(default_qs())
    detrender: Detrender = Eemd()
    min_windows: int = MIN_WINDOWS
    workers: int | None = None

    def grid(self) -> ScaleGrid:
        return scale_grid(self.s_min, self.crossover, self.s_max, self.per_regime)


@dataclass(frozen=True, eq=False)
class Analysis:
    short: HurstCurve | None
    long: HurstCurve | None
    surface: FluctuationSurface
    warnings: tuple = ()

    def curve(self, regime):
        return self.short if Regime(regime) is Regime.SHORT else self.long


def analyze(returns: Series, params: AnalysisParams = AnalysisParams()) -> Analysis:
    """Profile, fluctuation surface and per-regime H(q) for one return series."""
    if returns.kind not in (Kind.LOG_RETURNS, Kind.SYNTHETIC):
        raise WrongKind(f"analyze needs returns, got {returns.kind.value}")
    prof = profile(returns)
    grid = params.grid()
    notes = []
    long_ok = True
    limit = len(prof) - params.min_windows
    if grid.s_max > limit:
        notes.append(f"series length {len(prof)} too short for s_max={grid.s_max}; "
                     f"long regime truncated to s <= {limit}")
        try:
            grid = grid.truncated(limit)
        except BadBounds:
            keep = tuple(s for s in grid.scales if s <= limit and s < grid.crossover)
            if len(keep) < 2:
                raise SeriesTooShort(f"series length {len(prof)} too short for any regime") from None
            # no long scale fits: the last short scale only stands in for the
            # crossover and the long curve is dropped below
            grid = ScaleGrid(keep, keep[-1])
            long_ok = False
            notes.append("long regime unavailable")
    surface = fluctuation_function(prof, grid, params.qs, params.detrender,
                                   params.min_windows, params.workers)
    curves = {}
    for regime in Regime:
        if regime is Regime.LONG and not long_ok:
            curves[regime] = None
            continue
        try:
            curves[regime] = hurst_exponents(surface, regime)
        except RegimeTooSparse as exc:
            curves[regime] = None
            notes.append(str(exc))
    return Analysis(curves[Regime.SHORT], curves[Regime.LONG], surface,
                    tuple(notes) + surface.notes)
