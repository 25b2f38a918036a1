import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from fractsect.emd import (EemdConfig, correlation_threshold, eemd, emd, envelopes,
                           find_extrema, imf_correlations, select_by_correlation,
                           select_imfs, sift, sift_iterations, trend)
from fractsect.errors import (DegenerateCorrelation, InsufficientExtrema,
                              MaxSiftIterationsExceeded, ThresholdPole, TooShort)

T1024 = np.arange(1024)


def quiet(fn, *a, **k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*a, **k)


# extrema -------------------------------------------------------------------

def test_tone_extrema_alternate():
    x = np.sin(2 * np.pi * np.arange(128) / 32)
    mx, mn = find_extrema(x)
    assert len(mx) == 4 and len(mn) == 4
    merged = sorted([(i, "M") for i in mx] + [(i, "m") for i in mn])
    kinds = [k for _, k in merged]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))


def test_ramp_has_no_extrema():
    mx, mn = find_extrema(np.arange(1, 101, dtype=float))
    assert mx.size == 0 and mn.size == 0


def test_plateau_midpoint_rounded_down():
    mx, mn = find_extrema([0.0, 1.0, 1.0, 0.0])
    assert mx.tolist() == [1] and mn.tolist() == []
    mx, _ = find_extrema([0.0, 2.0, 2.0, 2.0, 0.0])
    assert mx.tolist() == [2]


def test_extrema_too_short():
    with pytest.raises(TooShort):
        find_extrema([1.0, 2.0])


def test_endpoints_never_extrema():
    mx, mn = find_extrema([5.0, 0.0, 1.0, 0.0, 5.0])
    assert mx.tolist() == [2] and mn.tolist() == [1, 3]


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=60))
def test_extrema_match_bruteforce(vals):
    x = np.array(vals, dtype=float)
    mx, mn = find_extrema(x)
    # brute force: walk plateaus
    bmx, bmn = [], []
    i = 1
    while i < len(x) - 1:
        j = i
        while j + 1 < len(x) - 1 and x[j + 1] == x[i]:
            j += 1
        if x[i - 1] < x[i] and j + 1 < len(x) and x[j + 1] < x[i]:
            bmx.append((i + j) // 2)
        elif x[i - 1] > x[i] and j + 1 < len(x) and x[j + 1] > x[i]:
            bmn.append((i + j) // 2)
        i = j + 1
    assert mx.tolist() == bmx and mn.tolist() == bmn


# envelopes -----------------------------------------------------------------

def test_envelope_of_tone():
    x = 3.0 + np.sin(2 * np.pi * T1024 / 50)
    upper, lower = envelopes(x)
    interior = slice(50, -50)
    assert np.max(np.abs(upper[interior] - 4.0)) < 0.02
    assert np.max(np.abs(lower[interior] - 2.0)) < 0.02


def test_envelope_passes_through_knots():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(300)
    mx, mn = find_extrema(x)
    upper, lower = envelopes(x)
    assert np.array_equal(upper[mx], x[mx])
    assert np.array_equal(lower[mn], x[mn])


def test_envelope_matches_reference_spline():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200)
    mx, _ = find_extrema(x)
    L = x.size - 1
    knots = np.concatenate([-mx[1::-1], mx, 2 * L - mx[:-3:-1]])
    vals = np.concatenate([x[mx[1::-1]], x[mx], x[mx[:-3:-1]]])
    ref = CubicSpline(knots, vals, bc_type="natural")(np.arange(x.size))
    upper, _ = envelopes(x)
    assert np.max(np.abs(upper - ref)) < 1e-10


def test_envelope_needs_two_extrema():
    with pytest.raises(InsufficientExtrema):
        envelopes([0.0, 1.0, 0.0, -1.0, 0.0, 0.5, 0.0])


# sift ----------------------------------------------------------------------

def test_sift_tone():
    x = np.sin(2 * np.pi * T1024 / 32)
    imf = sift(x)
    assert np.corrcoef(imf.values, x)[0, 1] > 0.99


def test_sift_two_tones():
    fast = np.sin(2 * np.pi * T1024 / 16)
    slow = np.sin(2 * np.pi * T1024 / 128)
    imf = sift(fast + slow)
    assert np.corrcoef(imf.values, fast)[0, 1] > 0.95


def test_sift_fixed_point():
    x = np.sin(2 * np.pi * T1024 / 40)
    assert sift_iterations(x) <= 3
    assert np.max(np.abs(sift(x).values - x)) < 1e-6


def test_sift_cap_warns():
    x = np.random.default_rng(0).standard_normal(256)
    with pytest.warns(MaxSiftIterationsExceeded):
        sift(x, max_iter=1)


def test_sift_without_extrema():
    with pytest.raises(InsufficientExtrema):
        sift(np.arange(10.0))


@pytest.mark.parametrize("periods", [(32,), (16, 128), (10, 45, 200)])
def test_imf_conditions_on_tones(periods):
    x = sum(np.sin(2 * np.pi * T1024 / p) for p in periods)
    dec = emd(x)
    for imf in dec.imfs:
        assert abs(imf.extrema_count() - imf.zero_crossings()) <= 1
        r = imf.envelope_mean_ratio()
        assert math.isnan(r) or r <= 0.1


# emd -----------------------------------------------------------------------

def test_emd_ramp_plus_tone():
    ramp = np.linspace(0.0, 10.0, 1024)
    dec = emd(ramp + np.sin(2 * np.pi * T1024 / 40))
    assert len(dec) >= 1
    assert np.max(np.abs(dec.residual - ramp)) < 0.05 * 10.0


def test_emd_too_short():
    with pytest.raises(TooShort):
        emd(np.arange(7.0))


def test_white_noise_imf_count():
    counts = [len(quiet(emd, np.random.default_rng(s).standard_normal(1024)))
              for s in range(100)]
    assert 7 <= min(counts) and max(counts) <= 13


def test_residual_meets_stop_rule():
    for s in range(40):
        rng = np.random.default_rng(s)
        dec = quiet(emd, np.cumsum(rng.standard_normal(512)))
        mx, mn = find_extrema(dec.residual)
        assert min(len(mx), len(mn)) < 2
        assert len(mx) + len(mn) <= 3


def test_zero_crossings_decrease_with_index():
    for s in range(30):
        dec = quiet(emd, np.random.default_rng(s).standard_normal(1024))
        zc = [imf.zero_crossings() for imf in dec.imfs]
        assert sum(b > a for a, b in zip(zc, zc[1:])) <= 1


signals = st.builds(
    lambda seed, n, kind: (np.random.default_rng(seed).standard_normal(n).cumsum()
                           if kind else np.random.default_rng(seed).standard_normal(n)),
    st.integers(0, 2**32 - 1), st.sampled_from([16, 100, 256, 1024]), st.booleans())


@settings(max_examples=60, deadline=None)
@given(signals)
def test_reconstruction(x):
    dec = quiet(emd, x)
    assert np.max(np.abs(x - dec.reconstruct())) <= 1e-9 * np.std(x)


@settings(max_examples=30, deadline=None)
@given(signals, st.sampled_from([0.25, 2.0, 1024.0]))
def test_amplitude_equivariance(x, c):
    a = quiet(emd, x)
    b = quiet(emd, c * x)
    assert len(a) == len(b)
    for ia, ib in zip(a.imfs, b.imfs):
        assert np.array_equal(c * ia.values, ib.values)


@settings(max_examples=20, deadline=None)
@given(signals, st.floats(0.1, 10.0))
def test_amplitude_equivariance_general_scale(x, c):
    a = quiet(emd, x)
    b = quiet(emd, c * x)
    if len(a) == len(b):
        assert np.allclose(c * a.matrix(), b.matrix(), rtol=0, atol=1e-6 * c * np.std(x))


def test_decomposition_dump():
    dec = emd(np.sin(2 * np.pi * np.arange(64) / 8) + np.arange(64) / 64)
    buf = io.StringIO()
    dec.write_tsv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split("\t")[-1] == "residual"
    assert len(lines) == 65


# eemd ----------------------------------------------------------------------

def test_eemd_single_member_tiny_noise_equals_emd():
    x = np.cumsum(np.random.default_rng(2).standard_normal(512))
    e = quiet(eemd, x, EemdConfig(1, 1e-12, 0))
    d = quiet(emd, x)
    assert len(e) == len(d)
    for a, b in zip(e.imfs, d.imfs):
        assert np.max(np.abs(a.values - b.values)) < 1e-6 * np.std(x)


def test_eemd_deterministic():
    x = np.random.default_rng(3).standard_normal(300)
    cfg = EemdConfig(8, 0.2, 42)
    a, b = quiet(eemd, x, cfg), quiet(eemd, x, cfg)
    assert a.matrix().tobytes() == b.matrix().tobytes()
    assert a.residual.tobytes() == b.residual.tobytes()


def test_eemd_mean_reconstruction():
    x = np.random.default_rng(4).standard_normal(400).cumsum()
    dec = quiet(eemd, x, EemdConfig(6, 0.2, 1))
    assert np.max(np.abs(dec.reconstruct() - x)) <= 1e-9 * np.std(x)


def test_eemd_noise_floor():
    assert EemdConfig(100, 0.2).noise_floor == pytest.approx(0.02)


def test_eemd_config_invariants():
    with pytest.raises(ValueError):
        EemdConfig(0)
    with pytest.raises(ValueError):
        EemdConfig(4, 1.0)


def test_eemd_trend_recovery():
    # tone + quadratic trend with observation noise; the trend is x - sum of mean IMFs
    rng = np.random.default_rng(1)
    tt = np.linspace(0.0, 1.0, 1024)
    true_trend = 4.0 * (tt - 0.4) ** 2
    x = true_trend + np.sin(2 * np.pi * T1024 / 25) + 0.3 * rng.standard_normal(1024)
    span = np.ptp(true_trend)

    def rmse(dec):
        return np.sqrt(np.mean((dec.residual - true_trend) ** 2)) / span

    ens = quiet(eemd, x, EemdConfig(50, 0.2, 0))
    single = quiet(emd, x)
    assert rmse(ens) < 0.05
    assert rmse(ens) < rmse(single)


# selection -----------------------------------------------------------------

def test_threshold_values():
    assert correlation_threshold(1.0) == pytest.approx(1 / 7)
    assert correlation_threshold(0.5) == pytest.approx(0.25)
    assert correlation_threshold(0.9) == pytest.approx(0.15)
    assert math.isnan(correlation_threshold(0.3))


def test_selection_example():
    assert select_by_correlation([0.9, 0.05, 0.3]) == (1, 3)


def test_selection_pole_keeps_all():
    with pytest.warns(ThresholdPole):
        assert select_by_correlation([0.2, 0.1, -0.5]) == (1, 2, 3)


def test_selection_between_pole_and_point_four_keeps_none():
    # threshold exceeds every correlation when 0.3 < max < 0.4
    assert select_by_correlation([0.35, 0.1]) == ()


def test_degenerate_correlation_warns():
    dec = emd(np.sin(2 * np.pi * np.arange(128) / 16))
    with pytest.warns(DegenerateCorrelation):
        mu = imf_correlations(dec, np.ones(128))
    assert np.all(mu == 0.0)


def test_select_and_trend():
    fast = np.sin(2 * np.pi * T1024 / 8)
    slow = 3 * np.sin(2 * np.pi * T1024 / 300)
    x = fast + slow
    dec = emd(x)
    sel = select_imfs(dec, x)
    assert sel
    tr = trend(dec, x, sel)
    removed = sum(dec.imfs[i - 1].values for i in sel)
    assert np.allclose(tr, x - removed)
    assert np.allclose(trend(dec, x), dec.residual)
