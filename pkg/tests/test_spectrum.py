import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractsect.errors import GridTooCoarse, MissingQ2
from fractsect.mfdfa import HurstCurve, HurstFit, Regime, default_qs
from fractsect.spectrum import (Persistence, asymmetry, classify, mass_exponent,
                                report_for, singularity_spectrum, spectrum_stats)
from fractsect.synth import cascade_hq_oracle

QS = default_qs()


def curve_from(qs, hs, regime=Regime.LONG):
    return HurstCurve(Regime(regime), tuple(HurstFit(float(q), float(h), 0.0, 1.0, 10)
                                            for q, h in zip(qs, hs)))


def test_mass_exponent_monofractal():
    qs, tau = mass_exponent(curve_from(QS, np.full(QS.size, 0.5)))
    assert np.array_equal(tau, 0.5 * qs - 1.0)
    assert tau[np.flatnonzero(qs == 0.0)[0]] == -1.0


def test_mass_exponent_value():
    qs, tau = mass_exponent(curve_from([0.0, 2.0], [0.9, 0.72]))
    assert tau[1] == pytest.approx(0.44)
    with pytest.raises(ValueError):
        mass_exponent(HurstCurve(Regime.LONG, ()))


def test_linear_tau_collapses():
    sp = singularity_spectrum(QS, 0.5 * QS - 1.0)
    assert np.allclose(sp.alpha, 0.5, atol=1e-12)
    assert np.allclose(sp.f, 1.0, atol=1e-12)


def test_quadratic_legendre_pair():
    h0, c = 0.7, 0.05
    tau = -1.0 + QS * h0 - 0.5 * c * QS ** 2
    sp = singularity_spectrum(QS, tau)
    order = np.argsort(sp.q)
    alpha, f, q = sp.alpha[order], sp.f[order], sp.q[order]
    assert np.max(np.abs(alpha - (h0 - c * q))) < 1e-6
    assert np.max(np.abs(f - (1.0 - (alpha - h0) ** 2 / (2 * c)))) < 1e-6


def test_cascade_endpoints():
    tau = np.array([q * cascade_hq_oracle(0.6, q) - 1.0 for q in QS])
    sp = singularity_spectrum(QS, tau)
    assert sp.alpha.min() == pytest.approx(-math.log(0.6) / math.log(2), abs=0.1)
    assert sp.alpha.max() == pytest.approx(-math.log(0.4) / math.log(2), abs=0.1)
    # concave: secant slopes df/dalpha never increase along alpha
    slopes = np.diff(sp.f) / np.diff(sp.alpha)
    assert np.all(np.diff(slopes) <= 1e-3)
    assert sp.f.max() <= 1.0 + 1e-9


def test_spectrum_sorted_and_edges():
    tau = np.array([q * cascade_hq_oracle(0.7, q) - 1.0 for q in QS])
    sp = singularity_spectrum(QS, tau)
    assert np.all(np.diff(sp.alpha) >= 0)
    assert sp.edge.sum() == 2
    assert set(sp.q[sp.edge]) == {QS[0], QS[-1]}


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        singularity_spectrum([0.0, 2.0], [-1.0, 0.0])


def test_reference_rows():
    width, left, right, b = asymmetry(0.21, 0.99, 1.92)
    assert (width, left, right) == pytest.approx((1.71, 0.78, 0.93))
    assert b == pytest.approx(-0.09, abs=0.005)
    width, left, right, b = asymmetry(0.54, 1.03, 1.20)
    assert width == pytest.approx(0.66)
    assert b == pytest.approx(0.48, abs=0.005)
    assert abs(b - 0.50) <= 0.03


def test_symmetric_b_zero():
    assert asymmetry(0.2, 0.5, 0.8)[3] == pytest.approx(0.0, abs=1e-15)
    assert asymmetry(0.5, 0.5, 0.5)[3] == 0.0


def test_b_sign_convention():
    assert asymmetry(0.1, 0.8, 0.9)[3] > 0      # wider left branch
    assert asymmetry(0.1, 0.2, 0.9)[3] < 0


def test_classify():
    assert classify(0.72) is Persistence.PERSISTENT
    assert classify(0.33) is Persistence.ANTI_PERSISTENT
    assert classify(0.5) is Persistence.BOUNDARY
    assert classify(0.515) is Persistence.BOUNDARY
    assert classify(0.515, band=0.0) is Persistence.PERSISTENT
    with pytest.raises(ValueError):
        classify(float("nan"))


def test_report_fields():
    hs = np.array([cascade_hq_oracle(0.6, q) for q in QS])
    rep = report_for(curve_from(QS, hs))
    assert rep.delta_alpha == rep.alpha_max - rep.alpha_min
    assert rep.delta_alpha_L >= 0 and rep.delta_alpha_R >= 0
    assert -1 <= rep.B <= 1
    assert rep.dH == pytest.approx(hs.max() - hs.min())
    assert rep.H2 == pytest.approx(0.9717, abs=1e-4)
    assert rep.persistence is Persistence.PERSISTENT
    assert rep.alpha_0 == rep.spectrum.alpha[np.argmax(rep.spectrum.f)]
    d = rep.to_dict()
    assert d["class"] == "persistent" and d["regime"] == "long"
    assert len(d["spectrum"]) == QS.size


def test_missing_q2():
    qs = np.array([-1.0, 0.0, 1.0])
    curve = curve_from(qs, [0.6, 0.5, 0.4])
    sp = singularity_spectrum(*mass_exponent(curve))
    with pytest.raises(MissingQ2):
        spectrum_stats(sp, curve)


def test_short_curve_without_negative_q():
    qs = np.arange(0, 21) * 0.5
    hs = 0.8 - 0.02 * qs
    rep = report_for(curve_from(qs, hs, Regime.SHORT))
    assert rep.dH == pytest.approx(0.2)


@settings(max_examples=100)
@given(st.floats(0.05, 1.5), st.floats(0.0, 0.1), st.floats(-0.01, 0.01))
def test_legendre_consistency(h0, c, d):
    tau = -1.0 + QS * h0 - 0.5 * c * QS ** 2 + d * QS ** 3 / 30
    sp = singularity_spectrum(QS, tau)
    back = sp.q * sp.alpha - sp.f
    order = np.argsort(sp.q)
    assert np.allclose(back[order], tau, atol=1e-9)


@given(st.floats(0.01, 1.5))
def test_monofractal_collapse(h):
    rep = report_for(curve_from(QS, np.full(QS.size, h)))
    assert rep.delta_alpha < 1e-9
    assert rep.persistence is classify(h)
