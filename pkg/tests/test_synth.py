import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fractsect.errors import BadSpec
from fractsect.series import Kind, Series
from fractsect.synth import (CascadeSpec, FgnSpec, binomial_cascade, cascade_hq_oracle,
                             fgn, fgn_autocovariance, shuffle)


def test_cascade_prefix_matches_two_level_enumeration():
    # bit counts 0,1,1,2 of indices 0..3 -> 0.4^2, 0.6*0.4, 0.6*0.4, 0.6^2 (times 0.4^6 at n=8)
    x = binomial_cascade(CascadeSpec(8, 0.6)).values
    assert np.allclose(x[:4] / 0.4 ** 6, [0.16, 0.24, 0.24, 0.36], rtol=1e-12)


@pytest.mark.parametrize("n", [8, 14, 20])
def test_cascade_conserves_measure(n):
    x = binomial_cascade(CascadeSpec(n, 0.7)).values
    assert x.size == 2 ** n
    assert abs(x.sum() - 1.0) < 1e-12


def test_cascade_spec_bounds():
    for bad in [(7, 0.6), (25, 0.6), (10, 0.5), (10, 1.0)]:
        with pytest.raises(BadSpec):
            CascadeSpec(*bad)


def test_oracle_values():
    assert cascade_hq_oracle(0.6, 2.0) == pytest.approx(0.9717, abs=5e-5)
    assert cascade_hq_oracle(0.6, 1e4) == pytest.approx(-math.log(0.6) / math.log(2), abs=1e-3)
    assert cascade_hq_oracle(0.6, -1e4) == pytest.approx(-math.log(0.4) / math.log(2), abs=1e-3)
    for q in (-10.0, -1.0, 0.0, 2.0, 10.0):
        assert cascade_hq_oracle(0.5 + 1e-9, q) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(BadSpec):
        cascade_hq_oracle(0.4, 1.0)


def test_oracle_continuous_at_zero():
    left = cascade_hq_oracle(0.6, -1e-6)
    right = cascade_hq_oracle(0.6, 1e-6)
    assert abs(left - right) < 1e-6
    assert cascade_hq_oracle(0.6, 0.0) == pytest.approx(0.5 * (left + right), abs=1e-6)


@pytest.mark.parametrize("q", [-4.0, -1.0, 0.5, 2.0, 5.0])
def test_oracle_against_partition_sums(q):
    # box sums of the n=16 measure at level k scale as (a^q + b^q)^k
    x = binomial_cascade(CascadeSpec(16, 0.6)).values
    ks = np.arange(4, 13)
    logz = [np.log2(np.sum(x.reshape(2 ** k, -1).sum(axis=1) ** q)) for k in ks]
    slope = np.polyfit(ks, logz, 1)[0]
    h = (1.0 - slope) / q
    assert cascade_hq_oracle(0.6, q) == pytest.approx(h, abs=1e-9)


def test_fgn_white_case():
    x = fgn(FgnSpec(2 ** 14, 0.5, 0)).values
    r1 = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r1) <= 3 / math.sqrt(x.size)


def test_fgn_lag_one():
    target = 2 ** (2 * 0.7 - 1) - 1
    single = fgn(FgnSpec(2 ** 14, 0.7, 0)).values
    assert np.corrcoef(single[:-1], single[1:])[0, 1] == pytest.approx(target, abs=0.05)
    seeds = [fgn(FgnSpec(2 ** 12, 0.7, s)).values for s in range(50)]
    avg = np.mean([np.corrcoef(v[:-1], v[1:])[0, 1] for v in seeds])
    assert avg == pytest.approx(target, abs=0.02)


def test_fgn_deterministic_and_variance():
    a = fgn(FgnSpec(4096, 0.3, 11)).values
    b = fgn(FgnSpec(4096, 0.3, 11)).values
    assert a.tobytes() == b.tobytes()
    var = np.mean([np.var(fgn(FgnSpec(2 ** 12, 0.7, s)).values) for s in range(20)])
    assert 0.9 <= var <= 1.1


def test_fgn_autocovariance():
    g = fgn_autocovariance(0.7, np.arange(3))
    assert g[0] == pytest.approx(1.0)
    assert g[1] == pytest.approx(2 ** 0.4 - 1)


def test_fgn_spec_bounds():
    with pytest.raises(BadSpec):
        FgnSpec(255, 0.5)
    with pytest.raises(BadSpec):
        FgnSpec(1024, 1.0)


@given(st.lists(st.floats(-1e9, 1e9), min_size=2, max_size=200), st.integers(0, 2**63))
def test_shuffle_is_permutation(vals, seed):
    x = Series(vals, Kind.SYNTHETIC)
    y = shuffle(x, seed)
    assert np.array_equal(np.sort(y.values), np.sort(x.values))
    assert shuffle(x, seed).values.tobytes() == y.values.tobytes()


def test_shuffle_two_values():
    x = Series([1.0, 2.0], Kind.SYNTHETIC)
    outs = {tuple(shuffle(x, s).values) for s in range(40)}
    assert outs == {(1.0, 2.0), (2.0, 1.0)}
    with pytest.raises(BadSpec):
        shuffle(Series([1.0], Kind.SYNTHETIC), 0)
