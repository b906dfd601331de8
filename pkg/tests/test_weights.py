import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subharm.weights import (DefiniteWeight, NoSignChange, WeightSpec, decompose_humps,
                             mean_value, mu_sharp)


def test_sin_three_humps_per_sign():
    w = WeightSpec.sin(3, 1.0, 10.0)
    hs = w.humps
    assert len(hs) == 6
    assert w.m == 3
    for j, h in enumerate(hs):
        assert h.lo == pytest.approx(j / 6, abs=1e-12)
        assert h.hi == pytest.approx((j + 1) / 6, abs=1e-12)
        assert h.sign == (1 if j % 2 == 0 else -1)
    assert [h.index_i for h in w.positive_humps()] == [1, 2, 3]


def test_sin_t_humps_exact():
    w = WeightSpec.sin(1, 2 * math.pi, 6.0)
    pos, neg = w.humps
    assert (pos.lo, neg.lo) == (0.0, pytest.approx(math.pi, abs=1e-12))
    assert neg.hi == pytest.approx(2 * math.pi, abs=1e-12)


@pytest.mark.parametrize("freq,T,mu", [(3, 1.0, 10.0), (1, 2 * math.pi, 6.0), (2, 3.0, 1.5)])
def test_mean_value_closed_form(freq, T, mu):
    # each sin hump of length L = T/(2 freq) has area 2L/pi
    L = T / (2 * freq)
    exact = freq * (2 * L / math.pi) * (1 - mu)
    assert mean_value(WeightSpec.sin(freq, T, mu)) == pytest.approx(exact, rel=1e-10)
    assert mean_value(WeightSpec.sin(freq, T, mu), k=3) == pytest.approx(3 * exact, rel=1e-10)


def test_fig2_mean_is_minus_ten():
    assert mean_value(WeightSpec.sin(1, 2 * math.pi, 6.0)) == pytest.approx(-10.0, rel=1e-12)


def test_mu_sharp_symmetric_sin():
    assert mu_sharp(WeightSpec.sin(3, 1.0, 10.0)) == pytest.approx(1.0, rel=1e-10)


def test_const_has_no_humps():
    w = WeightSpec.const(2.0, 1.0)
    with pytest.raises(NoSignChange):
        w.humps
    with pytest.raises(DefiniteWeight):
        mu_sharp(w)


def test_table_with_plateau():
    w = WeightSpec.table([(0, 1), (1, 1), (2, -1), (3, -1), (4, 1)], 4.0, 2.0)
    pos, neg = [h for h in w.humps if h.sign > 0], [h for h in w.humps if h.sign < 0]
    assert len(pos) == 1 and len(neg) == 1
    # the positive run wraps through t = 0, so the window starts at 3.5
    assert pos[0].lo == pytest.approx(3.5)
    assert pos[0].hi == pytest.approx(5.5)
    assert (neg[0].lo, neg[0].hi) == (pytest.approx(5.5), pytest.approx(7.5))
    # both parts: plateau of area 1 plus two triangles of area 1/4
    assert mean_value(w) == pytest.approx(1.5 - 2 * 1.5)
    assert mu_sharp(w) == pytest.approx(1.0)


def test_vectorised_matches_scalar():
    for w in (WeightSpec.sin(3, 1.0, 10.0),
              WeightSpec.table([(0, 1), (1, 1), (2, -1), (3, -1), (4, 1)], 4.0, 2.0)):
        t = np.linspace(-1.3, 9.1, 71)
        assert np.array_equal(w.values(t), [w.fn(x) for x in t])


def test_breakpoints_shifted():
    w = WeightSpec.sin(1, 2 * math.pi, 6.0)
    bp = w.breakpoints_in(0.0, 4 * math.pi)
    assert bp == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.floats(0.5, 10.0), st.floats(1.1, 20.0))
def test_sin_humps_alternate_and_cover_period(freq, T, mu):
    w = WeightSpec.sin(freq, T, mu)
    hs = decompose_humps(w)
    assert len(hs) == 2 * freq
    assert sum(h.length for h in hs) == pytest.approx(T, rel=1e-12)
    assert all(a.sign != b.sign for a, b in zip(hs, hs[1:]))
    for h in hs:
        mid = 0.5 * (h.lo + h.hi)
        assert np.sign(w(mid)) == h.sign


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 30.0))
def test_mean_value_linear_in_mu(mu):
    w1 = WeightSpec.sin(2, 1.0, 1.0)
    w = WeightSpec.sin(2, 1.0, mu)
    plus = (mean_value(w1) * mu - mean_value(w)) / (mu - 1)
    assert plus == pytest.approx(2 * 2 * (1 / 4) / math.pi, rel=1e-9)
