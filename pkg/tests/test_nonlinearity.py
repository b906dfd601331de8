import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subharm.nonlinearity import (BadParams, ExtendedField, Nonlinearity, check_hypotheses,
                                  field_eval, make_nonlinearity)
from subharm.weights import WeightSpec


@pytest.mark.parametrize("kind,params,s,expected", [
    ("power", (2,), 3.0, 9.0),
    ("polymix", (100, 100), 1.0, 200.0),
    ("atan", (400,), 1.0, 100 * math.pi),
    ("table", (0, 0, 1, 2, 3, 10), 2.0, 6.0),
    ("table", (0, 0, 1, 2, 3, 10), 4.0, 14.0),
])
def test_values(kind, params, s, expected):
    assert make_nonlinearity(kind, params).g(s) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("kind,params", [
    ("power", (1.0,)), ("power", (0.5,)), ("polymix", (-1, 2)), ("polymix", (0, 0)),
    ("atan", (0,)), ("table", (0, 1, 1, 2)), ("table", (0, 0, 1, 2, 1, 3)), ("bogus", (1,)),
])
def test_bad_params(kind, params):
    with pytest.raises(BadParams):
        make_nonlinearity(kind, params)


@pytest.mark.parametrize("kind,params", [("power", (2.5,)), ("polymix", (100, 100)),
                                         ("atan", (400,)), ("polymix", (1, 0, 3))])
def test_derivatives_match_finite_differences(kind, params):
    n = make_nonlinearity(kind, params)
    for s in np.geomspace(1e-3, 1e3, 25):
        h = 1e-5 * s
        fd1 = (n.g(s + h) - n.g(s - h)) / (2 * h)
        fd2 = (n.dg(s + h) - n.dg(s - h)) / (2 * h)
        assert n.dg(s) == pytest.approx(fd1, rel=1e-6)
        # rounding in g' limits the difference quotient when g'' << g' / s
        assert abs(n.d2g(s) - fd2) <= 1e-6 * abs(n.d2g(s)) + 1e-9 * n.dg(s) / s


@pytest.mark.parametrize("kind,params", [("power", (2.5,)), ("polymix", (100, 100)),
                                         ("atan", (400,)), ("table", (0, 0, 1, 2, 3, 10))])
def test_vectorised_matches_scalar(kind, params):
    n = make_nonlinearity(kind, params)
    s = np.geomspace(1e-4, 1e2, 37)
    gv, dgv = n.vectorized
    assert np.allclose(gv(s), [n.g(x) for x in s], rtol=1e-14, atol=0)
    assert np.allclose(dgv(s), [n.dg(x) for x in s], rtol=1e-14, atol=0)


def test_hypotheses_power():
    rep = check_hypotheses(make_nonlinearity("power", (2,)))
    assert rep.positivity and rep.g0_zero and rep.flat_at_zero and rep.convex
    assert rep.superlinear_at_infinity
    assert rep.growth_exponent == pytest.approx(1.0, abs=1e-9)


def test_hypotheses_atan_bounded_ratio():
    rep = check_hypotheses(make_nonlinearity("atan", (400,)))
    assert rep.positivity and rep.flat_at_zero
    assert not rep.superlinear_at_infinity
    assert rep.liminf_proxy == pytest.approx(400 * math.atan(1e3), rel=1e-12)
    assert rep.liminf_proxy < 400 * math.pi / 2


def test_hypotheses_polymix_convex():
    rep = check_hypotheses(make_nonlinearity("polymix", (100, 100)))
    assert rep.convex and rep.superlinear_at_infinity


def test_f_extension_negative_branch():
    F = ExtendedField(make_nonlinearity("power", (2,)), WeightSpec.sin(1, 1.0, 2.0))
    assert F.extension == "f"
    # f(t, -2) = 2, so u'' = -f = -2
    assert F.phi(0.3, -2.0) == 2.0
    assert field_eval(F, 0.3, -2.0, 5.0) == (5.0, -2.0)


def test_h_extension_affine_branch():
    F = ExtendedField(make_nonlinearity("power", (2,)), WeightSpec.const(1.0, 1.0), truncation_R=1.0)
    assert F.extension == "h"
    assert field_eval(F, 0.0, 3.0, 0.0)[1] == pytest.approx(-5.0)
    assert field_eval(F, 0.0, -1.0, 0.0)[1] == 0.0


def test_friction_term():
    F = ExtendedField(make_nonlinearity("power", (2,)), WeightSpec.const(1.0, 1.0), friction_c=1.0)
    assert field_eval(F, 0.0, 0.0, 2.0) == (2.0, -2.0)


def test_h_needs_positive_R():
    with pytest.raises(ValueError):
        ExtendedField(make_nonlinearity("power", (2,)), WeightSpec.const(1.0, 1.0), extension="h")


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.1, 5.0))
def test_extensions_continuous_at_junctions(t, R):
    w = WeightSpec.sin(1, 1.0, 3.0)
    n = make_nonlinearity("polymix", (1, 2))
    for F, J in ((ExtendedField(n, w), 0.0), (ExtendedField(n, w, truncation_R=R), 0.0),
                 (ExtendedField(n, w, truncation_R=R), R)):
        lo = F.phi(t, J - 1e-13)
        hi = F.phi(t, J + 1e-13)
        slope = max(abs(F.dphi(t, J - 1e-13)), abs(F.dphi(t, J + 1e-13)))
        assert abs(lo - hi) < 2e-13 * slope + 1e-14 * max(1.0, abs(F.phi(t, J)))


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(0.0, 1.0))
def test_h_has_linear_growth(s, t):
    w = WeightSpec.sin(1, 1.0, 3.0)
    n = make_nonlinearity("power", (3,))
    R = 2.0
    F = ExtendedField(n, w, truncation_R=R)
    qmax = 3.0
    A = qmax * (n.g(R) + n.dg(R) * R)
    B = qmax * n.dg(R)
    assert abs(F.phi(t, s)) <= A + B * abs(s) + 1e-9


def test_odd_extension_is_harmonic_for_linear_g():
    F = ExtendedField(Nonlinearity("power", (1.0,)), WeightSpec.const(1.0, 1.0), extension="odd")
    assert F.junctions == ()
    assert F.phi(0.0, -0.7) == pytest.approx(-0.7)
