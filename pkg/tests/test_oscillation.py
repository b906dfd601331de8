import math

import numpy as np
import pytest

from subharm.oscillation import (DegenerateDifference, OriginHit, count_zeros_diff,
                                 winding, winding_of, zeros_of)


def by_string(result):
    return {str(o.string): o for o in result.orbits}


def test_sin_winding_one_turn():
    assert winding_of(np.sin, np.cos, 0.0, 2 * math.pi) == pytest.approx(1.0, abs=1e-9)


def test_sin3_winding_three_turns():
    turns = winding_of(lambda t: np.sin(3 * t), lambda t: 3 * np.cos(3 * t), 0.0, 2 * math.pi)
    assert turns == pytest.approx(3.0, abs=1e-9)


def test_counterclockwise_is_negative():
    turns = winding_of(np.cos, lambda t: np.sin(t), 0.0, 2 * math.pi)
    assert turns == pytest.approx(-1.0, abs=1e-9)


def test_winding_refines_coarse_grid():
    f = lambda t: np.sin(40 * t)
    fp = lambda t: 40 * np.cos(40 * t)
    assert winding_of(f, fp, 0.0, 2 * math.pi, samples=50) == pytest.approx(40.0, abs=1e-9)


def test_origin_hit():
    with pytest.raises(OriginHit):
        winding_of(lambda t: t - 1.0, lambda t: t - 1.0, 0.0, 2.0, samples=100)


def test_zeros_of_sin():
    zeros, tang = zeros_of(np.sin, 0.1, 0.1 + 2 * math.pi)
    assert zeros == pytest.approx([math.pi, 2 * math.pi], abs=1e-12)
    assert tang == []


def test_zeros_of_reports_tangency():
    zeros, tang = zeros_of(lambda t: (t - 1.0) ** 2, 0.0, 2.0, samples=1000)
    assert zeros == []
    assert tang == pytest.approx([1.0])


def test_degenerate_difference(fig2_search):
    o = by_string(fig2_search)["10"]
    with pytest.raises(DegenerateDifference):
        count_zeros_diff(o, o)


def test_fig2_zero_count_even_and_winding(fig2_search):
    o = by_string(fig2_search)
    for s in ("10", "01"):
        rep = count_zeros_diff(o[s], o["11"])
        assert rep.zero_count % 2 == 0 and rep.zero_count > 0
        assert rep.winding_turns == pytest.approx(rep.zero_count / 2, abs=1e-6)
        assert rep.j_index == rep.zero_count // 2
        assert rep.reference_class_id == o["11"].class_id
        assert winding(o[s], o["11"]) == pytest.approx(rep.winding_turns)
        assert set(rep.as_dict()) >= {"zero_count", "winding_turns", "j_index"}


def test_zeros_lie_in_window(fig2_search):
    o = by_string(fig2_search)
    rep = count_zeros_diff(o["10"], o["11"])
    t0 = o["10"].trajectory.t0
    assert all(t0 <= z < t0 + o["10"].span for z in rep.zeros)
    for z in rep.zeros:
        assert abs(o["10"].u(z) - o["11"].u(z)) < 1e-9
