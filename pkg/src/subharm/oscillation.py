"""Zeros of the difference between two periodic orbits and the winding of (d, d')."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

SAMPLES = 10_000
TANGENCY_TOL = 1e-9
DEGENERATE_TOL = 1e-8
ORIGIN_TOL = 1e-10


class DegenerateDifference(ValueError):
    pass


class OriginHit(ValueError):
    pass


@dataclass
class OscillationReport:
    reference_class_id: int
    zero_count: int
    winding_turns: float
    j_index: Optional[int] = None
    zeros: list = field(default_factory=list)
    tangencies: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"reference_class_id": self.reference_class_id, "zero_count": self.zero_count,
                "winding_turns": self.winding_turns, "j_index": self.j_index,
                "zeros": list(self.zeros), "tangencies": list(self.tangencies)}


def zeros_of(d: Callable, t0: float, t1: float, samples: int = SAMPLES,
             tangency_tol: float = TANGENCY_TOL) -> tuple[list[float], list[float]]:
    """Sign changes of a vectorised d on [t0, t1), refined with brentq, and near-tangencies."""
    ts = np.linspace(t0, t1, samples + 1)
    ds = np.asarray(d(ts), dtype=float)
    zeros = []
    for i in np.nonzero(ds[:-1] * ds[1:] < 0)[0]:
        zeros.append(brentq(lambda t: float(d(t)), ts[i], ts[i + 1], xtol=1e-14, rtol=1e-15))
    # exact zeros on the grid count once, as a crossing, when the sign flips across them
    for i in np.nonzero(ds[1:-1] == 0.0)[0] + 1:
        if ds[i - 1] * ds[i + 1] < 0:
            zeros.append(float(ts[i]))
    if ds[0] == 0.0:
        zeros.append(float(t0))
    zeros.sort()
    tangencies = []
    a = np.abs(ds)
    for i in range(1, samples):
        if a[i] < tangency_tol and a[i] <= a[i - 1] and a[i] <= a[i + 1] and ds[i - 1] * ds[i + 1] > 0:
            tangencies.append(float(ts[i]))
    return zeros, tangencies


def winding_of(d: Callable, dp: Callable, t0: float, t1: float, samples: int = SAMPLES,
               origin_tol: float = ORIGIN_TOL) -> float:
    """Clockwise turns of (d, d') about the origin over [t0, t1].

    d = sin t on [0, 2 pi] gives 1.0.  The grid is doubled until no sample
    step turns by more than a quarter revolution.
    """
    n = samples
    while True:
        ts = np.linspace(t0, t1, n + 1)
        x = np.asarray(d(ts), dtype=float)
        y = np.asarray(dp(ts), dtype=float)
        if np.any((np.abs(x) < origin_tol) & (np.abs(y) < origin_tol)):
            i = int(np.argmax((np.abs(x) < origin_tol) & (np.abs(y) < origin_tol)))
            raise OriginHit(f"(d, d') passes within {origin_tol:g} of the origin at t = {ts[i]:.12g}")
        steps = np.diff(np.unwrap(np.arctan2(y, x)))
        if np.max(np.abs(steps)) < math.pi / 2 or n > 64 * samples:
            return float(-np.sum(steps) / (2 * math.pi))
        n *= 2


def _difference(orbit, reference):
    def d(t):
        return orbit.u(t) - reference.u(t)

    def dp(t):
        return orbit.state(t)[..., 1] - reference.state(t)[..., 1]
    return d, dp


def count_zeros_diff(orbit, reference, samples: int = SAMPLES) -> OscillationReport:
    """Zeros of u - u* on [0, kT) with k the order of ``orbit``; u* is extended periodically."""
    d, dp = _difference(orbit, reference)
    t0 = orbit.trajectory.t0
    t1 = t0 + orbit.span
    ts = np.linspace(t0, t1, samples + 1)
    if float(np.max(np.abs(d(ts)))) < DEGENERATE_TOL:
        raise DegenerateDifference("orbit coincides with the reference")
    zeros, tangencies = zeros_of(d, t0, t1, samples)
    try:
        turns = winding_of(d, dp, t0, t1, samples)
    except OriginHit:
        turns = math.nan
    count = len(zeros)
    return OscillationReport(reference.class_id, count, turns,
                             count // 2 if count % 2 == 0 else None, zeros, tangencies)


def winding(orbit, reference, samples: int = SAMPLES) -> float:
    """Turns of (u - u*, u' - u*') over [0, kT]."""
    d, dp = _difference(orbit, reference)
    t0 = orbit.trajectory.t0
    return winding_of(d, dp, t0, t0 + orbit.span, samples)
