"""Dormand-Prince 5(4) integration with dense output, blow-up detection and Poincare maps.

The stepper works on plain Python lists: the systems here have 2 to 6
components, where numpy's per-call overhead dominates the arithmetic.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .nonlinearity import ExtendedField

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# Hairer's continuous extension (dopri5 contd5)
D1, D3, D4, D5 = -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072, 701980252875 / 199316789632
D6, D7 = -1453857185 / 822651844, 69997945 / 29380423

ESCAPE = 1e8


class IntegrationError(RuntimeError):
    pass


class BlowUp(IntegrationError):
    """The state left the escape ball; ``t`` is the last time with a valid state."""

    def __init__(self, t: float, trajectory: Optional["Trajectory"] = None):
        super().__init__(f"solution escaped to infinity near t = {t:.12g}")
        self.t = t
        self.trajectory = trajectory


class StepUnderflow(IntegrationError):
    def __init__(self, t: float, h: float):
        super().__init__(f"step size collapsed to {h:.3g} at t = {t:.12g}")
        self.t = t
        self.h = h


@dataclass
class Trajectory:
    """Accepted nodes plus per-step dense-output coefficients.

    ``dense[j]`` holds the five quartic-interpolant coefficient vectors of the
    step [times[j], times[j+1]].
    """

    times: np.ndarray
    states: np.ndarray
    dense: np.ndarray
    blow_up: Optional[float] = None

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __call__(self, t):
        """Dense evaluation at scalar or array t (clipped to the covered interval)."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if len(self.times) == 1:
            out = np.repeat(self.states[:1], len(t), axis=0)
            return out[0] if scalar else out
        nsteps = len(self.times) - 1
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, nsteps - 1)
        t_lo = self.times[idx]
        h = self.times[idx + 1] - t_lo
        th = ((t - t_lo) / h)[:, None]
        th1 = 1.0 - th
        r = self.dense[idx]
        out = r[:, 0] + th * (r[:, 1] + th1 * (r[:, 2] + th * (r[:, 3] + th1 * r[:, 4])))
        # nodes are returned verbatim
        j = np.searchsorted(self.times, t, side="left")
        hit = (j < len(self.times)) & (self.times[np.minimum(j, len(self.times) - 1)] == t)
        if hit.any():
            out[hit] = self.states[j[hit]]
        return out[0] if scalar else out

    def u(self, t):
        v = self(t)
        return v[..., 0]

    def scalar_component(self, i: int = 0) -> Callable[[float], float]:
        """Fast pure-Python evaluator of one component, for use inside integrators."""
        times = self.times.tolist()
        coeffs = self.dense[:, :, i].tolist()
        nsteps = len(times) - 1
        if nsteps < 1:
            v = float(self.states[0, i])
            return lambda t: v

        def ev(t):
            j = min(max(bisect.bisect_right(times, t) - 1, 0), nsteps - 1)
            c0, c1, c2, c3, c4 = coeffs[j]
            th = (t - times[j]) / (times[j + 1] - times[j])
            th1 = 1.0 - th
            return c0 + th * (c1 + th1 * (c2 + th * (c3 + th1 * c4)))
        return ev

    def sample(self, stride: float) -> tuple[np.ndarray, np.ndarray]:
        """Times t0, t0 + stride, ... up to t1 and the states there."""
        n = int(math.floor((self.t1 - self.t0) / stride + 1e-9)) + 1
        ts = self.t0 + stride * np.arange(n)
        return ts, self(ts)

    def to_csv(self, path, stride: float) -> None:
        ts, ys = self.sample(stride)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "u", "up"])
            for t, y in zip(ts, ys):
                w.writerow([f"{t:.12g}", f"{y[0]:.12g}", f"{y[1]:.12g}"])


def _det2(M) -> float:
    return float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


@dataclass
class MonodromyData:
    """Jacobian M of the period map, optionally with the determinants of its factors.

    For strongly expansive maps M[0,0] M[1,1] and M[0,1] M[1,0] nearly cancel,
    so det is taken as the product of the factor determinants when available.
    """

    M: np.ndarray
    factor_dets: tuple = ()

    @property
    def trace(self) -> float:
        return float(self.M[0, 0] + self.M[1, 1])

    @property
    def det(self) -> float:
        if self.factor_dets:
            return float(math.prod(self.factor_dets))
        return _det2(self.M)


def _initial_step(rhs, t0, y0, f0, direction_span, tol):
    n = len(y0)
    d0 = max(abs(y) / (tol * (1 + abs(y))) for y in y0)
    d1 = max(abs(f) / (tol * (1 + abs(y))) for f, y in zip(f0, y0))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = [y0[i] + h0 * f0[i] for i in range(n)]
    f1 = rhs(t0 + h0, y1)
    d2 = max(abs(a - b) / (tol * (1 + abs(y))) for a, b, y in zip(f1, f0, y0)) / h0
    dm = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dm <= 1e-15 else (0.01 / dm) ** 0.2
    return min(100 * h0, h1, direction_span)


def _crossing(coeffs, level: float) -> float:
    """Fraction of the step at which the first component of the interpolant hits ``level``."""
    c0, c1, c2, c3, c4 = (c[0] for c in coeffs)

    def fn(th):
        th1 = 1.0 - th
        return c0 + th * (c1 + th1 * (c2 + th * (c3 + th1 * c4))) - level

    lo, hi = 0.0, 1.0
    neg_lo = fn(lo) < 0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if (fn(mid) < 0) == neg_lo:
            lo = mid
        else:
            hi = mid
    return hi


def integrate_system(rhs: Callable[[float, list], list], y0: Sequence[float], t0: float, t1: float,
                     tol: float = 1e-10, *, junctions: Sequence[float] = (),
                     tstops: Sequence[float] = (), escape: float = ESCAPE, escape_dims: int = 2,
                     max_steps: int = 2_000_000) -> Trajectory:
    """Integrate y' = rhs(t, y) on [t0, t1] with a Dormand-Prince 5(4) pair.

    Per-step local error is kept below ``tol * (1 + |y_i|)`` componentwise.
    Steps land exactly on ``tstops``; a step across a value in ``junctions``
    (of the first component) is shortened to end at the crossing.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    y = [float(v) for v in y0]
    n = len(y)
    times = [float(t0)]
    states = [list(y)]
    dense: list = []
    if t1 == t0:
        return Trajectory(np.array(times), np.array(states), np.zeros((0, 5, n)))

    span = t1 - t0
    hmin = 1e-14 * span
    stops = sorted(s for s in tstops if t0 < s < t1) + [t1]
    stop_i = 0
    t = float(t0)
    k1 = rhs(t, y)
    h = _initial_step(rhs, t, y, k1, span, tol)
    skip_junction = landing = None
    steps = 0

    def _fail_blowup(t_valid):
        return BlowUp(t_valid, Trajectory(np.array(times), np.array(states),
                                          np.array(dense).reshape(-1, 5, n), blow_up=t_valid))

    while t < t1:
        if steps >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps")
        target = stops[stop_i]
        last = False
        h_free = h
        if t + h >= target or target - (t + h) < 1e-12 * span:
            h = target - t
            last = True
        if h < hmin and not last:
            raise StepUnderflow(t, h)
        y2 = [y[i] + h * A21 * k1[i] for i in range(n)]
        k2 = rhs(t + C2 * h, y2)
        y3 = [y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n)]
        k3 = rhs(t + C3 * h, y3)
        y4 = [y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n)]
        k4 = rhs(t + C4 * h, y4)
        y5 = [y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]) for i in range(n)]
        k5 = rhs(t + C5 * h, y5)
        y6 = [y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]) for i in range(n)]
        t_new = target if last else t + h
        k6 = rhs(t + h, y6)
        yn = [y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]) for i in range(n)]
        k7 = rhs(t_new, yn)
        err_vec = [h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]) for i in range(n)]
        try:
            err = max(abs(err_vec[i]) / (tol * (1.0 + max(abs(y[i]), abs(yn[i])))) for i in range(n))
        except OverflowError:
            err = math.inf
        if not math.isfinite(err):
            if max(abs(v) for v in y[:escape_dims]) > escape / 1e3:
                raise _fail_blowup(t)
            h *= 0.2
            if h < hmin:
                raise StepUnderflow(t, h)
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                if max(abs(v) for v in y[:escape_dims]) > escape / 1e3:
                    raise _fail_blowup(t)
                raise StepUnderflow(t, h)
            continue

        ydiff = [yn[i] - y[i] for i in range(n)]
        bspl = [h * k1[i] - ydiff[i] for i in range(n)]
        coeffs = [y, ydiff, bspl,
                  [ydiff[i] - h * k7[i] - bspl[i] for i in range(n)],
                  [h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]) for i in range(n)]]

        # junction crossing: shorten the step so that it ends at the crossing
        shortened = False
        for J in junctions:
            if J == skip_junction or (y[0] - J) * (yn[0] - J) >= 0.0:
                continue
            th = _crossing(coeffs, J)
            if landing == J and th > 0.999:
                break
            if th * h > hmin:
                h *= th
                landing = J
                shortened = True
            break
        if shortened:
            continue

        t_old = t
        t = t_new
        y = yn
        k1 = k7
        steps += 1
        times.append(t)
        states.append(list(y))
        dense.append(coeffs)
        if last:
            stop_i += 1
        skip_junction, landing = landing, None
        if max(abs(v) for v in y[:escape_dims]) > escape:
            times.pop()
            states.pop()
            dense.pop()
            raise _fail_blowup(t_old)
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h_next = h * fac
        if last:
            # a step clamped onto a stop says little about the natural step size
            h_next = max(h_next, h_free)
        h = h_next

    return Trajectory(np.array(times), np.array(states), np.array(dense))


def integrate(F: ExtendedField, y0: Sequence[float], t0: float, t1: float, tol: float = 1e-10,
              *, escape: float = ESCAPE) -> Trajectory:
    """Trajectory of the planar field F from y0 on [t0, t1]."""
    return integrate_system(F.rhs, y0, t0, t1, tol, junctions=F.junctions,
                            tstops=F.weight.breakpoints_in(t0, t1), escape=escape)


def integrate_variational(F: ExtendedField, y0: Sequence[float], t0: float, t1: float,
                          tol: float = 1e-10, *, escape: float = ESCAPE) -> Trajectory:
    """Trajectory of the 6-dimensional system (u, u', X) with X(t0) = I."""
    y = [float(y0[0]), float(y0[1]), 1.0, 0.0, 0.0, 1.0]
    return integrate_system(F.rhs_variational, y, t0, t1, tol, junctions=F.junctions,
                            tstops=F.weight.breakpoints_in(t0, t1), escape=escape)


def _concatenate(pieces: list[Trajectory]) -> Trajectory:
    if len(pieces) == 1:
        return pieces[0]
    times = np.concatenate([p.times[:-1] for p in pieces] + [pieces[-1].times[-1:]])
    states = np.concatenate([p.states[:-1] for p in pieces] + [pieces[-1].states[-1:]])
    dense = np.concatenate([p.dense for p in pieces if len(p.dense)])
    return Trajectory(times, states, dense)


def poincare_map(F: ExtendedField, y0: Sequence[float], k: int = 1, tol: float = 1e-10,
                 t0: float = 0.0, *, return_trajectory: bool = False):
    """y(t0 + kT) and the Jacobian of y0 -> y(t0 + kT).

    The variational system restarts from X = I at every weight breakpoint and
    the Jacobian is the product of the segment factors.  In the returned
    trajectory the X columns therefore hold the within-segment Jacobians.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t1 = t0 + k * F.period_T
    cuts = [t0, *(s for s in F.weight.breakpoints_in(t0, t1) if t0 < s < t1), t1]
    y = (float(y0[0]), float(y0[1]))
    M = np.eye(2)
    dets, pieces = [], []
    for a, b in zip(cuts, cuts[1:]):
        traj = integrate_variational(F, y, a, b, tol)
        end = traj.states[-1]
        Mi = np.array([[end[2], end[3]], [end[4], end[5]]])
        M = Mi @ M
        dets.append(_det2(Mi))
        pieces.append(traj)
        y = (float(end[0]), float(end[1]))
    mono = MonodromyData(M, tuple(dets))
    if return_trajectory:
        return y, mono, _concatenate(pieces)
    return y, mono
