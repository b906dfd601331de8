"""Sign-changing periodic weights q(t) = a+(t) - mu a-(t) and their hump structure."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class NoSignChange(ValueError):
    """The weight does not change sign on one period."""


class DefiniteWeight(ValueError):
    """The negative part of the weight has zero integral."""


@dataclass(frozen=True)
class SignedInterval:
    lo: float
    hi: float
    sign: int
    index_i: int
    shift_ell: int = 0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def shifted(self, ell: int, period: float) -> "SignedInterval":
        """The translate I + ell*T (the J intervals used for kT-periodic problems)."""
        return SignedInterval(self.lo + ell * period, self.hi + ell * period,
                              self.sign, self.index_i, self.shift_ell + ell)

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class WeightSpec:
    """A T-periodic weight a(t) scaled on its negative part by ``mu``.

    ``kind`` is one of

    * ``"sin"``: a(t) = amp * sin(2 pi freq t / T), params ``(freq,)`` or ``(freq, amp)``;
    * ``"table"``: piecewise-linear interpolation of ``breakpoints`` ((t, a) pairs
      covering [0, T]; the last value should match the first);
    * ``"const"``: a(t) = params[0].  Never satisfies the hump hypothesis, used
      for linear test problems.
    """

    kind: str
    period_T: float
    mu: float = 1.0
    params: tuple = ()
    breakpoints: tuple = ()
    sign_tol: float = 1e-10

    def __post_init__(self):
        if not self.period_T > 0:
            raise ValueError("period_T must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.kind == "sin":
            if len(self.params) not in (1, 2):
                raise ValueError("sin weight takes params (freq,) or (freq, amp)")
        elif self.kind == "const":
            if len(self.params) != 1:
                raise ValueError("const weight takes a single value")
        elif self.kind == "table":
            bp = self.breakpoints
            if len(bp) < 2:
                raise ValueError("table weight needs at least two breakpoints")
            ts = [p[0] for p in bp]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("table breakpoints must be strictly increasing in t")
            if ts[0] > 0 or ts[-1] < self.period_T:
                raise ValueError("table breakpoints must cover [0, T]")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def sin(cls, freq: float, period: float, mu: float, amp: float = 1.0) -> "WeightSpec":
        return cls("sin", float(period), float(mu), (float(freq), float(amp)))

    @classmethod
    def table(cls, points: Sequence[tuple[float, float]], period: float, mu: float) -> "WeightSpec":
        bp = tuple((float(t), float(a)) for t, a in points)
        return cls("table", float(period), float(mu), breakpoints=bp)

    @classmethod
    def const(cls, value: float, period: float, mu: float = 1.0) -> "WeightSpec":
        return cls("const", float(period), float(mu), (float(value),))

    # evaluation ----------------------------------------------------------

    @cached_property
    def base_fn(self) -> Callable[[float], float]:
        """Scalar evaluator of a(t), with t reduced modulo T."""
        T = self.period_T
        if self.kind == "sin":
            freq = self.params[0]
            amp = self.params[1] if len(self.params) > 1 else 1.0
            omega = 2.0 * math.pi * freq / T

            def a(t, _s=math.sin):
                return amp * _s(omega * (t % T))
        elif self.kind == "const":
            c = self.params[0]

            def a(t):
                return c
        else:
            ts = [p[0] for p in self.breakpoints]
            vs = [p[1] for p in self.breakpoints]
            last = len(ts) - 1

            def a(t, _b=bisect.bisect_right):
                t = t % T
                j = _b(ts, t) - 1
                if j < 0:
                    return vs[0]
                if j >= last:
                    return vs[last]
                t0, t1 = ts[j], ts[j + 1]
                return vs[j] + (vs[j + 1] - vs[j]) * (t - t0) / (t1 - t0)
        return a

    @cached_property
    def fn(self) -> Callable[[float], float]:
        """Scalar evaluator of q(t) = a+(t) - mu a-(t)."""
        a = self.base_fn
        mu = self.mu

        def q(t):
            v = a(t)
            return v if v >= 0.0 else mu * v
        return q

    def base_values(self, t) -> np.ndarray:
        """Vectorised a(t)."""
        t = np.mod(np.asarray(t, dtype=float), self.period_T)
        if self.kind == "sin":
            amp = self.params[1] if len(self.params) > 1 else 1.0
            return amp * np.sin(2.0 * np.pi * self.params[0] / self.period_T * t)
        if self.kind == "const":
            return np.full_like(t, self.params[0])
        ts = np.array([p[0] for p in self.breakpoints])
        vs = np.array([p[1] for p in self.breakpoints])
        return np.interp(t, ts, vs)

    def values(self, t) -> np.ndarray:
        """Vectorised q(t)."""
        a = self.base_values(t)
        return np.where(a >= 0.0, a, self.mu * a)

    def __getstate__(self):
        # cached evaluators are closures; rebuild them after unpickling
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.fn(float(t))
        return self.values(t)

    @property
    def humps(self) -> list[SignedInterval]:
        return self._humps

    @cached_property
    def _humps(self) -> list[SignedInterval]:
        return decompose_humps(self, self.sign_tol)

    @property
    def m(self) -> int:
        """Number of positive humps per period."""
        return sum(1 for h in self.humps if h.sign > 0)

    def positive_humps(self) -> list[SignedInterval]:
        return [h for h in self.humps if h.sign > 0]

    def breakpoints_in(self, t0: float, t1: float) -> list[float]:
        """Hump boundaries (and table nodes) strictly inside (t0, t1)."""
        T = self.period_T
        try:
            base = [h.lo for h in self.humps] if self.kind != "const" else []
        except NoSignChange:
            base = []
        if self.kind == "table":
            base += [p[0] for p in self.breakpoints]
        out = set()
        for ell in range(math.floor(t0 / T) - 1, math.ceil(t1 / T) + 1):
            for b in base:
                s = b + ell * T
                if t0 < s < t1:
                    out.add(s)
        return sorted(out)


def eval_weight(w: WeightSpec, t: float) -> float:
    return w.fn(float(t))


def decompose_humps(w: WeightSpec, sign_tol: float = 1e-10, samples: int = 4096) -> list[SignedInterval]:
    """Split one period into alternating positive and negative humps.

    A point is on the negative side iff a(t) < -sign_tol.  Zero plateaus next
    to a negative stretch are absorbed into the neighbouring positive hump, so
    the weight is nonzero immediately outside every positive hump.  Boundaries
    are refined by bisection to ``sign_tol``.

    Humps are listed starting from the first positive hump at or after t = 0,
    so when a positive hump straddles t = 0 the window is [t_a, t_a + T] with
    t_a > 0.
    """
    a = w.base_fn
    T = w.period_T
    ts = np.linspace(0.0, T, samples, endpoint=False)
    if w.kind == "table":
        extra = np.array([p[0] for p in w.breakpoints if 0 <= p[0] < T])
        mids = []
        for (t0, v0), (t1, v1) in zip(w.breakpoints, w.breakpoints[1:]):
            if v0 * v1 < 0:
                mids.append(t0 + (t1 - t0) * v0 / (v0 - v1))
        ts = np.unique(np.concatenate([ts, extra, np.array(mids)]) % T)
    vals = np.array([a(float(t)) for t in ts])
    neg = vals < -sign_tol
    pos = vals > sign_tol
    if not neg.any() or not pos.any():
        raise NoSignChange("weight has a single sign on [0, T]; hypothesis (q_*) fails")

    # circular runs of the "negative" predicate
    n = len(ts)
    runs = []  # (start_index, end_index_inclusive, is_negative) in circular order
    start = int(np.argmax(neg != np.roll(neg, 1)))  # first index where the predicate changes
    i = start
    while True:
        j = i
        while neg[(j + 1) % n] == neg[i] and (j + 1) % n != start:
            j += 1
        runs.append((i % n, j % n, bool(neg[i % n])))
        i = (j + 1) % n
        if i == start:
            break

    # non-negative runs without any strictly positive sample merge into the negative side
    def run_has_pos(r):
        i0, i1, _ = r
        idx = range(i0, i1 + 1) if i1 >= i0 else list(range(i0, n)) + list(range(0, i1 + 1))
        return any(pos[k] for k in idx)

    merged: list[list] = []
    for r in runs:
        is_neg = r[2] or not run_has_pos(r)
        if merged and merged[-1][2] == is_neg:
            merged[-1][1] = r[1]
        else:
            merged.append([r[0], r[1], is_neg])
    if len(merged) > 1 and merged[0][2] == merged[-1][2]:
        merged[0][0] = merged[-1][0]
        merged.pop()

    def boundary(i_before: int) -> float:
        """Locate where a(t) changes sign between sample i_before and its successor."""
        lo = float(ts[i_before])
        hi = float(ts[(i_before + 1) % n])
        if hi <= lo:
            hi += T
        left = a(lo) < 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            if (a(mid) < 0.0) == left:
                lo = mid
            else:
                hi = mid
        return hi

    # starts of each run (in circular order)
    starts = [boundary((r[0] - 1) % n) for r in merged]
    signs = [-1 if r[2] else 1 for r in merged]
    # anchor the window at the first positive run at or after 0
    pos_idx = [k for k, s in enumerate(signs) if s > 0]

    def norm(t):
        t = t % T
        if t < sign_tol or T - t < sign_tol:
            return 0.0
        return t

    starts = [norm(s) for s in starts]
    first = min(pos_idx, key=lambda k: starts[k])
    order = [(first + j) % len(merged) for j in range(len(merged))]
    t_a = starts[first]
    out = []
    counters = {1: 0, -1: 0}
    for pos_in_order, k in enumerate(order):
        lo = starts[k]
        nxt = order[(pos_in_order + 1) % len(order)]
        hi = starts[nxt]
        if lo < t_a:
            lo += T
        while hi <= lo:
            hi += T
        counters[signs[k]] += 1
        out.append(SignedInterval(lo, hi, signs[k], counters[signs[k]]))
    # close the window exactly
    last = out[-1]
    out[-1] = SignedInterval(last.lo, t_a + T, last.sign, last.index_i)
    return out


def _segments(w: WeightSpec, t0: float, t1: float) -> list[tuple[float, float]]:
    pts = [t0] + w.breakpoints_in(t0, t1) + [t1]
    return list(zip(pts, pts[1:]))


def _table_integrals(w: WeightSpec) -> tuple[float, float]:
    """Exact integrals of a+ and a- over one period for a piecewise-linear table."""
    T = w.period_T
    ts = np.array([p[0] for p in w.breakpoints])
    vs = np.array([p[1] for p in w.breakpoints])
    inner = (ts > 0) & (ts < T)
    knots = np.concatenate([[0.0], ts[inner], [T]])
    vals = np.interp(knots, ts, vs)
    plus = minus = 0.0
    for ta, tb, va, vb in zip(knots, knots[1:], vals, vals[1:]):
        h = tb - ta
        if va >= 0 and vb >= 0:
            plus += 0.5 * h * (va + vb)
        elif va <= 0 and vb <= 0:
            minus -= 0.5 * h * (va + vb)
        else:
            tz = h * va / (va - vb)
            if va > 0:
                plus += 0.5 * tz * va
                minus -= 0.5 * (h - tz) * vb
            else:
                minus -= 0.5 * tz * va
                plus += 0.5 * (h - tz) * vb
    return float(plus), float(minus)


def _parts_one_period(w: WeightSpec) -> tuple[float, float]:
    if w.kind == "table":
        return _table_integrals(w)
    if w.kind == "const":
        c = w.params[0]
        return max(c, 0.0) * w.period_T, max(-c, 0.0) * w.period_T
    a = w.base_fn
    plus = minus = 0.0
    for lo, hi in _segments(w, 0.0, w.period_T):
        val, _ = integrate.quad(a, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        if val >= 0:
            plus += val
        else:
            minus -= val
    return plus, minus


def mean_value(w: WeightSpec, k: int = 1) -> float:
    """Integral of q over [0, kT]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if w.kind in ("table", "const"):
        plus, minus = _parts_one_period(w)
        return k * (plus - w.mu * minus)
    q = w.fn
    total = 0.0
    for lo, hi in _segments(w, 0.0, k * w.period_T):
        val, _ = integrate.quad(q, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
    return total


def mu_sharp(w: WeightSpec) -> float:
    """Ratio of the positive to the negative area of a over one period."""
    plus, minus = _parts_one_period(w)
    if minus <= 0:
        raise DefiniteWeight("the negative part of the weight vanishes")
    return plus / minus
