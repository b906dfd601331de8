"""Nonlinearities g(s) on s >= 0, hypothesis checks, and the extended fields f and h."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .weights import WeightSpec


class BadParams(ValueError):
    pass


KINDS = ("power", "polymix", "atan", "table")


@dataclass(frozen=True)
class Nonlinearity:
    """g with closed-form first and second derivatives on s >= 0.

    * ``power``: g = s**p, params ``(p,)``
    * ``polymix``: g = c0 s**2 + c1 s**3 + ..., params ``(c0, c1, ...)``
    * ``atan``: g = scale * s * arctan(s), params ``(scale,)``
    * ``table``: piecewise-linear through (s, g) pairs, params flattened
      ``(s0, g0, s1, g1, ...)`` with s0 = 0, extended linearly past the last node

    Use :func:`make_nonlinearity` for validated construction; the bare
    constructor is handy for linear test fields such as power with p = 1.
    """

    kind: str
    params: tuple

    @cached_property
    def evaluators(self) -> tuple[Callable, Callable, Callable]:
        k, pr = self.kind, self.params
        if k == "power":
            p = pr[0]

            def g(s):
                return s ** p

            def dg(s):
                if s == 0.0:
                    return 0.0 if p > 1 else (1.0 if p == 1 else math.inf)
                return p * s ** (p - 1)

            def d2g(s):
                if s == 0.0:
                    if p == 2 or p == 1:
                        return p * (p - 1)
                    return 0.0 if p > 2 else math.inf
                return p * (p - 1) * s ** (p - 2)
        elif k == "polymix":
            cs = tuple(pr)

            def g(s):
                acc = 0.0
                for c in reversed(cs):
                    acc = acc * s + c
                return acc * s * s

            def dg(s):
                return sum((j + 2) * c * s ** (j + 1) for j, c in enumerate(cs))

            def d2g(s):
                return sum((j + 2) * (j + 1) * c * s ** j for j, c in enumerate(cs))
        elif k == "atan":
            scale = pr[0]

            def g(s):
                return scale * s * math.atan(s)

            def dg(s):
                return scale * (math.atan(s) + s / (1.0 + s * s))

            def d2g(s):
                return 2.0 * scale / (1.0 + s * s) ** 2
        elif k == "table":
            ss = list(pr[0::2])
            gs = list(pr[1::2])
            slopes = [(g1 - g0) / (s1 - s0) for s0, s1, g0, g1 in zip(ss, ss[1:], gs, gs[1:])]
            last = len(slopes) - 1

            def _seg(s):
                return min(max(bisect.bisect_right(ss, s) - 1, 0), last)

            def g(s):
                j = _seg(s)
                return gs[j] + slopes[j] * (s - ss[j])

            def dg(s):
                return slopes[_seg(s)]

            def d2g(s):
                return 0.0
        else:
            raise BadParams(f"unknown nonlinearity kind {k!r}")
        return g, dg, d2g

    @cached_property
    def vectorized(self) -> tuple[Callable, Callable]:
        """numpy versions of (g, g') for arrays of s >= 0."""
        k, pr = self.kind, self.params
        if k == "power":
            p = pr[0]
            return (lambda s: np.power(s, p),
                    lambda s: p * np.power(s, p - 1) if p != 1 else np.ones_like(s))
        if k == "polymix":
            cs = np.array(pr)
            return (lambda s: sum(c * s ** (j + 2) for j, c in enumerate(cs)),
                    lambda s: sum((j + 2) * c * s ** (j + 1) for j, c in enumerate(cs)))
        if k == "atan":
            sc = pr[0]
            return (lambda s: sc * s * np.arctan(s),
                    lambda s: sc * (np.arctan(s) + s / (1.0 + s * s)))
        g, dg, _ = self.evaluators
        return np.vectorize(g, otypes=[float]), np.vectorize(dg, otypes=[float])

    def __getstate__(self):
        # cached evaluators are closures; rebuild them after unpickling
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def g(self, s: float) -> float:
        return self.evaluators[0](s)

    def dg(self, s: float) -> float:
        return self.evaluators[1](s)

    def d2g(self, s: float) -> float:
        return self.evaluators[2](s)


def make_nonlinearity(kind: str, params: Sequence[float]) -> Nonlinearity:
    params = tuple(float(p) for p in params)
    if kind == "power":
        if len(params) != 1 or not params[0] > 1:
            raise BadParams("power needs a single exponent p > 1")
    elif kind == "polymix":
        if not params or any(c < 0 for c in params) or not any(c > 0 for c in params):
            raise BadParams("polymix needs nonnegative coefficients, at least one positive")
    elif kind == "atan":
        if len(params) != 1 or not params[0] > 0:
            raise BadParams("atan needs a positive scale")
    elif kind == "table":
        if len(params) < 4 or len(params) % 2:
            raise BadParams("table needs at least two (s, g) pairs")
        ss, gs = params[0::2], params[1::2]
        if ss[0] != 0 or gs[0] != 0:
            raise BadParams("table must start at (0, 0)")
        if any(b <= a for a, b in zip(ss, ss[1:])):
            raise BadParams("table abscissae must increase")
        if any(v <= 0 for v in gs[1:]):
            raise BadParams("table values must be positive for s > 0")
    else:
        raise BadParams(f"unknown nonlinearity kind {kind!r}")
    return Nonlinearity(kind, params)


@dataclass
class HypothesisReport:
    positivity: bool
    g0_zero: bool
    flat_at_zero: bool
    fd_slope_at_zero: float
    convex: bool
    superlinear_at_infinity: bool
    liminf_proxy: float
    growth_exponent: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_hypotheses(n: Nonlinearity, lo: float = 1e-8, hi: float = 1e4, num: int = 241,
                     fd_step: float = 1e-10) -> HypothesisReport:
    """Sampled checks of g(0)=0, g>0, g'(0)=0, g''>0 and growth of g(s)/s.

    ``liminf_proxy`` is min g(s)/s over the top decade of the grid; compare it
    with the weighted Dirichlet eigenvalues of the positive humps.
    """
    g, dg, d2g = n.evaluators
    grid = np.geomspace(lo, hi, num)
    gv = np.array([g(float(s)) for s in grid])
    slope0 = (g(fd_step) - g(0.0)) / fd_step
    ratio = gv / grid
    top = grid >= hi / 10
    # log-log slope of g(s)/s over the top two decades
    sel = grid >= hi / 100
    expo = float(np.polyfit(np.log(grid[sel]), np.log(ratio[sel]), 1)[0])
    return HypothesisReport(
        positivity=bool(np.all(gv > 0)),
        g0_zero=g(0.0) == 0.0,
        flat_at_zero=abs(slope0) < 1e-6,
        fd_slope_at_zero=float(slope0),
        convex=bool(all(d2g(float(s)) > 0 for s in grid)),
        superlinear_at_infinity=expo > 0.05,
        liminf_proxy=float(ratio[top].min()),
        growth_exponent=expo,
    )


@dataclass(frozen=True)
class ExtendedField:
    """The planar field of u'' + c u' + phi(t, u) = 0.

    ``extension`` picks phi:

    * ``"f"``: q(t) g(s) for s >= 0 and -s for s < 0,
    * ``"h"``: 0 for s < 0, q g(s) on [0, R], q (g(R) + g'(R)(s - R)) beyond R,
    * ``"odd"``: q(t) sign(s) g(|s|), a smooth test field (q = 1, g = s gives
      the harmonic oscillator).

    ``extension`` defaults to "h" when ``truncation_R`` is set and "f" otherwise.
    """

    base: Nonlinearity
    weight: WeightSpec
    truncation_R: Optional[float] = None
    friction_c: float = 0.0
    extension: str = ""

    def __post_init__(self):
        if not self.extension:
            object.__setattr__(self, "extension", "f" if self.truncation_R is None else "h")
        if self.extension not in ("f", "h", "odd"):
            raise ValueError(f"unknown extension {self.extension!r}")
        if self.extension == "h" and not (self.truncation_R and self.truncation_R > 0):
            raise ValueError("h-extension needs a positive truncation_R")

    @property
    def period_T(self) -> float:
        return self.weight.period_T

    @property
    def junctions(self) -> tuple[float, ...]:
        """Values of s where phi is only piecewise smooth."""
        if self.extension == "f":
            return (0.0,)
        if self.extension == "h":
            return (0.0, float(self.truncation_R))
        return ()

    @cached_property
    def phi(self) -> Callable[[float, float], float]:
        q = self.weight.fn
        g, dg, _ = self.base.evaluators
        ext = self.extension
        if ext == "f":
            def phi(t, s):
                return -s if s <= 0.0 else q(t) * g(s)
        elif ext == "h":
            R = float(self.truncation_R)
            gR, dgR = g(R), dg(R)

            def phi(t, s):
                if s < 0.0:
                    return 0.0
                if s <= R:
                    return q(t) * g(s)
                return q(t) * (gR + dgR * (s - R))
        else:
            def phi(t, s):
                if s >= 0.0:
                    return q(t) * g(s)
                return -q(t) * g(-s)
        return phi

    @cached_property
    def dphi(self) -> Callable[[float, float], float]:
        """Partial derivative of phi in s, right limit at the junction s = 0."""
        q = self.weight.fn
        _, dg, _ = self.base.evaluators
        ext = self.extension
        if ext == "f":
            def dphi(t, s):
                return -1.0 if s < 0.0 else q(t) * dg(s)
        elif ext == "h":
            R = float(self.truncation_R)
            dgR = dg(R)

            def dphi(t, s):
                if s < 0.0:
                    return 0.0
                return q(t) * (dg(s) if s <= R else dgR)
        else:
            def dphi(t, s):
                return q(t) * dg(abs(s))
        return dphi

    @cached_property
    def rhs(self) -> Callable[[float, list], list]:
        """First-order system for (u, u')."""
        phi = self.phi
        c = self.friction_c
        if c == 0.0:
            def rhs(t, y):
                return [y[1], -phi(t, y[0])]
        else:
            def rhs(t, y):
                return [y[1], -c * y[1] - phi(t, y[0])]
        return rhs

    @cached_property
    def rhs_variational(self) -> Callable[[float, list], list]:
        """(u, u', X11, X12, X21, X22) with X' = [[0, 1], [-dphi, -c]] X."""
        phi, dphi = self.phi, self.dphi
        c = self.friction_c

        def rhs(t, y):
            u, v, x11, x12, x21, x22 = y
            a = dphi(t, u)
            return [v, -c * v - phi(t, u), x21, x22, -a * x11 - c * x21, -a * x12 - c * x22]
        return rhs


def field_eval(F: ExtendedField, t: float, s: float, sp: float) -> tuple[float, float]:
    du, dv = F.rhs(float(t), [float(s), float(sp)])
    return du, dv
