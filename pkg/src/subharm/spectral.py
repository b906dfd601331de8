"""Principal periodic eigenvalue of Hill's equation and weighted Dirichlet eigenvalues."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh

from .dynamics import IntegrationError, integrate_system
from .nonlinearity import Nonlinearity
from .weights import WeightSpec

HILL_TOL = 1e-12


class BracketFailure(RuntimeError):
    pass


@dataclass
class HillResult:
    lambda0: float
    bracket: tuple[float, float]
    discriminant_at_lambda0: float
    iterations: int


def _fundamental(coeff: Callable[[float], float], lam: float, T: float, tol: float,
                 tstops: Sequence[float] = ()):
    def rhs(t, y):
        a = lam + coeff(t)
        return [y[2], y[3], -a * y[0], -a * y[1]]

    traj = integrate_system(rhs, [1.0, 0.0, 0.0, 1.0], 0.0, T, tol, tstops=tstops,
                            escape=math.inf)
    return traj.states[-1]


def hill_discriminant(coeff: Callable[[float], float], lam: float, T: float,
                      tol: float = HILL_TOL, tstops: Sequence[float] = ()) -> float:
    """Trace of the monodromy matrix of v'' + (lam + coeff(t)) v = 0 over [0, T]."""
    try:
        x = _fundamental(coeff, lam, T, tol, tstops)
    except IntegrationError as exc:  # pragma: no cover - linear systems do not blow up
        raise IntegrationError(f"Hill integration failed at lambda = {lam}: {exc}") from exc
    return float(x[0] + x[3])


def _fd_spectrum(coeff, T: float, n: int = 600, count: int = 3) -> np.ndarray:
    """Lowest eigenvalues of the periodic finite-difference discretisation of -v'' - q v."""
    h = T / n
    ts = h * np.arange(n)
    qv = np.array([coeff(float(t)) for t in ts])
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, idx] = 2.0 / h ** 2 - qv
    A[idx, (idx + 1) % n] = -1.0 / h ** 2
    A[idx, (idx - 1) % n] = -1.0 / h ** 2
    return eigh(A, eigvals_only=True, subset_by_index=[0, count - 1])


def principal_eigenvalue(coeff: Callable[[float], float], T: float, *, qmin: Optional[float] = None,
                         qmax: Optional[float] = None, xtol: float = 1e-11, tol: float = HILL_TOL,
                         tstops: Sequence[float] = ()) -> HillResult:
    """Smallest lambda with hill_discriminant == 2.

    The left end starts at -max|q| - 1 (where lambda + q < 0, so the
    discriminant exceeds 2) and doubles leftwards if needed.  The right end is
    taken inside the first stability band, located with a finite-difference
    estimate of the two lowest periodic eigenvalues (the band can be very
    narrow when the coefficient has well-separated wells).  Bisection on the
    sign of D - 2 finishes the job.
    """
    if qmin is None or qmax is None:
        grid = np.linspace(0.0, T, 2001)
        vals = np.array([coeff(float(t)) for t in grid])
        qmin = float(vals.min()) if qmin is None else qmin
        qmax = float(vals.max()) if qmax is None else qmax

    def D(lam):
        return hill_discriminant(coeff, lam, T, tol, tstops)

    iterations = 0
    left = -max(abs(qmin), abs(qmax)) - 1.0
    d_left = D(left)
    while not d_left > 2.0:
        left = 2.0 * left - 1.0
        d_left = D(left)
        iterations += 1
        if left < -1e6:
            raise BracketFailure("no lambda with discriminant above 2 in [-1e6, 0]")

    est = _fd_spectrum(coeff, T, count=2)
    gap = max(est[1] - est[0], 1e-12)
    right = None
    # probe to the right of the estimate with steps shrinking towards the estimated band
    for frac in (0.25, 0.1, 0.5, 0.02, 0.9, 1e-3, 1e-5, 1e-7):
        cand = est[0] + frac * gap
        if cand <= left:
            continue
        iterations += 1
        if D(cand) < 2.0:
            right = cand
            break
    if right is None:
        # fall back to a scan up to the Sturm bound for the first antiperiodic eigenvalue
        hi = -qmin + (math.pi / T) ** 2 + 1.0
        for cand in np.linspace(left, hi, 401)[1:]:
            iterations += 1
            if D(cand) < 2.0:
                right = float(cand)
                break
    if right is None:
        raise BracketFailure("could not find lambda with discriminant below 2")
    # D > 2 on [left, lambda0) and D < 2 on (lambda0, right]
    lo, hi = left, right
    d_lo = D(lo)
    while hi - lo > xtol * max(1.0, abs(lo) + abs(hi)) / 2:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        iterations += 1
        if D(mid) > 2.0:
            lo = mid
        else:
            hi = mid
    lam0 = 0.5 * (lo + hi)
    return HillResult(float(lam0), (float(lo), float(hi)), D(lam0), iterations)


def dirichlet_eigenvalue_on(coeff: Callable[[float], float], lo: float, hi: float,
                            rtol: float = 1e-12, tol: float = HILL_TOL) -> float:
    """First eigenvalue of phi'' + lam coeff(t) phi = 0, phi(lo) = phi(hi) = 0, coeff >= 0.

    Uses the Sturm predicate "the shooting solution phi(lo)=0, phi'(lo)=1 has
    a zero in (lo, hi]", which is monotone in lam, so bisection cannot skip to a
    higher eigenvalue.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")

    def has_zero(lam):
        def rhs(t, y):
            return [y[1], -lam * coeff(t) * y[0]]
        traj = integrate_system(rhs, [0.0, 1.0], lo, hi, tol, escape=math.inf)
        u = traj.states[1:, 0]
        return bool(np.any(u <= 0.0))

    grid = np.linspace(lo, hi, 801)
    cmax = max(coeff(float(t)) for t in grid)
    if not cmax > 0:
        raise BracketFailure("coefficient is not positive on the interval")
    a = 0.99 * (math.pi / (hi - lo)) ** 2 / cmax
    while has_zero(a):
        a *= 0.5
        if a < 1e-300:
            raise BracketFailure("no lower bracket")
    b = 2.0 * a
    while not has_zero(b):
        b *= 2.0
        if b > 1e300:
            raise BracketFailure("no upper bracket")
    while b - a > rtol * b:
        mid = 0.5 * (a + b)
        if has_zero(mid):
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def dirichlet_eigenvalue(w: WeightSpec, hump_index: int, **kw) -> float:
    """First weighted Dirichlet eigenvalue on the positive hump number ``hump_index`` (1-based)."""
    humps = w.positive_humps()
    if not 1 <= hump_index <= len(humps):
        raise ValueError(f"hump_index must be in 1..{len(humps)}")
    h = humps[hump_index - 1]
    return dirichlet_eigenvalue_on(w.fn, h.lo, h.hi, **kw)


def dirichlet_eigenfunction(coeff: Callable[[float], float], lo: float, hi: float, lam: float,
                            tol: float = HILL_TOL):
    """Shooting solution with phi(lo) = 0, phi'(lo) = 1 at the given lam."""
    def rhs(t, y):
        return [y[1], -lam * coeff(t) * y[0]]
    return integrate_system(rhs, [0.0, 1.0], lo, hi, tol, escape=math.inf)


def linearization_coefficient(orbit, w: WeightSpec, n: Nonlinearity) -> Callable[[float], float]:
    """t -> q(t) g'(u(t)) along the orbit's dense output, extended periodically."""
    u = orbit.trajectory.scalar_component(0)
    t0, span = orbit.trajectory.t0, orbit.span
    q, dg = w.fn, n.evaluators[1]

    def coeff(t):
        return q(t) * dg(max(u(t0 + (t - t0) % span), 0.0))
    return coeff


def verify_morse(orbit, w: WeightSpec, n: Nonlinearity, **kw) -> tuple[float, bool]:
    """Principal periodic eigenvalue of v'' + (lam + q g'(u)) v = 0 along a T-periodic orbit.

    Returns (lambda0, lambda0 < 0).  A coefficient that vanishes identically
    gives (0.0, False) without solving.
    """
    T = w.period_T
    coeff = linearization_coefficient(orbit, w, n)
    grid = np.linspace(0.0, T, 2001)
    vals = np.array([coeff(float(t)) for t in grid])
    if not np.any(vals != 0.0):
        return 0.0, False
    res = principal_eigenvalue(coeff, T, qmin=float(vals.min()), qmax=float(vals.max()),
                               tstops=w.breakpoints_in(0.0, T), **kw)
    return res.lambda0, res.lambda0 < 0
