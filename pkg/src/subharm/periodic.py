"""Periodic orbits by Newton shooting, hump-string classification and periodicity classes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_bvp
from scipy.optimize import minimize_scalar

from .combinatorics import block_rotations, divisors
from .dynamics import (BlowUp, IntegrationError, Trajectory, integrate, poincare_map)
from .nonlinearity import ExtendedField, Nonlinearity
from .weights import NoSignChange, WeightSpec, mean_value

INTEGRATION_TOL = 1e-10
NEWTON_TOL = 1e-9
DEDUP_TOL = 1e-6
BAND_DELTA = 0.05
SINGULAR_DET = 1e-12
MAX_HALVINGS = 20


class SingularJacobian(ArithmeticError):
    pass


class NoConvergence(RuntimeError):
    pass


class AmbiguousClassification(ValueError):
    pass


class ExceedsR(ValueError):
    pass


class WeightConditionFailed(ValueError):
    """The weight is not sign-changing with negative mean value."""


@dataclass(frozen=True, order=True)
class HumpString:
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("hump string bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "HumpString":
        return cls(tuple(int(c) for c in text.strip().strip("()").replace(",", "").replace(" ", "")))

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def is_zero(self) -> bool:
        return not any(self.bits)

    def shifted(self, ell: int, m: int) -> "HumpString":
        """String of t -> u(t + ell T) when self is the string of u."""
        j = (ell * m) % len(self.bits) if self.bits else 0
        return HumpString(self.bits[j:] + self.bits[:j])

    def canonical(self, m: int) -> "HumpString":
        return HumpString(min(block_rotations(self.bits, m)))


class Seed(tuple):
    """An initial state (u(0), u'(0)), optionally with the glued profile it came from."""

    def __new__(cls, y0, profile=None, amp: float = 1.0, eps: float = 0.0, kind: str = "grid"):
        obj = super().__new__(cls, (float(y0[0]), float(y0[1])))
        obj.profile = profile
        obj.amp = amp
        obj.eps = eps
        obj.kind = kind
        return obj

    def __reduce__(self):
        return (Seed, (tuple(self), self.profile, self.amp, self.eps, self.kind))


@dataclass
class PeriodicOrbit:
    y0: tuple
    order_k: int
    residual: float
    trajectory: Trajectory
    string: Optional[HumpString] = None
    minimal: bool = True
    class_id: int = -1
    max_per_hump: list = field(default_factory=list)
    iterations: int = 0
    necessary_residuals: Optional[tuple] = None
    lambda0: Optional[float] = None
    morse_negative: Optional[bool] = None
    field_kind: str = "f"

    @property
    def span(self) -> float:
        return self.trajectory.t1 - self.trajectory.t0

    def u(self, t):
        """u at arbitrary times, extended periodically from [0, kT]."""
        tr = self.trajectory
        return tr.u(tr.t0 + np.mod(np.asarray(t, dtype=float) - tr.t0, self.span))

    def state(self, t):
        tr = self.trajectory
        return tr(tr.t0 + np.mod(np.asarray(t, dtype=float) - tr.t0, self.span))


# ---------------------------------------------------------------- seeds

_BUMP_CACHE: dict = {}


def _bump_on(F: ExtendedField, lo: float, hi: float, tol: float = 1e-10) -> Trajectory:
    """Positive solution of the Dirichlet problem on a positive hump, by shooting on u'(lo)."""

    def reaches_zero(s):
        try:
            tr = integrate(F, (0.0, s), lo, hi, 1e-9)
        except IntegrationError:
            return True
        return bool((tr.states[1:, 0] <= 0.0).any())

    a, b = 1e-6, 1.0
    while not reaches_zero(b):
        b *= 2.0
        if b > 1e12:
            break
    while reaches_zero(a) and a > 1e-300:
        a *= 0.5
    for _ in range(60):
        mid = 0.5 * (a + b)
        if reaches_zero(mid):
            b = mid
        else:
            a = mid
    return integrate(F, (0.0, a), lo, hi, tol)


def hump_bumps(w: WeightSpec, n: Nonlinearity) -> list[Trajectory]:
    """Dirichlet bump of each positive hump, in hump order (cached)."""
    key = (w, n)
    if key not in _BUMP_CACHE:
        F = ExtendedField(n, w)
        _BUMP_CACHE[key] = [_bump_on(F, h.lo, h.hi) for h in w.positive_humps()]
    return _BUMP_CACHE[key]


def _glued_profile(w: WeightSpec, bumps, k: int, bits, amp: float, eps: float, nodes: int = 60):
    T = w.period_T
    scale_max = max(float(b.states[:, 0].max()) for b in bumps)
    floor = 2e-4 * scale_max
    ts, us, vs = [], [], []
    for ell in range(k):
        for hmp in w.humps:
            tt = np.linspace(hmp.lo, hmp.hi, nodes)
            if hmp.sign > 0:
                j = hmp.index_i - 1
                y = bumps[j](tt)
                s = amp * (1.0 if bits[ell * w.m + j] else eps)
                uu, vv = s * y[:, 0], s * y[:, 1]
            else:
                uu, vv = np.zeros_like(tt), np.zeros_like(tt)
            ts.append(tt[:-1] + ell * T)
            us.append(uu[:-1])
            vs.append(vv[:-1])
    ts = np.concatenate(ts + [[ts[0][0] + k * T]])
    us = np.maximum(np.concatenate(us + [[us[0][0]]]), floor)
    vs = np.concatenate(vs + [[vs[0][0]]])
    return ts, np.vstack([us, vs])


def seed_guesses(w: WeightSpec, n: Nonlinearity, k: int, S, *,
                 amplitudes: Sequence[float] = (1.0, 0.8, 1.2),
                 epsilons: Sequence[float] = (0.05, 0.005, 0.1, 0.02, 0.2),
                 grid: tuple[int, int] = (4, 3)) -> list[Seed]:
    """Initial states aimed at the orbit with hump string S.

    Bit-1 humps carry the Dirichlet bump scaled by A, bit-0 humps by eps*A,
    negative humps a small floor.  Each profile is kept on the seed for
    collocation refinement; its value at t = 0 is the seed itself.  All-ones
    strings also get near-constant states (A, 0), and a coarse grid in
    (u(0), u'(0)) closes the list.
    """
    bits = S.bits if isinstance(S, HumpString) else tuple(S)
    if len(bits) != k * w.m:
        raise ValueError(f"string length {len(bits)} != k*m = {k * w.m}")
    if not any(bits):
        raise ValueError("string must be nonzero")
    bumps = hump_bumps(w, n)
    T = w.period_T
    seeds: list[Seed] = []
    for amp in amplitudes:
        for eps in epsilons:
            ts, ys = _glued_profile(w, bumps, k, bits, amp, eps)
            # value at t = 0, i.e. at k T on the window [t_a, t_a + kT]
            t0 = k * T if ts[0] > 0 else 0.0
            y0 = (np.interp(t0, ts, ys[0]), np.interp(t0, ts, ys[1]))
            seeds.append(Seed(y0, (ts, ys), amp, eps, "profile"))
    umax = max(float(b.states[:, 0].max()) for b in bumps)
    vmax = max(float(np.abs(b.states[:, 1]).max()) for b in bumps)
    if all(bits):
        for amp in (0.5, 1.0):
            seeds.append(Seed((amp * umax, 0.0), None, amp, 0.0, "constant"))
    nu, nv = grid
    for u0 in np.geomspace(0.02 * umax, 1.2 * umax, nu):
        for v0 in np.linspace(-vmax, vmax, nv):
            seeds.append(Seed((u0, v0), None, 0.0, 0.0, "grid"))
    return seeds


def collocate(F: ExtendedField, seed: Seed, k: int, tol: float = 1e-6,
              max_nodes: int = 100_000) -> Optional[tuple[float, float]]:
    """Refine a profile seed by periodic collocation; returns the state at t = 0."""
    if seed.profile is None:
        return tuple(seed)
    ts, ys = seed.profile
    w, c = F.weight, F.friction_c
    gv, dgv = F.base.vectorized

    def fun(t, y):
        u, v = y
        q = w.values(t)
        up = np.maximum(u, 0.0)
        phi = np.where(u > 0, q * gv(up), -u)
        return np.vstack([v, -c * v - phi])

    def jac(t, y):
        u, _ = y
        q = w.values(t)
        d = np.where(u > 0, q * dgv(np.maximum(u, 0.0)), -1.0)
        J = np.zeros((2, 2, len(t)))
        J[0, 1] = 1.0
        J[1, 0] = -d
        J[1, 1] = -c
        return J

    def bc(ya, yb):
        return ya - yb

    try:
        with np.errstate(all="ignore"):
            sol = solve_bvp(fun, bc, ts, ys, fun_jac=jac, tol=tol, max_nodes=max_nodes)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError):
        return None
    t0 = k * F.period_T if ts[0] > 0 else 0.0
    y0 = sol.sol(t0)
    if not np.all(np.isfinite(y0)):
        return None
    return float(y0[0]), float(y0[1])


# ---------------------------------------------------------------- Newton

def _newton_loop(F: ExtendedField, y, k: int, tol: float, max_iter: int, int_tol: float):
    P, mono, traj = poincare_map(F, y, k, int_tol, return_trajectory=True)
    res = np.array(P) - y
    norm = float(np.hypot(*res))
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise NoConvergence(f"residual {norm:.3g} after {it} iterations")
        A = mono.M - np.eye(2)
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < SINGULAR_DET:
            raise SingularJacobian(f"|det(M - I)| = {abs(det):.3g} at y = {tuple(y)}")
        step = np.linalg.solve(A, -res)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = y + lam * step
            try:
                Pt, mt, tt = poincare_map(F, trial, k, int_tol, return_trajectory=True)
            except IntegrationError:
                lam *= 0.5
                continue
            rt = np.array(Pt) - trial
            nt = float(np.hypot(*rt))
            if nt < norm:
                y, res, norm, mono, traj = trial, rt, nt, mt, tt
                break
            lam *= 0.5
        else:
            raise NoConvergence(f"damping failed at residual {norm:.3g}")
        it += 1
    return y, norm, it, traj


def newton_shoot(F: ExtendedField, y0, k: int = 1, tol: float = NEWTON_TOL, max_iter: int = 25,
                 int_tol: float = INTEGRATION_TOL) -> PeriodicOrbit:
    """Damped Newton on y -> P_kT(y) - y.

    A full step is halved (up to 20 times) until the residual decreases.
    Once converged, Newton is continued with the integration tolerance cut
    tenfold and the orbit is stored from that final integration, so the
    stored trajectory closes up to the reported residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array([float(y0[0]), float(y0[1])])
    y, _, it, _ = _newton_loop(F, y, k, tol, max_iter, int_tol)
    y, norm, it2, traj = _newton_loop(F, y, k, tol, max_iter, int_tol / 10)
    traj = Trajectory(traj.times, traj.states[:, :2].copy(), traj.dense[:, :, :2].copy())
    orbit = PeriodicOrbit(y0=(float(y[0]), float(y[1])), order_k=k, residual=norm,
                          trajectory=traj, iterations=it + it2, field_kind=F.extension)
    try:
        orbit.max_per_hump = per_hump_maxima(orbit, F.weight)
    except NoSignChange:
        pass
    return orbit


# ---------------------------------------------------------------- classification

def per_hump_maxima(orbit: PeriodicOrbit, w: WeightSpec, samples: int = 400) -> list[float]:
    """max u over J+_{i,l}, ordered l-major, i-minor (length k m)."""
    T, k = w.period_T, orbit.order_k
    out = []
    for ell in range(k):
        for h in w.positive_humps():
            lo, hi = h.lo + ell * T, h.hi + ell * T
            ts = np.linspace(lo, hi, samples)
            us = orbit.u(ts)
            j = int(np.argmax(us))
            a, b = ts[max(j - 1, 0)], ts[min(j + 1, samples - 1)]
            best = float(us[j])
            if b > a:
                r = minimize_scalar(lambda t: -float(orbit.u(t)), bounds=(a, b), method="bounded",
                                    options={"xatol": 1e-12 * max(1.0, T)})
                best = max(best, -float(r.fun))
            out.append(best)
    return out


def gap_threshold(maxima: Iterable[float]) -> float:
    """Geometric midpoint of the largest gap in the sorted (log) maxima.

    Without a clear gap (ratio below 1.5) everything is treated as large and
    half the smallest value is returned.
    """
    vals = np.sort(np.array([v for v in maxima if v > 0], dtype=float))
    if len(vals) == 0:
        raise ValueError("no positive maxima")
    if len(vals) == 1:
        return 0.5 * float(vals[0])
    logs = np.log(vals)
    gaps = np.diff(logs)
    j = int(np.argmax(gaps))
    if gaps[j] < math.log(1.5):
        return 0.5 * float(vals[0])
    return float(math.sqrt(vals[j] * vals[j + 1]))


def classify_string(orbit: PeriodicOrbit, r: float, R: float, delta: float = BAND_DELTA,
                    w: Optional[WeightSpec] = None) -> HumpString:
    maxima = orbit.max_per_hump if w is None else per_hump_maxima(orbit, w)
    if not maxima:
        raise ValueError("orbit has no per-hump maxima")
    bits = []
    for j, v in enumerate(maxima):
        if r * (1 - delta) <= v <= r * (1 + delta):
            raise AmbiguousClassification(f"hump {j}: max {v:.6g} within {delta:.0%} of r = {r:.6g}")
        if v > R:
            raise ExceedsR(f"hump {j}: max {v:.6g} exceeds R = {R:.6g}")
        bits.append(1 if v > r else 0)
    return HumpString(tuple(bits))


def _samples(orbit: PeriodicOrbit, per_period: int = 400) -> np.ndarray:
    k = orbit.order_k
    T = orbit.span / k
    ts = orbit.trajectory.t0 + np.arange(k * per_period) * (T / per_period)
    return orbit.u(ts)


def minimal_order(orbit: PeriodicOrbit, tol: float = DEDUP_TOL, per_period: int = 400) -> bool:
    """True unless u is lT-periodic for some proper divisor l of k (within 10 tol)."""
    k = orbit.order_k
    if k == 1:
        return True
    us = _samples(orbit, per_period)
    for ell in divisors(k)[:-1]:
        if np.max(np.abs(us - np.roll(us, -ell * per_period))) <= 10 * tol:
            return False
    return True


def shift_distance(u: PeriodicOrbit, v: PeriodicOrbit, per_period: int = 400) -> tuple[float, int]:
    """min over l of max_t |u(t) - v(t + lT)| and the minimizing l."""
    if u.order_k != v.order_k:
        raise ValueError("orbits must share k")
    us, vs = _samples(u, per_period), _samples(v, per_period)
    best, arg = math.inf, 0
    for ell in range(u.order_k):
        d = float(np.max(np.abs(us - np.roll(vs, -ell * per_period))))
        if d < best:
            best, arg = d, ell
    return best, arg


def _string_key(o: PeriodicOrbit):
    return (o.string.bits if o.string is not None else (2,), o.y0)


def dedup_classes(orbits: Sequence[PeriodicOrbit], tol: float = DEDUP_TOL) -> list[PeriodicOrbit]:
    """Group orbits that are time shifts of each other; set class_id; return representatives.

    The representative of a class is the member with the smallest string.
    Class ids follow the order of the representatives' strings.
    """
    if len({o.order_k for o in orbits}) > 1:
        raise ValueError("all orbits must share k")
    ordered = sorted(orbits, key=_string_key)
    groups: list[list[PeriodicOrbit]] = []
    for o in ordered:
        for g in groups:
            if shift_distance(g[0], o)[0] < tol:
                g.append(o)
                break
        else:
            groups.append([o])
    reps = [min(g, key=_string_key) for g in groups]
    order = sorted(range(len(groups)), key=lambda i: _string_key(reps[i]))
    out = []
    for cid, i in enumerate(order):
        for o in groups[i]:
            o.class_id = cid
        out.append(reps[i])
    return out


def necessary_condition_integrals(orbit: PeriodicOrbit, w: WeightSpec, n: Nonlinearity,
                                  nodes: int = 6) -> tuple[float, float]:
    """(int q g(u), int (u'/g(u))^2 g'(u)) over [0, kT] by per-step Gauss-Legendre.

    Points where g(u) = 0 contribute 0 to the second integral.
    """
    tr = orbit.trajectory
    x, wts = np.polynomial.legendre.leggauss(nodes)
    a, b = tr.times[:-1], tr.times[1:]
    if len(a) == 0:
        return 0.0, 0.0
    half = 0.5 * (b - a)
    ts = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
    ys = tr(ts.ravel())
    u, v = ys[:, 0], ys[:, 1]
    gv, dgv = n.vectorized
    up = np.maximum(u, 0.0)
    g = gv(up)
    q = w.values(ts.ravel())
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(g > 0, (v / np.where(g > 0, g, 1.0)) ** 2 * dgv(up), 0.0)
    wq = (half[:, None] * wts[None, :]).ravel()
    return float(np.sum(wq * q * g)), float(np.sum(wq * e))


def necessary_condition_residuals(orbit: PeriodicOrbit, w: WeightSpec,
                                  n: Nonlinearity) -> tuple[float, float]:
    """|int q g(u)| and |k int_0^T q + int (u'/g(u))^2 g'(u)|."""
    i1, i2 = necessary_condition_integrals(orbit, w, n)
    return abs(i1), abs(mean_value(w, orbit.order_k) + i2)


def is_trivial(orbit: PeriodicOrbit, atol: float = 1e-8) -> bool:
    return float(np.max(np.abs(orbit.trajectory.states[:, 0]))) < atol


def is_positive(orbit: PeriodicOrbit) -> bool:
    return bool(np.min(_samples(orbit)) > 0.0 and np.min(orbit.trajectory.states[:, 0]) > 0.0)


def liouville_error(F: ExtendedField, y0, k: int, tol: float = INTEGRATION_TOL) -> float:
    """Relative deviation of det of the Poincare Jacobian from exp(-c k T)."""
    _, mono = poincare_map(F, y0, k, tol)
    expected = math.exp(-F.friction_c * k * F.period_T)
    return abs(mono.det - expected) / expected


# ---------------------------------------------------------------- search

def check_weight_condition(w: WeightSpec) -> float:
    """Raise unless q changes sign with negative mean; returns the mean."""
    w.humps  # raises NoSignChange for one-signed weights
    mv = mean_value(w, 1)
    if not mv < 0:
        raise WeightConditionFailed(f"mean value {mv:.6g} is not negative")
    return mv


@dataclass
class SearchConfig:
    int_tol: float = INTEGRATION_TOL
    newton_tol: float = NEWTON_TOL
    max_iter: int = 25
    dedup_tol: float = DEDUP_TOL
    delta: float = BAND_DELTA
    r: Optional[float] = None
    R: Optional[float] = None
    amplitudes: tuple = (1.0, 0.8, 1.2)
    epsilons: tuple = (0.05, 0.005, 0.1, 0.02, 0.2)
    grid: tuple = (4, 3)
    collocation_tol: float = 1e-6
    early_stop: bool = True
    truncate_on_blowup: bool = True
    workers: int = 1


@dataclass
class SearchResult:
    k: int
    orbits: list
    classes: list
    r: float
    R: float
    ambiguous: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    missing: list = field(default_factory=list)


def _provisional_match(orbit: PeriodicOrbit, bits) -> bool:
    """Cheap check that the orbit looks like the target string, used to stop early.

    Splits the orbit's own maxima at their geometric mean when they spread by
    more than a factor 3, otherwise reads all humps as large.
    """
    mx = np.array(orbit.max_per_hump)
    if len(mx) != len(bits) or not np.all(mx > 0):
        return False
    lo, hi = mx.min(), mx.max()
    cut = math.sqrt(lo * hi) if hi > 3 * lo else 0.5 * lo
    return tuple(int(v > cut) for v in mx) == tuple(bits)


def _accept(orbit: PeriodicOrbit, w, n) -> bool:
    if is_trivial(orbit) or not is_positive(orbit):
        return False
    i1, i2 = necessary_condition_integrals(orbit, w, n)
    mean = mean_value(w, orbit.order_k)
    orbit.necessary_residuals = (abs(i1), abs(mean + i2))
    # the second identity is scale free, so it also rejects tiny near-constant spurious fixed points
    return abs(i1) < 1e-5 and abs(mean + i2) <= 1e-3 * (abs(mean) + abs(i2))


def _solve_string(args) -> tuple[list, dict]:
    w, n, c, k, bits, cfg = args
    F = ExtendedField(n, w, friction_c=c)
    bumps = hump_bumps(w, n)
    found, fails = [], {}
    for seed in seed_guesses(w, n, k, bits, amplitudes=cfg.amplitudes, epsilons=cfg.epsilons,
                             grid=cfg.grid):
        y0 = collocate(F, seed, k, cfg.collocation_tol)
        if y0 is None:
            fails["collocation"] = fails.get("collocation", 0) + 1
            continue
        try:
            orbit = newton_shoot(F, y0, k, cfg.newton_tol, cfg.max_iter, cfg.int_tol)
        except BlowUp:
            orbit = None
            if cfg.truncate_on_blowup:
                orbit = _truncated_retry(F, y0, k, cfg, bumps)
            if orbit is None:
                fails["blow-up"] = fails.get("blow-up", 0) + 1
                continue
        except (SingularJacobian, NoConvergence, IntegrationError) as exc:
            name = type(exc).__name__
            fails[name] = fails.get(name, 0) + 1
            continue
        if not _accept(orbit, w, n):
            fails["rejected"] = fails.get("rejected", 0) + 1
            continue
        found.append(orbit)
        if cfg.early_stop and _provisional_match(orbit, bits):
            break
    return found, fails


def _truncated_retry(F: ExtendedField, y0, k: int, cfg: SearchConfig, bumps):
    """Solve on the h-field truncated at 10x the largest bump, then re-verify on F."""
    R_trunc = 10.0 * max(float(b.states[:, 0].max()) for b in bumps)
    H = ExtendedField(F.base, F.weight, truncation_R=R_trunc, friction_c=F.friction_c)
    try:
        orbit_h = newton_shoot(H, y0, k, cfg.newton_tol, cfg.max_iter, cfg.int_tol)
        if max(orbit_h.max_per_hump or [math.inf]) >= R_trunc:
            return None
        return newton_shoot(F, orbit_h.y0, k, cfg.newton_tol, cfg.max_iter, cfg.int_tol)
    except (SingularJacobian, NoConvergence, IntegrationError):
        return None


def all_strings(k: int, m: int) -> list[HumpString]:
    """Nonzero km-bit strings in lexicographic order."""
    n = k * m
    return [HumpString(tuple((v >> (n - 1 - j)) & 1 for j in range(n))) for v in range(1, 2 ** n)]


def find_periodic_orbits(w: WeightSpec, n: Nonlinearity, k: int = 1, *, c: float = 0.0,
                         strings: Optional[Sequence] = None,
                         config: Optional[SearchConfig] = None,
                         require_condition: bool = True) -> SearchResult:
    """Multi-seed search for positive kT-periodic orbits, one target string at a time.

    Orbits are classified against a gap-statistic threshold r, deduplicated
    into periodicity classes and checked for minimal order.  Results come out
    sorted by string then y0, whatever the worker count.
    """
    cfg = config or SearchConfig()
    if require_condition:
        check_weight_condition(w)
    targets = all_strings(k, w.m) if strings is None else [
        s if isinstance(s, HumpString) else HumpString(tuple(s)) for s in strings]
    hump_bumps(w, n)
    jobs = [(w, n, c, k, s.bits, cfg) for s in targets]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_solve_string, jobs))
    else:
        results = [_solve_string(j) for j in jobs]
    raw, failures = [], {}
    for found, fails in results:
        raw.extend(found)
        for key, v in fails.items():
            failures[key] = failures.get(key, 0) + v
    if not raw:
        return SearchResult(k, [], [], math.nan, math.nan, failures=failures,
                            missing=[str(s) for s in targets])

    all_max = [v for o in raw for v in o.max_per_hump]
    r = cfg.r if cfg.r is not None else gap_threshold(all_max)
    R = cfg.R if cfg.R is not None else 2.0 * max(all_max)
    good, ambiguous = [], []
    for o in raw:
        try:
            o.string = classify_string(o, r, R, cfg.delta)
        except (AmbiguousClassification, ExceedsR):
            ambiguous.append(o)
            continue
        good.append(o)
    # collapse repeats of the same orbit found from different seeds
    good.sort(key=_string_key)
    unique: list[PeriodicOrbit] = []
    for o in good:
        if any(u.string == o.string and _same_phase(u, o, cfg.dedup_tol) for u in unique):
            continue
        unique.append(o)
    for o in unique:
        o.minimal = minimal_order(o, cfg.dedup_tol)
    classes = dedup_classes(unique, cfg.dedup_tol)
    have = {o.string for o in unique}
    missing = [str(s) for s in targets if s not in have]
    return SearchResult(k, unique, classes, r, R, ambiguous, failures, missing)


def _same_phase(u: PeriodicOrbit, v: PeriodicOrbit, tol: float) -> bool:
    us, vs = _samples(u), _samples(v)
    return float(np.max(np.abs(us - vs))) < tol
