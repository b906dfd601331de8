"""Run configuration, experiment orchestration, manifest and CSV export, command line."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from . import __version__
from .combinatorics import predicted_subharmonic_count, witt_count
from .dynamics import IntegrationError, poincare_map
from .nonlinearity import BadParams, ExtendedField, check_hypotheses, make_nonlinearity
from .oscillation import DegenerateDifference, count_zeros_diff
from .periodic import (HumpString, PeriodicOrbit, SearchConfig, find_periodic_orbits,
                       necessary_condition_residuals)
from .spectral import BracketFailure, dirichlet_eigenvalue, principal_eigenvalue, verify_morse
from .weights import DefiniteWeight, NoSignChange, WeightSpec, mean_value, mu_sharp

SCHEMA_VERSION = "subharm-manifest/1"

EXIT_OK, EXIT_GATE, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class GateFailure(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    weight: str = "sin"
    weight_params: tuple = (3.0,)
    period: float = 1.0
    mu: float = 10.0
    nonlinearity: str = "atan"
    nonlinearity_params: tuple = (400.0,)
    k: int = 1
    friction: float = 0.0
    int_tol: float = 1e-10
    newton_tol: float = 1e-9
    dedup_tol: float = 1e-6
    delta: float = 0.05
    r: Optional[float] = None
    R: Optional[float] = None
    seed_amplitudes: tuple = (1.0, 0.8, 1.2)
    seed_epsilons: tuple = (0.05, 0.005, 0.1, 0.02, 0.2)
    seed_grid: tuple = (4, 3)
    strings: tuple = ()
    workers: int = 1
    output_dir: Optional[str] = None
    csv_stride: Optional[float] = None
    morse: bool = True
    oscillation: bool = True

    def validate(self) -> "RunConfig":
        for name in ("int_tol", "newton_tol", "dedup_tol", "delta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not self.period > 0:
            raise ConfigError("period must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if len(self.seed_grid) != 2 or min(self.seed_grid) < 1:
            raise ConfigError("seed_grid needs two positive counts")
        if self.csv_stride is not None and not self.csv_stride > 0:
            raise ConfigError("csv_stride must be positive")
        if self.weight not in ("sin", "table", "const"):
            raise ConfigError(f"unknown weight kind {self.weight!r}")
        try:
            self.weight_spec()
            self.nonlinearity_spec()
        except (BadParams, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def weight_spec(self) -> WeightSpec:
        p = self.weight_params
        if self.weight == "sin":
            return WeightSpec.sin(p[0], self.period, self.mu, *(p[1:2]))
        if self.weight == "const":
            return WeightSpec.const(p[0], self.period, self.mu)
        if len(p) % 2:
            raise ConfigError("table weight needs (t, a) pairs")
        return WeightSpec.table(list(zip(p[0::2], p[1::2])), self.period, self.mu)

    def nonlinearity_spec(self):
        return make_nonlinearity(self.nonlinearity, self.nonlinearity_params)

    def search_config(self) -> SearchConfig:
        return SearchConfig(int_tol=self.int_tol, newton_tol=self.newton_tol,
                            dedup_tol=self.dedup_tol, delta=self.delta, r=self.r, R=self.R,
                            amplitudes=tuple(self.seed_amplitudes),
                            epsilons=tuple(self.seed_epsilons), grid=tuple(self.seed_grid),
                            workers=self.workers)


PRESETS = {
    "fig1": RunConfig(weight="sin", weight_params=(3.0,), period=1.0, mu=10.0,
                      nonlinearity="atan", nonlinearity_params=(400.0,), k=1),
    "fig2": RunConfig(weight="sin", weight_params=(1.0,), period=2 * math.pi, mu=6.0,
                      nonlinearity="polymix", nonlinearity_params=(100.0, 100.0), k=2),
}

_KINDS = {"weight": "str", "weight_params": "floats", "period": "float", "mu": "float",
          "nonlinearity": "str", "nonlinearity_params": "floats", "k": "int",
          "friction": "float", "int_tol": "float", "newton_tol": "float", "dedup_tol": "float",
          "delta": "float", "r": "optfloat", "R": "optfloat", "seed_amplitudes": "floats",
          "seed_epsilons": "floats", "seed_grid": "ints", "strings": "strings",
          "workers": "int", "output_dir": "optstr", "csv_stride": "optfloat",
          "morse": "bool", "oscillation": "bool"}


def _parse_value(key: str, text: str):
    kind = _KINDS[key]
    text = text.strip()
    try:
        if kind == "str":
            return text
        if kind == "int":
            return int(text)
        if kind == "float":
            return _float(text)
        if kind in ("optfloat", "optstr"):
            if text.lower() in ("", "none", "auto"):
                return None
            return _float(text) if kind == "optfloat" else text
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        items = [s for s in text.replace(";", ",").replace("x", ",").split(",") if s.strip()] \
            if kind == "ints" else [s for s in text.replace(";", ",").split(",") if s.strip()]
        if kind == "floats":
            return tuple(_float(s) for s in items)
        if kind == "ints":
            return tuple(int(s) for s in items)
        return tuple(s.strip() for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def _float(text: str) -> float:
    t = text.strip().lower().replace("pi", repr(math.pi))
    if any(c not in "0123456789.e+-*/ " for c in t):
        raise ValueError(text)
    # products such as 2*pi are allowed, nothing else is evaluated
    parts = t.replace(" ", "").split("*")
    out = 1.0
    for p in parts:
        if "/" in p:
            a, b = p.split("/", 1)
            out *= float(a) / float(b)
        else:
            out *= float(p)
    return out


def parse_config_text(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Flat ``key = value`` lines; '#' starts a comment."""
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KINDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _parse_value(key, value)
    return replace(base or RunConfig(), **updates)


def load_config(path, base: Optional[RunConfig] = None) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            s = "none"
        elif isinstance(v, tuple):
            s = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            s = repr(v)
        else:
            s = str(v).lower() if isinstance(v, bool) else str(v)
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- manifest helpers

def _clean(x):
    """JSON-ready copy with non-finite floats mapped to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def export_csv(orbit: PeriodicOrbit, path, stride: Optional[float] = None) -> str:
    """Write t, u, u' at a fixed stride over [0, kT] (default kT / 1000)."""
    if stride is None:
        stride = orbit.span / 1000
    orbit.trajectory.to_csv(path, stride)
    return str(path)


def weight_report(w: WeightSpec) -> dict:
    out = {"kind": w.kind, "period": w.period_T, "mu": w.mu}
    try:
        out["humps"] = [{"lo": h.lo, "hi": h.hi, "sign": h.sign, "index": h.index_i}
                        for h in w.humps]
        out["m"] = w.m
        out["sign_changing"] = True
    except NoSignChange:
        out["humps"], out["m"], out["sign_changing"] = [], 0, False
    out["mean_value"] = mean_value(w, 1)
    try:
        out["mu_sharp"] = mu_sharp(w)
    except DefiniteWeight:
        out["mu_sharp"] = None
    out["condition_ok"] = bool(out["sign_changing"] and out["mean_value"] < 0)
    return out


def _is_T_periodic(o: PeriodicOrbit, T: float, tol: float) -> bool:
    if o.order_k == 1:
        return True
    ts = np.linspace(0.0, o.span, 400 * o.order_k, endpoint=False)
    return float(np.max(np.abs(o.u(ts) - o.u(ts + T)))) <= 10 * tol


def _morse_job(args):
    o, w, n = args
    try:
        return verify_morse(o, w, n)
    except (BracketFailure, IntegrationError):
        return math.nan, False


def _orbit_record(o: PeriodicOrbit, F: ExtendedField, cfg: RunConfig, csv_name) -> dict:
    _, mono = poincare_map(F, o.y0, o.order_k, cfg.int_tol)
    expected = math.exp(-F.friction_c * o.order_k * F.period_T)
    return {
        "k": o.order_k,
        "string": str(o.string),
        "y0": list(o.y0),
        "residual": o.residual,
        "newton_iterations": o.iterations,
        "minimal": o.minimal,
        "class_id": o.class_id,
        "max_per_hump": list(o.max_per_hump),
        "necessary_residuals": list(o.necessary_residuals or ()),
        "min_u": float(np.min(o.trajectory.states[:, 0])),
        "liouville": {"det": mono.det, "expected": expected,
                      "relative_error": abs(mono.det - expected) / expected},
        "lambda0": o.lambda0,
        "morse_negative": o.morse_negative,
        "csv": csv_name,
    }


def run_experiment(cfg: RunConfig) -> dict:
    """Weight analysis, hypothesis checks, gate, search, diagnostics; returns the manifest.

    Writes manifest.json and one CSV per orbit when ``cfg.output_dir`` is set.
    """
    cfg.validate()
    w, n = cfg.weight_spec(), cfg.nonlinearity_spec()
    wrep = weight_report(w)
    if not wrep["sign_changing"]:
        raise GateFailure("weight does not change sign; there are no humps to search")
    hyp = check_hypotheses(n)
    F = ExtendedField(n, w, friction_c=cfg.friction)
    res = find_periodic_orbits(w, n, cfg.k, c=cfg.friction, strings=cfg.strings or None,
                               config=cfg.search_config(), require_condition=False)
    T = w.period_T
    for o in res.orbits:
        if o.necessary_residuals is None:
            o.necessary_residuals = necessary_condition_residuals(o, w, n)

    periodic_T = [o for o in res.orbits if _is_T_periodic(o, T, cfg.dedup_tol)]
    if cfg.morse and periodic_T:
        jobs = [(o, w, n) for o in periodic_T]
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                verdicts = list(pool.map(_morse_job, jobs))
        else:
            verdicts = [_morse_job(j) for j in jobs]
        for o, (lam, neg) in zip(periodic_T, verdicts):
            o.lambda0, o.morse_negative = lam, neg

    oscill = []
    if cfg.oscillation:
        if cfg.k >= 2:
            pairs = [(o, ref) for o in res.orbits if o.minimal for ref in periodic_T]
        else:
            pairs = [(a, b) for i, a in enumerate(res.orbits) for b in res.orbits[i + 1:]]
        for o, ref in pairs:
            try:
                rep = count_zeros_diff(o, ref)
            except DegenerateDifference:
                continue
            oscill.append({"orbit_class": o.class_id, "orbit_string": str(o.string),
                           "reference_class_id": ref.class_id,
                           "reference_string": str(ref.string),
                           "zero_count": rep.zero_count, "j": rep.j_index,
                           "winding_turns": rep.winding_turns,
                           "tangencies": len(rep.tangencies)})

    orbit_records = []
    for i, o in enumerate(res.orbits):
        name = None
        if cfg.output_dir:
            os.makedirs(cfg.output_dir, exist_ok=True)
            name = f"orbit_{i:03d}_class{o.class_id}_{o.string}.csv"
            export_csv(o, os.path.join(cfg.output_dir, name), cfg.csv_stride)
        orbit_records.append(_orbit_record(o, F, cfg, name))

    classes = []
    for rep_orbit in res.classes:
        members = [o for o in res.orbits if o.class_id == rep_orbit.class_id]
        classes.append({"class_id": rep_orbit.class_id, "representative": str(rep_orbit.string),
                        "members": [str(o.string) for o in members],
                        "minimal": rep_orbit.minimal,
                        "canonical": str(rep_orbit.string.canonical(w.m))})

    lambda1 = []
    for i in range(1, w.m + 1):
        try:
            lambda1.append(dirichlet_eigenvalue(w, i))
        except (BracketFailure, IntegrationError):
            lambda1.append(None)

    search = {"k": res.k, "r": res.r, "R": res.R, "failures": res.failures,
              "missing_strings": res.missing, "ambiguous": len(res.ambiguous),
              "orbit_count": len(res.orbits), "class_count": len(res.classes),
              "minimal_class_count": sum(1 for c in res.classes if c.minimal)}
    if cfg.k >= 2:
        search["predicted_minimal_classes"] = predicted_subharmonic_count(w.m, cfg.k)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": asdict(cfg),
        "weight": wrep,
        "gate": {"mean_value_negative": wrep["mean_value"] < 0,
                 "mu_above_mu_sharp": wrep["mu_sharp"] is not None and w.mu > wrep["mu_sharp"],
                 "flag": not wrep["condition_ok"]},
        "nonlinearity": {"kind": n.kind, "params": list(n.params), "hypotheses": hyp.as_dict()},
        "search": search,
        "orbits": orbit_records,
        "classes": classes,
        "oscillation": oscill,
        "eigen": {"lambda1": lambda1, "liminf_proxy": hyp.liminf_proxy,
                  "lambda0": [o.lambda0 for o in res.orbits]},
    }
    manifest = _clean(manifest)
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest


# ---------------------------------------------------------------- command line

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in preset")
    for key in _KINDS:
        flags = [f"--{key}"]
        if "_" in key:
            flags.append("--" + key.replace("_", "-"))
        p.add_argument(*flags, dest=f"opt_{key}", metavar="VALUE", default=None)


def _config_from_args(args, preset: Optional[str] = None) -> RunConfig:
    base = PRESETS[preset or args.preset] if (preset or getattr(args, "preset", None)) else RunConfig()
    if getattr(args, "config", None):
        base = load_config(args.config, base)
    updates = {}
    for key in _KINDS:
        v = getattr(args, f"opt_{key}", None)
        if v is not None:
            updates[key] = _parse_value(key, v)
    return replace(base, **updates)


def _summary(manifest: dict) -> str:
    s = manifest["search"]
    lines = [f"k = {s['k']}  orbits = {s['orbit_count']}  classes = {s['class_count']}"
             f"  r = {s['r']}  R = {s['R']}"]
    for o in manifest["orbits"]:
        lam = "" if o["lambda0"] is None else f"  lambda0 = {o['lambda0']:.6g}"
        lines.append(f"  string {o['string']}  class {o['class_id']}  minimal {o['minimal']}"
                     f"  residual {o['residual']:.2e}  y0 = ({o['y0'][0]:.10g}, {o['y0'][1]:.10g}){lam}")
    if "predicted_minimal_classes" in s:
        lines.append(f"  minimal classes found {s['minimal_class_count']}"
                     f" (lower bound {s['predicted_minimal_classes']})")
    if manifest["gate"]["flag"]:
        lines.append("  warning: weight fails the negative-mean sign-changing condition")
    return "\n".join(lines)


def _run_and_report(cfg: RunConfig) -> int:
    manifest = run_experiment(cfg)
    print(_summary(manifest))
    if cfg.output_dir:
        print(f"manifest written to {os.path.join(cfg.output_dir, 'manifest.json')}")
    else:
        print(json.dumps(manifest, indent=2, sort_keys=True))
    if manifest["gate"]["flag"]:
        return EXIT_GATE
    return EXIT_OK if manifest["orbits"] else EXIT_NUMERIC


def _range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subharm", description="Positive periodic and subharmonic "
                                "solutions of u'' + c u' + q(t) g(u) = 0 with sign-changing q.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("weight-report", "hump decomposition, mean value, mu threshold"),
                        ("solve", "search for kT-periodic orbits"),
                        ("subharmonics", "search for subharmonics of order k >= 2"),
                        ("eigen", "Dirichlet eigenvalues of the humps and lambda0 of q")):
        _add_config_flags(sub.add_parser(name, help=help_))
    c = sub.add_parser("count", help="table of aperiodic necklace counts S_n(k)")
    c.add_argument("--n", default="2", help="alphabet sizes, e.g. 2,4 or 2..8")
    c.add_argument("--k", default="1..10", help="lengths, e.g. 2..10")
    r = sub.add_parser("reproduce", help="run a built-in figure preset")
    r.add_argument("figure", choices=sorted(PRESETS))
    _add_config_flags(r)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "count":
            print("n\tk\tS_n(k)")
            for nn in _range(args.n):
                for kk in _range(args.k):
                    print(f"{nn}\t{kk}\t{witt_count(nn, kk)}")
            return EXIT_OK
        cfg = _config_from_args(args, args.figure if args.command == "reproduce" else None)
        if args.command == "reproduce" and cfg.output_dir is None:
            cfg = replace(cfg, output_dir=os.path.join("out", args.figure))
        cfg.validate()
        if args.command == "weight-report":
            rep = weight_report(cfg.weight_spec())
            print(json.dumps(_clean(rep), indent=2))
            return EXIT_OK
        if args.command == "eigen":
            w, n = cfg.weight_spec(), cfg.nonlinearity_spec()
            lam1 = [dirichlet_eigenvalue(w, i) for i in range(1, w.m + 1)]
            hill = principal_eigenvalue(w.fn, w.period_T, tstops=w.breakpoints_in(0, w.period_T))
            out = {"lambda1": lam1, "liminf_proxy": check_hypotheses(n).liminf_proxy,
                   "lambda0_of_q": hill.lambda0}
            print(json.dumps(_clean(out), indent=2))
            return EXIT_OK
        if args.command == "subharmonics" and cfg.k < 2:
            raise ConfigError("subharmonics needs k >= 2")
        return _run_and_report(cfg)
    except (ConfigError, GateFailure, NoSignChange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (IntegrationError, BracketFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
