import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from subharm.cli import (PRESETS, SCHEMA_VERSION, ConfigError, GateFailure, RunConfig,
                         dump_config, export_csv, main, parse_config_text, run_experiment,
                         weight_report)
from subharm.periodic import newton_shoot
from subharm.weights import WeightSpec


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def numbers(x):
    if isinstance(x, dict):
        for v in x.values():
            yield from numbers(v)
    elif isinstance(x, list):
        for v in x:
            yield from numbers(v)
    elif isinstance(x, float):
        yield x


# ---------------------------------------------------------------- config

def test_config_round_trip():
    for cfg in (RunConfig(), *PRESETS.values(), replace(RunConfig(), r=0.1, strings=("10", "01"))):
        assert parse_config_text(dump_config(cfg)) == cfg


def test_config_parsing_details():
    cfg = parse_config_text("""
        # comment
        weight = sin
        weight_params = 1
        period = 2*pi
        mu = 6    # trailing comment
        seed_grid = 5x2
        R = auto
        morse = no
    """)
    assert cfg.period == pytest.approx(2 * math.pi)
    assert cfg.seed_grid == (5, 2) and cfg.R is None and cfg.morse is False
    with pytest.raises(ConfigError):
        parse_config_text("bogus = 1")
    with pytest.raises(ConfigError):
        parse_config_text("mu = six")
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")


@pytest.mark.parametrize("bad", [dict(k=0), dict(mu=0.0), dict(int_tol=-1.0), dict(newton_tol=0.0),
                                 dict(weight="cos"), dict(nonlinearity="power",
                                                          nonlinearity_params=(0.5,))])
def test_validation_errors(bad):
    with pytest.raises(ConfigError):
        replace(RunConfig(), **bad).validate()


def test_flags_override_config_file(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("weight = sin\nweight_params = 1\nperiod = 2*pi\nmu = 0.8\n")
    assert main(["weight-report", "--config", str(path), "--mu", "6"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mu"] == 6.0 and rep["condition_ok"]
    assert main(["weight-report", "--config", str(path)]) == 0
    assert not json.loads(capsys.readouterr().out)["condition_ok"]


def test_hyphenated_flags(capsys):
    assert main(["weight-report", "--preset", "fig2", "--weight-params", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["m"] == 2


def test_validation_exit_code(capsys):
    assert main(["solve", "--preset", "fig2", "--k", "0"]) == 2
    assert main(["solve", "--newton-tol", "-1"]) == 2
    assert main(["subharmonics", "--preset", "fig1"]) == 2
    assert "error" in capsys.readouterr().err


# ---------------------------------------------------------------- gate

def test_gate_flag_still_searches():
    m = run_experiment(replace(PRESETS["fig2"], k=1, mu=0.8))
    assert m["gate"]["flag"] and not m["gate"]["mean_value_negative"]
    assert m["search"]["k"] == 1
    assert m["search"]["failures"] or m["search"]["missing_strings"] or m["orbits"]


def test_gate_exit_code(capsys):
    assert main(["solve", "--preset", "fig2", "--k", "1", "--mu", "0.8"]) == 2
    assert "warning" in capsys.readouterr().out


def test_definite_weight_is_a_gate_failure(capsys):
    with pytest.raises(GateFailure):
        run_experiment(RunConfig(weight="const", weight_params=(1.0,)))
    assert main(["solve", "--weight", "const", "--weight-params", "1"]) == 2


def test_weight_report_fig1():
    rep = weight_report(PRESETS["fig1"].weight_spec())
    assert rep["m"] == 3 and rep["condition_ok"]
    assert rep["mu_sharp"] == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------- count

def test_count_output(capsys):
    assert main(["count", "--n", "2", "--k", "2..10"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()[1:]
    assert [int(r.split("\t")[2]) for r in rows] == [1, 2, 3, 6, 9, 18, 30, 56, 99]


# ---------------------------------------------------------------- csv

def test_export_csv_harmonic(harmonic, tmp_path):
    orbit = newton_shoot(harmonic, (1.0, 0.0), 1)
    path = tmp_path / "h.csv"
    export_csv(orbit, path, stride=0.01)
    rows = read_rows(path)
    assert rows[0] == ["t", "u", "up"]
    assert len(rows) - 1 == math.floor(2 * math.pi / 0.01) + 1
    data = np.array(rows[1:], dtype=float)
    assert np.max(np.abs(data[:, 1] - np.cos(data[:, 0]))) < 1e-8
    assert np.max(np.abs(data[:, 2] + np.sin(data[:, 0]))) < 1e-8
    assert all(v == f"{float(v):.12g}" for row in rows[1:] for v in row)
    again = tmp_path / "h2.csv"
    export_csv(orbit, again, stride=0.01)
    assert path.read_bytes() == again.read_bytes()


def test_export_csv_default_stride(fig2_search, tmp_path):
    o = fig2_search.orbits[0]
    path = tmp_path / "o.csv"
    export_csv(o, path)
    assert len(read_rows(path)) - 1 == 1001


# ---------------------------------------------------------------- manifest

@pytest.fixture(scope="module")
def fig2_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("fig2")
    a = run_experiment(replace(PRESETS["fig2"], output_dir=str(base / "a")))
    b = run_experiment(replace(PRESETS["fig2"], output_dir=str(base / "b"), workers=2))
    return base, a, b


def test_manifest_contents(fig2_runs):
    base, m, _ = fig2_runs
    assert m["schema_version"] == SCHEMA_VERSION
    assert sorted(o["string"] for o in m["orbits"]) == ["01", "10", "11"]
    assert len(m["classes"]) == 2
    assert sum(c["minimal"] for c in m["classes"]) == 1
    for o in m["orbits"]:
        assert (base / "a" / o["csv"]).exists()
        assert o["residual"] < 1e-9
        assert o["liouville"]["relative_error"] < 1e-6
    assert m["oscillation"] and all(r["zero_count"] % 2 == 0 for r in m["oscillation"])
    assert m["eigen"]["lambda1"][0] > 0
    on_disk = json.loads((base / "a" / "manifest.json").read_text())
    assert on_disk == m


def test_manifest_numbers_finite(fig2_runs):
    _, m, _ = fig2_runs
    json.dumps(m, allow_nan=False)
    assert all(math.isfinite(x) for x in numbers(m))


def test_manifest_independent_of_workers(fig2_runs):
    base, a, b = fig2_runs
    strip = lambda m: {k: v for k, v in m.items() if k != "config"}
    assert strip(a) == strip(b)
    for o in a["orbits"]:
        assert (base / "a" / o["csv"]).read_bytes() == (base / "b" / o["csv"]).read_bytes()


def test_manifest_repeatable(fig2_runs, tmp_path):
    _, a, _ = fig2_runs
    c = run_experiment(replace(PRESETS["fig2"], output_dir=str(tmp_path)))
    assert {k: v for k, v in c.items() if k != "config"} == \
           {k: v for k, v in a.items() if k != "config"}


def test_reproduce_fig2_via_main(tmp_path, capsys):
    out = tmp_path / "fig2"
    assert main(["reproduce", "fig2", "--output-dir", str(out), "--morse", "false"]) == 0
    text = capsys.readouterr().out
    assert "string 10" in text and "manifest written" in text
    m = json.loads((out / "manifest.json").read_text())
    assert m["search"]["class_count"] == 2
    assert all(o["lambda0"] is None for o in m["orbits"])


def test_solve_prints_manifest_without_output_dir(capsys):
    assert main(["solve", "--preset", "fig2", "--k", "1", "--oscillation", "off"]) == 0
    out = capsys.readouterr().out
    m = json.loads(out[out.index("{"):])
    assert [o["string"] for o in m["orbits"]] == ["1"]
