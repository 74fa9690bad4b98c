import csv
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from lasserre_bounds.cli import ExperimentConfig, ConfigError, main, rate_report, ratio_report, ratio_rows
from lasserre_bounds.poly import evaluate
from lasserre_bounds.registry import TABLE_FUNCTIONS, domains, resolve_function, table_functions


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bound_linear_box2(tmp_path):
    out = tmp_path / "linear.csv"
    assert main(["bound", "--function", "linear", "--domain", "box2", "--measure", "lebesgue", "--r-max", "20", "--output", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == "r,bound,error,residual,wall_ms"
    rows = read_csv(out)
    errors = [float(r["error"]) for r in rows]
    assert [int(r["r"]) for r in rows] == list(range(1, 21))
    assert all(e > 0 for e in errors) and all(b < a for a, b in zip(errors, errors[1:]))
    assert all(float(r["wall_ms"]) > 0 for r in rows)


def test_bound_constant_ball(tmp_path):
    out = tmp_path / "c.json"
    assert main(["bound", "--function", "constant5", "--domain", "ball2", "--r-max", "3", "--format", "json", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [row["bound"] for row in doc["series"]] == pytest.approx([5.0, 5.0, 5.0], abs=1e-12)
    assert set(doc["series"][0]) >= {"r", "bound", "error", "residual", "wall_ms"}


def test_bound_booth_octagon(tmp_path):
    out = tmp_path / "booth.csv"
    assert main(["bound", "--function", "booth", "--domain", "octagon", "--r-max", "12", "--output", str(out)]) == 0
    errors = [float(r["error"]) for r in read_csv(out)]
    assert all(e >= 0 for e in errors) and all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))


def test_needle_engine_output(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["bound", "--function", "quadratic", "--domain", "box2", "--r-max", "4", "--engine", "both", "--recentre", "--output", str(out)]) == 0
    needle_rows = read_csv(tmp_path / "q-needle.csv")
    eigen_rows = read_csv(out)
    assert [int(r["r"]) for r in needle_rows] == [2, 3, 4]
    assert set(needle_rows[0]) == {"r", "bound", "error", "residual", "wall_ms", "h", "in_regime"}
    assert len(eigen_rows) == 4


def test_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bound", "--function", "motzkin", "--domain", "ball2", "--r-max", "6", "--omit-timing"]
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # the timing column is the only run-dependent field
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    main(args[:-1] + ["--output", str(c)])
    main(args[:-1] + ["--output", str(d)])
    strip = lambda p: [{k: v for k, v in row.items() if k != "wall_ms"} for row in read_csv(p)]  # noqa: E731
    assert strip(c) == strip(d) == strip(a)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(function="matyas", domain="octagon", r_max=3, format="json", output=str(tmp_path / "m.json"))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    assert main(["bound", "--config", str(path)]) == 0
    echoed = json.loads((tmp_path / "m.json").read_text())["config"]
    assert ExperimentConfig.from_json(echoed) == cfg
    literal = {"n": 2, "terms": [{"exp": [2, 0], "coef": 1.0}, {"exp": [0, 2], "coef": 1.0}]}
    cfg = ExperimentConfig(function=literal, domain={"kind": "ball", "n": 2, "centre": [0, 0], "radius": 1}, r_max=2, format="json")
    assert ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_exit_codes(tmp_path, capsys):
    assert main(["bound", "--function", "nope", "--domain", "box2"]) == 2
    assert main(["bound", "--function", "linear", "--domain", "box2", "--r-max", "25"]) == 2
    assert main(["bound", "--function", "linear", "--domain", "ball2", "--measure", "chebyshev"]) == 2
    assert main(["bound", "--function", "linear", "--domain", "box2", "--engine", "eigen", "--estimator", "lipschitz"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"function": "linear", "domain": "box2", "colour": "red"}))
    assert main(["bound", "--config", str(bad)]) == 2
    assert main(["bound", "--function", "x4", "--domain", "box1", "--r-max", "24", "--precision-bits", "53"]) == 3
    assert "config error" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lasserre_bounds", "bound", "--function", "constant5", "--domain", "box2", "--r-max", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("r,bound")
    proc = subprocess.run([sys.executable, "-m", "lasserre_bounds", "bound", "--function", "zzz", "--domain", "box2"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_ratio_identical_configs():
    cfg = ExperimentConfig(function="camel", domain="box2", r_max=6)
    rows, tail = ratio_report(cfg, cfg)
    assert all(row["ratio"] == 1.0 for row in rows)
    assert tail["tail_mean"] == 1.0 and tail["tail_stdev"] == 0.0


def test_ratio_zero_denominator():
    rows, tail = ratio_rows({1: 1.0, 2: 0.5, 3: 0.25}, {1: 2.0, 2: 0.0, 3: 0.5})
    assert np.isnan(rows[1]["ratio"])
    assert tail["tail_count"] == 2 and tail["tail_mean"] == 0.5


def test_ratio_command(tmp_path, capsys):
    out = tmp_path / "ratio.csv"
    assert main(["ratio", "--function", "linear", "--domain", "ball2", "--versus-domain", "box2", "--r-max", "8", "--output", str(out)]) == 0
    ratios = [float(r["ratio"]) for r in read_csv(out)]
    assert len(ratios) == 8 and all(x > 0 for x in ratios)
    assert "tail mean" in capsys.readouterr().err


def test_rate_reports():
    out = rate_report(ExperimentConfig(function="linear", domain="box1", measure="chebyshev", r_max=20), (10, 20))
    assert -2.3 <= out["slope"] <= -1.6 and out["status"] == "ok"
    out = rate_report(ExperimentConfig(function="constant2", domain="box2", r_max=4), (2, 4))
    assert out["status"] == "converged_exactly"
    out = rate_report(ExperimentConfig(function="linear", domain="box1", r_max=12), (6, 12), ceiling=-2.5)
    assert out["status"] == "violates_ceiling"


def test_rate_command(tmp_path):
    out = tmp_path / "rate.json"
    assert main(["rate", "--function", "x4", "--domain", "interval01", "--recentre", "--r-max", "20", "--window", "10", "20", "--format", "json", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["slope"] <= -2.5 and doc["status"] == "ok"


def test_needle_table_and_moment_dump(tmp_path):
    out = tmp_path / "needle.csv"
    assert main(["needle-table", "--r", "4", "--h", "0.25", "--points", "11", "--output", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 11 and float(rows[0]["nu"]) == pytest.approx(1.0) and float(rows[0]["kappa"]) == pytest.approx(1.0)
    assert all(float(r["Lambda"]) <= float(r["nu"]) + 1e-12 for r in rows)
    assert main(["needle-table", "--r", "4", "--h", "1.5"]) == 2
    out = tmp_path / "mom.csv"
    assert main(["moments-dump", "--domain", "box1", "--degree", "2", "--output", str(out)]) == 0
    assert out.read_text().splitlines() == ["alpha1,value", "0,2", "1,0", "2,0.66666666666666663"]
    assert main(["moments-dump", "--domain", "ball2", "--measure", "chebyshev"]) == 2


def test_registry():
    table = table_functions()
    assert tuple(table) == TABLE_FUNCTIONS
    assert Fraction(table["camel"].poly.coefficient((6, 0))).limit_denominator(10) == Fraction(15625, 6)
    for entry in table.values():
        for m in entry.minimizers:
            assert evaluate(entry.poly, np.array(m)) == pytest.approx(entry.f_min, abs=1e-10)
    grid = domains()["box2"].grid_points(201)
    for entry in table.values():
        assert np.min(evaluate(entry.poly, grid)) >= entry.f_min - 1e-10
    for name in ("linear", "quadratic"):
        e = resolve_function(name, "simplex2", domains()["simplex2"])
        assert e.f_min == 0.0 and evaluate(e.poly, np.array(e.minimizers[0])) == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(function="linear", domain="box2", r_max=0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(function="linear", domain="box2", format="xml").validate()
    ExperimentConfig(function="linear", domain="box2", r_max=24).validate()
