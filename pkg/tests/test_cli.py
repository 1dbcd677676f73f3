import json

import numpy as np
import pytest

from soro_spt.bench import BenchReport, BenchRow, LinearFit, linear_fit, run_benchmark
from soro_spt.cli import csv_header, emit_csv, main, read_csv, validate_lines
from soro_spt.model import default_config_text
from soro_spt.simulation import Scenario, Trajectory, run_passive


def tiny_trajectory(dof=6, n=3, seed=0):
    rng = np.random.default_rng(seed)
    fields = {k: rng.standard_normal((n, dof)) for k in Trajectory.VECTOR_FIELDS}
    fields.update({k: rng.standard_normal(n) for k in Trajectory.SCALAR_FIELDS})
    return Trajectory(t=np.arange(n) * 1e-3 / 3, **fields)


def test_csv_layout_and_round_trip(tmp_path):
    tr = tiny_trajectory()
    path = emit_csv(tr, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    header, data = read_csv(path)
    # t, eight 6N-vector groups, four scalars
    assert len(header) == 1 + 8 * 6 + 4 == len(csv_header(6))
    assert header[:3] == ["t", "q_1", "q_2"] and header[-4:] == ["V", "W", "Sigma", "epsilon"]
    assert np.array_equal(data[:, 0], tr.t)
    assert np.array_equal(data[:, 1:7], tr.q)
    assert np.array_equal(data[:, -2], tr.Sigma)


def test_empty_trajectory_rejected(tmp_path):
    tr = tiny_trajectory(n=0)
    with pytest.raises(ValueError):
        emit_csv(tr, tmp_path / "x.csv")


def test_missing_config(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["validate", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_invalid_config_lists_violations(tmp_path, capsys):
    doc = json.loads(default_config_text())
    doc["sections"][0]["poisson_ratio"] = 0.6
    doc["sections"][2]["radius"] = 0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["validate", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "poisson_ratio" in err and "radius" in err


def test_validate_prints_derived(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "I_y 7.853982e-05" in out and "epsilon at rest" in out and "60/40" in out


def test_simulate_passive(tmp_path):
    assert main(["simulate", "--passive", "--duration", "0.005", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "trajectory.csv")
    assert len(header) == 1 + 8 * 24 + 4
    assert data.shape[0] == 6
    us = [i for i, h in enumerate(header) if h.startswith(("us_", "uf_", "e1_", "e2_"))]
    assert not data[:, us].any()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["mode"] == "passive"
    assert manifest["epsilon_at_rest"] == pytest.approx(0.11277152202394095)
    assert manifest["config"]["split_fraction"] == 0.6


def test_simulate_closed_loop(tmp_path):
    code = main(["simulate", "--duration", "0.01", "--out", str(tmp_path), "--off", "gravity",
                 "--off", "tip_load", "--spread", "0.001", "--seed", "4"])
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["scenario"]["seed"] == 4 and manifest["samples"] == 11


def test_numeric_failure_exit_code(tmp_path, capsys):
    doc = json.loads(default_config_text())
    doc["integration"]["fast_dt"] = 0.5
    doc["integration"]["slow_dt"] = 0.5
    p = tmp_path / "coarse.json"
    p.write_text(json.dumps(doc))
    code = main(["simulate", "--config", str(p), "--duration", "20", "--passive", "--out", str(tmp_path)])
    assert code == 3
    assert "numeric failure" in capsys.readouterr().err


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--off", "sunlight"])
    assert exc.value.code == 2
    assert main(["benchmark", "--n-list", "a,b"]) == 2


def test_linear_fit():
    f = linear_fit([1, 2, 3], [2, 4, 6])
    assert (f.slope, f.r_squared) == (pytest.approx(2), pytest.approx(1))


def test_bench_report_invariants():
    row = BenchRow(1, 41, 10.0, 10.0, 5)
    with pytest.raises(ValueError):
        BenchReport((row,), LinearFit(0, 0, 1), LinearFit(0, 0, 1))


def test_benchmark_structure(cfg, tmp_path):
    rep = run_benchmark(cfg, [1, 2], trials=20, warmup=2)
    assert [r.nodes for r in rep.rows] == [41, 82]
    assert all(r.trials == 20 for r in rep.rows)
    assert set(rep.ratios()) == {"1->2"}
    assert main(["benchmark", "--n-list", "1,2", "--trials", "20", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "bench.json").read_text())["rows"][1]["n_sections"] == 2


def test_thread_cap(monkeypatch, capsys):
    import numba
    monkeypatch.setenv("SORO_SPT_THREADS", "1")
    assert main(["validate"]) == 0
    assert numba.get_num_threads() == 1


def test_validate_lines_reference_values(cfg):
    text = "\n".join(validate_lines(cfg))
    for needle in ("E 110000 Pa", "G_v 3000 Pa s", "radius r 0.1 m", "poisson 0.45", "density 2000",
                   "water density          997", "C_d   0.82", "microsolids/section    41",
                   "total length L [m]     2"):
        assert needle in text
