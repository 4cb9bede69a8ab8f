import json

import numpy as np
import pytest

from qssa_lab import serialize
from qssa_lab.cli import SWEEP_COLUMNS, parse_axis, run_cli
from qssa_lab.errors import ParameterError


def test_diagnose_reference_point(tmp_path, capsys):
    assert run_cli(["diagnose"]) == 0
    row = json.loads(capsys.readouterr().out)
    assert row["eps_o"] == 0.1875
    assert row["verdict"] == "UseDelta0"
    assert row["s_hat"] == 20.0
    assert row["families"] == "Generic"
    assert all(isinstance(row[k], str) for k in row if k.startswith("note_"))


def test_diagnose_with_params_file_and_override(tmp_path):
    (tmp_path / "p.json").write_text(json.dumps({"k0": 3.5, "eT": 1, "k1": 1, "km1": 1, "k2": 3}))
    out = tmp_path / "d.json"
    assert run_cli(["diagnose", "--params", str(tmp_path / "p.json"), "--out", str(out)]) == 0
    row = serialize.read_json(out)
    assert row["verdict"] == "InflowExceedsCapacity"
    assert row["delta_m"] is None
    assert run_cli(["diagnose", "--set", "k0=1.0", "--out", str(out)]) == 0
    assert serialize.read_json(out)["k0"] == 1.0


def test_simulate_compare(tmp_path, capsys):
    out = tmp_path / "sim"
    code = run_cli(["simulate", "--out", str(out), "--t-end", "20", "--n-out", "201",
                    "--reduction", "sqssa", "--reduction", "qea", "--compare"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert set(summary["reductions"]) == {"sqssa", "qea"}
    header, data = serialize.read_table(out / "combined.csv")
    assert header == ["t", "s", "c", "s_sqssa", "abs_err_sqssa", "s_qea", "abs_err_qea"]
    assert np.allclose(data[:, 4], np.abs(data[:, 3] - data[:, 1]))
    assert summary["reductions"]["sqssa"]["SupNormS"] == pytest.approx(np.max(data[:, 4]),
                                                                         rel=1e-2)
    full = serialize.read_trajectory(out / "full.csv")
    assert full.names == ("s", "c") and len(full.times) == 201


def test_manifold_command(tmp_path):
    out = tmp_path / "m"
    assert run_cli(["manifold", "--out", str(out), "--n-grid", "601", "--s-max", "30"]) == 0
    curve = serialize.read_curve(out / "slow_manifold.csv")
    assert float(curve(20.0)) == pytest.approx(5 / 6, abs=1e-8)
    rep = serialize.read_json(out / "report.json")
    assert rep["converged"] and 0 < rep["axis_crossing"] < 2.5


def test_reduce_to_stdout(capsys):
    assert run_cli(["reduce", "--reduction", "sqssa", "--n", "5", "--s-max", "4"]) == 0
    captured = capsys.readouterr()
    lines = captured.out.splitlines()
    assert lines[0] == "s,sqssa_rhs,sqssa_c"
    assert [float(x) for x in lines[-1].split(",")] == pytest.approx([4.0, 1.0, 0.5])
    assert "sqssa" in captured.err


def test_phase_and_poincare(tmp_path):
    assert run_cli(["phase", "--out", str(tmp_path)]) == 0
    assert serialize.read_json(tmp_path / "wedge.json")["passed"]
    assert run_cli(["poincare", "--out", str(tmp_path)]) == 0
    cls = serialize.read_json(tmp_path / "classification.json")
    assert cls["points"]["P1"]["label"] == "DegenerateSaddle"
    assert cls["distinguished"]["case"] == "P1_to_P0"
    header, _ = serialize.read_table(tmp_path / "chart.csv")
    assert header == ["t", "x2", "x3"]


def test_figures_fig1a(tmp_path, capsys):
    assert run_cli(["figures", "fig1a", "--out", str(tmp_path)]) == 0
    meta = serialize.read_json(tmp_path / "fig1a" / "metadata.json")
    assert len(meta["initial_conditions"]) == 6
    assert meta["equilibrium"]["s_hat"] == 20.0
    for run in meta["initial_conditions"]:
        traj = serialize.read_trajectory(tmp_path / "fig1a" / run["file"])
        assert traj.states[0] == pytest.approx([run["s0"], run["c0"]])


def test_figures_fig3(tmp_path, capsys):
    assert run_cli(["figures", "fig3", "--out", str(tmp_path)]) == 0
    header, data = serialize.read_table(tmp_path / "fig3" / "iterates.csv")
    assert header == ["s", "sqssa", "C1", "C2", "C3", "C4", "slow"]
    assert np.allclose(data[:, 2], data[:, 1], atol=1e-15)
    d = serialize.read_json(tmp_path / "fig3" / "metadata.json")["iterate_sup_deltas"]
    assert d[1] < d[0] and all(b < a for a, b in zip(d[1:], d[2:]))


def test_figures_fig2(tmp_path, capsys):
    assert run_cli(["figures", "fig2", "--out", str(tmp_path)]) == 0
    meta = serialize.read_json(tmp_path / "fig2" / "metadata.json")
    assert meta["node"]["equilibrium"] == [20.0, pytest.approx(5 / 6)]
    assert "equilibrium" not in meta["unbounded"]
    assert meta["node"]["wedge"]["passed"] and meta["unbounded"]["wedge"]["passed"]


def test_parse_axis():
    assert parse_axis("k0=0.1:0.5:0.1") == ("k0", [0.1, 0.2, 0.3, 0.4, 0.5])
    assert parse_axis("eT=1,2.5") == ("eT", [1.0, 2.5])
    for bad in ("k0=1:0:0.1", "k0=1:2", "k9=1,2", "k0=a,b", "k0"):
        with pytest.raises(ParameterError):
            parse_axis(bad)


def _sweep(tmp_path, name, extra, monkeypatch=None):
    out = tmp_path / name
    args = ["sweep", "--axis", "k0=0.5:3.5:0.5", "--axis", "eT=0.5,1", "--out", str(out)]
    assert run_cli(args + extra) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == list(SWEEP_COLUMNS) + ["verdict"]
    return lines


def test_sweep_order_independent_of_jobs(tmp_path, monkeypatch):
    serial = _sweep(tmp_path, "a.csv", ["--jobs", "1"])
    parallel = _sweep(tmp_path, "b.csv", ["--jobs", "2"])
    assert serial == parallel
    monkeypatch.setenv("QSSA_LAB_JOBS", "2")
    assert _sweep(tmp_path, "c.csv", []) == serial
    assert len(serial) == 1 + 7 * 2
    k0 = [float(ln.split(",")[0]) for ln in serial[1:]]
    assert k0[:2] == [0.5, 0.5] and k0[-1] == 3.5
    # k0 = 3.5 with eT = 1 exceeds capacity, so delta_m is missing
    last = serial[-1].split(",")
    assert last[-1] == "InflowExceedsCapacity" and last[SWEEP_COLUMNS.index("delta_m")] == "nan"


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert run_cli(["diagnose", "--set", "k0=-1"]) == 1
    assert run_cli(["diagnose", "--set", "k7=1"]) == 1
    assert run_cli(["diagnose", "--params", str(tmp_path / "missing.json")]) == 1
    assert run_cli(["nonsense"]) == 1
    assert run_cli(["sweep", "--axis", "k0=1,2", "--jobs", "0"]) == 1
    monkeypatch.setenv("QSSA_LAB_JOBS", "many")
    assert run_cli(["sweep", "--axis", "k0=1,2"]) == 1
    # Picard alone does not converge on the default point
    assert run_cli(["manifold", "--out", str(tmp_path), "--method", "picard",
                    "--max-iter", "4", "--n-grid", "301"]) == 2
    assert "numerical failure" in capsys.readouterr().err
