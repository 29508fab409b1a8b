import csv

import numpy as np
import pytest

from maxagg import boxmodel, cli, experiments
from maxagg.csvio import fmt, read_csv


def rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_fmt_round_trips_doubles():
    for v in (0.1, 1 / 3, 2.0**-40, 123456789.123456789):
        assert float(fmt(v)) == v
    assert fmt(True) == "true" and fmt(3) == "3" and fmt(None) == ""


def test_config_file_then_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nk0 = 3\nsteps = 10\nschedule = 0, 5\nbirth_rule = exact\n", encoding="utf-8")
    cfg = cli.build_config("simulate", str(cfg_file), ["--steps", "20", "--center=0.25"])
    assert cfg.k0 == 3.0 and cfg.steps == 20 and cfg.center == 0.25
    assert cfg.schedule == (0, 5) and cfg.birth == "exact"


@pytest.mark.parametrize("argv", [
    ["simulate", "--k0", "-1"],
    ["simulate", "--bogus", "1"],
    ["simulate", "--k0", "abc"],
    ["simulate", "--k0", "3", "--steps", "-2"],
    ["simulate", "--k0", "3", "--profile", "/nonexistent.csv"],
    ["simulate", "--config", "/nonexistent.cfg"],
    ["simulate", "--k0"],
    ["simulate"],
    ["verify", "--k0", "1", "--T", "1.6"],
    ["verify", "--k0", "1", "--T", "1.0012"],
    ["experiment", "--name", "fig9"],
    ["selfsimilar"],
])
def test_config_errors_exit_1(argv, tmp_path):
    assert cli.main(argv + ["--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_simulate_outputs(tmp_path):
    out = tmp_path / "sim"
    code = cli.main(["simulate", "--k0", "3", "--steps", "1000", "--schedule", "0,200,1000", "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["series.csv", "snapshot_0.csv", "snapshot_1000.csv", "snapshot_200.csv"]
    series = rows(out / "series.csv")
    assert series[0] == ["step", "t", "N", "mass", "birth"] and len(series) == 1002
    snap = rows(out / "snapshot_200.csv")
    assert snap[0] == ["i", "x", "G", "rescaled_y", "rescaled_G"] and len(snap) == 401
    raw = (out / "series.csv").read_bytes()
    assert b"\r" not in raw


def test_simulate_zero_steps(tmp_path):
    out = tmp_path / "zero"
    assert cli.main(["simulate", "--k0", "3", "--steps", "0", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["series.csv", "snapshot_0.csv"]
    assert len(rows(out / "series.csv")) == 2


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "--k0", "1", "--steps", "300", "--schedule", "100", "--center", "0.75"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    for name in ("series.csv", "snapshot_100.csv", "snapshot_300.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_from_profile_file_with_perturbation(tmp_path):
    prof = tmp_path / "p.csv"
    prof.write_text("y,G\n0,2\n1,2\n", encoding="utf-8")
    out = tmp_path / "sim"
    code = cli.main(["simulate", "--k0", "2", "--steps", "5", "--profile", str(prof),
                     "--perturb_cell", "100", "--perturb", "0.01", "--out", str(out)])
    assert code == 0
    g0 = read_csv(out / "snapshot_0.csv")["G"]
    ratio = g0[99] / g0[98]
    assert ratio == pytest.approx(1.01, rel=1e-12)


def test_simulate_degenerate_exit_2(tmp_path, monkeypatch):
    real = boxmodel.run

    def failing(*args, **kwargs):
        rep = real(*args, **kwargs)
        rep.error = "degenerate state: N=0 at step 3"
        return rep

    monkeypatch.setattr(boxmodel, "run", failing)
    out = tmp_path / "deg"
    assert cli.main(["simulate", "--k0", "1", "--steps", "3", "--out", str(out)]) == cli.EXIT_DEGENERATE
    assert (out / "series.csv").exists()


def test_selfsimilar_branch_pair(tmp_path, capsys):
    out = tmp_path / "ss"
    assert cli.main(["selfsimilar", "--k0", "3", "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"profile_subcritical.csv", "profile_supercritical.csv", "summary.csv"}
    summary = rows(out / "summary.csv")
    assert summary[0] == ["k0", "G_half", "N", "m", "G1", "tail_exp", "shape"]
    assert [r[-1] for r in summary[1:]] == ["Subcritical", "Supercritical"]
    assert "shape=Supercritical" in capsys.readouterr().out


def test_selfsimilar_trivial(tmp_path):
    out = tmp_path / "ss"
    assert cli.main(["selfsimilar", "--G_half", "2", "--D", "1", "--out", str(out)]) == 0
    prof = read_csv(out / "profile_trivial.csv")
    assert np.max(np.abs(prof["G"] - 2.0)) < 1e-8


def test_selfsimilar_no_branch(tmp_path, capsys):
    assert cli.main(["selfsimilar", "--k0", "1.5", "--out", str(tmp_path)]) == cli.EXIT_NO_BRANCH
    assert "k0=1.5 < 2" in capsys.readouterr().err


def test_scan(tmp_path):
    out = tmp_path / "scan"
    assert cli.main(["scan", "--scan_min", "1.8", "--scan_max", "2.2", "--scan_step", "0.2", "--out", str(out)]) == 0
    table = read_csv(out / "moment_curve.csv")
    np.testing.assert_allclose(table["G_half"], [1.8, 2.0, 2.2])
    assert table["N"][1] == pytest.approx(2.0, abs=1e-8)


def test_verify(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["verify", "--k0", "1", "--T", "1.1", "--out", str(out)]) == 0
    v = read_csv(out / "verify.csv")
    assert v["l1"][0] < 5e-2
    res = read_csv(out / "residuals.csv")["residual"]
    assert res[-1] < 1e-10 and np.all(np.diff(res) < 0)


def test_verify_smallest_horizon(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["verify", "--k0", "1", "--T", "1.005", "--out", str(out)]) == 0
    assert read_csv(out / "verify.csv")["l1"][0] < 1e-3


def test_verify_discrepancy_grows_with_horizon(tmp_path):
    l1 = []
    for T in ("1.1", "1.5"):
        out = tmp_path / T
        assert cli.main(["verify", "--k0", "3", "--T", T, "--out", str(out)]) == 0
        l1.append(read_csv(out / "verify.csv")["l1"][0])
    assert l1[0] < l1[1]


def test_verify_nonconvergence_exit_4(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["verify", "--k0", "3", "--T", "1.1", "--max_iter", "2", "--out", str(out)]) == cli.EXIT_NONCONVERGENCE
    assert len(rows(out / "residuals.csv")) == 3


def test_experiment_scaled_nbound(tmp_path):
    assert cli.main(["experiment", "--name", "nbound", "--steps_scale", "0.01", "--out", str(tmp_path)]) == 0
    acc = rows(tmp_path / "nbound" / "acceptance.csv")
    assert acc[0] == ["criterion_id", "value", "threshold", "pass"]
    assert all(r[3] == "true" for r in acc[1:])
    assert (tmp_path / "nbound" / "k0_0.3" / "series.csv").exists()


def test_experiment_records_failed_runs(tmp_path, monkeypatch):
    def boom(spec, out):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(experiments, "execute", boom)
    assert cli.main(["experiment", "--name", "nbound", "--steps_scale", "0.01", "--out", str(tmp_path)]) == 0
    acc = rows(tmp_path / "nbound" / "acceptance.csv")
    assert acc[1] == ["nbound_k0_0.3_completed", "0", "1", "false"]


def test_worker_env_override(monkeypatch):
    monkeypatch.delenv("MAXAGG_WORKERS", raising=False)
    assert experiments.worker_count(3) == 3
    monkeypatch.setenv("MAXAGG_WORKERS", "2")
    assert experiments.worker_count(5) == 2


def test_recipes_follow_schedules():
    fig1 = experiments.recipe("fig1")
    assert [s.center for s in fig1] == [0.25, 0.5, 0.75]
    assert fig1[0].schedule == (0, 1000, 25000, 150000)
    assert fig1[1].schedule == (0, 200, 1000, 25000)
    assert all(s.k0 == 2.0 for s in experiments.recipe("fig3"))
    assert experiments.recipe("fig2")[0].schedule == (0, 200, 1000, 5000, 25000)
    (inst,) = experiments.recipe("instability")
    assert inst.seed == "subcritical" and inst.perturb_cell == 100 and inst.perturb == 0.01
    assert experiments.recipe("nbound")[0].steps == 150000
    assert experiments.recipe("fig2", steps_scale=0.1)[0].schedule == (0, 20, 100, 500, 2500)
