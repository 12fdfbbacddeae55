import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ufgflow.cli import main
from ufgflow.config import OUTPUT_ENV
from ufgflow.fieldio import read_field

GROUND_1D = """\
model.alpha = 0.3
model.beta = 10
grid.bounds = -10 10
grid.counts = 400
"""

GROUND_2D_ROT = """\
[model]
dim = 2
alpha = 0.1
beta = 10
omega = 0.4
epsilon = 1e-4
[grid]
bounds = -6 6
counts = 48
[solver]
dt = 0.05
max_steps = 3000
"""

NUMERIC = ("field.ufgf", "density.csv", "profile.csv", "history.csv", "summary.txt")


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["run", _cfg(tmp_path, GROUND_1D), "--out", str(out), "--quiet"]) == 0
    for name in NUMERIC + ("manifest.json", "density.png", "history.png"):
        assert (out / name).is_file(), name
    hist = _read_csv(out / "history.csv")
    assert hist[0] == ["step", "energy", "mu", "increment", "linear_iterations"]
    assert len(hist) > 2
    dens = _read_csv(out / "density.csv")
    assert dens[0] == ["x", "density"] and len(dens) == 402
    summary = (out / "summary.txt").read_text()
    assert "converged,true" in summary
    f = read_field(out / "field.ufgf")
    assert f.grid.counts == (400,)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)


def test_manifest_records_resolved_config(tmp_path):
    out = tmp_path / "o"
    main(["run", _cfg(tmp_path, GROUND_1D), "--out", str(out), "--quiet", "--seed", "17"])
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 17
    assert man["config"]["solver.dt"] == 0.01
    assert man["config"]["solver.tol"] == 1e-6
    assert man["config"]["grid.counts"] == [400]
    assert "version" in man and "wall_clock_seconds" in man
    assert set(man["files"].values()) >= set(NUMERIC)


def test_manifest_replay_bitwise(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", _cfg(tmp_path, GROUND_2D_ROT), "--out", str(a), "--quiet"]) == 0
    assert main(["run", str(a / "manifest.json"), "--out", str(b), "--quiet"]) == 0
    names = NUMERIC + ("vortices.csv",)
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["config"] == mb["config"]


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["run", _cfg(tmp_path, "model.betaa = 1\n"), "--quiet"]) == 2
    assert "betaa" in capsys.readouterr().err


def test_alpha_half_exit_code(tmp_path, capsys):
    assert main(["run", _cfg(tmp_path, "model.alpha = 0.5\n"), "--quiet"]) == 2
    assert "1/2" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "nope.cfg"), "--quiet"]) == 2


def test_non_convergence_exits_zero(tmp_path):
    out = tmp_path / "o"
    text = GROUND_1D + "solver.max_steps = 3\n"
    assert main(["run", _cfg(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    assert "converged,false" in (out / "summary.txt").read_text()


def test_default_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "root"))
    cfg = _cfg(tmp_path, GROUND_1D + "output.figures = false\n")
    assert main(["run", cfg, "--quiet"]) == 0
    assert (tmp_path / "root" / "ground" / "summary.txt").is_file()


def test_vortex_run_census(tmp_path):
    out = tmp_path / "v"
    text = ("run.kind = vortex\nmodel.alpha = 0.3\nmodel.beta = 10\n"
            "grid.bounds = -8 8\ngrid.counts = 64\n")
    assert main(["run", _cfg(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    rows = _read_csv(out / "vortices.csv")
    assert rows[0] == ["x", "y", "winding", "core_density"]
    assert [r[:3] for r in rows[1:]] == [["0.0", "0.0", "1"]]


def test_sweep_table(tmp_path):
    out = tmp_path / "s"
    text = GROUND_1D.replace("model.alpha = 0.3\n", "") + (
        "run.kind = sweep\nsweep.alpha = 0, 0.2\nsweep.beta = 1, 5\noutput.figures = false\n")
    assert main(["sweep", _cfg(tmp_path, text), "--out", str(out), "--quiet"]) == 0
    rows = _read_csv(out / "sweep.csv")
    assert rows[0] == ["alpha", "beta", "energy", "converged", "vortex_count", "error"]
    assert len(rows) == 5
    assert all(r[3] == "true" for r in rows[1:])
    assert (out / "alpha0.2_beta5" / "summary.txt").is_file()
    energies = [float(r[2]) for r in rows[1:]]
    assert energies[0] < energies[1]          # beta raises the energy


def test_sweep_workers_match_serial(tmp_path):
    text = GROUND_1D.replace("model.alpha = 0.3\n", "") + (
        "run.kind = sweep\nsweep.alpha = 0.1, 0.4\noutput.figures = false\n")
    cfg = _cfg(tmp_path, text)
    assert main(["sweep", cfg, "--out", str(tmp_path / "s1"), "--quiet"]) == 0
    assert main(["sweep", cfg, "--out", str(tmp_path / "s2"), "--quiet", "--threads", "2"]) == 0
    assert (tmp_path / "s1" / "sweep.csv").read_bytes() == (tmp_path / "s2" / "sweep.csv").read_bytes()


def test_table1_small(tmp_path):
    out = tmp_path / "t1"
    cfg = _cfg(tmp_path, "grid.bounds = -16 16\ngrid.counts = 640\n")
    assert main(["table1", cfg, "--out", str(out), "--quiet"]) == 0
    rows = _read_csv(out / "table1.csv")
    assert len(rows) == 1 + 2 * 24
    text = (out / "table1.txt").read_text()
    assert text.count("alpha,") == 2
    # beta = 0, harmonic: sqrt(1 - 2 alpha) / 2 up to the coarse-grid error
    h = {(float(r[1]), float(r[2])): float(r[3]) for r in rows[1:] if r[0] == "harmonic"}
    assert h[(0.3, 0.0)] == pytest.approx(np.sqrt(0.4) / 2, abs=5e-4)
    assert (out / "table1_harmonic.png").is_file()


def test_table2_small(tmp_path):
    out = tmp_path / "t2"
    cfg = _cfg(tmp_path, "grid.bounds = -8 8\ngrid.counts = 32\noutput.figures = false\n")
    assert main(["table2", cfg, "--out", str(out), "--quiet"]) == 0
    rows = _read_csv(out / "table2.csv")
    assert len(rows) == 25
    assert all(float(r[3]) > float(r[2]) for r in rows[1:])


def test_dimred_small(tmp_path):
    out = tmp_path / "d"
    cfg = _cfg(tmp_path, "model.beta = 10\ndimred.gamma_perp = 8\ndimred.h_axial = 0.15\n"
                         "dimred.points_per_width = 5\ndimred.half_axial = 5\n")
    assert main(["dimred", cfg, "--out", str(out), "--quiet"]) == 0
    rows = _read_csv(out / "dimred.csv")
    assert rows[0][:4] == ["gamma_perp", "coupling", "profile_error", "transverse_error"]
    assert (out / "profile_g8.csv").is_file() and (out / "profile_g8.png").is_file()


def test_dimred_memory_guard_exit(tmp_path):
    cfg = _cfg(tmp_path, "dimred.gamma_perp = 8\ndimred.node_budget = 1000\n")
    assert main(["dimred", cfg, "--out", str(tmp_path / "d"), "--quiet"]) == 1


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ufgflow", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "ufgflow" in res.stdout
