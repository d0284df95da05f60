import csv
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from magnon_metrology.cli import CRITICAL_HEADER, SERIES_HEADER, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def shipped(name, tmp_path, **overrides):
    cfg = json.loads((CONFIGS / name).read_text())
    if "output" in cfg:
        cfg["output"] = str(tmp_path / Path(cfg["output"]).name)
    cfg.update(overrides)
    return cfg


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fig2a_series(tmp_path):
    cfg = shipped("fig2a.json", tmp_path)
    assert main(["run", write_config(tmp_path, cfg)]) == 0
    out = Path(cfg["output"])
    assert out.read_text().splitlines()[0] == ",".join(SERIES_HEADER)
    rows = read_csv(out)
    assert len(rows) == 100
    best = max(rows, key=lambda r: float(r["F_C"]) / float(r["t"]) ** 2)
    t_star = math.pi / (2 * 0.05)
    assert abs(float(best["t"]) - t_star) <= 0.02 * t_star
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["config"]["model"]["kappa"] == 0.0
    assert side["config"]["t_grid"]["units"] == "t_star"


def test_fig3c_sidecar_slopes(tmp_path):
    cfg = shipped("fig3c.json", tmp_path)
    assert main(["run", write_config(tmp_path, cfg)]) == 0
    out = Path(cfg["output"])
    side = json.loads(out.with_suffix(".json").read_text())
    slopes = {f["fraction"]: f["slope_F_C_over_t_star_sq"] for f in side["fits"]}
    assert slopes[1.0] == pytest.approx(-2.0, abs=0.05)
    assert slopes[0.25] == pytest.approx(-1.0, abs=0.05)
    assert out.read_text().splitlines()[0] == ",".join(CRITICAL_HEADER)
    assert len(read_csv(tmp_path / "fig3c_f0.25.csv")) == 10


def test_rerun_is_byte_identical(tmp_path):
    cfg = shipped("fig2b.json", tmp_path)
    path = write_config(tmp_path, cfg)
    assert main(["run", path]) == 0
    first = Path(cfg["output"]).read_bytes()
    assert main(["--threads", "4", "run", path]) == 0
    assert Path(cfg["output"]).read_bytes() == first
    assert main(["run", "--threads", "0", path]) == 0
    assert Path(cfg["output"]).read_bytes() == first


def test_csv_floats_round_trip(tmp_path):
    cfg = shipped("fig2b.json", tmp_path)
    main(["run", write_config(tmp_path, cfg)])
    for row in read_csv(cfg["output"]):
        for text in row.values():
            assert repr(float(text)) == text


def test_empty_grid_names_the_field(tmp_path, capsys):
    cfg = shipped("fig2a.json", tmp_path)
    cfg["t_grid"]["count"] = 0
    assert main(["run", write_config(tmp_path, cfg)]) == 2
    assert "t_grid" in capsys.readouterr().err


def test_unknown_field_rejected(tmp_path, capsys):
    cfg = shipped("fig2a.json", tmp_path)
    cfg["model"]["kapa"] = 0.1
    assert main(["run", write_config(tmp_path, cfg)]) == 2
    assert "kapa" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [
        {"mode": "bogus"},
        {"model": {"omega_c": 2.0, "B0": 2.0}},
        {"model": {"omega_c": -2.0, "B0": 2.0, "g": 0.05}},
        {"t_grid": {"start": 0, "stop": 1, "count": 5, "spacing": "cubic"}},
    ],
)
def test_invalid_configs_exit_2(tmp_path, patch):
    cfg = shipped("fig2a.json", tmp_path, **patch)
    assert main(["run", write_config(tmp_path, cfg)]) == 2


def test_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


def test_superradiant_critical_config_exit_2(tmp_path):
    cfg = shipped("fig3a.json", tmp_path)
    cfg["model"]["g"] = 1.5
    assert main(["run", write_config(tmp_path, cfg)]) == 2


def test_oracle_check_fock(tmp_path, capsys):
    cfg = shipped("oracle_rwa.json", tmp_path)
    assert main(["oracle-check", write_config(tmp_path, cfg)]) == 0
    assert "max discrepancy" in capsys.readouterr().out


def test_oracle_check_lyapunov_lossless(tmp_path, capsys):
    cfg = shipped("oracle_lyapunov.json", tmp_path, output=str(tmp_path / "report.json"))
    cfg["model"].update(kappa=0.0, n_noise=0.0)
    assert main(["oracle-check", write_config(tmp_path, cfg)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["joint_relative_discrepancy"] < 1e-9
    assert report["max_discrepancy"] < 1e-8


def test_oracle_check_lyapunov_dissipative(tmp_path):
    cfg = shipped("oracle_lyapunov.json", tmp_path)
    assert main(["oracle-check", write_config(tmp_path, cfg)]) == 0


def test_oracle_check_tiny_cutoff_exit_3(tmp_path, capsys):
    cfg = shipped("oracle_rwa.json", tmp_path, cutoff=4)
    assert main(["oracle-check", write_config(tmp_path, cfg)]) == 3
    err = capsys.readouterr().err
    assert "fock_evolve" in err and "cutoff" in err


def test_oracle_check_critical(tmp_path):
    cfg = {
        "mode": "oracle-check",
        "model_type": "critical",
        "model": {"omega_c": 2.0, "omega_m": 2.0, "g": 0.1},
        "t": 3.0,
        "oracle": "fock",
    }
    assert main(["oracle-check", write_config(tmp_path, cfg)]) == 0


def test_fit_subcommand(tmp_path, capsys):
    cfg = shipped("nu0.json", tmp_path)
    assert main(["run", write_config(tmp_path, cfg)]) == 0
    capsys.readouterr()
    assert main(["fit", cfg["output"], "--x", "N_c", "--y", "F_Q"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["slope"] == pytest.approx(2.0, abs=0.1)
    assert main(["fit", cfg["output"], "--x", "N_c", "--y", "nope"]) == 2


def test_fit_on_bad_data_exit_3(tmp_path):
    path = tmp_path / "neg.csv"
    path.write_text("x,y\n1,1\n2,-1\n3,2\n")
    assert main(["fit", str(path), "--x", "x", "--y", "y"]) == 3


def test_sweep_hl_sidecar(tmp_path):
    cfg = {
        "mode": "sweep-hl",
        "model": {"omega_c": 2.0, "B0": 2.0, "g": 0.05},
        "r0_grid": {"start": 0.5, "stop": 3.0, "count": 12, "spacing": "geometric"},
        "output": str(tmp_path / "hl.csv"),
    }
    assert main(["run", write_config(tmp_path, cfg)]) == 0
    side = json.loads((tmp_path / "hl.json").read_text())
    assert side["config"]["timing"] == "t_star"
    assert side["config"]["window"] == [0.5, 1.5]
    assert side["fits"]["F_C_vs_N_c"]["n_points"] == 12


def test_help_documents_fields(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--help"])
    text = capsys.readouterr().out
    for field in ("omega_c", "n_noise", "t_grid", "g_grid", "tail_tol", "spacing"):
        assert field in text


def test_negative_threads_rejected(tmp_path):
    cfg = shipped("fig2a.json", tmp_path)
    assert main(["--threads", "-1", "run", write_config(tmp_path, cfg)]) == 2


@pytest.mark.skipif(shutil.which("magnon-metrology") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = shipped("nu0.json", tmp_path)
    proc = subprocess.run(["magnon-metrology", "run", write_config(tmp_path, cfg)], capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "magnon_metrology", "fit", cfg["output"], "--x", "N_c", "--y", "F_Q"], capture_output=True, text=True)
    assert proc.returncode == 0
