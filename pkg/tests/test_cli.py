import csv
import os

import numpy as np
import pytest

from siamp.cli import main


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(
        "num_devices = 60\n"
        "pilot_length = 24\n"
        "num_blocks = 2\n"
        "activity_rate = 0.1\n"
        "persistence = 0.46\n"
        "gamma = 1.0\n"
        "noise_variance = 0.1\n"
        "rng_seed = 5\n"
        "num_trials = 3\n"
        "se_sample_count = 2000\n"
        "l_grid = -8:8:17\n")
    return path


def test_simulate_writes_outputs(tiny_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", str(tiny_config), "--out-dir", str(out)])
    assert code == 0
    for name in ("roc.csv", "nmse.csv", "se_trace.csv", "denoiser_curve.csv",
                 "threshold_curve.csv", "metadata.json"):
        assert (out / name).exists()
    stdout = capsys.readouterr().out
    assert "completed 3 trials" in stdout


def test_roc_subcommand(tiny_config, tmp_path):
    out = tmp_path / "roc_out"
    assert main(["roc", str(tiny_config), "--out-dir", str(out),
                 "--trials", "2"]) == 0
    with open(out / "roc.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {row["variant"] for row in rows} == {"si", "nosi"}
    assert len(rows) == 2 * 2 * 17


def test_se_trace_subcommand(tiny_config, tmp_path):
    out = tmp_path / "se_out"
    assert main(["se-trace", str(tiny_config), "--out-dir", str(out)]) == 0
    with open(out / "se_trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["tau_sq"]) >= 0.1 for r in rows)


def test_denoiser_curve(tmp_path):
    assert main(["denoiser-curve", "--out-dir", str(tmp_path),
                 "--points", "50"]) == 0
    with open(tmp_path / "denoiser_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    variants = {r["variant"] for r in rows}
    assert variants == {"si", "nosi"}
    assert len(rows) == 3 * 50  # nosi plus the two default SI magnitudes


def test_detector_curve(tmp_path, capsys):
    assert main(["detector-curve", "--out-dir", str(tmp_path),
                 "--points", "40"]) == 0
    with open(tmp_path / "threshold_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    values = np.array([float(r["threshold_si"]) for r in rows])
    assert np.all(np.diff(values) <= 1e-25)
    assert "limits:" in capsys.readouterr().out


def test_dump_traces(tiny_config, tmp_path):
    out = tmp_path / "traces_out"
    assert main(["dump-traces", str(tiny_config), "--out-dir", str(out)]) == 0
    with open(out / "traces.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60 * 2


def test_amp_trace(tiny_config, tmp_path):
    out = tmp_path / "amp_out"
    assert main(["amp-trace", str(tiny_config), "--out-dir", str(out)]) == 0
    with open(out / "amp_trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {row["block"] for row in rows} == {"1", "2"}
    taus = [float(r["tau"]) for r in rows if r["block"] == "1"]
    assert all(t > 0 for t in taus)


def test_oracle_check_passes(capsys):
    assert main(["oracle-check", "--samples", "300", "--seed", "3"]) == 0
    assert "oracle-check: PASS" in capsys.readouterr().out


def test_missing_config_is_error(capsys):
    assert main(["simulate"]) == 2
    assert "error:" in capsys.readouterr().err


def test_invalid_config_nonzero_exit(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("num_devices = 10\npilot_length = 5\ngamma = 1\n"
                    "activity_rate = 1.9\n")
    assert main(["simulate", str(path)]) == 2
    assert "activity_rate" in capsys.readouterr().err


def test_preset_flag(tmp_path):
    out = tmp_path / "preset_out"
    code = main(["roc", "--preset", "fig3-desk", "--trials", "2",
                 "--out-dir", str(out), "--seed", "9"])
    assert code == 0
    assert os.path.exists(out / "roc.csv")