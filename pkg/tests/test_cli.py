import csv
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rotwave.cli import main, resolve_config
from rotwave.config import load_config

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "d2_room_temperature.conf"
SHORT = ["--set", "time.stop=120", "--set", "carpet.start=250", "--set", "carpet.stop=260"]


def read_rows(path):
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row and not row[0].startswith("#")]


def manifest_entries(path):
    out = {}
    for line in Path(str(path) + ".manifest").read_text().splitlines():
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def test_populations(tmp_path):
    out = tmp_path / "pop.csv"
    assert main(["populations", str(CONFIG), "-o", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["J", "population", "spin_weight", "per_M_weight"]
    pops = np.array([float(r[1]) for r in rows[1:]])
    assert len(pops) == 9 and math.isclose(pops.sum(), 1.0, abs_tol=1e-10)
    assert [int(r[2]) for r in rows[1:4]] == [6, 3, 6]
    diag = manifest_entries(out)
    assert diag["diagnostics.command"] == "populations"
    assert diag["diagnostics.data_file"] == "pop.csv"
    assert float(diag["diagnostics.tail_mass"]) < 1e-5


def test_cold_populations(tmp_path):
    out = tmp_path / "cold.csv"
    assert main(["populations", str(CONFIG), "--set", "run.temperature=1", "-o", str(out)]) == 0
    assert float(read_rows(out)[1][1]) >= 0.999


def test_manifest_round_trips(tmp_path):
    out = tmp_path / "pop.csv"
    main(["populations", str(CONFIG), "--set", "run.temperature=290.5", "-o", str(out)])
    text = Path(str(out) + ".manifest").read_text()
    config = load_config(text)
    assert config.run.temperature == 290.5
    assert config == resolve_config(CONFIG.read_text(), ["run.temperature=290.5"])


def test_trace_and_rerun_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["trace", str(CONFIG), *SHORT, "-o", str(a)]) == 0
    assert main(["trace", str(CONFIG), *SHORT, "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_rows(a)
    assert rows[0] == ["t_fs", "cos2_raw", "cos2_smoothed"]
    values = np.array(rows[1:], dtype=float)
    assert values.shape == (121, 3)
    assert np.all((values[:, 1] >= 0) & (values[:, 1] <= 1))
    diag = manifest_entries(a)
    assert float(diag["diagnostics.max_norm_drift"]) <= 1e-8
    assert 1.4 < float(diag["diagnostics.kick_strength"]) < 1.6


def test_zero_intensity_trace(tmp_path):
    out = tmp_path / "null.csv"
    args = ["trace", str(CONFIG), *SHORT, "--set", "pulse.peak_intensity=0", "-o", str(out)]
    assert main(args) == 0
    values = np.array(read_rows(out)[1:], dtype=float)
    np.testing.assert_allclose(values[:, 1], 1 / 3, atol=1e-10)


def test_carpet_and_signal(tmp_path):
    carpet, signal = tmp_path / "carpet.csv", tmp_path / "signal.csv"
    assert main(["carpet", str(CONFIG), *SHORT, "--set", "theta.points=64", "-o", str(carpet)]) == 0
    rows = read_rows(carpet)
    assert rows[0] == ["t_fs", "theta_rad", "density"]
    assert len(rows) == 1 + 11 * 64
    assert float(manifest_entries(carpet)["diagnostics.max_column_norm_error"]) <= 1e-6
    assert main(["signal", str(CONFIG), *SHORT, "-o", str(signal)]) == 0
    values = np.array(read_rows(signal)[1:], dtype=float)
    assert values.shape == (11, 2)
    assert math.isclose(values[:, 1].mean(), 1.0, rel_tol=1e-9)


def test_spectrum_two_level(tmp_path):
    out = tmp_path / "spec.csv"
    args = ["spectrum", str(CONFIG), "--set", "analysis.spectrum_source=two_level", "-o", str(out)]
    assert main(args) == 0
    text = out.read_text()
    peaks = text.split("#freq_THz,amplitude,beat\n")[1].splitlines()
    assert len(peaks) == 1 and peaks[0].endswith(",0<->2")
    assert abs(float(peaks[0][1:].split(",")[0]) - 5.476) < 0.01


@pytest.mark.parametrize("window", [("300", "300"), ("0", "3000")])
def test_spectrum_bad_window(tmp_path, window, capsys):
    out = tmp_path / "spec.csv"
    args = ["spectrum", str(CONFIG), "--set", f"analysis.spectrum_start={window[0]}",
            "--set", f"analysis.spectrum_stop={window[1]}", "-o", str(out)]
    assert main(args) == 2
    assert not out.exists()
    assert "configuration error" in capsys.readouterr().err


def test_revivals_stdout(capsys):
    assert main(["revivals", str(CONFIG), "--set", "molecule.rotational_constant=15.2218"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0] == "fraction,time_fs"
    assert len(rows) == 9  # count 2 -> eight quarter revivals
    assert rows[4].startswith("1,")
    assert math.isclose(float(rows[4].split(",")[1]), 2 * 547.839, abs_tol=2e-3)


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("molecule.name = D2\npulse.fwhm_duration = -3\n")
    out = tmp_path / "x.csv"
    assert main(["populations", str(bad), "-o", str(out)]) == 2
    assert not out.exists()
    assert "pulse.fwhm_duration" in capsys.readouterr().err
    bad.write_text("molecule.name = D2\nrun.bogus = 1\n")
    assert main(["populations", str(bad), "-o", str(out)]) == 2
    assert main(["populations", str(CONFIG), "--set", "novalue", "-o", str(out)]) == 2


def test_tail_mass_is_config_error(tmp_path):
    out = tmp_path / "x.csv"
    assert main(["populations", str(CONFIG), "--set", "run.j_init_cut=3", "-o", str(out)]) == 2


def test_convergence_failure_exit_code(tmp_path):
    out = tmp_path / "x.csv"
    args = ["trace", str(CONFIG), *SHORT, "--set", "pulse.peak_intensity=1e15",
            "--set", "run.j_max=16", "-o", str(out)]
    assert main(args) == 3
    assert not out.exists()


def test_io_errors(tmp_path):
    assert main(["populations", str(tmp_path / "missing.conf")]) == 4
    target = tmp_path / "no_such_dir" / "out.csv"
    assert main(["populations", str(CONFIG), "-o", str(target)]) == 4


def test_module_entry_point(tmp_path):
    out = tmp_path / "rev.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "rotwave", "revivals", str(CONFIG), "-o", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(read_rows(out)) == 9
