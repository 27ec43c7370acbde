import csv
import subprocess
import sys

import numpy as np
import pytest

from kszk.cli import main, sweep_workers
from kszk.io import read_series, read_snapshot

SMALL = """n = 2
lengths = 1, 1
modes = 6
dt = 1e-4
t_end = 1e-3
record_every = 2
ic.amplitude = 0.5
c_s = 0.005
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL + f"output_path = {tmp_path / 'out.csv'}\n")
    return path


def test_check_admissible(cfg, capsys):
    assert main(["check", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "a                  = 19.7392088" in out
    assert "theta              = 0.7242603291" in out
    assert "decay_rate         = 141.0990807" in out
    assert "ADMISSIBLE" in out


def test_check_inadmissible(cfg, capsys):
    assert main(["check", "--config", str(cfg), "--override", "lengths=10,10"]) == 2
    out = capsys.readouterr().out
    assert "NOT ADMISSIBLE" in out and "3+sqrt(5)" in out


def test_check_smallness_failure(cfg, capsys):
    assert main(["check", "--config", str(cfg), "--override", "c_s=10"]) == 2
    assert "smallness margin" in capsys.readouterr().out


def test_usage_errors(cfg, tmp_path, capsys):
    assert main([]) == 1
    assert main(["check"]) == 1
    assert main(["explode", "--config", str(cfg)]) == 1
    assert main(["check", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert main(["check", "--config", str(cfg), "--override", "bogus=1"]) == 1
    assert main(["check", "--config", str(cfg), "--override", "nonsense"]) == 1
    assert "error" in capsys.readouterr().err


def test_run_writes_series_and_snapshot(cfg, tmp_path):
    snap = tmp_path / "final.bin"
    assert main(["run", "--config", str(cfg), "--snapshot", str(snap)]) == 0
    series = read_series(str(tmp_path / "out.csv"))
    assert [r.t for r in series] == pytest.approx([0, 2e-4, 4e-4, 6e-4, 8e-4, 1e-3])
    assert series[-1].h2_sq_total < series[0].h2_sq_total
    assert read_snapshot(str(snap)).shape == (2, 6, 6)


def test_run_bit_identical(cfg, tmp_path):
    out = tmp_path / "out.csv"
    main(["run", "--config", str(cfg)])
    first = out.read_bytes()
    main(["run", "--config", str(cfg)])
    assert out.read_bytes() == first


def test_run_blowup_exit_code(cfg, tmp_path, capsys):
    code = main(["run", "--config", str(cfg), "--override", "ic.amplitude=1e5", "--override", "record_every=1"])
    assert code == 3
    assert "blow-up" in capsys.readouterr().err
    partial = read_series(str(tmp_path / "out.csv"))
    assert partial and partial[0].t == 0.0


def test_sweep_serial_and_resume(cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KSZK_THREADS", "1")
    args = ["sweep", "--config", str(cfg), "--override", "sweep.scale=0.5,4,3", "--override", "sweep.amplitude=0.1,0.5,2"]
    assert main(args) == 0
    rows = list(csv.DictReader(open(tmp_path / "out.csv")))
    assert len(rows) == 6
    keys = [(float(r["scale"]), float(r["amplitude"])) for r in rows]
    assert keys == sorted(keys)
    by_scale = {float(r["scale"]): r for r in rows}
    assert by_scale[0.5]["geometric_ok"] == "true"
    assert by_scale[4.0]["geometric_ok"] == "false"
    assert all(r["classified"] in {"decayed", "grew", "blowup", "error"} for r in rows)
    first = (tmp_path / "out.csv").read_bytes()
    assert main(args + ["--resume"]) == 0
    assert (tmp_path / "out.csv").read_bytes() == first


def test_sweep_parallel_matches_serial(cfg, tmp_path, monkeypatch):
    args = ["sweep", "--config", str(cfg), "--override", "sweep.scale=0.5,1,2", "--override", "sweep.amplitude=0.1,0.5,2"]
    monkeypatch.setenv("KSZK_THREADS", "1")
    main(args)
    serial = (tmp_path / "out.csv").read_bytes()
    monkeypatch.setenv("KSZK_THREADS", "2")
    main(args)
    assert (tmp_path / "out.csv").read_bytes() == serial


def test_sweep_reports_blowup_rows(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("KSZK_THREADS", "1")
    main(["sweep", "--config", str(cfg), "--override", "sweep.amplitude=0.1,1e5,2"])
    rows = list(csv.DictReader(open(tmp_path / "out.csv")))
    assert [r["classified"] for r in rows] == ["decayed", "blowup"]


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("KSZK_THREADS", "1")
    assert sweep_workers() == 1
    monkeypatch.setenv("KSZK_THREADS", "junk")
    assert sweep_workers() >= 1


def test_verify_passes_and_broken_tolerance_fails(cfg, capsys):
    assert main(["verify", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "9/9 suites passed" in out
    assert main(["verify", "--config", str(cfg), "--inject-broken-tolerance"]) != 0
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point(cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "kszk", "check", "--config", str(cfg), "--override", "lengths=10,10"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "NOT ADMISSIBLE" in proc.stdout


def test_single_step_csv_has_header_and_two_rows(cfg, tmp_path):
    assert main(["run", "--config", str(cfg), "--override", "t_end=1e-4", "--override", "record_every=1"]) == 0
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert len(lines) == 3
    assert all(len(v.split(",")) == 7 for v in lines)
