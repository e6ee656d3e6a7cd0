import csv
import re
import subprocess
import sys

import pytest

from swiptpep.analysis import diversity_order, pep_bound
from swiptpep.cli import NOISE_COLUMNS, main
from swiptpep.harness import CSV_COLUMNS
from swiptpep.phy import SchemeVariant, SystemConfig


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_pep_example(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code = main(["pep", "--env", "NG", "--scheme", "blind-aeh", "--snr", "0:45:5", "--trials", "1e6",
                 "--seed", "7", "--out", str(out)])
    assert code == 0
    rows = read(out)
    assert len(rows) == 10
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert {r["trials"] for r in rows} == {"1000000"}
    assert "10 rows" in capsys.readouterr().err


def test_analytical_only_to_stdout(capsys):
    assert main(["pep", "--scheme", "csi", "--eh", "aeh", "--snr", "10,20"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    assert lines[1].split(",")[11] == ""


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    out = tmp_path / "o.csv"
    cfg.write_text(f"env: HI\nscheme: blind\neh: ieh\nsnr_db: [5, 10]\ntheta1: 0.3\nout: {out}\n")
    assert main(["pep", "--config", str(cfg), "--env", "MI"]) == 0
    rows = read(out)
    assert [r["noise_env"] for r in rows] == ["MI", "MI"]
    assert rows[0]["theta1"] == "0.3"
    # combined scheme on the command line replaces the file's EH mode
    assert main(["pep", "--config", str(cfg), "--scheme", "csi-aeh"]) == 0
    assert read(out)[0]["eh_mode"] == "aeh"


def test_missing_config_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["pep", "--config", str(tmp_path / "nope.yaml"), "--out", str(out)]) != 0
    assert not out.exists()
    assert "cannot read config file" in capsys.readouterr().err


def test_malformed_config(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("env: [HI\n")
    assert main(["pep", "--config", str(cfg)]) != 0


def test_unknown_flag():
    assert main(["pep", "--bogus", "1"]) != 0


def test_unwritable_output(tmp_path, capsys):
    assert main(["pep", "--snr", "10", "--out", str(tmp_path / "no" / "dir.csv")]) != 0
    assert "error" in capsys.readouterr().err


def test_invalid_value():
    assert main(["pep", "--theta1", "1.5"]) != 0
    assert main(["pep", "--trials", "12.5"]) != 0


def test_diversity_single(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["diversity", "--env", "HI", "--scheme", "csi-aeh", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    printed = float(re.search(r"diversity order ([0-9.]+)", err).group(1))
    cfg = SystemConfig(variant=SchemeVariant("csi", "aeh"), environment="HI")
    expected = diversity_order([75, 80], [pep_bound(cfg, 75), pep_bound(cfg, 80)])
    assert printed == pytest.approx(expected, abs=1e-4)
    rows = read(out)
    assert [float(r["snr_db"]) for r in rows] == [50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0]


def test_diversity_table(capsys):
    assert main(["diversity", "--all"]) == 0
    err = capsys.readouterr().err.splitlines()
    assert len(err) == 5
    assert err[1].startswith("blind-ieh")


def test_sweep(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--sweep", "scenario", "--env", "HI", "--snr", "30", "--out", str(out)]) == 0
    rows = read(out)
    assert [(r["d_sr1"], r["d_sr2"]) for r in rows][0] == ("0.8", "0.8")
    assert len(rows) == 6


def test_sweep_requires_kind():
    assert main(["sweep", "--snr", "30"]) != 0


def test_noise_check(tmp_path):
    out = tmp_path / "n.csv"
    assert main(["noise-check", "--env", "NG", "--trials", "300000", "--seed", "2", "--out", str(out)]) == 0
    rows = read(out)
    assert list(rows[0]) == list(NOISE_COLUMNS)
    assert rows[0]["passed"] == "1"


def test_module_entry_point():
    result = subprocess.run([sys.executable, "-m", "swiptpep", "pep", "--snr", "20"], capture_output=True,
                            text=True, check=False)
    assert result.returncode == 0
    assert result.stdout.startswith("snr_db,")
