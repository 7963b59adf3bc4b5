import csv
import subprocess
import sys

import pytest

from maxcloak.cli import CsvSink, main
from maxcloak.config import ConfigError, ExperimentConfig


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_sweep_rho_rows(tmp_path):
    assert main(["sweep-rho", "--out", str(tmp_path), "--workers", "1"]) == 0
    rows = _rows(tmp_path / "sweep_rho.csv")
    assert [r["row_type"] for r in rows] == ["record"] * 3 + ["summary"]
    assert 2.7 <= float(rows[-1]["slope"]) <= 3.3
    assert len({r["config_hash"] for r in rows}) == 1
    assert list(rows[0])[0] == "config_hash" and list(rows[0])[-1] == "timestamp"


def test_verify_identities(tmp_path):
    assert main(["verify-identities", "--out", str(tmp_path), "--workers", "1"]) == 0
    rows = _rows(tmp_path / "identities.csv")
    assert len(rows) == 6
    assert all(r["ok"] == "true" for r in rows)
    assert all(float(r["residual"]) < 1e-5 for r in rows)
    assert {"lhs_re", "lhs_im", "rhs_re", "rhs_im"} <= set(rows[0])


def test_verify_identities_fails_on_tight_tolerance(tmp_path):
    assert main(["verify-identities", "--out", str(tmp_path), "--tol", "1e-30"]) == 1
    assert any(r["ok"] == "false" for r in _rows(tmp_path / "identities.csv"))


def test_determinism(tmp_path):
    cfg = _write(tmp_path, "[sweep]\nrhos = 0.1\nomegas = 0.5, 1.0\n")
    for d in ("a", "b"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / d), "--workers", "1"]) == 0
    for name in ("solve.csv", "solve_coefficients.csv"):
        a, b = _rows(tmp_path / "a" / name), _rows(tmp_path / "b" / name)
        for ra, rb in zip(a, b):
            ra.pop("timestamp"), rb.pop("timestamp")
        assert a == b


def test_append_or_new_file(tmp_path):
    for _ in range(2):
        main(["sweep-rho", "--out", str(tmp_path), "--workers", "1"])
    assert len(_rows(tmp_path / "sweep_rho.csv")) == 8
    sink = CsvSink(tmp_path, "sweep_rho", "abc")
    sink.add({"other": 1.0})
    assert sink.flush().name == "sweep_rho-2.csv"
    assert len(_rows(tmp_path / "sweep_rho.csv")) == 8


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["transmogrify"])
    assert info.value.code == 2


def test_solver_failure_exits_1(tmp_path, capsys):
    cfg = _write(tmp_path, "[sweep]\nrhos = 0.1\nomegas = 1.0\n[solver]\nn_max_cap = 5\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "TruncationError" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.ini")]) == 2


def test_config_errors_are_aggregated(tmp_path, capsys):
    cfg = _write(tmp_path, "[sweep]\nrhos = 0.1, x\nfoo = 1\n[colour]\nhue = red\n")
    assert main(["sweep-rho", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "sweep.rhos" in err and "sweep.foo" in err and "[colour]" in err


def test_validation_problems_are_aggregated():
    cfg = ExperimentConfig()
    cfg.sweep.rhos = (0.05, 0.1)
    cfg.source.r_in = 1.0
    cfg.medium.kind = "glass"
    with pytest.raises(ConfigError) as info:
        cfg.validate("sweep-rho")
    assert len(info.value.problems) >= 4


def test_print_config_round_trip(capsys):
    assert main(["print-config"]) == 0
    text = capsys.readouterr().out
    cfg = ExperimentConfig.from_ini(text)
    assert cfg == ExperimentConfig()
    assert cfg.hash() == ExperimentConfig().hash()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "maxcloak.cli", "--help"], capture_output=True,
                         text=True, check=True).stdout
    for cmd in ("solve", "sweep-rho", "sweep-omega", "time-domain", "verify-identities",
                "print-config"):
        assert cmd in out
