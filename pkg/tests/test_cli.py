import subprocess
import sys

import pytest

from swesplit.cli import (
    EXIT_BLOW_UP,
    EXIT_COMPLETED,
    EXIT_CONFIG_ERROR,
    EXIT_ITERATION_FAILURE,
    main,
)

POND = """
[grid]
lx = 1.0
ly = 1.0
mx = 8
my = 8

[initial]
kind = uniform
h0 = 0.3

[boundary]
kind = fixed
h = 0.3

[time]
T = 0.06
k = 0.02
"""


def write_config(tmp_path, text=POND):
    path = tmp_path / "pond.cfg"
    path.write_text(text)
    return path


class TestPentaCheck:
    def test_passes(self, capsys):
        assert main(["penta-check", "--n", "20"]) == EXIT_COMPLETED
        out = capsys.readouterr().out
        assert "n=20" in out and "OK" in out

    def test_trivial_size(self, capsys):
        assert main(["penta-check", "--n", "1"]) == EXIT_COMPLETED

    def test_bad_size(self):
        assert main(["penta-check", "--n", "0"]) == EXIT_CONFIG_ERROR


class TestVerify:
    def test_quick_basin_run(self, capsys):
        code = main(["verify", "--example", "1", "--dx", "0.5",
                     "--k", "0.05", "--periods", "0.05"])
        assert code == EXIT_COMPLETED
        out = capsys.readouterr().out
        assert "e_h=" in out


class TestConvergence:
    def test_tiny_spatial_ladder(self, tmp_path, capsys):
        code = main(["convergence", "--example", "1", "--mode", "spatial",
                     "--dx-exponents", "1", "--k-exponent", "2",
                     "--out", str(tmp_path)])
        assert code == EXIT_COMPLETED
        csv_path = tmp_path / "convergence_ex1_spatial.csv"
        header = csv_path.read_text().splitlines()[0]
        assert header == "dx,dy,k,e_h,order_h,e_u,order_u,e_v,order_v"

    def test_rejects_unknown_mode(self):
        with pytest.raises(SystemExit):
            main(["convergence", "--example", "1", "--mode", "diagonal"])

    def test_invalid_thread_count(self, monkeypatch):
        monkeypatch.setenv("SWE_THREADS", "zero")
        assert main(["convergence", "--example", "1", "--mode", "spatial",
                     "--dx-exponents", "1",
                     "--k-exponent", "2"]) == EXIT_CONFIG_ERROR


class TestRun:
    def test_config_run_writes_series(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == EXIT_COMPLETED
        assert "Completed" in capsys.readouterr().out
        series = (tmp_path / "series.csv").read_text()
        assert series.startswith("n,t,k,")
        assert (tmp_path / "governor.csv").exists()

    def test_both_sources_rejected(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["run", "--config", str(cfg),
                     "--preset", "logone:wet:min"]) == EXIT_CONFIG_ERROR

    def test_neither_source_rejected(self):
        assert main(["run"]) == EXIT_CONFIG_ERROR

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG_ERROR

    def test_invalid_preset_name(self):
        assert main(["run", "--preset", "logone:soggy:min"]) == EXIT_CONFIG_ERROR

    def test_malformed_config_reports_line(self, tmp_path, capsys):
        cfg = write_config(tmp_path, POND + "\n[grid]\nwhat = 1\n")
        assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG_ERROR
        assert "line" in capsys.readouterr().err

    def test_blow_up_exit_code(self, tmp_path, capsys):
        torrent = POND.replace("h0 = 0.3", "h0 = 0.5\nu0 = 40.0\nv0 = 40.0")
        torrent = torrent.replace("T = 0.06", "T = 50.0").replace("k = 0.02", "k = 1.0")
        torrent += "\n[solver]\nfilter_strength = 0\nfroude_cap = 0\n"
        cfg = write_config(tmp_path, torrent)
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
        assert code in (EXIT_BLOW_UP, EXIT_ITERATION_FAILURE)
        # the partial series is still written for post-mortems
        assert (tmp_path / "series.csv").exists()

    def test_iteration_failure_exit_code(self, tmp_path):
        stubborn = POND.replace("h = 0.3", "h = 0.6")
        stubborn += "\n[solver]\npicard_max_iters = 1\npicard_tol = 1e-16\n"
        cfg = write_config(tmp_path, stubborn)
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path)])
        assert code == EXIT_ITERATION_FAILURE

    def test_max_steps_short_circuit(self, tmp_path):
        cfg = write_config(tmp_path)
        code = main(["run", "--config", str(cfg), "--out", str(tmp_path),
                     "--max-steps", "1"])
        assert code == EXIT_COMPLETED
        assert len((tmp_path / "series.csv").read_text().splitlines()) == 3


class TestStabilityReport:
    def test_report_prints_bounds(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        code = main(["stability-report", "--config", str(cfg)])
        assert code == EXIT_COMPLETED
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "n,t,k_cfl,k_thm1,chosen_k,source"

    def test_report_to_directory(self, tmp_path):
        cfg = write_config(tmp_path)
        code = main(["stability-report", "--config", str(cfg),
                     "--out", str(tmp_path)])
        assert code == EXIT_COMPLETED
        assert (tmp_path / "governor.csv").exists()


class TestDeterminism:
    def test_repeat_runs_bit_identical(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SWE_THREADS", "1")
        cfg = write_config(tmp_path)
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            out.mkdir()
            assert main(["run", "--config", str(cfg),
                         "--out", str(out)]) == EXIT_COMPLETED
            outputs.append((out / "series.csv").read_bytes())
        assert outputs[0] == outputs[1]


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "swesplit.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        for sub in ("verify", "convergence", "run", "stability-report",
                    "penta-check"):
            assert sub in proc.stdout
