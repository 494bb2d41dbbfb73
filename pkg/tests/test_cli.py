import json
import math
import shutil
import subprocess

import pytest

from qgreg.cli import main
from qgreg.solver import weierstrass
from qgreg.spectral import get_grid, write_snapshot


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--output-dir", str(out)]), out


class TestBootstrapMode:
    def test_reference(self, tmp_path, capsys):
        code, out = run(tmp_path, "bootstrap", "--alpha", "0.4", "--delta", "0.3", "--p", "50")
        assert code == 0
        trace = json.loads((out / "bootstrap.json").read_text())
        assert trace["deltas"] == pytest.approx([0.288, 0.336, 0.432, 0.624, 1.008], abs=1e-12)
        assert trace["terminated"] is True
        assert json.loads(capsys.readouterr().out) == trace

    @pytest.mark.parametrize(
        "args,message",
        [
            (("--alpha", "0.6", "--delta", "0.9", "--p", "50"), "supercritical range"),
            (("--alpha", "0.4", "--delta", "0.2", "--p", "50"), "hypothesis violated"),
            (("--alpha", "0.4", "--delta", "0.3", "--p", "10"), "p below threshold"),
            (("--alpha", "abc", "--delta", "0.3", "--p", "10"), "type mismatch"),
            (("--alpha", "0.4", "--p", "10"), "missing required"),
        ],
    )
    def test_errors_exit_one(self, tmp_path, capsys, args, message):
        code, _ = run(tmp_path, "bootstrap", *args)
        assert code == 1
        assert message in capsys.readouterr().err

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[solver]\nalpha = 0.3\n[bootstrap]\ndelta = 0.3\np = 50\n")
        code, out = run(tmp_path, "bootstrap", "--config", str(cfg), "--alpha", "0.4")
        assert code == 0
        assert json.loads((out / "bootstrap.json").read_text())["alpha"] == 0.4

    def test_config_errors_report_line(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[solver]\n\nalpha = abc\n")
        code, _ = run(tmp_path, "bootstrap", "--config", str(cfg))
        assert code == 1
        assert "line 3" in capsys.readouterr().err

    def test_unreadable_config(self, tmp_path, capsys):
        code, _ = run(tmp_path, "bootstrap", "--config", str(tmp_path / "missing.cfg"))
        assert code == 1


class TestSimulateMode:
    ARGS = ("simulate", "--ic", "single_mode", "--kappa", "0.1", "--alpha", "0.3", "--n", "64", "--dt", "1e-3", "--t-end", "1")

    def test_eigenfunction(self, tmp_path):
        code, out = run(tmp_path, *self.ARGS, "--diag-interval", "100", "--checkpoint-interval", "500", "--monitor")
        assert code == 0
        lines = (out / "diagnostics.csv").read_text().splitlines()
        assert len(lines) == 12
        final = dict(zip(lines[0].split(","), map(float, lines[-1].split(","))))
        assert final["linf"] == pytest.approx(math.exp(-0.1), abs=1e-8)
        assert (out / "checkpoint_00000500.qgf").exists()
        assert json.loads((out / "checkpoint_00001000.json").read_text())["step"] == 1000
        assert "insufficient shells" in (out / "monitor.csv").read_text()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == "ok"
        assert "diagnostics.csv" in manifest["artifacts"]

    def test_blow_up_exit_two(self, tmp_path):
        cfg = tmp_path / "blow.cfg"
        cfg.write_text("[initial_condition]\nic = single_mode\nic_k1 = 2\nic_amplitude = 1e8\n")
        code, out = run(tmp_path, "simulate", "--config", str(cfg), "--kappa", "0", "--alpha", "0.3",
                        "--n", "32", "--dt", "1e-3", "--t-end", "0.01")
        assert code == 2
        assert json.loads((out / "manifest.json").read_text())["status"] == "resolution_exceeded"
        assert (out / "diagnostics.csv").exists()

    def test_bad_grid_exit_one(self, tmp_path):
        code, _ = run(tmp_path, "simulate", "--kappa", "0.1", "--alpha", "0.3", "--n", "48", "--dt", "1e-3", "--t-end", "1")
        assert code == 1

    def test_deterministic(self, tmp_path):
        args = ("simulate", "--ic", "random", "--kappa", "0.05", "--alpha", "0.3", "--n", "32",
                "--dt", "1e-2", "--t-end", "0.2", "--seed", "4")
        a = main([*args, "--output-dir", str(tmp_path / "a")])
        b = main([*args, "--output-dir", str(tmp_path / "b")])
        assert a == b == 0
        for name in ("diagnostics.csv",):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert ma["input_hash"] == mb["input_hash"]


class TestAnalyzeMode:
    def test_weierstrass_snapshot(self, tmp_path):
        snap = tmp_path / "w.qgf"
        write_snapshot(snap, weierstrass(get_grid(256), delta=0.4), 0.5)
        code, out = run(tmp_path, "analyze", "--snapshot", str(snap), "--alpha", "0.35")
        assert code == 0
        report = json.loads((out / "analysis.json").read_text())
        assert report["status"] == "holds"
        assert 0.35 <= report["fit"]["delta_est"] <= 0.45
        assert report["bootstrap"]["terminated"] is True
        assert (out / "shell_spectrum.csv").read_text().startswith("j,norm\n")

    def test_bad_magic(self, tmp_path, capsys):
        snap = tmp_path / "bad.qgf"
        snap.write_bytes(b"NOPE" + bytes(100))
        code, _ = run(tmp_path, "analyze", "--snapshot", str(snap), "--alpha", "0.3")
        assert code == 1
        assert "magic" in capsys.readouterr().err

    def test_manifest_hash_tracks_snapshot(self, tmp_path):
        grid = get_grid(64)
        hashes = []
        for i, amp in enumerate((1.0, 2.0)):
            snap = tmp_path / f"s{i}.qgf"
            write_snapshot(snap, weierstrass(grid, delta=0.4, j_hi=4, amplitude=amp))
            shutil.copy(snap, tmp_path / "same.qgf")
            out = tmp_path / f"o{i}"
            assert main(["analyze", "--snapshot", str(tmp_path / "same.qgf"), "--alpha", "0.3", "--output-dir", str(out)]) == 0
            hashes.append(json.loads((out / "manifest.json").read_text())["input_hash"])
        assert hashes[0] != hashes[1]


class TestVerifyMode:
    def test_bernstein_seed_7(self, tmp_path, capsys):
        code, out = run(tmp_path, "verify", "--suite", "bernstein_l2", "--seed", "7")
        assert code == 0
        reports = json.loads((out / "verify_report.json").read_text())
        assert len(reports) == 3
        assert all(r["violations"] == 0 and r["seed"] == 7 for r in reports)
        summary = (out / "verify_summary.csv").read_text().splitlines()
        assert summary[0] == "name,params,trials,violations,min_ratio,max_ratio"

    def test_unknown_suite(self, tmp_path):
        code, _ = run(tmp_path, "verify", "--suite", "nonsense")
        assert code == 1


def test_console_script_installed(tmp_path):
    exe = shutil.which("qg")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run(
        [exe, "bootstrap", "--alpha", "0.4", "--delta", "0.3", "--p", "50", "--output-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["deltas"][-1] == pytest.approx(1.008)
