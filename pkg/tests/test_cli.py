import json
import subprocess
import sys

import numpy as np
import pytest

from secondlevel.cli import main
from secondlevel.kstest import PValueSample, read_pvalues, write_pvalues


def run(*argv):
    return main([str(a) for a in argv])


class TestGenerate:
    def test_true_orbit_first_byte(self, tmp_path):
        out = tmp_path / "o.bin"
        assert run("generate", "--kind", "true-orbit", "--orbit-index", 1, "--n", 64, "--out", out) == 0
        data = out.read_bytes()
        assert len(data) == 8
        # bits 0,1,1,0,1,0,1,0 of frac(sqrt 2), least significant bit first
        assert data[0] == 0b01010110
        meta = json.loads((tmp_path / "o.bin.json").read_text())
        assert meta["kind"] == "true-orbit" and meta["seed"] == 1 and meta["D"] == 2

    def test_baseline_idempotent(self, tmp_path):
        for name in ("a.bin", "b.bin"):
            assert run("generate", "--kind", "baseline", "--seed", 1, "--n", 64, "--out", tmp_path / name) == 0
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
        assert (tmp_path / "a.bin.json").read_bytes() == (tmp_path / "b.bin.json").read_bytes()

    def test_zero_length(self, tmp_path):
        assert run("generate", "--kind", "baseline", "--seed", 1, "--n", 0, "--out", tmp_path / "x") == 2

    def test_missing_seed(self, tmp_path):
        assert run("generate", "--kind", "true-orbit", "--n", 8, "--out", tmp_path / "x") == 2

    def test_unwritable_output(self, tmp_path):
        target = tmp_path / "file"
        target.write_text("")
        assert run("generate", "--kind", "baseline", "--seed", 1, "--n", 8, "--out", target / "sub" / "x.bin") == 3


class TestTheory:
    def test_compute_d(self, capsys, tmp_path):
        rep = tmp_path / "r.json"
        assert run("theory", "compute-d", "--test", "frequency", "--n", 1000000, "--report", rep) == 0
        d = json.loads(rep.read_text())["d"]
        assert d == pytest.approx(7.98e-4, rel=0.02)
        assert "d = 0.000797884" in capsys.readouterr().out

    def test_safe_sample_size(self, capsys):
        assert run("theory", "safe-sample-size", "--delta", 0.1, "--d", 0.01) == 0
        assert "safe_sample_size = 100" in capsys.readouterr().out

    def test_delta_bound_and_mu(self, capsys):
        assert run("theory", "delta-bound", "--m", 1000000, "--d", 7.98e-4) == 0
        assert run("theory", "mu") == 0
        out = capsys.readouterr().out
        assert "delta_bound = 0.79800000000000004" in out
        assert "mu = 0.86873116" in out

    def test_export(self, tmp_path):
        out = tmp_path / "g.txt"
        assert run("theory", "export", "--test", "rank", "--n", 4096, "--out", out) == 0
        rows = [r for r in out.read_text().splitlines() if not r.startswith("#")]
        assert len(rows) == 15  # count triples with sum 4, none merged

    def test_usage_errors(self):
        assert run("theory", "delta-bound", "--d", 0.1) == 2
        assert run("theory", "compute-d", "--test", "runs", "--n", 100) == 2
        assert run("theory", "nonsense") == 2


class TestLevels:
    def test_level1_then_level2(self, tmp_path, capsys):
        pv = tmp_path / "p.f64"
        assert run("level1", "--test", "frequency", "--n", 1000, "--m", 200, "--out", pv) == 0
        meta = json.loads((tmp_path / "p.f64.json").read_text())
        assert meta["m"] == 200 and meta["test"] == "frequency" and meta["params"]["serial_m"] == 6
        rep = tmp_path / "r.json"
        code = run("level2", "--input", pv, "--ref", "exact", "--report", rep)
        report = json.loads(rep.read_text())
        assert code == (0 if report["accepted"] else 1)
        assert report["reference"] == "exact" and report["m"] == 200

    def test_level1_from_files(self, tmp_path):
        files = []
        for s in range(3):
            f = tmp_path / f"s{s}.bin"
            run("generate", "--kind", "baseline", "--seed", s, "--n", 2000, "--out", f)
            files.append(f)
        out = tmp_path / "p.f64"
        assert run("level1", "--test", "runs", "--input", *files, "--out", out) == 0
        assert read_pvalues(out).m == 3

    def test_two_sample_identical(self, tmp_path, capsys):
        p = tmp_path / "p.f64"
        write_pvalues(p, PValueSample(np.random.default_rng(1).random(500)))
        rep = tmp_path / "r.json"
        assert run("level2", "--input", p, "--mode", "two-sample", "--ref", p, "--report", rep) == 0
        assert json.loads(rep.read_text())["statistic"] == 0.0
        assert "accept" in capsys.readouterr().out

    def test_rejection_exits_one(self, tmp_path):
        p = tmp_path / "p.f64"
        write_pvalues(p, PValueSample(np.random.default_rng(2).random(2000) ** 2))
        assert run("level2", "--input", p) == 1

    def test_missing_exact(self, tmp_path):
        p = tmp_path / "p.f64"
        write_pvalues(p, PValueSample([0.5]), {"test": "runs", "n": 100})
        assert run("level2", "--input", p, "--ref", "exact") == 2
        assert run("level2", "--input", p, "--mode", "two-sample") == 2
        assert run("level2", "--input", tmp_path / "absent.f64") == 3


def test_campaign_command(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tests": ["frequency"], "n": 1000, "m": 20, "m_ref": 20, "repetitions": 2,
                               "modes": ["one-sample-exact", "two-sample"],
                               "monte_carlo": [{"distribution": "ge", "e": 0.1, "m": [100], "trials": 10}]}))
    assert run("campaign", "--config", cfg, "--out", tmp_path / "out") == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["params"]["universal_l"] is not None
    assert "montecarlo m=100" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("campaign", "--config", bad) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "secondlevel", "theory", "safe-sample-size", "--delta", "0.1",
                          "--d", "0.01"], capture_output=True, text=True)
    assert res.returncode == 0 and "safe_sample_size = 100" in res.stdout
