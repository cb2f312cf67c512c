import json
import os

import pytest

from crnstab.cli import main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--out", str(out)]), out


class TestSimulate:
    def test_zero_jumps_writes_initial_row(self, tmp_path):
        code, out = run(tmp_path, "simulate", "--net", "crn0", "--jumps", "0", "--x0", "3,4")
        assert code == 0
        lines = (out / "trajectory.csv").read_text().strip().splitlines()
        assert lines == ["t,x1,x2", "0,3,4"]

    def test_byte_identical_reruns(self, tmp_path):
        code, out = run(tmp_path, "simulate", "--net", "crn1", "--jumps", "200", "--seed", "5")
        first = (out / "trajectory.csv").read_bytes()
        code, out = run(tmp_path, "simulate", "--net", "crn1", "--jumps", "200", "--seed", "5")
        assert first == (out / "trajectory.csv").read_bytes()

    def test_network_file_input(self, tmp_path):
        doc = {
            "species": ["A", "B"],
            "reactions": [
                {"input": {}, "output": {"A": 1, "B": 1}},
                {"input": {"B": 1}, "output": {}},
            ],
        }
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc))
        code, out = run(tmp_path, "simulate", "--net", str(path), "--jumps", "5")
        assert code == 0

    def test_unreadable_network_file(self, tmp_path):
        code, _ = run(tmp_path, "simulate", "--net", str(tmp_path / "missing.json"))
        assert code == 1


class TestUsage:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag(self):
        assert main(["simulate", "--frend", "1"]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
        for sub in ("simulate", "ode", "boundary", "lyapunov", "verify", "measure", "classify"):
            assert main([sub, "--help"]) == 0


class TestOde:
    def test_outputs(self, tmp_path):
        code, out = run(tmp_path, "ode", "--net", "crn0", "--grid-n", "4", "--t-end", "0.5")
        assert code == 0
        assert (out / "ode_path.csv").exists()
        field = (out / "field.csv").read_text().splitlines()
        assert field[0] == "x1,x2,f1,f2"
        assert len(field) == 1 + 16
        svg = (out / "field.svg").read_text()
        assert svg.startswith("<svg")


class TestBoundary:
    def test_exit_law(self, tmp_path):
        code, out = run(tmp_path, "boundary", "--net", "crn1", "--k0", "5",
                        "--samples", "20000", "--seed", "3")
        assert code == 0
        lines = (out / "exitlaw.csv").read_text().splitlines()
        assert lines[0] == "b,analytic,empirical,stderr"
        report = (out / "boundary_report.txt").read_text()
        assert "never-exit lower bound" in report


class TestLyapunovVerify:
    def test_lyapunov_exports(self, tmp_path):
        code, out = run(tmp_path, "lyapunov", "--net", "crn0", "--window", "120")
        assert code == 0
        assert (out / "params.txt").exists()
        assert (out / "vsurface.svg").read_text().startswith("<svg")
        header = (out / "vsurface.csv").read_text().splitlines()[0]
        assert header == "x1,x2,region,V,h"

    def test_verify_small_annulus(self, tmp_path):
        code, out = run(
            tmp_path, "verify", "--net", "crn0", "--annulus", "200:400",
            "--delta0", "0.5", "--eps", "0.1",
        )
        assert code == 0
        drift = (out / "drift_report.csv").read_text().splitlines()
        assert drift[0] == "x1,x2,LV,phiV,margin"
        assert len(drift) == 1  # no violation rows
        assert (out / "curvature.csv").exists()

    def test_infeasible_exit_code(self, tmp_path):
        code, _ = run(
            tmp_path, "verify", "--net", "crn0", "--b1", "1.01", "--annulus", "200:300",
        )
        assert code == 3

    def test_violations_exit_code(self, tmp_path, monkeypatch):
        import crnstab.cli as cli_mod
        from crnstab.stability import DriftReport

        def fake_verify(net, V, r_lo, r_hi, stride=7, threads=1):
            return DriftReport(
                r_min=r_lo, r_max=r_hi, stride=stride, n_points=1,
                worst_margin=-1.0, worst_point=(200, 0),
                violations=[((200, 0), 1.0, 0.5)],
            )

        monkeypatch.setattr(cli_mod, "verify_drift", fake_verify)
        code, out = run(tmp_path, "verify", "--net", "crn0", "--annulus", "200:300")
        assert code == 2
        lines = (out / "drift_report.csv").read_text().splitlines()
        assert len(lines) == 2  # header plus the violation row


class TestEnvironment:
    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("CRNSTAB_OUT", str(target))
        code = main(["simulate", "--net", "crn0", "--jumps", "0"])
        assert code == 0
        assert (target / "trajectory.csv").exists()


class TestMeasureClassify:
    def test_measure(self, tmp_path):
        code, out = run(tmp_path, "measure", "--net", "crn0", "--jumps", "20000")
        assert code == 0
        occ = (out / "occupation.csv").read_text().splitlines()
        assert occ[0] == "x1,x2,time"
        assert (out / "phi_moment.csv").exists()

    def test_classify_crn2_reports_transient(self, tmp_path):
        code, out = run(tmp_path, "classify", "--net", "crn2", "--seed", "7")
        assert code == 0
        text = (out / "classification.txt").read_text()
        assert "transient" in text
