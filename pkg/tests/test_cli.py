"""Command line: config handling, exit codes, outputs, determinism."""

import numpy as np
import pytest

from gstein.cli import DEFAULTS, ConfigError, load_config, main
from gstein.measures import DiscreteMeasure, UncertaintySet, format_sets

FAST_REG = ["--set", "reg.dx=0.04", "--set", "reg.t_grid=geom:0.05:1.0:4",
            "--set", "reg.alpha_grid=0.3,0.5,0.7", "--set", "reg.halfwidth=2.0"]


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    rc = main(args + ["--out", str(out)])
    return rc, out


def read_summary(out):
    entries = {}
    for line in (out / "run.summary").read_text().splitlines():
        key, value = line.split("=", 1)
        entries[key] = value
    return entries


class TestConfig:
    def test_defaults_complete(self):
        cfg = load_config(None, [], None, None)
        assert cfg == DEFAULTS

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nseed = 7\ngrid.dx = 0.05\n")
        cfg = load_config(str(path), ["threads=3"], None, 9)
        assert cfg["grid.dx"] == "0.05"
        assert cfg["threads"] == "3"
        assert cfg["seed"] == "9"  # flag beats file

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("nonsense = 1\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config(str(path), [], None, None)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError):
            load_config(str(path), [], None, None)


class TestGheatSolve:
    def test_affine_datum_summary(self, tmp_path):
        rc, out = run(["gheat", "solve", "--set", "phi=affine",
                       "--set", "grid.dx=0.1", "--set", "grid.xmin=-4",
                       "--set", "grid.xmax=4"], tmp_path)
        assert rc == 0
        summary = read_summary(out)
        # the affine catalog entry is 0.5*x + 0.25, invariant in time at x=0
        assert float(summary["u01"]) == pytest.approx(0.25, abs=1e-9)
        field = (out / "field.csv").read_text().splitlines()
        assert field[0] == "t,x,u"

    def test_cfl_violation_exits_2(self, tmp_path, capsys):
        rc, _ = run(["gheat", "solve", "--set", "grid.dx=0.05",
                     "--set", "grid.dt=0.01"], tmp_path)
        assert rc == 2
        assert "unstable grid" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, tmp_path):
        rc, _ = run(["gheat", "solve", "--set", "bogus=3"], tmp_path)
        assert rc == 2

    def test_bad_value_exits_2(self, tmp_path):
        rc, _ = run(["gheat", "solve", "--set", "grid.dx=banana"], tmp_path)
        assert rc == 2


class TestSteinCommands:
    def test_bound_suite_deterministic_and_selftest(self, tmp_path):
        args = ["stein", "bound", "--seed", "42", "--set", "stein.cases=25",
                "--set", "stein.selftest=true"]
        rc1, out1 = run(list(args), tmp_path, "b1")
        rc2, out2 = run(list(args), tmp_path, "b2")
        assert rc1 == rc2 == 0
        bytes1 = (out1 / "bound_cases.csv").read_bytes()
        assert bytes1 == (out2 / "bound_cases.csv").read_bytes()
        summary = read_summary(out1)
        assert summary["passed"] == "25"
        assert summary["selftest_flagged"] == "true"
        last = bytes1.decode().strip().splitlines()[-1]
        assert last.startswith("selftest,") and last.endswith(",false,true")

    def test_identity_small(self, tmp_path):
        rc, out = run(["stein", "identity", "--set", "stein.dx=0.05",
                       "--set", "quad.points=6", "--set", "quad.levels=9",
                       "--set", "quad.eps=1e-3"], tmp_path)
        assert rc == 0
        lines = (out / "identity_summary.csv").read_text().splitlines()
        assert lines[0].startswith("set,phi,lhs")
        assert len(lines) == 13  # 12 cases + header
        assert all(line.endswith(",true") for line in lines[1:])
        # per-case node dumps exist
        assert len(list(out.glob("identity_*_*.csv"))) == 12

    def test_classical_small(self, tmp_path):
        rc, out = run(["stein", "classical", "--set", "classical.dx=0.01",
                       "--set", "classical.probes=-2.0:2.0:9"], tmp_path)
        assert rc == 0
        summary = read_summary(out)
        assert float(summary["max_residual"]) <= 1e-3


class TestCltCommands:
    def test_rate_small(self, tmp_path):
        rc, out = run(["clt", "rate", "--set", "clt.n_list=1,4",
                       "--set", "clt.dx=0.04", "--set", "clt.trace_n=4"] + FAST_REG,
                      tmp_path)
        assert rc == 0
        lines = (out / "rate.csv").read_text().splitlines()
        assert lines[0] == "n,error,bound,pass,alpha,C_alpha,budget"
        assert len(lines) == 3
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "i,A_i,increment,step_bound"
        assert len(trace) == 6  # header + A_0..A_4
        summary = read_summary(out)
        assert summary["all_pass"] == "true"
        assert summary["slope"] != "n/a"

    def test_rate_single_n_slope_na(self, tmp_path):
        rc, out = run(["clt", "rate", "--set", "clt.n_list=4", "--set", "clt.trace_n=2",
                       "--set", "clt.dx=0.04"] + FAST_REG, tmp_path)
        assert rc == 0
        assert read_summary(out)["slope"] == "n/a"

    def test_rate_measures_file(self, tmp_path):
        theta = UncertaintySet.of(DiscreteMeasure.rademacher(0.5),
                                  DiscreteMeasure.rademacher(1.0))
        mpath = tmp_path / "theta.txt"
        mpath.write_text(format_sets([theta]))
        rc, out = run(["clt", "rate", "--set", f"measures.file={mpath}",
                       "--set", "clt.n_list=1,2", "--set", "clt.trace_n=2",
                       "--set", "clt.dx=0.04"] + FAST_REG, tmp_path, "mf")
        assert rc == 0

    def test_rate_threads_byte_identical(self, tmp_path):
        args = ["clt", "rate", "--set", "clt.n_list=1,4", "--set", "clt.trace_n=2",
                "--set", "clt.dx=0.04"] + FAST_REG
        rc1, out1 = run(list(args) + ["--threads", "1"], tmp_path, "t1")
        rc2, out2 = run(list(args) + ["--threads", "4"], tmp_path, "t4")
        assert rc1 == rc2 == 0
        for name in ("rate.csv", "trace.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_degenerate_measures_exit_3(self, tmp_path, capsys):
        theta = UncertaintySet.of(DiscreteMeasure.point_mass(0.0))
        mpath = tmp_path / "degenerate.txt"
        mpath.write_text(format_sets([theta]))
        rc, _ = run(["clt", "rate", "--set", f"measures.file={mpath}",
                     "--set", "clt.n_list=1"] + FAST_REG, tmp_path, "deg")
        assert rc == 3
        assert "degenerate variance" in capsys.readouterr().err

    def test_noniid_small(self, tmp_path):
        rc, out = run(["clt", "noniid", "--set", "noniid.n=3",
                       "--set", "noniid.dx=0.04"] + FAST_REG, tmp_path)
        assert rc == 0
        lines = (out / "noniid.csv").read_text().splitlines()
        assert lines[0] == "n,error,bound,pass,alpha,C_alpha,budget"
        assert lines[1].startswith("3,")


class TestRegEstimate:
    def test_scan_output(self, tmp_path):
        rc, out = run(["reg", "estimate"] + FAST_REG, tmp_path)
        assert rc == 0
        lines = (out / "reg.csv").read_text().splitlines()
        assert lines[0] == "alpha,m_coarse,m_fine,stable"
        assert len(lines) == 4
        summary = read_summary(out)
        assert float(summary["c_rate"]) == pytest.approx(
            4 * float(summary["c_alpha"]) / (1 - float(summary["alpha"])), rel=1e-9)


def test_usage_error_returns_argparse_code():
    assert main(["gheat"]) == 2
    assert main(["nonsense"]) == 2
