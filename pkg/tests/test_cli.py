"""Command-line interface: spec parsing, outputs, exit codes."""

import json
import math

import numpy as np
import pytest

from steinprod.cli import SpecError, load_spec, main, parse_grid


@pytest.fixture
def spec_file(tmp_path):
    def write(payload):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(payload))
        return str(path)

    return write


PN1 = {"version": 1, "normal": {"count": 1, "sigma": 1.0}}
XYZ = {"version": 1, "beta": [[1.3, 0.6]],
       "gamma": {"shapes": [1.4], "lambda": 1.0},
       "normal": {"count": 1, "sigma": 1.0}}


class TestSpecParsing:
    def test_full_spec(self, spec_file):
        spec = load_spec(spec_file(XYZ))
        assert spec.m == 1 and spec.n == 1 and spec.N == 1

    def test_version_required(self, spec_file):
        with pytest.raises(SpecError, match="version"):
            load_spec(spec_file({"normal": {"count": 1, "sigma": 1.0}}))

    def test_bad_beta_shape(self, spec_file):
        with pytest.raises(SpecError, match="beta"):
            load_spec(spec_file({"version": 1, "beta": [[1.0]]}))

    def test_missing_file(self):
        with pytest.raises(SpecError, match="cannot read"):
            load_spec("/nonexistent/spec.json")

    def test_grid_parse(self):
        grid = parse_grid("0:2:5")
        np.testing.assert_allclose(grid, [0, 0.5, 1.0, 1.5, 2.0])
        with pytest.raises(SpecError):
            parse_grid("5:1:10")
        with pytest.raises(SpecError):
            parse_grid("oops")


class TestCommands:
    def test_density_csv(self, spec_file, tmp_path, capsys):
        out = tmp_path / "density.csv"
        rc = main(["density", "--spec", spec_file(PN1), "--grid=-2:2:5",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "x,density"
        mid = float(lines[3].split(",")[1])
        assert mid == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-10)
        assert out.read_text().endswith("\n")

    def test_density_deterministic_output(self, spec_file, tmp_path):
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["density", "--spec", spec_file(XYZ), "--grid=0.5:2:4", "--out", str(f1)])
        main(["density", "--spec", spec_file(XYZ), "--grid=0.5:2:4", "--out", str(f2)])
        assert f1.read_text() == f2.read_text()

    def test_operator_reduce_prints_order(self, spec_file, capsys):
        payload = {"version": 1, "beta": [[1.3, 1.0]],
                   "gamma": {"shapes": [1.4], "lambda": 1.0},
                   "normal": {"count": 1, "sigma": 1.0}}
        rc = main(["operator", "--spec", spec_file(payload), "--reduce"])
        assert rc == 0
        outtext = capsys.readouterr().out
        assert "reduced: 4" in outtext  # m + 2n + N

    def test_operator_adjoint(self, spec_file, capsys):
        rc = main(["operator", "--spec", spec_file(PN1), "--adjoint"])
        assert rc == 0
        assert "density ODE" in capsys.readouterr().out

    def test_sample_csv(self, spec_file, tmp_path):
        out = tmp_path / "w.csv"
        rc = main(["sample", "--spec", spec_file(PN1), "--count", "100",
                   "--seed", "7", "--out", str(out)])
        assert rc == 0
        rows = out.read_text().strip().split("\n")
        assert rows[0] == "value" and len(rows) == 101

    def test_gfunc(self, capsys):
        rc = main(["gfunc", "--b", "0", "--x", "1.0"])
        assert rc == 0
        assert float(capsys.readouterr().out) == pytest.approx(math.exp(-1), rel=1e-10)

    def test_mellin_csv(self, spec_file, capsys):
        rc = main(["mellin", "--spec", spec_file(PN1), "--grid", "1:3:3"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "s,mellin"
        assert float(lines[1].split(",")[1]) == pytest.approx(1.0, rel=1e-12)

    def test_stein_solve_csv(self, capsys):
        rc = main(["stein-solve", "--r1", "1", "--r2", "1", "--lam", "1",
                   "--h", "exp", "--grid", "0.1:5:4"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert lines[0] == "x,f,residual"
        for line in lines[1:]:
            assert abs(float(line.split(",")[2])) < 1e-6

    def test_cf_column(self, spec_file, capsys):
        rc = main(["cf", "--spec", spec_file(PN1), "--grid", "0:1:3"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert float(lines[1].split(",")[1]) == 1.0

    def test_density_riemann_sum_near_one(self, spec_file, capsys):
        rc = main(["density", "--spec", spec_file(PN1), "--grid=-4:4:101"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().split("\n")[1:]
        vals = np.array([float(line.split(",")[1]) for line in lines])
        assert (8.0 / 100.0) * vals.sum() == pytest.approx(1.0, abs=1e-3)


class TestExitCodes:
    def test_validation_error_is_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"version\": 2}")
        rc = main(["density", "--spec", str(bad), "--grid", "0:1:3"])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_verify_suite(self, spec_file, tmp_path, capsys):
        out = tmp_path / "report.json"
        rc = main(["verify", "--spec", spec_file(PN1), "--suite", "mellin",
                   "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["reports"][0]["passed"] is True

    def test_unknown_test_function(self, capsys):
        rc = main(["stein-solve", "--r1", "1", "--r2", "1", "--lam", "1",
                   "--h", "nope", "--grid", "0.1:5:3"])
        assert rc == 1
