"""CLI contract tests: key=value reports, exit codes, goldens, determinism."""

from pathlib import Path

import numpy as np
import pytest

from dhymgeo.cli import main
from dhymgeo.geometry import read_grid

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def grep(text, key):
    for line in text.splitlines():
        if line.startswith(key + "="):
            return line.split("=", 1)[1]
    raise KeyError(key)


class TestAngles:
    def test_zero_matrix(self, capsys, tmp_path):
        mat = tmp_path / "zero.mat"
        mat.write_text("0 0\n0 0\n")
        code, out, _ = run(capsys, "angles", "--matrix", str(mat))
        assert code == 0
        assert grep(out, "in_S") == "true"
        assert float(grep(out, "phi_usc")) == pytest.approx(np.pi / 2)
        assert float(grep(out, "phi_lsc")) == pytest.approx(-np.pi / 2)

    def test_identity_theta(self, capsys, tmp_path):
        mat = tmp_path / "eye.mat"
        mat.write_text("1 0\n0 1\n")
        code, out, _ = run(capsys, "angles", "--matrix", str(mat))
        assert code == 0
        assert float(grep(out, "theta")) == pytest.approx(np.pi / 2)

    def test_golden(self, capsys):
        code, out, _ = run(
            capsys, "angles", "--matrix", str(CONFIGS / "angles_sample.mat")
        )
        assert code == 0
        assert out == (GOLDEN / "angles_sample.txt").read_text()

    def test_bad_matrix_exit_2(self, capsys, tmp_path):
        mat = tmp_path / "bad.mat"
        mat.write_text("1 2\n3\n")
        code, _, err = run(capsys, "angles", "--matrix", str(mat))
        assert code == 2
        assert "error" in err

    def test_stdin_input(self, capsys, monkeypatch):
        import io

        monkeypatch.setattr("sys.stdin", io.StringIO("2 1+1i\n1-1i 3\n"))
        code, out, _ = run(capsys, "angles", "--matrix", "-")
        assert code == 0
        assert float(grep(out, "theta")) == pytest.approx(
            np.arctan(np.linalg.eigvalsh([[2, 1 + 1j], [1 - 1j, 3]])).sum()
        )


class TestFuzzCommand:
    def test_convexity_pass(self, capsys):
        code, out, _ = run(
            capsys, "fuzz", "--suite", "convexity", "--trials", "1500", "--n", "1"
        )
        assert code == 0
        assert grep(out, "status") == "pass"
        assert grep(out, "violations") == "0"

    def test_negative_control_passes_by_finding_violations(self, capsys):
        code, out, _ = run(
            capsys, "fuzz", "--suite", "convexity-negative", "--trials", "2000"
        )
        assert code == 0
        assert int(grep(out, "violations")) > 0

    def test_duality_and_positivity(self, capsys):
        for suite in ("duality", "positivity"):
            code, out, _ = run(
                capsys, "fuzz", "--suite", suite, "--trials", "1500", "--n", "2"
            )
            assert code == 0, suite
            assert grep(out, "violations") == "0"

    def test_deterministic_output(self, capsys):
        args = ("fuzz", "--suite", "convexity", "--trials", "1000", "--seed", "7")
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2


class TestDhymCommand:
    def test_golden(self, capsys):
        code, out, _ = run(capsys, "dhym", "--config", str(CONFIGS / "dhym_sample.cfg"))
        assert code == 0
        assert out == (GOLDEN / "dhym_sample.txt").read_text()

    def test_zero_background(self, capsys, tmp_path):
        cfg = tmp_path / "z.cfg"
        cfg.write_text("[geometry]\nn = 1\ngrid = 8 8\nalpha0 = 0\n")
        code, out, _ = run(capsys, "dhym", "--config", str(cfg))
        assert code == 0
        assert float(grep(out, "hat_theta")) == 0.0

    def test_writes_fields(self, capsys, tmp_path):
        out_dir = tmp_path / "fields"
        code, _, _ = run(
            capsys,
            "dhym",
            "--config",
            str(CONFIGS / "dhym_sample.cfg"),
            "--out",
            str(out_dir),
        )
        assert code == 0
        theta = read_grid(out_dir / "theta.grid")
        assert theta.shape == (16, 16)
        assert (out_dir / "residual.grid").exists()
        assert (out_dir / "dhym.txt").exists()

    def test_missing_config_exit_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "dhym", "--config", str(tmp_path / "nope.cfg"))
        assert code == 2


class TestGeodesicCommand:
    def test_sample_passes(self, capsys, tmp_path):
        out_dir = tmp_path / "geo"
        code, out, _ = run(
            capsys,
            "geodesic",
            "--config",
            str(CONFIGS / "geodesic_sample.cfg"),
            "--out",
            str(out_dir),
        )
        assert code == 0
        assert grep(out, "status") == "pass"
        sol = read_grid(out_dir / "solution.grid")
        assert sol.shape == (9, 16)
        lines = (out_dir / "slices.csv").read_text().splitlines()
        assert lines[0] == "t_index,t,theta_min,theta_max"
        assert len(lines) == 8  # header + 7 interior slices

    def test_constant_shift_matches_exact(self, capsys, tmp_path):
        cfg = tmp_path / "shift.cfg"
        cfg.write_text(
            "[geometry]\nn = 1\ngrid = 16\nreduced = true\nalpha0 = 3\n"
            "[problem]\nphi1 = 0.2*cos(2*pi*x1)\nphi2 = 0.2*cos(2*pi*x1) + 0.2\n"
            "[solver]\nnt = 9\nsweep_tol = 1e-13\nresidual_tol = 1e-6\n"
        )
        out_dir = tmp_path / "out"
        code, out, _ = run(
            capsys, "geodesic", "--config", str(cfg), "--out", str(out_dir)
        )
        assert code == 0
        sol = read_grid(out_dir / "solution.grid")
        x = np.arange(16) / 16
        t = np.linspace(0, np.log(2), 9).reshape(-1, 1)
        exact = 0.2 * np.cos(2 * np.pi * x) + 0.2 * t / np.log(2)
        assert np.max(np.abs(sol - exact)) < 1e-8

    def test_grid_file_potentials(self, capsys, tmp_path):
        from dhymgeo.geometry import write_grid

        x = np.arange(16) / 16
        write_grid(tmp_path / "phi1.grid", 0.2 * np.cos(2 * np.pi * x))
        cfg = tmp_path / "gridded.cfg"
        cfg.write_text(
            "[geometry]\nn = 1\ngrid = 16\nreduced = true\nalpha0 = 3\n"
            "[problem]\nphi1 = @phi1.grid\nphi2 = 0.1\n"
            "[solver]\nnt = 9\nsweep_tol = 1e-11\n"
        )
        code, out, _ = run(capsys, "geodesic", "--config", str(cfg))
        assert code == 0
        assert grep(out, "status") == "pass"

    def test_inadmissible_boundary_exit_2(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text(
            "[geometry]\nn = 1\ngrid = 16\nreduced = true\nalpha0 = 3\n"
            "[problem]\nphi1 = 3.0*cos(2*pi*x1)\nphi2 = 0\n"
            "[solver]\nnt = 9\n"
        )
        code, _, err = run(capsys, "geodesic", "--config", str(cfg))
        assert code == 2
        assert "not admissible" in err

    @pytest.mark.parametrize("mode", ["jacobi", "gauss-seidel"])
    def test_mode_flag_and_determinism(self, capsys, mode):
        args = (
            "geodesic",
            "--config",
            str(CONFIGS / "geodesic_sample.cfg"),
            "--mode",
            mode,
        )
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2
        assert grep(out1, "mode") == mode
