import json
import math

import pytest

from syzlab import legendre as legendre_mod
from syzlab.cli import main
from syzlab.ma_solver import Domain, read_grid_csv, real_ma_residual, \
    solve_real_ma


def run(tmp_path, *argv, config=None):
    args = []
    if config is not None:
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(config))
        args += ["--config", str(cfg)]
    args += ["--out", str(tmp_path)] + list(argv)
    return main(args)


def report(tmp_path):
    return json.loads((tmp_path / "report.json").read_text())


class TestMaSolve:
    def test_disk_solution_matches_library(self, tmp_path):
        assert run(tmp_path, "ma-solve",
                   config={"c": 1.0, "h": 1 / 32}) == 0
        rep = report(tmp_path)
        phi = read_grid_csv(tmp_path / "solution.csv")
        direct = solve_real_ma(Domain.unit_disk(), 1.0, 1 / 32)
        assert phi.values == pytest.approx(direct.values)
        assert rep["solves"][0]["residual"] == \
            pytest.approx(real_ma_residual(direct, 1.0))

    def test_convergence_plot_for_grid_list(self, tmp_path):
        assert run(tmp_path, "ma-solve",
                   config={"c": 1.0, "h_list": [1 / 16, 1 / 32]}) == 0
        assert (tmp_path / "convergence.svg").exists()
        assert len(report(tmp_path)["solves"]) == 2

    def test_invalid_c_is_validation_error(self, tmp_path, capsys):
        assert run(tmp_path, "ma-solve", config={"c": -1.0}) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["kind"] == "validation"

    def test_missing_config_file(self, tmp_path):
        assert main(["--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path), "ma-solve"]) == 2


class TestLegendre:
    def test_residuals_match_library(self, tmp_path):
        assert run(tmp_path, "legendre", config={"h": 1 / 32}) == 0
        rep = report(tmp_path)
        phi = solve_real_ma(Domain.unit_disk(), 1.0, 1 / 32)
        psi = legendre_mod.legendre_transform(phi, 1 / 32)
        want = legendre_mod.duality_residuals(phi, psi)
        for k, v in want.items():
            assert rep["duality_residuals"][k] == pytest.approx(v)
        assert (tmp_path / "dual.csv").exists()

    def test_mirror_roundtrip(self, tmp_path):
        assert run(tmp_path, "mirror", config={"h": 1 / 32}) == 0
        rep = report(tmp_path)
        assert rep["roundtrip"]["involution"] <= 5e-2


class TestTfamily:
    def test_exact_zero_volume_residuals(self, tmp_path):
        assert run(tmp_path, "tfamily") == 0
        lines = (tmp_path / "tfamily.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert all(r[2] == "0" for r in rows)
        assert (tmp_path / "decay.svg").exists()

    def test_svg_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir()
        b.mkdir()
        assert main(["--out", str(a), "tfamily"]) == 0
        assert main(["--out", str(b), "tfamily"]) == 0
        assert (a / "decay.svg").read_bytes() == (b / "decay.svg").read_bytes()


class TestGv:
    def test_forward_multiple_cover(self, tmp_path):
        cfg = {"entries": {"1,0": 1}, "D": 5, "R": 0}
        assert run(tmp_path, "gv", "forward", config=cfg) == 0
        rep = report(tmp_path)
        assert rep["coefficients"]["3,0"] == "1/27"

    def test_invert_recovers_unit_table(self, tmp_path):
        coeffs = {f"{d},0": f"1/{d ** 3}" for d in range(1, 7)}
        cfg = {"coefficients": coeffs, "D": 6, "R": 0}
        assert run(tmp_path, "gv", "invert", config=cfg) == 0
        rep = report(tmp_path)
        assert rep["entries"] == {"1,0": "1"}
        assert rep["integral"] is True

    def test_check_flags_fractional(self, tmp_path):
        cfg = {"entries": {"2,0": "1/7"}, "D": 2, "G": 0}
        assert run(tmp_path, "gv", "check", config=cfg) == 4
        assert report(tmp_path)["integral"] is False


class TestYukawa:
    def test_quintic_coefficients(self, tmp_path):
        assert run(tmp_path, "yukawa") == 0
        rep = report(tmp_path)
        assert rep["coefficients"] == ["5", "2875", "4876875", "8564575000"]
        assert (tmp_path / "series.svg").exists()


class TestCycle:
    def test_b_cycle_phase_solved(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "B", "m": 1,
            "omega": "(1.0,0.0) dx1^dy1",
            "F": "(0.0,1.0) dx1^dy1"}))
        assert main(["--out", str(tmp_path), "cycle", "check",
                     "--spec", str(spec)]) == 0
        rep = report(tmp_path)
        assert rep["theta"] == pytest.approx(-math.pi / 4)
        assert rep["dhym_residual"] <= 1e-12

    def test_a_cycle_fiber(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "A", "m": 1, "n": 1, "theta": 0.0,
            "omega": "(1.0,0.0) dx1^dy1",
            "subtorus": [[1.0, 0.0]]}))
        assert main(["--out", str(tmp_path), "cycle", "check",
                     "--spec", str(spec)]) == 0
        rep = report(tmp_path)
        assert all(v == 0.0 for v in rep["residuals"].values())

    def test_degenerate_spec_rejected(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "kind": "B", "m": 1, "omega": "(0.0,0.0) 1"}))
        assert main(["--out", str(tmp_path), "cycle", "check",
                     "--spec", str(spec)]) == 2


class TestSl2:
    def test_report_all_zero(self, tmp_path):
        assert run(tmp_path, "sl2", config={"n": 2}) == 0
        rep = report(tmp_path)
        assert all(v == "0" for v in rep["commutator_norms"].values())
        assert (tmp_path / "weights.csv").exists()
