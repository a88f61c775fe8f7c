#!/usr/bin/env python3
"""
Tests for the command line interface and the verification report model.
"""

import dataclasses
import json
import math
import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src import cli  # noqa: E402
from src.cli import EXIT_OK, EXIT_SOLVER, EXIT_VERIFY, QUICK_N_LIST, build_parser, config_from_args, main  # noqa: E402
from src.model import ModelParams, classify_phase  # noqa: E402
from src.spectral_curve import solve_curve  # noqa: E402
from src.utils.config import RunConfig  # noqa: E402
from src.utils.errors import DomainError  # noqa: E402
from src.verification import (  # noqa: E402
    CheckRecord,
    Report,
    check_curve,
    check_harness,
    check_precision,
    check_relation,
)


def _write_config(folder: Path, **values) -> str:
    path = folder / "config.json"
    path.write_text(json.dumps(values), encoding="utf-8")
    return str(path)


class TestParser:
    """Test cases for argument handling."""

    def test_empty_n_list(self, tmp_path):
        """An empty N list is a usage error."""
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--n-list", "", "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_missing_command(self):
        """A subcommand is required."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_invalid_config(self, tmp_path):
        """A non-positive w in the file is a usage error."""
        config = _write_config(tmp_path, w=-1.0)
        with pytest.raises(SystemExit) as exc:
            main(["solve", "--config", config])
        assert exc.value.code == 2

    def test_overrides(self, tmp_path):
        """Command line values replace the file."""
        parser = build_parser()
        args = parser.parse_args(["poly", "--config", _write_config(tmp_path), "--n-list", "6,12",
                                  "--precision", "90", "--out", str(tmp_path / "o"), "--w-list", "0.5,2"])
        config = config_from_args(parser, args)
        assert config.N_list == [6, 12]
        assert config.precision == 90
        assert config.w_list == [0.5, 2.0]
        assert config.output_dir == str(tmp_path / "o")

    def test_quick(self, tmp_path):
        """--quick restricts the sizes."""
        parser = build_parser()
        args = parser.parse_args(["verify", "--config", _write_config(tmp_path), "--quick"])
        config = config_from_args(parser, args)
        assert config.N_list == QUICK_N_LIST
        assert config.quick

    def test_quick_revalidates(self, tmp_path):
        """Sizes swapped in by quick must still fit N + N·Q0."""
        config = _write_config(tmp_path, Q0=0.1, N_list=[100], quick=True)
        with pytest.raises(SystemExit) as exc:
            main(["poly", "--config", config, "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_quick_from_file(self, tmp_path):
        """quick in the config file has the same effect."""
        parser = build_parser()
        args = parser.parse_args(["verify", "--config", _write_config(tmp_path, quick=True)])
        assert config_from_args(parser, args).N_list == QUICK_N_LIST


class TestExitCodes:
    """Test cases for error-to-exit-code mapping."""

    def test_post_critical(self, tmp_path):
        """Post-critical parameters exit with the solver code."""
        config = _write_config(tmp_path, w=0.3)
        assert main(["solve", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_SOLVER

    def test_domain_error(self, tmp_path, monkeypatch):
        """Any solver-side domain error maps to the solver code."""
        def refuse(config, N, r0, escalate=True):
            raise DomainError(f"Degree n={N + r0 + 1} exceeds N + N·Q0")

        monkeypatch.setattr(cli, "solve_polynomial", refuse)
        config = _write_config(tmp_path, N_list=[4], r0_list=[0])
        assert main(["poly", "--config", config, "--out", str(tmp_path)]) == EXIT_SOLVER

    @pytest.mark.slow
    def test_solve_is_deterministic(self, tmp_path):
        """Two solve runs write byte-identical geometry."""
        config = _write_config(tmp_path)
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["solve", "--config", config, "--out", str(first)]) == EXIT_OK
        assert main(["solve", "--config", config, "--out", str(second)]) == EXIT_OK
        for name in ("curve.json", "gamma0.csv", "density.csv", "droplet_boundary.csv"):
            assert (first / "solve" / name).read_bytes() == (second / "solve" / name).read_bytes()
        curve = json.loads((first / "solve" / "curve.json").read_text(encoding="utf-8"))
        assert curve["curve"]["c0"] == pytest.approx(1 + math.sqrt(2), rel=1e-10)

    @pytest.mark.slow
    def test_poly_outputs(self, tmp_path):
        """poly writes coefficients, moments and zeros for each (N, r0)."""
        config = _write_config(tmp_path, N_list=[4], r0_list=[0])
        assert main(["poly", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
        folder = tmp_path / "poly"
        data = json.loads((folder / "poly_N4_r0.json").read_text(encoding="utf-8"))
        assert data["solution"]["degree"] == 4
        assert (folder / "moments_N4_r0.json").exists()
        assert len((folder / "zeros_N4_r0.csv").read_text(encoding="utf-8").splitlines()) == 5

    @pytest.mark.slow
    def test_figures_outputs(self, tmp_path):
        """figures writes the contour, zeros and overlay for each w."""
        config = _write_config(tmp_path, N_list=[4], w_list=[1.0])
        assert main(["figures", "--config", config, "--out", str(tmp_path)]) == EXIT_OK
        folder = tmp_path / "figures" / "w_1"
        for name in ("contour.csv", "zeros_N4.csv", "overlay.png"):
            assert (folder / name).exists()


class TestReport:
    """Test cases for the report model."""

    @pytest.fixture
    def report(self):
        """Report with one passing and one failing check."""
        report = Report()
        report.add(CheckRecord(check_id="a", property="first", measured=1e-9, tolerance=1e-8, passed=True))
        report.add(CheckRecord(check_id="b", property="second", measured=1.0, tolerance=1e-8, passed=False,
                               detail="too large"))
        return report

    def test_status(self, report):
        """One failure fails the report."""
        assert not report.passed
        assert [check.check_id for check in report.failures()] == ["b"]

    def test_duplicate_id(self, report):
        """Check ids are unique."""
        with pytest.raises(ValueError, match="Duplicate check id"):
            report.add(CheckRecord(check_id="a", property="again", passed=True))

    def test_summary(self, report):
        """Summary lists every check and the tally."""
        summary = report.summary()
        assert "PASS  a" in summary
        assert "FAIL  b" in summary
        assert "too large" in summary
        assert summary.endswith("1/2 checks passed")

    def test_dump(self, report):
        """The JSON form carries the schema version."""
        data = report.model_dump()
        assert data["schema_version"] == "1.0"
        assert len(data["checks"]) == 2

    def test_harness_criterion(self):
        """The quadrature harness passes at its tolerance."""
        report = Report()
        check_harness(report, RunConfig())
        assert report.passed
        assert report.checks[0].check_id == "2"

    def test_relation_criterion_fails_on_corruption(self):
        """A corrupted Robin constant fails the relation check."""

        class FakePotential:
            def relation_residual(self):
                return 0.1

        class FakeGeometry:
            pot = FakePotential()

        report = Report()
        check_relation(report, RunConfig(), FakeGeometry())
        assert not report.passed

    def test_precision_criterion_takes_worst_quantity(self):
        """A drift in the planar norm alone fails criterion 10."""

        class FakeSolution:
            refined = None

        class FakeRecord:
            solution = FakeSolution()
            escalation = {"coefficients": 1e-40, "h_tilde": 1e-40, "h_hat": 1e-40, "h": 1e-6, "zeros": 1e-40,
                          "dps": 80}

        report = Report()
        check_precision(report, RunConfig(), None, {"N10_r0": FakeRecord()})
        assert not report.passed
        assert report.checks[0].measured == pytest.approx(1e-6)
        assert "'h': 1e-06" in report.checks[0].detail

    def test_precision_criterion_without_records(self):
        """Nothing escalated means nothing was verified."""
        report = Report()
        check_precision(report, RunConfig(), None, {})
        assert not report.passed


class TestAcceptanceSuite:
    """End-to-end runs of the verify command."""

    @pytest.mark.slow
    def test_quick_report_covers_every_criterion(self, tmp_path):
        """report.json carries checks for criteria 1 through 11."""
        code = main(["verify", "--quick", "--config", _write_config(tmp_path), "--out", str(tmp_path)])
        assert code in (EXIT_OK, EXIT_VERIFY)
        report = json.loads((tmp_path / "verify" / "report.json").read_text(encoding="utf-8"))
        criteria = {check["check_id"].split(".")[0] for check in report["checks"]}
        assert criteria == {str(k) for k in range(1, 12)}
        assert (tmp_path / "verify" / "report.txt").exists()
        assert code == (EXIT_OK if all(check["passed"] for check in report["checks"]) else EXIT_VERIFY)

    @pytest.mark.slow
    def test_corrupted_geometry_fails(self, tmp_path, monkeypatch):
        """A shifted ℓ_2D breaks the relation check and the exit code reports it."""
        solve = cli.solve_geometry

        def corrupted(config, w=None):
            geo = solve(config, w)
            geo.pot = dataclasses.replace(geo.pot, ell2D=geo.pot.ell2D + 0.5)
            return geo

        monkeypatch.setattr(cli, "solve_geometry", corrupted)
        code = main(["verify", "--quick", "--config", _write_config(tmp_path), "--out", str(tmp_path)])
        assert code == EXIT_VERIFY
        report = json.loads((tmp_path / "verify" / "report.json").read_text(encoding="utf-8"))
        relation = [check for check in report["checks"] if check["check_id"] == "6"]
        assert relation and not relation[0]["passed"]


class TestCurveCriterion:
    """Criterion 3 measured against the rebuilt quartic and the uniformization."""

    @pytest.fixture(scope="class")
    def geo(self):
        """Curve and phase of the baseline."""
        params = ModelParams(1.0, 1.0, 1.0, N=1)

        class CurveOnly:
            curve = solve_curve(params)
            phase = classify_phase(params)

        return CurveOnly()

    def test_baseline_passes(self, geo):
        """The solved curve satisfies every identity."""
        report = Report()
        check_curve(report, RunConfig(), geo)
        assert report.passed, report.summary()

    def test_perturbed_map_fails(self, geo):
        """A slightly wrong ρ is caught by each identity."""

        class Perturbed:
            curve = dataclasses.replace(geo.curve, map=dataclasses.replace(geo.curve.map,
                                                                       rho=geo.curve.map.rho * (1 + 1e-6)))
            phase = geo.phase

        report = Report()
        check_curve(report, RunConfig(), Perturbed())
        failed = {check.check_id for check in report.failures()}
        assert {"3.rho_relation", "3.c0", "3.z1"} <= failed


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
