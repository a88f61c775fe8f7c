#!/usr/bin/env python3
"""
Unit tests for configuration loading, output helpers and polyline geometry.
"""

import json
import sys
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from pydantic import ValidationError

sys.path.append(str(Path(__file__).parent.parent))

from src.utils.config import THREADS_ENV, RunConfig, load_config, max_workers  # noqa: E402
from src.utils.errors import MarginError, MotherSolveError, PhaseError, SolverError  # noqa: E402
from src.utils.io import mp_from_str, mp_to_str, points_frame, read_json, write_csv, write_json  # noqa: E402
from src.utils.paths import (  # noqa: E402
    distance_to_polyline,
    integrate_path,
    plan_path,
    real_axis_crossings,
    segment_crosses,
    signed_area,
    winding_number,
)


class TestConfig:
    """Test cases for RunConfig and load_config."""

    def test_defaults(self):
        """Built-in defaults match the baseline."""
        config = RunConfig()
        assert (config.Q0, config.Q1, config.w) == (1.0, 1.0, 1.0)
        assert config.N_list == [10, 20, 40]
        assert config.precision_for(10) == 70

    def test_precision_override(self):
        """An explicit precision replaces 40 + 3n."""
        assert RunConfig(precision=120).precision_for(10) == 120

    def test_missing_file_falls_back(self, tmp_path):
        """A missing file yields the defaults."""
        config = load_config(str(tmp_path / "absent.json"))
        assert config == RunConfig()

    def test_malformed_file_falls_back(self, tmp_path):
        """Invalid JSON yields the defaults."""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert load_config(str(path)).w == 1.0

    def test_partial_file(self, tmp_path):
        """Missing sections are filled; decimal strings are accepted."""
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"w": "2.0", "tolerances": {"mass": 1e-9}}), encoding="utf-8")
        config = load_config(str(path))
        assert config.w == 2.0
        assert config.tolerances.mass == 1e-9
        assert config.tolerances.frostman == 1e-7
        assert config.quadrature.radial_nodes == 240

    def test_overrides_win(self, tmp_path):
        """Keyword overrides replace file values; None is ignored."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"N_list": [5]}), encoding="utf-8")
        config = load_config(str(path), N_list=[6, 12], seed=None)
        assert config.N_list == [6, 12]
        assert config.seed == 0

    def test_invalid_values(self):
        """Non-positive parameters and empty size lists are rejected."""
        with pytest.raises(ValidationError):
            RunConfig(w=-1.0)
        with pytest.raises(ValidationError, match="must not be empty"):
            RunConfig(N_list=[])
        with pytest.raises(ValidationError, match="outside"):
            RunConfig(N_list=[2], r0_list=[5])

    def test_top_degree_needs_successor(self):
        """n + 1 must still be admissible, since the norm chain uses P_{n+1,N}."""
        with pytest.raises(ValidationError, match="outside"):
            RunConfig(N_list=[1], r0_list=[1])
        assert RunConfig(N_list=[2], r0_list=[1]).N_list == [2]

    def test_trace_settings(self):
        """Trajectory section maps onto the tracer settings."""
        settings = RunConfig().trace_settings()
        assert settings.samples == 2001
        assert settings.rtol == 1e-10
        assert (settings.capture_radius, settings.node_capture_radius) == (1e-5, 1e-4)

    def test_max_workers(self, monkeypatch):
        """Thread count from the environment, with a fallback."""
        monkeypatch.setenv(THREADS_ENV, "3")
        assert max_workers() == 3
        monkeypatch.setenv(THREADS_ENV, "many")
        assert 1 <= max_workers() <= 4


class TestErrors:
    """Test cases for the error hierarchy."""

    def test_value_error_base(self):
        """Every domain error is a ValueError."""
        assert issubclass(MotherSolveError, ValueError)
        assert issubclass(PhaseError, MotherSolveError)
        assert issubclass(SolverError, MotherSolveError)


class TestIO:
    """Test cases for JSON and CSV output."""

    def test_mp_strings(self):
        """mpf and mpc survive the decimal-string form."""
        with mp.workdps(40):
            x = mp.mpf(1) / 3
            z = mp.mpc(x, -x)
            assert abs(mp_from_str(mp_to_str(x, 40)) - x) < mp.mpf(10) ** -38
            assert abs(mp_from_str(mp_to_str(z, 40)) - z) < mp.mpf(10) ** -38

    def test_json_sorted_and_converted(self, tmp_path):
        """Keys are sorted; numpy and complex values become JSON."""
        path = write_json({"b": np.float64(1.5), "a": 1 + 2j, "c": np.arange(2)}, tmp_path / "out" / "x.json")
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert read_json(path) == {"a": [1.0, 2.0], "b": 1.5, "c": [0, 1]}

    def test_points_frame(self, tmp_path):
        """Fixed column layout s, re, im, value."""
        frame = points_frame(np.array([1 + 1j, 2 - 1j]), value=[3.0, 4.0])
        assert list(frame.columns) == ["s", "re", "im", "value"]
        path = write_csv(frame, tmp_path / "points.csv")
        assert path.read_text(encoding="utf-8").splitlines()[0] == "s,re,im,value"


class TestPaths:
    """Test cases for polyline geometry."""

    @pytest.fixture
    def square(self):
        """Counterclockwise unit square centred at 0."""
        return np.array([-0.5 - 0.5j, 0.5 - 0.5j, 0.5 + 0.5j, -0.5 + 0.5j])

    def test_winding_and_area(self, square):
        """Winding 1 inside, 0 outside; positive area."""
        assert winding_number(square, 0.0) == 1
        assert winding_number(square, 2.0) == 0
        assert winding_number(square[::-1], 0.0) == -1
        assert signed_area(square) == pytest.approx(1.0)

    def test_distance(self, square):
        """Distance to the closed outline."""
        outline = np.append(square, square[0])
        assert distance_to_polyline(2.0, outline)[0] == pytest.approx(1.5)

    def test_crossings(self):
        """A sign change of Im is located by linear interpolation."""
        assert real_axis_crossings([1 + 1j, 3 - 1j]) == pytest.approx([2.0])
        assert segment_crosses(-1j, 1j, [-1.0, 1.0])
        assert not segment_crosses(2 - 1j, 2 + 1j, [-1.0, 1.0])

    def test_plan_path_detours(self):
        """A wall between the ends forces a detour that never crosses it."""
        wall = [1 - 2j, 1 + 2j]
        path = plan_path(0j, 2 + 0j, [wall])
        assert len(path) > 2
        for p, q in zip(path[:-1], path[1:]):
            assert not segment_crosses(p, q, wall)

    def test_plan_path_margin(self):
        """An avoid point on the only admissible route raises."""
        with pytest.raises(MarginError):
            plan_path(0j, 1 + 0j, [], avoid_points=[0j], margin=0.1)

    def test_integrate_path(self):
        """∫ z dz along a polyline depends only on the ends."""
        value = integrate_path(lambda z: z, [0j, 1 + 0j, 1 + 1j])
        assert value == pytest.approx((1 + 1j) ** 2 / 2, abs=1e-12)

    def test_integrate_long_segment(self):
        """Geometric splitting resolves ∫_1^R z⁻² dz."""
        assert integrate_path(lambda z: z ** -2, [1 + 0j, 1e4 + 0j]) == pytest.approx(1 - 1e-4, abs=1e-10)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
