#!/usr/bin/env python3
"""
Unit tests for the g-function, the Robin constants and the Cauchy transforms.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.model import ModelParams  # noqa: E402
from src.mother_body import build_contour  # noqa: E402
from src.potential import (  # noqa: E402
    build_potential,
    cauchy_mu0,
    cauchy_nu0_boundary,
    ell2D_closed_form,
    eval_g,
    eval_log_potential,
    eval_phi,
    eval_script_U,
    eval_U2D,
    eval_U0,
    exterior_critical_points,
    frostman_profile,
    normal_derivative_jump,
)
from src.spectral_curve import solve_curve  # noqa: E402
from src.utils.errors import BranchError, DomainError, MarginError  # noqa: E402


@pytest.fixture(scope="module")
def pot():
    """Potential data of the baseline mother body."""
    return build_potential(build_contour(solve_curve(ModelParams(1.0, 1.0, 1.0, N=1))))


class TestPartialFractions:
    """Test cases for the residues of h."""

    def test_residue_at_origin(self, pot):
        """u = 0 is z = ∞, where S1 ~ (1+Q1)/(Tz)."""
        assert pot.poles[0] == 0.0
        assert pot.residues[0] == pytest.approx(-2 / 3, abs=1e-10)

    def test_residue_at_insertion(self, pot):
        """u = v0 is z = w, where S1 has residue Q1/T."""
        assert pot.poles[2] == pot.curve.map.v0
        assert pot.residues[2] == pytest.approx(1 / 3, abs=1e-10)


class TestRobinConstants:
    """Test cases for ℓ0 and ℓ_2D."""

    def test_ell2D_matches_closed_form(self, pot):
        """Path quadrature agrees with the partial-fraction limit."""
        closed = ell2D_closed_form(pot.curve, pot.poles, pot.residues)
        assert pot.ell2D == pytest.approx(closed, abs=1e-6)

    def test_ell0_is_constant_on_gamma0(self, pot):
        """The Frostman constant does not move along Γ0."""
        assert pot.ell0_spread < 1e-7

    def test_relation(self, pot):
        """ℓ0 and ℓ_2D are tied through Re g(0)."""
        assert abs(pot.relation_residual()) < 1e-6

    def test_frostman_equality(self, pot):
        """2U + Re 𝒱 + ℓ0 vanishes on Γ0."""
        gamma0 = pot.body.gamma0
        points = gamma0.at(gamma0.length * np.array([0.2, 0.5, 0.8]))
        assert np.max(np.abs(frostman_profile(pot, points))) < 1e-7

    def test_frostman_inequality(self, pot):
        """The profile is positive on the steepest-ascent paths."""
        gamma1 = pot.body.gamma1
        points = gamma1.at(gamma1.length * np.array([0.25, 0.5, 0.75]))
        assert np.all(frostman_profile(pot, points) > 0)

    def test_s_property(self, pot):
        """Normal derivatives from both sides of Γ0 agree."""
        left, right = normal_derivative_jump(pot, 0.3 * pot.body.gamma0.length)
        assert left == pytest.approx(right, rel=1e-3)

    def test_to_dict(self, pot):
        """Serialised constants."""
        data = pot.to_dict()
        assert data["ell0"] == pot.ell0
        assert len(data["h_residues"]) == 4


class TestGFunction:
    """Test cases for the complex log-transform g."""

    def test_growth(self, pot):
        """Re g(z) ≈ log|z| for large z."""
        z = 1e4j
        assert abs(eval_g(pot, z).real - math.log(1e4)) < 1e-3

    def test_continuous_across_left_axis(self, pot):
        """No cut on the real axis to the left of Γ0."""
        assert abs(eval_g(pot, -3 + 1e-9j) - eval_g(pot, -3 - 1e-9j)) < 1e-6

    def test_jump_on_ray(self, pot):
        """g jumps by 2πi across [c0, ∞)."""
        x = pot.curve.c0 + 2.0
        jump = eval_g(pot, x + 1e-9j) - eval_g(pot, x - 1e-9j)
        assert abs(abs(jump) - 2 * math.pi) < 1e-6
        assert abs(jump.real) < 1e-6

    def test_refuses_gamma0(self, pot):
        """Points on Γ0 are on the cut."""
        with pytest.raises(BranchError):
            eval_g(pot, pot.body.gamma0.points[100])

    def test_U0_is_real_part_of_phi(self, pot):
        """Closed-form U0 agrees with the path integral of √R0."""
        z = -1.5 + 1.2j
        assert eval_U0(pot, z) == pytest.approx(eval_phi(pot, z).real, abs=1e-7)


class TestCauchyTransforms:
    """Test cases for the mother-body property."""

    def test_transforms_agree_outside_droplet(self, pot):
        """C^{μ0} = C^{ν0} outside the droplet."""
        for z in (3.0 + 2.0j, -3.0j, -4.0):
            mu = cauchy_mu0(pot, z)
            nu = cauchy_nu0_boundary(pot.curve, z)
            assert abs(mu - nu) < 1e-6 * abs(nu)

    def test_mu0_near_gamma0(self, pot):
        """Evaluations on Γ0 are refused."""
        with pytest.raises(MarginError):
            cauchy_mu0(pot, pot.body.gamma0.points[500])

    def test_nu0_inside_droplet(self, pot):
        """0 lies inside the droplet at the baseline."""
        with pytest.raises(DomainError, match="not exterior"):
            cauchy_nu0_boundary(pot.curve, 0.0)

    def test_exterior_probe_filters_interior(self, pot):
        """Interior grid points are dropped from the critical-point probe."""
        frame = exterior_critical_points(pot, [0.0, 3.0 + 3.0j])
        assert list(frame.columns) == ["re", "im", "value"]
        assert len(frame) == 1


class TestSphericalPotential:
    """Test cases for 𝒰, 𝒰_2D and the logarithmic potential of μ0."""

    def test_U2D_scales_script_U(self, pot):
        """𝒰_2D = (1+Q0+Q1)·𝒰."""
        z = np.array([2.5 + 1.0j, -3.0 + 0.5j])
        assert np.allclose(eval_U2D(pot, z), 3.0 * eval_script_U(pot, z), rtol=1e-14)

    def test_U2D_growth(self, pot):
        """𝒰_2D(z) − 2Q0 log|z| tends to ℓ_2D."""
        z = 1e5 * np.exp(0.7j)
        closed = ell2D_closed_form(pot.curve, pot.poles, pot.residues)
        assert eval_U2D(pot, z) - 2 * math.log(abs(z)) == pytest.approx(closed, abs=1e-3)

    def test_log_potential_at_infinity(self, pot):
        """U^{μ0}(z) ≈ −log|z| for a unit mass."""
        z = 1e4 + 3e3j
        assert eval_log_potential(pot, z) == pytest.approx(-math.log(abs(z)), abs=1e-3)

    def test_log_potential_vectorised(self, pot):
        """Array input returns one value per point."""
        values = eval_log_potential(pot, np.array([4.0 + 1.0j, -2.0 - 2.0j]))
        assert values.shape == (2,)
        assert np.all(np.isfinite(values))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
