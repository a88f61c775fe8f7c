#!/usr/bin/env python3
"""
Unit tests for the spectral curve solver and its uniformization.

Baseline Q0 = Q1 = 1, w = 1: c0 = 1 + √2, |z1| = 2√2 − 2.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.model import ModelParams  # noqa: E402
from src.spectral_curve import (  # noqa: E402
    droplet_boundary,
    eval_deck,
    eval_f,
    eval_F,
    eval_F_prime,
    eval_P1,
    eval_P2,
    eval_R,
    eval_R0,
    eval_S,
    eval_S_direct,
    residue_on_circle,
    solve_curve,
    sqrt_R0,
)
from src.utils.errors import BranchError, PhaseError, PoleError  # noqa: E402
from src.utils.paths import winding_number  # noqa: E402


@pytest.fixture(scope="module")
def curve():
    """Solved baseline curve."""
    return solve_curve(ModelParams(1.0, 1.0, 1.0, N=1))


class TestSolveCurve:
    """Test cases for the double-root solve."""

    def test_node(self, curve):
        """c0 = 1 + √2."""
        assert curve.c0 == pytest.approx(1 + math.sqrt(2), rel=1e-10)

    def test_branch_point_modulus(self, curve):
        """|z1| = 2√2 − 2 and z2 = conj(z1)."""
        assert abs(curve.z1) == pytest.approx(2 * math.sqrt(2) - 2, rel=1e-10)
        assert curve.z2 == curve.z1.conjugate()
        assert curve.z1.imag > 0

    def test_map_parameters(self, curve):
        """Recovered (ρ, a, b, v0) at the baseline."""
        cmap = curve.map
        assert cmap.rho == pytest.approx(0.900367, abs=1e-5)
        assert cmap.a == pytest.approx(0.372941, abs=1e-5)
        assert cmap.b == pytest.approx(0.920097, abs=1e-5)
        assert cmap.v0 == pytest.approx(0.555328, abs=1e-5)

    def test_rho_relation(self, curve):
        """b·ρ²/a = 2 at Q0 = Q1 = 1."""
        cmap = curve.map
        assert cmap.b * cmap.rho ** 2 / cmap.a == pytest.approx(2.0, rel=1e-10)

    def test_zero_location(self, curve):
        """f(b) lies in (0, w) and 0 is inside the droplet."""
        assert 0 < curve.fb < 1.0
        assert curve.zero_in_droplet

    def test_post_critical(self):
        """Post-critical parameters are refused."""
        with pytest.raises(PhaseError, match="post-critical"):
            solve_curve(ModelParams(1.0, 1.0, 0.3, N=1))

    def test_to_dict(self, curve):
        """Serialised curve carries the map and the node."""
        data = curve.to_dict()
        assert data["c0"] == curve.c0
        assert set(data["map"]) == {"rho", "a", "b", "v0", "u1"}


class TestConformalMap:
    """Test cases for f, its critical points and the deck map."""

    def test_critical_point(self, curve):
        """f′(u1) = 0 and f(u1) = z1."""
        cmap = curve.map
        assert abs(complex(cmap.f_prime(cmap.u1))) < 1e-10
        assert abs(complex(cmap.f(cmap.u1)) - curve.z1) < 1e-10

    def test_insertion_preimages(self, curve):
        """f(v0) = w and f(1/v0) = −1/w."""
        cmap = curve.map
        assert abs(eval_f(cmap, cmap.v0) - 1.0) < 1e-10
        assert abs(eval_f(cmap, 1 / cmap.v0) + 1.0) < 1e-10

    def test_poles(self, curve):
        """f has poles at 0 and 1/a; the deck map at 1/b."""
        with pytest.raises(PoleError):
            eval_f(curve.map, 0.0)
        with pytest.raises(PoleError):
            eval_f(curve.map, 1 / curve.map.a)
        with pytest.raises(PoleError):
            eval_deck(curve.map, 1 / curve.map.b)

    def test_deck_preserves_f(self, curve):
        """f∘deck = f."""
        cmap = curve.map
        for u in (0.3 + 0.2j, -0.5j, 0.8):
            assert abs(eval_f(cmap, eval_deck(cmap, u)) - eval_f(cmap, u)) < 1e-10

    def test_inverse_on_disc_side(self, curve):
        """F1(f(u)) = u for u well inside the disc."""
        u = 0.3 * np.exp(1j * np.linspace(0.1, 2 * np.pi, 7))
        assert np.max(np.abs(eval_F(curve, curve.map.f(u), 1) - u)) < 1e-10

    def test_droplet_excludes_insertion(self, curve):
        """The boundary f(e^{iθ}) does not wind around w."""
        _, boundary, _ = droplet_boundary(curve.map)
        assert winding_number(boundary, 1.0) == 0

    def test_boundary_grid_size(self, curve):
        """Fewer than 16 boundary points is an error."""
        with pytest.raises(ValueError, match="at least 16"):
            droplet_boundary(curve.map, 8)


class TestSchwarzFunctions:
    """Test cases for S1, S2 and √R0."""

    def test_algebraic_matches_uniformized(self, curve):
        """S_k from the quadratic agrees with f(1/F_k)/(1 + z f(1/F_k))."""
        for z in (2.5 + 1.0j, -3.0 + 0.5j, 4.0j):
            for sheet in (1, 2):
                assert abs(eval_S(curve, z, sheet) - eval_S_direct(curve, z, sheet)) < 1e-10

    def test_residue_at_w(self, curve):
        """S1 has residue Q1/(1+Q0+Q1) at w."""
        residue = residue_on_circle(lambda z: eval_S(curve, z, 1), 1.0, 1e-3)
        assert residue == pytest.approx(1 / 3, abs=1e-8)

    def test_sqrt_R0_at_infinity(self, curve):
        """z·√R0(z) → Q0."""
        z = 1e6 + 1e5j
        assert abs(z * sqrt_R0(curve, z) - 1.0) < 1e-5

    def test_sqrt_R0_squares_to_R0(self, curve):
        """(√R0)² = R0 off the cut."""
        z = 1.7 - 0.9j
        assert abs(sqrt_R0(curve, z) ** 2 - eval_R0(curve, z)) < 1e-12 * abs(eval_R0(curve, z))

    def test_pole_and_cut_errors(self, curve):
        """S1 has a pole at w; evaluation on the cut is refused."""
        with pytest.raises(PoleError):
            eval_S(curve, 1.0, 1)
        with pytest.raises(BranchError):
            eval_S(curve, curve.z1, 1)

    def test_unknown_sheet(self, curve):
        """Only sheets 1 and 2 exist."""
        with pytest.raises(ValueError, match="Unknown sheet"):
            eval_S(curve, 2.0, 3)


class TestDiscriminant:
    """Test cases for F′, P1, P2 and R."""

    def test_F_prime_matches_difference(self, curve):
        """F_k′ agrees with a centred difference of F_k."""
        z, h = 2.5 + 1.0j, 1e-6
        for sheet in (1, 2):
            numeric = (eval_F(curve, z + h, sheet) - eval_F(curve, z - h, sheet)) / (2 * h)
            assert abs(eval_F_prime(curve, z, sheet) - numeric) < 1e-7 * abs(numeric)

    def test_vieta(self, curve):
        """P1 = S1 + S2 and P2 = S1·S2."""
        for z in (2.5 + 1.0j, -3.0 + 0.5j):
            s1, s2 = eval_S(curve, z, 1), eval_S(curve, z, 2)
            assert abs(eval_P1(curve, z) - (s1 + s2)) < 1e-10 * abs(s1 + s2)
            assert abs(eval_P2(curve, z) - s1 * s2) < 1e-10 * abs(s1 * s2)

    def test_R_is_discriminant(self, curve):
        """R = P1² − 4P2."""
        z = -1.2 + 2.3j
        expected = eval_P1(curve, z) ** 2 - 4 * eval_P2(curve, z)
        assert abs(eval_R(curve, z) - expected) < 1e-10 * abs(expected)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
