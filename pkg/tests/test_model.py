#!/usr/bin/env python3
"""
Unit tests for the model parameters, phase classification and weights.
"""

import cmath
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

sys.path.append(str(Path(__file__).parent.parent))

from src.model import (  # noqa: E402
    InfinitePotential,
    ModelParams,
    PhaseTag,
    classify_phase,
    critical_w,
    droplet_density,
    eval_planar_weight,
    eval_re_script_V,
    eval_script_V,
    eval_script_V_prime,
    eval_V_limit,
    eval_V_planar,
    eval_weight,
    gamma_ratio_G,
    gamma_ratio_G_stirling,
    planar_potential,
)
from src.utils.errors import BranchError, DomainError  # noqa: E402


class TestModelParams:
    """Test cases for ModelParams validation."""

    def test_degree_defaults_to_size(self):
        """n defaults to N, so r0 = 0."""
        params = ModelParams(1.0, 1.0, 1.0, N=5)
        assert params.n == 5
        assert params.r0 == 0

    def test_offset(self):
        """r0 = n − N."""
        assert ModelParams(1.0, 1.0, 1.0, N=5, n=7).r0 == 2

    def test_non_positive_charge(self):
        """Zero charges are rejected."""
        with pytest.raises(DomainError, match="Charges must be positive"):
            ModelParams(0.0, 1.0, 1.0, N=3)

    def test_non_positive_w(self):
        """w must be positive."""
        with pytest.raises(DomainError, match="Insertion point"):
            ModelParams(1.0, 1.0, -0.5, N=3)

    def test_degree_too_large(self):
        """The planar weight stops being integrable past n = N + N·Q0."""
        with pytest.raises(DomainError, match="not integrable"):
            ModelParams(1.0, 1.0, 1.0, N=2, n=5)

    def test_integer_exponents(self):
        """N·Q0 and N·Q1 integral for Q = 1, not for Q = 0.5 at odd N."""
        assert ModelParams(1.0, 1.0, 1.0, N=3).integer_exponents
        assert not ModelParams(0.5, 1.0, 1.0, N=3).integer_exponents

    def test_with_size(self):
        """with_size keeps charges and sets n = N + r0."""
        params = ModelParams(1.0, 2.0, 1.0, N=3).with_size(6, 1)
        assert (params.N, params.n, params.Q1) == (6, 7, 2.0)


class TestPhase:
    """Test cases for the critical position and phase classification."""

    def test_critical_w_baseline(self):
        """For Q0 = Q1 = 1, w_cri = 1/√8."""
        assert critical_w(1.0, 1.0) == pytest.approx(1 / math.sqrt(8), rel=1e-14)

    def test_critical_w_rejects_zero_charge(self):
        """critical_w needs positive charges."""
        with pytest.raises(DomainError):
            critical_w(0.0, 1.0)

    def test_classification(self):
        """w above w_cri is pre-critical, below is post-critical."""
        assert classify_phase(ModelParams(1.0, 1.0, 1.0, N=1)).tag is PhaseTag.PRE_CRITICAL
        assert classify_phase(ModelParams(1.0, 1.0, 0.3, N=1)).tag is PhaseTag.POST_CRITICAL

    def test_critical_tie(self):
        """w = w_cri is reported as Critical."""
        phase = classify_phase(ModelParams(1.0, 1.0, 1 / math.sqrt(8), N=1))
        assert phase.tag is PhaseTag.CRITICAL
        assert not phase.is_pre_critical


class TestPotentials:
    """Test cases for the planar and logarithmic potentials."""

    @pytest.fixture
    def params(self):
        """Baseline parameters."""
        return ModelParams(1.0, 1.0, 1.0, N=4)

    def test_planar_potential_at_w(self, params):
        """V is +∞ at the insertion point."""
        value = eval_V_planar(params, 1.0)
        assert isinstance(value, InfinitePotential)
        assert value.value == math.inf
        assert isinstance(eval_V_limit(params, 1.0), InfinitePotential)

    def test_planar_potential_without_insertion(self):
        """Q1 = 0 is finite everywhere."""
        assert planar_potential(1.0, 1.0, 0.0, 1.0, 4) == pytest.approx((1 + 0.25 + 1) * math.log(2))

    def test_planar_potential_value(self, params):
        """Closed form at z = 2i."""
        expected = (1 + 0.25 + 2) * math.log(5) - 2 * math.log(abs(2j - 1))
        assert eval_V_planar(params, 2j) == pytest.approx(expected, rel=1e-14)

    def test_script_V_cut(self, params):
        """𝒱 is cut along (−∞, w]."""
        with pytest.raises(BranchError):
            eval_script_V(params, 0.5)
        with pytest.raises(BranchError):
            eval_script_V(params, -3.0)

    def test_script_V_derivative(self, params):
        """𝒱′ matches a centred difference of 𝒱."""
        z, h = 1.3 + 0.7j, 1e-6
        numeric = (eval_script_V(params, z + h) - eval_script_V(params, z - h)) / (2 * h)
        assert abs(numeric - eval_script_V_prime(params, z)) < 1e-7

    def test_real_part_is_single_valued(self, params):
        """Re 𝒱 agrees with 𝒱 off the cut and is finite on it."""
        z = 0.4 + 1.1j
        assert eval_re_script_V(params, z) == pytest.approx(eval_script_V(params, z).real, abs=1e-13)
        assert np.isfinite(eval_re_script_V(params, -2.0))


class TestWeights:
    """Test cases for contour and planar weights."""

    @pytest.fixture
    def params(self):
        """Baseline parameters with r0 = 1."""
        return ModelParams(1.0, 1.0, 1.0, N=3, n=4)

    def test_contour_weight_value(self, params):
        """Principal-branch product at z = 2."""
        z = 2.0
        expected = ((z - 1) / z) ** 3 * z ** -4 * (z + 1) ** -6
        assert eval_weight(params, z) == pytest.approx(expected, rel=1e-14)

    def test_contour_weight_cuts(self, params):
        """Cuts on [0, w] and (−∞, −1/w]."""
        with pytest.raises(BranchError):
            eval_weight(params, 0.5)
        with pytest.raises(BranchError):
            eval_weight(params, -2.0)
        assert cmath.isfinite(eval_weight(params, -0.5))

    def test_planar_weight_vanishes_at_w(self, params):
        """|z − w|^{2NQ1} kills the weight at w."""
        assert eval_planar_weight(params, 1.0) == 0.0

    def test_planar_weight_decay(self, params):
        """The weight decays like |z|^{−2(N+NQ0)−2}."""
        big = eval_planar_weight(params, 1e3)
        bigger = eval_planar_weight(params, 2e3)
        assert bigger / big == pytest.approx(2.0 ** (-2 * (3 + 3) - 2), rel=1e-2)


class TestDropletDensity:
    """Test cases for the droplet area density."""

    def test_total_mass(self):
        """The density integrates to 1 + Q0 + Q1 over the plane."""
        params = ModelParams(1.0, 2.0, 1.0, N=1)
        mass, _ = quad(lambda r: float(droplet_density(params, r)) * 2 * math.pi * r, 0.0, np.inf)
        assert mass == pytest.approx(4.0, rel=1e-10)

    def test_rotation_invariant(self):
        """Depends on |u| only."""
        params = ModelParams(1.0, 1.0, 1.0, N=1)
        assert droplet_density(params, 0.6j) == pytest.approx(droplet_density(params, -0.6))


class TestGammaRatio:
    """Test cases for the duality constant G_{k,N}."""

    def test_small_case(self):
        """Γ(2)Γ(2)/Γ(4) = 1/6 at N = 1, k = 0."""
        assert gamma_ratio_G(ModelParams(1.0, 1.0, 1.0, N=1), 0) == pytest.approx(1 / 6, rel=1e-14)

    def test_matches_gamma_products(self):
        """log-Gamma evaluation agrees with the direct Gamma product for small N."""
        for Q0, Q1 in ((1.0, 1.0), (0.5, 2.5), (2.0, 0.75)):
            for N in range(1, 6):
                params = ModelParams(Q0, Q1, 1.0, N=N)
                k = 0
                while N + N * Q0 - k > 0:
                    direct = (math.gamma(N + N * Q0 - k) * math.gamma(1 + k + N * Q1)
                              / math.gamma(N * (1 + Q0 + Q1) + 1))
                    assert gamma_ratio_G(params, k) == pytest.approx(direct, rel=1e-12), (Q0, Q1, N, k)
                    k += 1

    def test_domain(self):
        """k beyond N + NQ0 has a non-positive Gamma argument."""
        with pytest.raises(DomainError):
            gamma_ratio_G(ModelParams(1.0, 1.0, 1.0, N=1), 2)

    def test_stirling_convergence(self):
        """The Stirling form approaches the exact ratio as N grows."""
        errors = []
        for N in (10, 40, 160):
            params = ModelParams(1.0, 1.0, 1.0, N=N)
            exact = gamma_ratio_G(params, N)
            errors.append(abs(gamma_ratio_G_stirling(params, N) / exact - 1))
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
