#!/usr/bin/env python3
"""
Core model for the two-insertion spherical ensemble.

Parameter validation, phase classification and the elementary scalar
functions of the model: the planar potential V, the logarithmic potential 𝒱,
the contour weight w_{n,N} and the Gamma-ratio constant G_{k,N}.
All computation is in projected planar coordinates.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Union
import cmath
import logging
import math

import numpy as np
from scipy.special import gammaln

from src.utils.errors import BranchError, DomainError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

CRITICAL_TOL = 1e-12  # relative tie tolerance for classify_phase


class PhaseTag(Enum):
    """Phase of the Coulomb gas relative to the critical insertion position."""
    PRE_CRITICAL = "pre_critical"
    POST_CRITICAL = "post_critical"
    CRITICAL = "critical"


@dataclass(frozen=True)
class Phase:
    """Phase classification result."""
    tag: PhaseTag
    w_cri: float

    @property
    def is_pre_critical(self) -> bool:
        return self.tag is PhaseTag.PRE_CRITICAL


@dataclass(frozen=True)
class InfinitePotential:
    """Explicit result for an evaluation at a logarithmic singularity."""
    point: complex
    reason: str = "logarithmic singularity"

    @property
    def value(self) -> float:
        return math.inf


@dataclass(frozen=True)
class ModelParams:
    """
    Charges, insertion point and sizes of the ensemble.

    Q0 sits at −1/w and Q1 at w after projection; n is the polynomial degree
    and r0 = n − N the fixed offset.
    """
    Q0: float
    Q1: float
    w: float
    N: int
    n: int = -1

    def __post_init__(self):
        if self.n == -1:
            object.__setattr__(self, "n", self.N)
        if not (self.Q0 > 0 and self.Q1 > 0):
            raise DomainError(f"Charges must be positive, got Q0={self.Q0}, Q1={self.Q1}")
        if not self.w > 0:
            raise DomainError(f"Insertion point must be positive, got w={self.w}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got N={self.N}")
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"Degree must be a non-negative integer, got n={self.n}")
        if self.n > self.N + self.N * self.Q0:
            raise DomainError(
                f"Degree n={self.n} exceeds N + N·Q0 = {self.N + self.N * self.Q0}; "
                f"the planar weight is not integrable"
            )

    @property
    def r0(self) -> int:
        return self.n - self.N

    @property
    def total_charge(self) -> float:
        """T = 1 + Q0 + Q1."""
        return 1.0 + self.Q0 + self.Q1

    @property
    def NQ0(self) -> float:
        return self.N * self.Q0

    @property
    def NQ1(self) -> float:
        return self.N * self.Q1

    @property
    def integer_exponents(self) -> bool:
        """True when N·Q0 and N·Q1 are integers (meromorphic contour integrand)."""
        return float(self.NQ0).is_integer() and float(self.NQ1).is_integer()

    def with_degree(self, n: int) -> "ModelParams":
        return ModelParams(self.Q0, self.Q1, self.w, self.N, n)

    def with_size(self, N: int, r0: int = 0) -> "ModelParams":
        return ModelParams(self.Q0, self.Q1, self.w, N, N + r0)

    def to_dict(self) -> dict:
        return {"Q0": self.Q0, "Q1": self.Q1, "w": self.w, "N": self.N, "n": self.n, "r0": self.r0}


def critical_w(Q0: float, Q1: float) -> float:
    """
    Critical insertion position separating the pre- and post-critical phases.

    Args:
        Q0: Charge at the south pole
        Q1: Charge at w

    Returns:
        (2Q0Q1 + Q0 + Q1 + 2√(Q0Q1(1+Q0)(1+Q1)))^{-1/2}
    """
    if Q0 <= 0 or Q1 <= 0:
        raise DomainError(f"critical_w needs positive charges, got Q0={Q0}, Q1={Q1}")
    s = 2 * Q0 * Q1 + Q0 + Q1 + 2 * math.sqrt(Q0 * Q1 * (1 + Q0) * (1 + Q1))
    return 1.0 / math.sqrt(s)


def classify_phase(params: ModelParams, tol: float = CRITICAL_TOL) -> Phase:
    """Classify by the sign of w − w_cri; near-ties are Critical."""
    w_cri = critical_w(params.Q0, params.Q1)
    if abs(params.w - w_cri) < tol * w_cri:
        tag = PhaseTag.CRITICAL
    elif params.w > w_cri:
        tag = PhaseTag.PRE_CRITICAL
    else:
        tag = PhaseTag.POST_CRITICAL
    logger.debug(f"w={params.w} vs w_cri={w_cri:.12f}: {tag.value}")
    return Phase(tag, w_cri)


def planar_potential(z: complex, Q0: float, Q1: float, w: float, N: int) -> Union[float, InfinitePotential]:
    """
    Finite-N planar potential (1 + 1/N + Q0 + Q1)·log(1+|z|²) − 2Q1·log|z − w|.

    Q1 = 0 is accepted here (insertion removed).
    """
    coef = 1.0 + 1.0 / N + Q0 + Q1
    if Q1 == 0:
        return coef * math.log1p(abs(z) ** 2)
    dist = abs(z - w)
    if dist == 0.0:
        return InfinitePotential(complex(z))
    return coef * math.log1p(abs(z) ** 2) - 2.0 * Q1 * math.log(dist)


def eval_V_planar(params: ModelParams, z: complex) -> Union[float, InfinitePotential]:
    """Planar potential V(z) at finite N; InfinitePotential at z = w."""
    return planar_potential(z, params.Q0, params.Q1, params.w, params.N)


def eval_V_limit(params: ModelParams, z: complex) -> Union[float, InfinitePotential]:
    """N → ∞ field (1 + Q0 + Q1)·log(1+|z|²) − 2Q1·log|z − w|."""
    dist = abs(z - params.w)
    if dist == 0.0:
        return InfinitePotential(complex(z))
    return params.total_charge * math.log1p(abs(z) ** 2) - 2.0 * params.Q1 * math.log(dist)


def _on_real_interval(z: complex, lo: float, hi: float) -> bool:
    return z.imag == 0.0 and lo <= z.real <= hi


def eval_script_V(params: ModelParams, z: complex) -> complex:
    """
    Logarithmic potential 𝒱(z) = (1+Q1)log z + (1+Q0)log(z + 1/w) − Q1 log(z − w).

    Principal logarithms; the combined cut is (−∞, w].
    """
    z = complex(z)
    if _on_real_interval(z, -math.inf, params.w):
        raise BranchError(f"𝒱 is cut along (−∞, {params.w}], got z={z}")
    w = params.w
    return ((1 + params.Q1) * cmath.log(z) + (1 + params.Q0) * cmath.log(z + 1 / w)
            - params.Q1 * cmath.log(z - w))


def eval_script_V_prime(params: ModelParams, z: complex) -> complex:
    """𝒱′(z) = (1+Q1)/z + (1+Q0)/(z+1/w) − Q1/(z−w)."""
    w = params.w
    return (1 + params.Q1) / z + (1 + params.Q0) / (z + 1 / w) - params.Q1 / (z - w)


def eval_re_script_V(params: ModelParams, z) -> np.ndarray:
    """Re 𝒱 through log-moduli; single valued, also on the cut of 𝒱."""
    z = np.asarray(z, dtype=complex)
    w = params.w
    return ((1 + params.Q1) * np.log(np.abs(z)) + (1 + params.Q0) * np.log(np.abs(z + 1 / w))
            - params.Q1 * np.log(np.abs(z - w)))


def eval_weight(params: ModelParams, z: complex) -> complex:
    """
    Contour weight w_{n,N}(z) = ((z−w)/z)^{NQ1} · z^{−n} · (z+1/w)^{−(N+NQ0)}.

    Principal powers give cuts exactly on [0, w] and (−∞, −1/w].
    """
    z = complex(z)
    w = params.w
    if _on_real_interval(z, 0.0, w) or _on_real_interval(z, -math.inf, -1 / w):
        raise BranchError(f"w_(n,N) is cut along [0, w] ∪ (−∞, −1/w], got z={z}")
    return ((z - w) / z) ** params.NQ1 * z ** (-params.n) * (z + 1 / w) ** (-(params.N + params.NQ0))


def eval_planar_weight(params: ModelParams, z) -> np.ndarray:
    """e^{−N·V(z)} = |z − w|^{2NQ1} (1+|z|²)^{−(N(1+Q0+Q1)+1)}, vectorised."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        log_w = (2 * params.NQ1 * np.log(np.abs(z - params.w))
                 - (params.N * params.total_charge + 1) * np.log1p(np.abs(z) ** 2))
    return np.exp(log_w)


def log_gamma_ratio_G(params: ModelParams, k: int) -> float:
    """log G_{k,N} via log-Gamma."""
    N = params.N
    x1 = N + params.NQ0 - k
    x2 = 1 + k + params.NQ1
    x3 = N * params.total_charge + 1
    if x1 <= 0 or x2 <= 0:
        raise DomainError(f"Gamma arguments must be positive for k={k}: got {x1}, {x2}")
    return float(gammaln(x1) + gammaln(x2) - gammaln(x3))


def gamma_ratio_G(params: ModelParams, k: int) -> float:
    """
    Constant of the planar/contour duality.

    Args:
        params: Model parameters
        k: Index of the (z − w)̄^k factor

    Returns:
        Γ(N + NQ0 − k)·Γ(1 + k + NQ1)/Γ(N(1+Q0+Q1) + 1)
    """
    return math.exp(log_gamma_ratio_G(params, k))


def log_gamma_ratio_G_stirling(params: ModelParams, k: int) -> float:
    """Stirling form of log G_{k,N} with r = k − N held fixed."""
    N = params.N
    r = k - N
    T = params.total_charge
    Q0, Q1 = params.Q0, params.Q1
    return (0.5 * math.log(2 * math.pi / N)
            + (N * Q0 - r - 0.5) * math.log(Q0)
            + (N * (1 + Q1) + r + 0.5) * math.log(1 + Q1)
            - (N * T + 0.5) * math.log(T))


def gamma_ratio_G_stirling(params: ModelParams, k: int) -> float:
    return math.exp(log_gamma_ratio_G_stirling(params, k))


def droplet_density(params: ModelParams, u) -> np.ndarray:
    """Density of the droplet measure ν0 on Ω: (1+Q0+Q1)/π · (1+|u|²)^{−2}."""
    u = np.asarray(u, dtype=complex)
    return params.total_charge / math.pi / (1 + np.abs(u) ** 2) ** 2


# Example usage
if __name__ == "__main__":
    params = ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=10)
    phase = classify_phase(params)
    print(f"w_cri = {phase.w_cri:.10f}, phase = {phase.tag.value}")
    print(f"G_(N,N) = {gamma_ratio_G(params, params.n):.6e}")
