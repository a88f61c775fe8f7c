#!/usr/bin/env python3
"""
Spectral curve and conformal map of the pre-critical droplet.

The droplet Ω is the image of the exterior of the unit disc under
f(u) = ρ(1 − bu)/(u(1 − au)). Its parameters (ρ, a, b) are recovered from
the spectral curve: the discriminant R = P1² − 4P2 of the Schwarz-function
branches has numerator P4, a quartic with a real double root c0 > w.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
from numpy.polynomial import Polynomial

from src.model import ModelParams, classify_phase
from src.utils.errors import (BranchError, ConsistencyError, MultiplicityError,
                              PhaseError, PoleError, SolverError)
from src.utils.paths import contains, distance_to_polyline, polygon_path

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-13  # absolute, on (P4, P4') residuals
NEWTON_MAX_ITER = 60
CHECK_TOL = 1e-8  # admissibility cross-checks of a candidate
POLE_TOL = 1e-14
CUT_TOL = 1e-12


@dataclass(frozen=True)
class ConformalMap:
    """Parameters of f(u) = ρ(1 − bu)/(u(1 − au)) and its critical points."""
    rho: float
    a: float
    b: float
    v0: float

    @property
    def u1(self) -> complex:
        """Critical point of f mapped to the upper branch point z1."""
        return complex(1 / self.b, -math.sqrt(self.b / self.a - 1) / self.b)

    @property
    def u2(self) -> complex:
        return self.u1.conjugate()

    def f(self, u):
        u = np.asarray(u, dtype=complex)
        return self.rho * (1 - self.b * u) / (u * (1 - self.a * u))

    def f_prime(self, u):
        u = np.asarray(u, dtype=complex)
        a, b = self.a, self.b
        return self.rho * (-1 + 2 * a * u - a * b * u ** 2) / (u ** 2 * (1 - a * u) ** 2)

    def deck(self, u):
        u = np.asarray(u, dtype=complex)
        a, b = self.a, self.b
        return (a - b) / (a * b) * u / (u - 1 / b) + 1 / a

    def to_dict(self) -> Dict:
        return {"rho": self.rho, "a": self.a, "b": self.b, "v0": self.v0,
                "u1": [self.u1.real, self.u1.imag]}


@dataclass(frozen=True)
class SpectralCurve:
    """
    Solved spectral curve.

    `cut` is the polyline from z1 to z2 carrying the branch cut of
    r(z) = √((z − z1)(z − z2)); it is the provisional cut until the mother
    body rebinds it to Γ0 with `with_cut`.
    """
    params: ModelParams
    map: ConformalMap
    z1: complex
    z2: complex
    c0: float
    fb: float
    quartic: Polynomial
    cut: np.ndarray = field(default=None, repr=False, compare=False)
    _flip: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.cut is None:
            object.__setattr__(self, "cut", provisional_cut(self.z1, self.params.w))
        cut = np.asarray(self.cut, dtype=complex)
        object.__setattr__(self, "cut", cut)
        flip = None
        if len(cut) > 2:
            flip = polygon_path(np.append(cut, cut[0]))
        object.__setattr__(self, "_flip", flip)

    @property
    def total_charge(self) -> float:
        return self.params.total_charge

    @property
    def zero_in_droplet(self) -> bool:
        """b < 1 iff 0 is interior to the droplet (recorded only)."""
        return self.map.b < 1

    @property
    def z0(self) -> float:
        """Boundary anchor f(1) on the positive side of ∂Ω."""
        return float(self.map.f(1.0).real)

    def with_cut(self, polyline) -> "SpectralCurve":
        pts = np.asarray(polyline, dtype=complex)
        return replace(self, cut=pts)

    def r(self, z) -> np.ndarray:
        """√((z − z1)(z − z2)) with the cut on `cut` and r(z) ~ z at ∞."""
        z = np.asarray(z, dtype=complex)
        m, beta = self.z1.real, self.z1.imag
        d = z - m
        on_segment = (d.real == 0) & (np.abs(d.imag) <= beta)
        d = np.where(on_segment, d + 1e-14 * max(1.0, beta), d)
        r = d * np.sqrt(1 + beta ** 2 / d ** 2)
        if self._flip is not None:
            inside = contains(self._flip, z.ravel()).reshape(z.shape)
            r = np.where(inside, -r, r)
        return r

    def r_prime(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z - self.z1.real) / self.r(z)

    def pole_polynomial(self) -> Polynomial:
        """D(z) = (z − w)(z + 1/w)z."""
        w = self.params.w
        return Polynomial.fromroots([w, -1 / w, 0.0])

    def to_dict(self) -> Dict:
        return {
            "params": self.params.to_dict(),
            "map": self.map.to_dict(),
            "z1": [self.z1.real, self.z1.imag],
            "z2": [self.z2.real, self.z2.imag],
            "c0": self.c0,
            "fb": self.fb,
            "zero_in_droplet": self.zero_in_droplet,
            "quartic": [float(c) for c in self.quartic.coef],
        }


def provisional_cut(z1: complex, w: float) -> np.ndarray:
    """Straight cut z1 → z2, bent through −1/(2w) when it misses (−1/w, 0)."""
    z2 = z1.conjugate()
    if -1 / w < z1.real < 0:
        return np.array([z1, z2])
    return np.array([z1, complex(-0.5 / w, 0.0), z2])


def _curve_polynomials(params: ModelParams) -> Tuple[Polynomial, Polynomial, Polynomial, float]:
    """Q3 = D·P1, D, A = Q3² − 4κzD and κ = (1+Q1)/T."""
    w, T = params.w, params.total_charge
    c1 = (1 + params.Q0) / T
    c2 = params.Q1 / T
    c3 = (1 + params.Q1) / T
    z = Polynomial([0.0, 1.0])
    D = Polynomial.fromroots([w, -1 / w, 0.0])
    Q3 = c1 * (z - w) * z + c2 * (z + 1 / w) * z + c3 * (z - w) * (z + 1 / w)
    kappa = c3
    A = Q3 ** 2 - 4 * kappa * z * D
    return Q3, D, A, kappa


def quartic(params: ModelParams, t: float) -> Polynomial:
    """P4(z; t) = Q3(z)² − 4κ(z − t)D(z)."""
    _, D, A, kappa = _curve_polynomials(params)
    return A + 4 * kappa * t * D


def _newton_double_root(A: Polynomial, D: Polynomial, kappa: float, c: float, t: float,
                        tol: float, max_iter: int) -> Tuple[float, float]:
    """2D Newton on (P4(c; t), P4'(c; t)) = (0, 0)."""
    dA, ddA, dD = A.deriv(), A.deriv(2), D.deriv()
    ddD = D.deriv(2)
    for iteration in range(max_iter):
        P = A(c) + 4 * kappa * t * D(c)
        dP = dA(c) + 4 * kappa * t * dD(c)
        if max(abs(P), abs(dP)) < tol:
            logger.debug(f"Newton converged in {iteration} iterations: c={c}, t={t}")
            return c, t
        ddP = ddA(c) + 4 * kappa * t * ddD(c)
        J = np.array([[dP, 4 * kappa * D(c)], [ddP, 4 * kappa * dD(c)]])
        step = np.linalg.solve(J, -np.array([P, dP]))
        c, t = c + step[0], t + step[1]
    raise SolverError(f"Double-root Newton did not converge from c={c}, t={t}")


def _recover_candidate(params: ModelParams, P4: Polynomial, c: float, t: float) -> SpectralCurve:
    """Recover (ρ, a, b, v0) from the remaining roots; raises ConsistencyError if inadmissible."""
    quotient, _ = divmod(P4, Polynomial.fromroots([c, c]))
    pair = quotient.roots()
    if len(pair) != 2 or abs(pair[0].imag) < 1e-9:
        raise ConsistencyError(f"Remaining roots {pair} are not a conjugate pair at c={c}")
    z1 = complex(pair[0]) if pair[0].imag > 0 else complex(pair[1])
    modulus = abs(z1)
    b_rho = modulus
    a_rho = (z1.real + modulus) / 2
    rho2 = (1 + params.Q1) * (z1.real + modulus) / (2 * params.Q0 * modulus)
    if rho2 <= 0:
        raise ConsistencyError(f"Recovered ρ² = {rho2} is not positive")
    rho = math.sqrt(rho2)
    a, b = a_rho / rho, b_rho / rho
    if not (0 < a < 1 and a < b):
        raise ConsistencyError(f"Recovered parameters violate 0 < a < 1, a < b: a={a}, b={b}")

    w = params.w
    disc = (w + rho * b) ** 2 - 4 * a * w * rho
    if disc <= 0:
        raise ConsistencyError(f"No real preimage of w: discriminant {disc}")
    v0 = ((w + rho * b) - math.sqrt(disc)) / (2 * a * w)
    cmap = ConformalMap(rho, a, b, v0)
    if not 0 < v0 < 1:
        raise ConsistencyError(f"Preimage of w outside the unit disc: v0={v0}")
    if abs(complex(cmap.f(1 / v0)) + 1 / w) > CHECK_TOL * (1 / w):
        raise ConsistencyError(f"f(1/v0) = {complex(cmap.f(1 / v0))} differs from −1/w")
    c0_check = (1 + params.Q1) / (params.Q0 * modulus)
    if abs(c - c0_check) > CHECK_TOL * c:
        raise ConsistencyError(f"Node {c} disagrees with (1+Q1)/(Q0|z1|) = {c0_check}")
    return SpectralCurve(params, cmap, z1, z1.conjugate(), float(c), float(t), P4)


def solve_curve(params: ModelParams, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> SpectralCurve:
    """
    Solve the spectral curve for (Q0, Q1, w).

    Eliminating t from P4(c; t) = P4'(c; t) = 0 leaves the sextic
    A'D − AD' = 0; each real root c > w seeds a 2D Newton polish of (c, t).

    Args:
        params: Model parameters (only Q0, Q1, w are used)
        tol: Newton residual tolerance
        max_iter: Newton iteration cap

    Returns:
        SpectralCurve with the provisional cut

    Raises:
        PhaseError: parameters are not pre-critical
        SolverError: no admissible double root
        MultiplicityError: more than one admissible double root
        ConsistencyError: every candidate violates the parameter constraints
    """
    phase = classify_phase(params)
    if not phase.is_pre_critical:
        raise PhaseError(
            f"Parameters are {phase.tag.value.replace('_', '-')}: w={params.w} vs w_cri={phase.w_cri:.10f}"
        )
    _, D, A, kappa = _curve_polynomials(params)
    sextic = A.deriv() * D - A * D.deriv()
    seeds = sorted(float(r.real) for r in sextic.roots()
                   if abs(r.imag) < 1e-6 * max(1.0, abs(r)) and r.real > params.w)

    candidates: List[SpectralCurve] = []
    rejections: List[str] = []
    for c in seeds:
        t = -A(c) / (4 * kappa * D(c))
        try:
            c, t = _newton_double_root(A, D, kappa, c, t, tol, max_iter)
            if c <= params.w:
                continue
            candidate = _recover_candidate(params, A + 4 * kappa * t * D, c, t)
        except (SolverError, ConsistencyError) as e:
            rejections.append(str(e))
            logger.debug(f"Rejected seed c={c}: {e}")
            continue
        if not any(abs(candidate.c0 - other.c0) < 1e-9 * candidate.c0 for other in candidates):
            candidates.append(candidate)

    if not candidates:
        if rejections:
            raise ConsistencyError(f"No admissible spectral curve: {'; '.join(rejections)}")
        raise SolverError(f"Solver failed: no double root c0 > w found (possibly post-critical), w={params.w}")
    if len(candidates) > 1:
        raise MultiplicityError(f"Found {len(candidates)} admissible double roots: "
                                f"{', '.join(f'{c.c0:.12g}' for c in candidates)}")
    curve = candidates[0]
    if not 0 < curve.fb < params.w:
        logger.warning(f"Zero location f(b) = {curve.fb:.6g} lies outside (0, w)")
    logger.info(f"Spectral curve solved: rho={curve.map.rho:.12g}, a={curve.map.a:.12g}, "
                f"b={curve.map.b:.12g}, c0={curve.c0:.12g}")
    return curve


def eval_f(cmap: ConformalMap, u: complex) -> complex:
    """Conformal map f(u); PoleError at u ∈ {0, 1/a}."""
    if abs(u) < POLE_TOL or abs(u - 1 / cmap.a) < POLE_TOL:
        raise PoleError(f"f has poles at 0 and 1/a = {1 / cmap.a}, got u={u}")
    return complex(cmap.f(u))


def eval_deck(cmap: ConformalMap, u: complex) -> complex:
    """Deck transformation exchanging the two f-preimages; PoleError at 1/b."""
    if abs(u - 1 / cmap.b) < POLE_TOL:
        raise PoleError(f"deck has a pole at 1/b = {1 / cmap.b}")
    return complex(cmap.deck(u))


def _check_cut(curve: SpectralCurve, z) -> None:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(distance_to_polyline(z, curve.cut) < CUT_TOL):
        raise BranchError(f"Point on the branch cut of the curve: {z}")


def eval_F(curve: SpectralCurve, z, sheet: int = 1):
    """
    Inverses of f: F1 maps C∖cut to the disc side, F2 = deck∘F1.

    F1(z) = 2ρ/(bρ + z + r(z)), F2(z) = 2ρ/(bρ + z − r(z)).
    """
    _check_sheet(sheet)
    _check_cut(curve, z)
    z_arr = np.asarray(z, dtype=complex)
    rho, b = curve.map.rho, curve.map.b
    r = curve.r(z_arr)
    denom = b * rho + z_arr + (r if sheet == 1 else -r)
    if np.any(np.abs(denom) < POLE_TOL):
        raise PoleError(f"F{sheet} has a pole at z={z}")
    out = 2 * rho / denom
    return complex(out) if np.ndim(z) == 0 else out


def eval_F_prime(curve: SpectralCurve, z, sheet: int = 1):
    _check_sheet(sheet)
    z_arr = np.asarray(z, dtype=complex)
    rho, b = curve.map.rho, curve.map.b
    sign = 1 if sheet == 1 else -1
    r = sign * curve.r(z_arr)
    rp = sign * curve.r_prime(z_arr)
    out = -2 * rho * (1 + rp) / (b * rho + z_arr + r) ** 2
    return complex(out) if np.ndim(z) == 0 else out


def eval_P1(curve: SpectralCurve, z):
    p = curve.params
    T, w = p.total_charge, p.w
    z = np.asarray(z, dtype=complex)
    return ((1 + p.Q0) / T / (z + 1 / w) + p.Q1 / T / (z - w) + (1 + p.Q1) / T / z)


def eval_P2(curve: SpectralCurve, z):
    """P2 = S1·S2 = κ(z − f(b))/D(z)."""
    p = curve.params
    z = np.asarray(z, dtype=complex)
    kappa = (1 + p.Q1) / p.total_charge
    return kappa * (z - curve.fb) / curve.pole_polynomial()(z)


def eval_R(curve: SpectralCurve, z):
    """Discriminant R = P4/D²."""
    z = np.asarray(z, dtype=complex)
    return curve.quartic(z) / curve.pole_polynomial()(z) ** 2


def sqrt_R(curve: SpectralCurve, z):
    """√R = (Q0/T)(z − c0) r(z)/D(z), cut on the curve's cut, ~ Q0/(Tz) at ∞."""
    p = curve.params
    z = np.asarray(z, dtype=complex)
    return p.Q0 / p.total_charge * (z - curve.c0) * curve.r(z) / curve.pole_polynomial()(z)


def abs_sqrt_R(curve: SpectralCurve, z):
    """|√R| without branch bookkeeping (valid on the cut itself)."""
    p = curve.params
    z = np.asarray(z, dtype=complex)
    r_abs = np.sqrt(np.abs((z - curve.z1) * (z - curve.z2)))
    return p.Q0 / p.total_charge * np.abs(z - curve.c0) * r_abs / np.abs(curve.pole_polynomial()(z))


def _check_poles(curve: SpectralCurve, z, poles) -> None:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    for pole in poles:
        if np.any(np.abs(z - pole) < POLE_TOL * max(1.0, abs(pole))):
            raise PoleError(f"Evaluation at pole {pole}")


def eval_R0(curve: SpectralCurve, z):
    """R0 = (1+Q0+Q1)²·R."""
    w = curve.params.w
    _check_poles(curve, z, [0.0, w, -1 / w])
    out = curve.total_charge ** 2 * eval_R(curve, z)
    return complex(out) if np.ndim(z) == 0 else out


def sqrt_R0(curve: SpectralCurve, z):
    """√R0 = (1+Q0+Q1)√R with √R0(z) = Q0/z + O(z⁻²)."""
    w = curve.params.w
    _check_poles(curve, z, [0.0, w, -1 / w])
    _check_cut(curve, z)
    out = curve.total_charge * sqrt_R(curve, z)
    return complex(out) if np.ndim(z) == 0 else out


def eval_S(curve: SpectralCurve, z, sheet: int = 1):
    """
    Spherical Schwarz functions S1 = P1/2 − √R/2 and S2 = P1/2 + √R/2.

    S1 has its only pole at w; S2 has poles at 0 and −1/w.
    """
    _check_sheet(sheet)
    w = curve.params.w
    _check_poles(curve, z, [w] if sheet == 1 else [0.0, -1 / w])
    _check_cut(curve, z)
    z_arr = np.asarray(z, dtype=complex)
    sign = -1 if sheet == 1 else 1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = eval_P1(curve, z_arr) / 2 + sign * sqrt_R(curve, z_arr) / 2
    return complex(out) if np.ndim(z) == 0 else out


def eval_S_direct(curve: SpectralCurve, z, sheet: int = 1):
    """S_k(z) = f(1/F_k)/(1 + z f(1/F_k)) through the uniformization."""
    z_arr = np.asarray(z, dtype=complex)
    v = curve.map.f(1 / np.asarray(eval_F(curve, z_arr, sheet)))
    out = v / (1 + z_arr * v)
    return complex(out) if np.ndim(z) == 0 else out


def _check_sheet(sheet: int) -> None:
    if sheet not in (1, 2):
        raise ValueError(f"Unknown sheet: {sheet}. Available sheets: 1, 2")


def droplet_boundary(cmap: ConformalMap, m: int = 256) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sample ∂Ω = f(e^{iθ}) on a uniform θ grid.

    Returns:
        (theta, boundary points f(e^{iθ}), conjugate values f(e^{−iθ}))
    """
    if m < 16:
        raise ValueError(f"Boundary grid needs at least 16 points, got {m}")
    theta = 2 * np.pi * np.arange(m) / m
    e = np.exp(1j * theta)
    return theta, cmap.f(e), cmap.f(np.conj(e))


def residue_on_circle(func, center: complex, radius: float, m: int = 256) -> complex:
    """(1/2πi)∮ func over a small circle, trapezoid rule."""
    theta = 2 * np.pi * np.arange(m) / m
    z = center + radius * np.exp(1j * theta)
    values = np.array([func(p) for p in z])
    return complex(np.mean(values * (z - center)))


# Example usage
if __name__ == "__main__":
    curve = solve_curve(ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=1))
    print(f"z1 = {curve.z1:.10f}, c0 = {curve.c0:.10f}, f(b) = {curve.fb:.10f}")
    print(f"rho = {curve.map.rho:.10f}, a = {curve.map.a:.10f}, b = {curve.map.b:.10f}")
