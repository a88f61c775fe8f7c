#!/usr/bin/env python3
"""
Potential theory of the mother body.

The g-function, φ = ∫√R0, logarithmic potential and Cauchy transforms of μ0,
the Cauchy transform of the droplet measure as a boundary integral, and the
Robin constants ℓ0 (Frostman constant of μ0) and ℓ_2D (of the droplet).

Closed forms go through the uniformization: with z = f(u),
S1(z)dz = h(u)du where h is rational with simple real poles, so every
Re-level potential is a finite sum of log-moduli.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple
import cmath
import logging
import math

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from src.model import eval_re_script_V
from src.mother_body import MotherBody, launch_angles
from src.spectral_curve import ConformalMap, SpectralCurve, droplet_boundary, eval_F, eval_P1, eval_S, sqrt_R
from src.utils.errors import BranchError, ConsistencyError, DomainError, MarginError, QuadratureError
from src.utils.paths import contains, distance_to_polyline, integrate_path, plan_path, polygon_path, winding_number

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

ELL0_SPREAD_TOL = 1e-7
ELL2D_RADII = (1e3, 1e4, 1e5)
ELL2D_TOL = 1e-6
NEAR_FRACTION = 0.05  # quad instead of Gauss–Legendre within this fraction of |Γ0|
SINGULAR_DISTANCE = 1e-6
RAY_LENGTH = 1e3  # finite stand-in for the cut [c0, ∞) in path planning


def h_partial_fractions(cmap: ConformalMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    Poles and residues of h(u) = f′(u)·f(1/u)/(1 + f(u)f(1/u)).

    h = ρ²(u − b)(−1 + 2au − abu²)/(u(1 − au)Qd(u)) with
    Qd(u) = (1 − au)(u − a) + ρ²(1 − bu)(u − b), whose roots are v0 and 1/v0.

    Returns:
        (poles [0, 1/a, v0, 1/v0], residues)
    """
    rho, a, b, v0 = cmap.rho, cmap.a, cmap.b, cmap.v0
    u = Polynomial([0.0, 1.0])
    numerator = rho ** 2 * (u - b) * (-1 + 2 * a * u - a * b * u ** 2)
    qd = (1 - a * u) * (u - a) + rho ** 2 * (1 - b * u) * (u - b)
    denominator = u * (1 - a * u) * qd
    poles = np.array([0.0, 1 / a, v0, 1 / v0])
    residues = numerator(poles) / denominator.deriv()(poles)
    return poles, residues


@dataclass(frozen=True, eq=False)
class PotentialData:
    """Mother body with its Robin constants and the partial fractions of h."""
    body: MotherBody
    ell0: float
    ell2D: float
    z0: float
    poles: np.ndarray = field(repr=False)
    residues: np.ndarray = field(repr=False)
    x_hat: float = 0.0
    ell0_spread: float = 0.0
    ell2D_closed: float = math.nan
    _anchor: object = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_anchor", _anchor_region(self.body))

    @property
    def curve(self) -> SpectralCurve:
        return self.body.curve

    @property
    def total_charge(self) -> float:
        return self.curve.total_charge

    def relation_residual(self) -> float:
        """ℓ0 − [ℓ_2D + (1+Q0)log w + Re g(0) − (1+Q1)log(1+Q1) − Q0 log Q0 + T log T]."""
        p = self.curve.params
        T = p.total_charge
        rhs = (self.ell2D + (1 + p.Q0) * math.log(p.w) + float(eval_g(self, 0.0).real)
               - (1 + p.Q1) * math.log(1 + p.Q1) - p.Q0 * math.log(p.Q0) + T * math.log(T))
        return self.ell0 - rhs

    def to_dict(self) -> dict:
        return {
            "ell0": self.ell0,
            "ell2D": self.ell2D,
            "ell2D_closed_form": self.ell2D_closed,
            "ell0_spread": self.ell0_spread,
            "z0": self.z0,
            "x_hat": self.x_hat,
            "h_poles": self.poles.tolist(),
            "h_residues": self.residues.tolist(),
        }


def _anchor_region(body: MotherBody):
    """Region between the straight ray from z1 through c0 and Γ1 ∪ [c0, ∞)."""
    curve = body.curve
    z1, c0 = curve.z1, curve.c0
    theta_c = cmath.phase(c0 - z1)
    far = c0 + RAY_LENGTH * 1e3
    ray_end = z1 + (far - z1.real) / math.cos(theta_c) * cmath.exp(1j * theta_c)
    vertices = np.concatenate([body.gamma1.points, [far, ray_end, z1]])
    return theta_c, polygon_path(vertices)


def _anchor_angle(pot: PotentialData, z: np.ndarray) -> np.ndarray:
    """arg(z − z1) with its cut along Γ1 ∪ [c0, ∞)."""
    theta_c, region = pot._anchor
    base = np.mod(np.angle(z - pot.curve.z1) - theta_c, 2 * np.pi)
    inside = contains(region, z)
    shift = np.where(inside, np.where(base < np.pi, 2 * np.pi, -2 * np.pi), 0.0)
    return theta_c + base + shift


def _check_off_cuts(pot: PotentialData, z: np.ndarray, with_rays: bool = True) -> None:
    body = pot.body
    if np.any(body.distance_to_gamma0(z) < 1e-12):
        raise BranchError(f"Point on Γ0: {z}")
    if with_rays:
        ray = [pot.curve.c0, pot.curve.c0 + RAY_LENGTH * 1e3]
        if np.any(distance_to_polyline(z, body.gamma1.points) < 1e-12) or np.any(distance_to_polyline(z, ray) < 1e-12):
            raise BranchError(f"Point on the cut Γ1 ∪ [c0, ∞): {z}")


def eval_g(pot: PotentialData, z):
    """
    g(z) = ∫ log(z − s) dμ0(s) with the cut on Γ0 ∪ Γ1 ∪ [c0, ∞).

    The log is continued node by node along Γ0 from the anchor z1, so the
    curved support does not introduce principal-branch jumps.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    _check_off_cuts(pot, z_arr)
    nodes, weights = pot.body.nodes, pot.body.weights
    anchor = _anchor_angle(pot, z_arr)[:, None]
    angles = np.angle(z_arr[:, None] - nodes[None, :])
    angles = np.unwrap(np.concatenate([anchor, angles], axis=1), axis=1)[:, 1:]
    log_mod = np.log(np.abs(z_arr[:, None] - nodes[None, :]))
    out = (log_mod + 1j * angles) @ weights
    return complex(out[0]) if np.ndim(z) == 0 else out


def log_potential_on_gamma0(pot: PotentialData, s: float) -> float:
    """U^{μ0} at the Γ0 point of arclength s, by quad with the log singularity flagged."""
    return _log_potential_quad(pot, complex(pot.body.gamma0.at(s)), s)


def _log_potential_quad(pot: PotentialData, z: complex, s_star: float) -> float:
    body = pot.body
    L = body.gamma0.length

    def integrand(theta):
        s = L * (1 - math.cos(theta)) / 2
        p = body.gamma0.at(s)
        return math.log(abs(z - p)) * float(body.density(p)) * (L / 2) * math.sin(theta)

    theta_star = math.acos(min(1.0, max(-1.0, 1 - 2 * s_star / L)))
    points = [theta_star] if 0 < theta_star < math.pi else None
    value, _ = quad(integrand, 0.0, math.pi, points=points, limit=400, epsabs=1e-13, epsrel=1e-12)
    return -value


def eval_log_potential(pot: PotentialData, z) -> np.ndarray:
    """U^{μ0}(z) = ∫ log|z − s|⁻¹ dμ0(s); quad near Γ0, Gauss–Legendre elsewhere."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    body = pot.body
    near = body.distance_to_gamma0(z_arr) < NEAR_FRACTION * body.gamma0.length
    out = np.empty(z_arr.shape, dtype=float)
    far = ~near
    if np.any(far):
        out[far] = -np.log(np.abs(z_arr[far, None] - body.nodes[None, :])) @ body.weights
    for k in np.nonzero(near)[0]:
        out[k] = _log_potential_quad(pot, complex(z_arr[k]), body.project_to_gamma0(complex(z_arr[k])))
    return float(out[0]) if np.ndim(z) == 0 else out


def cauchy_mu0(pot: PotentialData, z):
    """C^{μ0}(z) = ∫ dμ0(s)/(z − s)."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    body = pot.body
    distance = body.distance_to_gamma0(z_arr)
    if np.any(distance < SINGULAR_DISTANCE):
        raise MarginError(f"Cauchy transform requested within {SINGULAR_DISTANCE} of Γ0: {z}")
    spacing = float(np.max(np.abs(np.diff(body.nodes))))
    if np.any(distance < 5 * spacing):
        logger.warning(f"Cauchy transform near Γ0 (distance {distance.min():.2e}); quadrature accuracy degrades")
    out = (1.0 / (z_arr[:, None] - body.nodes[None, :])) @ body.weights
    return complex(out[0]) if np.ndim(z) == 0 else out


def boundary_cauchy_transform(z, u, u_conj, du, total_charge: float, orientation: int = 1) -> complex:
    """
    (T/π)∫ dA(u)/((1+|u|²)²(z − u)) over a region from its boundary samples.

    Stokes with ∂_ū[ū/(1+|u|²)] = (1+|u|²)⁻² turns the area integral into
    (1/2i)∮ ū/((1+|u|²)(z − u)) du, evaluated by the periodic trapezoid rule.

    Args:
        z: Evaluation point outside the region
        u, u_conj, du: Boundary samples u(θ), conj(u(θ)), du/dθ on a uniform θ grid
        total_charge: T
        orientation: +1 if θ runs positively around the region, −1 otherwise
    """
    u = np.asarray(u, dtype=complex)
    u_conj = np.asarray(u_conj, dtype=complex)
    du = np.asarray(du, dtype=complex)
    values = u_conj / ((1 + (u * u_conj).real) * (z - u)) * du
    integral = np.sum(values) * (2 * np.pi / len(u))
    return complex(orientation * total_charge / math.pi * integral / 2j)


def cauchy_nu0_boundary(curve: SpectralCurve, z: complex, m: int = 2048) -> complex:
    """
    Cauchy transform of the droplet measure ν0 at z outside Ω.

    ∂Ω = f(e^{iθ}); θ counterclockwise runs around f(𝔻) = ℂ̄∖Ω positively,
    hence around Ω negatively.

    Raises:
        DomainError: z inside or on ∂Ω
    """
    theta, boundary, conj_boundary = droplet_boundary(curve.map, m)
    if winding_number(boundary, z) != 0 or np.min(np.abs(boundary - z)) < 1e-10:
        raise DomainError(f"Point {z} is not exterior to the droplet")
    e = np.exp(1j * theta)
    du = curve.map.f_prime(e) * 1j * e
    return boundary_cauchy_transform(z, boundary, conj_boundary, du, curve.total_charge, orientation=-1)


def eval_phi(pot: PotentialData, z: complex, waypoints: Optional[Sequence[complex]] = None,
             margin: float = 1e-2) -> complex:
    """
    φ(z) = ∫_{z1}^{z} √R0(s) ds along a path avoiding Γ0 ∪ Γ1 ∪ [c0, ∞) and the poles.

    The first leg leaves z1 along a critical direction that is neither Γ0 nor Γ1.
    Re φ does not depend on the path; Im φ depends on how the path winds
    around the poles.
    """
    z = complex(z)
    curve, body = pot.curve, pot.body
    _check_off_cuts(pot, np.array([z]))
    T = curve.total_charge
    z1 = curve.z1
    scale = abs(curve.z1 - curve.z2)
    directions = [cmath.exp(1j * theta) for theta in launch_angles(curve, critical=True)]
    taken = [body.gamma0.points[1] - z1, body.gamma1.points[1] - z1]
    psi = max(directions, key=lambda d: min(abs(cmath.phase(d / t)) for t in taken))
    start = z1 + 0.05 * scale * psi

    w = curve.params.w
    obstacles = [body.gamma0.points, body.gamma1.points, [curve.c0, curve.c0 + RAY_LENGTH]]
    avoid = [0.0, w, -1 / w]
    stops = [start] + list(waypoints or []) + [z]
    vertices = [z1, start]
    for p, q in zip(stops[:-1], stops[1:]):
        vertices.extend(plan_path(p, q, obstacles, avoid, margin)[1:])

    def integrand(s):
        return T * complex(sqrt_R(curve, s))

    return integrate_path(integrand, vertices)


def eval_U0(pot: PotentialData, z) -> np.ndarray:
    """U0 = Re φ = T·Σ_p res_p [log|F2(z) − p| − log|F1(z) − p|]."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    F1 = np.atleast_1d(eval_F(pot.curve, z_arr, 1))
    F2 = np.atleast_1d(eval_F(pot.curve, z_arr, 2))
    terms = (np.log(np.abs(F2[:, None] - pot.poles[None, :])) - np.log(np.abs(F1[:, None] - pot.poles[None, :])))
    out = pot.total_charge * terms @ pot.residues
    return float(out[0]) if np.ndim(z) == 0 else out


def eval_script_U(pot: PotentialData, z) -> np.ndarray:
    """𝒰(z) = log(1+|z|²) − log(1+|z0|²) − 2Re∫_{z0}^{z} S1, in closed form."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    F1 = np.atleast_1d(eval_F(pot.curve, z_arr, 1))
    logs = np.log(np.abs(F1[:, None] - pot.poles[None, :])) - np.log(np.abs(1 - pot.poles[None, :]))
    out = np.log1p(np.abs(z_arr) ** 2) - math.log1p(pot.z0 ** 2) - 2 * logs @ pot.residues
    return float(out[0]) if np.ndim(z) == 0 else out


def eval_U2D(pot: PotentialData, z) -> np.ndarray:
    """𝒰_2D = (1+Q0+Q1)·𝒰."""
    return pot.total_charge * eval_script_U(pot, z)


def ell2D_closed_form(curve: SpectralCurve, poles: np.ndarray, residues: np.ndarray) -> float:
    """lim_{z→∞}[T·𝒰(z) − 2Q0 log|z|] with F1(z) ~ ρ/z."""
    T = curve.total_charge
    rho = curve.map.rho
    z0 = curve.z0
    inner = -math.log1p(z0 ** 2) - 2 * residues[0] * math.log(rho)
    inner -= 2 * float(np.sum(residues[1:] * np.log(np.abs(poles[1:]))))
    inner += 2 * float(np.sum(residues * np.log(np.abs(1 - poles))))
    return T * inner


def _s1_raw(curve: SpectralCurve):
    def func(s):
        return complex(eval_P1(curve, s) / 2 - sqrt_R(curve, s) / 2)
    return func


def compute_ell2D(pot: PotentialData, radii: Sequence[float] = ELL2D_RADII, tol: float = ELL2D_TOL) -> float:
    """
    ℓ_2D = lim [T·𝒰(z) − 2Q0 log|z|] by path quadrature of S1 from z0.

    The path leaves z0 along the ray of angle π/4; the remainder is O(1/|z|),
    so the limit is extrapolated linearly in 1/|z| from the two largest radii
    and checked against the two smallest.

    Raises:
        QuadratureError: the two extrapolations disagree
    """
    curve = pot.curve
    p = curve.params
    T = p.total_charge
    z0 = complex(pot.z0)
    direction = cmath.exp(1j * math.pi / 4)
    s1 = _s1_raw(curve)
    obstacles = [pot.body.gamma0.points]
    first = plan_path(z0, z0 + radii[0] * direction, obstacles, [p.w], 1e-2)
    integral = integrate_path(s1, first)
    previous = first[-1]
    samples = []
    for k, R in enumerate(radii):
        target = z0 + R * direction
        if k > 0:
            integral += integrate_path(s1, [previous, target])
        previous = target
        U = math.log1p(abs(target) ** 2) - math.log1p(pot.z0 ** 2) - 2 * integral.real
        samples.append((abs(target), T * U - 2 * p.Q0 * math.log(abs(target))))

    def extrapolate(a, b):
        (ra, la), (rb, lb) = a, b
        return (rb * lb - ra * la) / (rb - ra)

    ell = extrapolate(samples[-2], samples[-1])
    check = extrapolate(samples[0], samples[1])
    if abs(ell - check) > tol * max(1.0, abs(ell)):
        raise QuadratureError(f"ℓ_2D tail not converged: {ell:.12f} vs {check:.12f}")
    logger.info(f"ℓ_2D = {ell:.12f} (tail check {abs(ell - check):.2e})")
    return ell


def compute_ell0(pot: PotentialData, validation_points: int = 10, tol: float = ELL0_SPREAD_TOL) -> Tuple[float, float]:
    """
    ℓ0 = −2U^{μ0}(x̂) − Re 𝒱(x̂) at the real crossing x̂ of Γ0.

    Re-evaluated at further Γ0 points; the spread must stay below tol.

    Returns:
        (ℓ0, spread)

    Raises:
        ConsistencyError: spread exceeds tol
    """
    body = pot.body
    params = pot.curve.params
    x_hat = body.gamma0.at(body.crossing_s)
    ell0 = -2 * log_potential_on_gamma0(pot, body.crossing_s) - float(eval_re_script_V(params, x_hat))
    L = body.gamma0.length
    estimates = [ell0]
    for k in range(validation_points):
        s = L * (k + 0.5) / validation_points
        z = body.gamma0.at(s)
        estimates.append(-2 * log_potential_on_gamma0(pot, s) - float(eval_re_script_V(params, z)))
    spread = float(np.max(estimates) - np.min(estimates))
    if spread > tol:
        raise ConsistencyError(f"ℓ0 spread {spread:.3e} along Γ0 exceeds {tol}")
    logger.info(f"ℓ0 = {ell0:.12f} (spread {spread:.2e})")
    return ell0, spread


def build_potential(body: MotherBody, validation_points: int = 10) -> PotentialData:
    """Compute h partial fractions, ℓ0 and ℓ_2D for a mother body."""
    curve = body.curve
    poles, residues = h_partial_fractions(curve.map)
    pot = PotentialData(body, math.nan, math.nan, curve.z0, poles, residues, body.real_crossing)
    ell0, spread = compute_ell0(pot, validation_points)
    ell2D = compute_ell2D(pot)
    closed = ell2D_closed_form(curve, poles, residues)
    if abs(ell2D - closed) > ELL2D_TOL * max(1.0, abs(closed)):
        logger.warning(f"ℓ_2D quadrature {ell2D:.12f} differs from closed form {closed:.12f}")
    return replace(pot, ell0=ell0, ell2D=ell2D, ell0_spread=spread, ell2D_closed=closed)


def frostman_profile(pot: PotentialData, points) -> np.ndarray:
    """2U^{μ0} + Re 𝒱 + ℓ0: zero on Γ0, positive on Γ∖Γ0."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    return 2 * eval_log_potential(pot, points) + eval_re_script_V(pot.curve.params, points) + pot.ell0


def normal_derivative_jump(pot: PotentialData, s: float, delta: float = 1e-3) -> Tuple[float, float]:
    """
    One-sided normal derivatives of 2U^{μ0} + Re 𝒱 at the Γ0 point of arclength s.

    Each side uses the two-point one-sided rule (4E(δ) − E(2δ))/(2δ).

    Returns:
        (derivative on the left side, derivative on the right side), both outward
    """
    gamma0 = pot.body.gamma0
    h = 1e-6 * gamma0.length
    z = gamma0.at(s)
    tangent = gamma0.at(min(s + h, gamma0.length)) - gamma0.at(max(s - h, 0.0))
    normal = 1j * tangent / abs(tangent)
    sides = []
    for sign in (1, -1):
        profile = frostman_profile(pot, [z + sign * delta * normal, z + sign * 2 * delta * normal])
        sides.append(float((4 * profile[0] - profile[1]) / (2 * delta)))
    return sides[0], sides[1]


def gradient_residual(pot: PotentialData, z) -> np.ndarray:
    """|S1(z) − z̄/(1+|z|²)|: vanishes at the critical points of 𝒰_2D."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.abs(np.atleast_1d(eval_S(pot.curve, z_arr, 1)) - np.conj(z_arr) / (1 + np.abs(z_arr) ** 2))
    return float(out[0]) if np.ndim(z) == 0 else out


def exterior_critical_points(pot: PotentialData, grid) -> pd.DataFrame:
    """Probe the gradient condition of 𝒰_2D on exterior grid points."""
    grid = np.atleast_1d(np.asarray(grid, dtype=complex))
    theta, boundary, _ = droplet_boundary(pot.curve.map, 512)
    exterior = np.array([winding_number(boundary, z) == 0 for z in grid], dtype=bool)
    grid = grid[exterior]
    return _value_frame(grid, gradient_residual(pot, grid) if len(grid) else np.array([]))


def _value_frame(points, values) -> pd.DataFrame:
    points = np.asarray(points, dtype=complex)
    return pd.DataFrame({"re": points.real, "im": points.imag, "value": np.asarray(values, dtype=float)})


# Example usage
if __name__ == "__main__":
    from src.model import ModelParams
    from src.mother_body import build_contour
    from src.spectral_curve import solve_curve

    data = build_potential(build_contour(solve_curve(ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=1))))
    print(f"ℓ0 = {data.ell0:.10f}, ℓ_2D = {data.ell2D:.10f}, relation residual = {data.relation_residual():.2e}")
