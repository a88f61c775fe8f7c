#!/usr/bin/env python3
"""
Large-N predictions and their comparison with the ground truth.

The global parametrix is built on the uniformizing plane: with u = F_k(z),
N1(u) = a1(1 − au)/√(ρq(u)) and N2(u) = −a2·a·u/√(ρq(u)), where
q(u) = −1 + 2au − abu² vanishes at the critical points u1, u2 of f.
The square root is cut along the image of the + side of Γ0, so that
M = D_∞^{−r0σ3}·N·D^{r0σ3} jumps by [[0, z^{−r0}], [−z^{r0}, 0]] on Γ0.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence
import cmath
import logging
import math

import mpmath as mp
import numpy as np
import pandas as pd

from src.model import ModelParams, log_gamma_ratio_G_stirling
from src.orthopoly import PolySolution, build_monic_op, eval_poly, poly_zeros
from src.potential import PotentialData, cauchy_mu0, eval_g
from src.spectral_curve import eval_F
from src.utils.errors import MarginError, TopologyError
from src.utils.paths import contains, distance_to_polyline, plan_path, polygon_path

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

MARGIN_FRACTION = 0.05  # default distance to Γ0, relative to |z1 − z2|
ARC_OFFSET = 1e-10  # offset of Γ0 samples when imaging the cut arc
JUMP_DELTA = 1e-8
CHORD_SHIFT = 1e-14
ANCHOR_OFFSET = 10.0  # anchor c0 + 10 for the exterior square root
SEGMENT_SAMPLES = 256
ERROR_COLUMNS = ["re", "im", "N", "abs_ratio_err"]


@dataclass(frozen=True, eq=False)
class ParametrixData:
    """
    Potential data with the constants of the global parametrix.

    `plus_sign` is the sign of i·tangent that points to the + side of Γ0;
    F1 maps that side onto `arc`, the cut of √(ρq).
    """
    pot: PotentialData
    a1: complex
    a2: complex
    D_infty: float
    plus_sign: int
    arc: np.ndarray = field(repr=False)
    margin: float = 0.0
    _cap: object = field(default=None, repr=False)

    @property
    def curve(self):
        return self.pot.curve

    @property
    def body(self):
        return self.pot.body

    def to_dict(self) -> Dict:
        return {
            "a1": [self.a1.real, self.a1.imag],
            "a2": [self.a2.real, self.a2.imag],
            "D_infty": self.D_infty,
            "plus_sign": self.plus_sign,
            "margin": self.margin,
        }


def _gamma0_normals(points: np.ndarray) -> np.ndarray:
    tangent = np.gradient(points)
    return 1j * tangent / np.abs(tangent)


def build_parametrix(pot: PotentialData, margin: Optional[float] = None) -> ParametrixData:
    """
    Fix the branch of √(ρq) and the constants a1 = i√ρ, a2 = −√(ρq(1/a)).

    Of the two image arcs F1(Γ0±), the cut goes on the one that, together
    with the chord u2 → u1, does not enclose u = 0 = F1(∞).

    Raises:
        TopologyError: neither or both arcs qualify
    """
    curve, body = pot.curve, pot.body
    cmap = curve.map
    rho, a, b = cmap.rho, cmap.a, cmap.b
    scale = abs(curve.z1 - curve.z2)
    points = body.gamma0.points
    normals = _gamma0_normals(points)

    choices = []
    for sign in (1, -1):
        inner = np.asarray(eval_F(curve, points[1:-1] + sign * ARC_OFFSET * scale * normals[1:-1], 1))
        ends = (cmap.u1, cmap.u2) if abs(inner[0] - cmap.u1) < abs(inner[0] - cmap.u2) else (cmap.u2, cmap.u1)
        arc = np.concatenate([[ends[0]], inner, [ends[1]]])
        cap = polygon_path(np.append(arc, arc[0]))
        if not contains(cap, 0.0)[0]:
            choices.append((sign, arc, cap))
    if len(choices) != 1:
        raise TopologyError(f"Expected one cut arc avoiding u = 0, found {len(choices)}")
    sign, arc, cap = choices[0]

    par = ParametrixData(pot, 1j * math.sqrt(rho), 0j, 1 / math.sqrt(rho * a), sign, arc,
                         MARGIN_FRACTION * scale if margin is None else margin, cap)
    a2 = -complex(sqrt_rho_q(par, 1 / a))
    object.__setattr__(par, "a2", a2)
    logger.info(f"Parametrix built: a1 = {par.a1:.10f}, a2 = {a2:.10f}, + side sign {sign}")
    return par


def sqrt_rho_q(par: ParametrixData, u) -> np.ndarray:
    """√(ρq(u)) with its cut on the cut arc and value i√ρ at u = 0."""
    cmap = par.curve.map
    rho, a, b = cmap.rho, cmap.a, cmap.b
    u_arr = np.atleast_1d(np.asarray(u, dtype=complex))
    beta = math.sqrt(b / a - 1) / b
    d = u_arr - 1 / b
    on_chord = (d.real == 0) & (np.abs(d.imag) <= beta)
    d = np.where(on_chord, d + CHORD_SHIFT, d)
    s = -1j * math.sqrt(rho * a * b) * d * np.sqrt(1 + beta ** 2 / d ** 2)
    inside = contains(par._cap, u_arr.ravel()).reshape(u_arr.shape)
    out = np.where(inside, -s, s)
    return complex(out[0]) if np.ndim(u) == 0 else out


def _N1(par: ParametrixData, u):
    a = par.curve.map.a
    return par.a1 * (1 - a * u) / sqrt_rho_q(par, u)


def _N2(par: ParametrixData, u):
    a = par.curve.map.a
    return -par.a2 * a * u / sqrt_rho_q(par, u)


def eval_D(par: ParametrixData, z):
    """D(z) = √(ρ/a)/F1(z); D_+·D_− = z on Γ0."""
    cmap = par.curve.map
    return math.sqrt(cmap.rho / cmap.a) / eval_F(par.curve, z, 1)


def prefactor(par: ParametrixData, z):
    """i√(ρF1′)/F1 = N1(F1(z)), tending to 1 at ∞."""
    return _N1(par, eval_F(par.curve, z, 1))


def parametrix_M(par: ParametrixData, z, r0: int) -> np.ndarray:
    """M(z) = D_∞^{−r0σ3}·[[N1(F1), N1(F2)], [N2(F1), N2(F2)]]·D(z)^{r0σ3}, shape (..., 2, 2)."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    F1 = np.atleast_1d(eval_F(par.curve, z_arr, 1))
    F2 = np.atleast_1d(eval_F(par.curve, z_arr, 2))
    D = np.atleast_1d(eval_D(par, z_arr))
    Dinf = par.D_infty
    M = np.empty(z_arr.shape + (2, 2), dtype=complex)
    M[..., 0, 0] = Dinf ** (-r0) * _N1(par, F1) * D ** r0
    M[..., 0, 1] = Dinf ** (-r0) * _N1(par, F2) * D ** (-r0)
    M[..., 1, 0] = Dinf ** r0 * _N2(par, F1) * D ** r0
    M[..., 1, 1] = Dinf ** r0 * _N2(par, F2) * D ** (-r0)
    return M[0] if np.ndim(z) == 0 else M


def jump_residual(par: ParametrixData, r0: int, count: int = 9, delta: float = JUMP_DELTA) -> Dict[str, float]:
    """
    Two-sided check of M_+ = M_−·[[0, z^{−r0}], [−z^{r0}, 0]] and D_+·D_− = z.

    Probes sit on Γ0 samples in the middle half of the arc, where the
    sampled polyline is exact.
    """
    points = par.body.gamma0.points
    normals = _gamma0_normals(points)
    idx = np.linspace(len(points) // 4, 3 * len(points) // 4, count).astype(int)
    z = points[idx]
    step = par.plus_sign * delta * normals[idx]
    Mp = parametrix_M(par, z + step, r0)
    Mm = parametrix_M(par, z - step, r0)
    J = np.zeros((len(z), 2, 2), dtype=complex)
    J[:, 0, 1] = z ** (-r0)
    J[:, 1, 0] = -z ** r0
    jump = np.max(np.abs(Mp - Mm @ J), axis=(1, 2)) / np.max(np.abs(Mp), axis=(1, 2))
    product = np.abs(eval_D(par, z + step) * eval_D(par, z - step) / z - 1)
    return {"jump": float(np.max(jump)), "d_product": float(np.max(product))}


def _check_margin(par: ParametrixData, z: np.ndarray) -> None:
    distance = par.body.distance_to_gamma0(z)
    if np.any(distance < par.margin):
        raise MarginError(f"Points within {par.margin:.3g} of Γ0 (closest {distance.min():.3g}); "
                          f"the outer parametrix does not apply there")


def _log_exp_Ng(par: ParametrixData, z: np.ndarray, N: int) -> np.ndarray:
    """N·g(z); points on Γ1 or [c0, ∞) are nudged off the cut, where e^{Ng} is continuous."""
    curve, body = par.curve, par.body
    nudge = 1e-9 * abs(curve.z1 - curve.z2)
    on_ray = (np.abs(z.imag) < nudge) & (z.real >= curve.c0 - nudge)
    on_gamma1 = distance_to_polyline(z, body.gamma1.points) < nudge
    z = np.where(on_ray | on_gamma1, z + 1j * nudge, z)
    return N * np.atleast_1d(eval_g(par.pot, z))


def log_predict_P(par: ParametrixData, z, n: int, N: int) -> np.ndarray:
    """r0·log(ρ/F1) + log N1(F1) + N·g, the log of predict_P; Im is defined mod 2π."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    _check_margin(par, z_arr)
    r0 = n - N
    F1 = np.atleast_1d(eval_F(par.curve, z_arr, 1))
    out = r0 * np.log(par.curve.map.rho / F1) + np.log(np.atleast_1d(_N1(par, F1))) + _log_exp_Ng(par, z_arr, N)
    return complex(out[0]) if np.ndim(z) == 0 else out


def predict_P(par: ParametrixData, z, n: int, N: int):
    """
    Strong asymptotics of P_{n,N} away from Γ0.

    Args:
        par: Parametrix data
        z: Point(s) at distance ≥ par.margin from Γ0
        n: Degree
        N: Size

    Returns:
        (ρ/F1)^{r0}·i√(ρF1′)/F1·e^{N g}

    Raises:
        MarginError: z too close to Γ0
    """
    out = np.exp(log_predict_P(par, z, n, N))
    return complex(out) if np.ndim(z) == 0 else out


def _rho_F0_prime(par: ParametrixData, z: np.ndarray) -> np.ndarray:
    """ρF0′ = −(1 − aF1)²/q(F1) with F0 = 1/F1."""
    cmap = par.curve.map
    a, b = cmap.a, cmap.b
    u = np.atleast_1d(eval_F(par.curve, z, 1))
    return -(1 - a * u) ** 2 / (-1 + 2 * a * u - a * b * u ** 2)


def continued_sqrt_rho_F0_prime(par: ParametrixData, z: complex) -> complex:
    """√(ρF0′) continued from the anchor c0 + 10 along a path around Γ0."""
    curve = par.curve
    anchor = complex(curve.c0 + ANCHOR_OFFSET)
    vertices = plan_path(anchor, complex(z), [par.body.gamma0.points], margin=par.margin / 2)
    samples = [np.array([anchor])]
    for p, q in zip(vertices[:-1], vertices[1:]):
        t = np.linspace(0.0, 1.0, SEGMENT_SAMPLES)[1:]
        samples.append(p + t * (q - p))
    values = _rho_F0_prime(par, np.concatenate(samples))
    phase = np.unwrap(np.angle(values))
    return complex(np.sqrt(np.abs(values[-1])) * np.exp(0.5j * phase[-1]))


def predict_P_exterior(par: ParametrixData, z, n: int, N: int):
    """Equivalent form (ρF0)^{r0}·√(ρF0′)·e^{Ng}."""
    z_arr = np.atleast_1d(np.asarray(z, dtype=complex))
    _check_margin(par, z_arr)
    r0 = n - N
    F0 = 1 / np.atleast_1d(eval_F(par.curve, z_arr, 1))
    root = np.array([continued_sqrt_rho_F0_prime(par, p) for p in z_arr])
    out = (par.curve.map.rho * F0) ** r0 * root * np.exp(_log_exp_Ng(par, z_arr, N))
    return complex(out[0]) if np.ndim(z) == 0 else out


def predict_P_at_zero(par: ParametrixData, n: int, N: int) -> float:
    """
    Prediction of P_{n+1,N}(0) = ρ(ρb)^{r0}√(b(b − a))·e^{N Re g(0)}, r0 = n − N.

    F1(0) = 1/b since f(1/b) = 0; Im g(0) is a multiple of 2π.
    """
    cmap = par.curve.map
    rho, a, b = cmap.rho, cmap.a, cmap.b
    r0 = n - N
    g0 = float(eval_g(par.pot, 0.0).real)
    return rho * (rho * b) ** r0 * math.sqrt(b * (b - a)) * math.exp(N * g0)


def predict_h(par: ParametrixData, n: int, N: int) -> float:
    """h_{n,N} ≈ π√(2π/(N(1+Q0+Q1)))·ρ^{2r0+1}·e^{N·ℓ_2D}."""
    T = par.curve.total_charge
    rho = par.curve.map.rho
    r0 = n - N
    return math.pi * math.sqrt(2 * math.pi / (N * T)) * rho ** (2 * r0 + 1) * math.exp(N * par.pot.ell2D)


def predict_hhat(par: ParametrixData, n: int, N: int) -> complex:
    """ĥ_{n,N} ≈ −2πi·e^{N·ℓ0}·(ρa)^{r0}·ρ·√(a(b − a))."""
    cmap = par.curve.map
    rho, a, b = cmap.rho, cmap.a, cmap.b
    r0 = n - N
    return -2j * math.pi * math.exp(N * par.pot.ell0) * (rho * a) ** r0 * rho * math.sqrt(a * (b - a))


def predict_h_from_chain(par: ParametrixData, n: int, N: int) -> float:
    """−G·ĥ·w^{−(N+NQ0)}/(2i·P_{n+1,N}(0)) with the Stirling form of G_{n,N}."""
    p = par.curve.params
    params = ModelParams(p.Q0, p.Q1, p.w, N, n)
    G = math.exp(log_gamma_ratio_G_stirling(params, n))
    h_tilde = predict_hhat(par, n, N) * p.w ** (-(N + params.NQ0))
    value = -G * h_tilde / (2j * predict_P_at_zero(par, n, N))
    return float(value.real)


def default_grid(par: ParametrixData) -> np.ndarray:
    """f(re^{iθ}) for r ∈ {0.5, 0.8} at 12 angles, plus 8 real points beyond c0."""
    curve = par.curve
    theta = 2 * np.pi * (np.arange(12) + 0.5) / 12
    circles = [curve.map.f(r * np.exp(1j * theta)) for r in (0.5, 0.8)]
    real = curve.c0 + 0.5 * (np.arange(8) + 1)
    grid = np.concatenate(circles + [real.astype(complex)])
    return grid[par.body.distance_to_gamma0(grid) >= par.margin]


def interior_grid(par: ParametrixData, count: int = 6) -> np.ndarray:
    """Real points of Ω∖Γ0 between the crossing x̂ and the boundary point z0."""
    x_hat, z0 = par.pot.x_hat, par.pot.z0
    grid = (x_hat + (z0 - x_hat) * (np.arange(count) + 1) / (count + 1)).astype(complex)
    return grid[par.body.distance_to_gamma0(grid) >= par.margin]


def compare_field(par: ParametrixData, grid: Sequence[complex], n: int, N: int,
                  sol: Optional[PolySolution] = None) -> pd.DataFrame:
    """
    Table of |P_num/P_pred − 1| on the grid.

    The ratio is formed from logarithms so e^{Ng} never overflows.
    """
    grid = np.asarray(grid, dtype=complex).ravel()
    if len(grid) == 0:
        return pd.DataFrame(columns=ERROR_COLUMNS)
    if sol is None:
        p = par.curve.params
        sol = build_monic_op(ModelParams(p.Q0, p.Q1, p.w, N, n))
    log_pred = np.atleast_1d(log_predict_P(par, grid, n, N))
    errors = []
    with mp.workdps(sol.dps):
        for z, lp in zip(grid, log_pred):
            log_num = complex(mp.log(eval_poly(sol, z)))
            errors.append(abs(cmath.exp(log_num - lp) - 1))
    return pd.DataFrame({"re": grid.real, "im": grid.imag, "N": N, "abs_ratio_err": errors})


def error_ratios(coarse: pd.DataFrame, fine: pd.DataFrame) -> np.ndarray:
    """Pointwise err(N)/err(2N) for two tables on the same grid."""
    return coarse["abs_ratio_err"].to_numpy() / fine["abs_ratio_err"].to_numpy()


def zero_measure_compare(par: ParametrixData, sol: PolySolution,
                         probes: Optional[Sequence[complex]] = None) -> Dict[str, float]:
    """
    Compare the zero counting measure of P_{n,N} with μ0.

    Returns:
        Dictionary with n_zeros, max/mean distance to Γ0, the largest
        Cauchy transform discrepancy over the probes and the sup-difference
        between the zero CDF along Γ0 and the μ0 CDF
    """
    zeros = sol.zeros if sol.zeros is not None else poly_zeros(sol)
    zeros = np.array([complex(z) for z in zeros])
    body = par.body
    n = len(zeros)
    distance = body.distance_to_gamma0(zeros)
    if probes is None:
        probes = default_grid(par)[::6][:5]
    probes = np.asarray(probes, dtype=complex)
    empirical = np.array([np.mean(1 / (z - zeros)) for z in probes])
    cauchy = np.abs(empirical - np.atleast_1d(cauchy_mu0(par.pot, probes)))

    s = np.sort([body.project_to_gamma0(z) for z in zeros])
    F = body.cdf(s)
    k = np.arange(1, n + 1)
    ks = float(np.max(np.maximum(np.abs(k / n - F), np.abs((k - 1) / n - F))))
    return {
        "n_zeros": n,
        "max_distance": float(np.max(distance)),
        "mean_distance": float(np.mean(distance)),
        "cauchy_discrepancy": float(np.max(cauchy)),
        "cdf_sup_difference": ks,
    }


# Example usage
if __name__ == "__main__":
    from src.mother_body import build_contour
    from src.potential import build_potential
    from src.spectral_curve import solve_curve

    pot = build_potential(build_contour(solve_curve(ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=1))))
    par = build_parametrix(pot)
    print(f"jump check: {jump_residual(par, 0)}")
    print(compare_field(par, default_grid(par), 10, 10).describe())
