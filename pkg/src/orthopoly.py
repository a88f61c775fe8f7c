#!/usr/bin/env python3
"""
Ground-truth planar orthogonal polynomials.

P_{n,N} is computed from non-Hermitian contour orthogonality: contour
moments in extended precision (mpmath), a Hankel solve for the monic
coefficients, the norm chain h̃ → ĥ → h, zeros from the companion matrix,
and at small N the planar pairing by 2D quadrature for cross-checks, the
correlation kernel and the partition function.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence
import logging
import math

import mpmath as mp
import numpy as np
from numpy.polynomial import polynomial as npoly

from src.model import ModelParams, eval_planar_weight
from src.utils.errors import (DegeneracyError, DependencyError, DomainError, HankelSingularError,
                              PrecisionError, QuadratureError, RootError)
from src.utils.io import mp_to_str

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

INITIAL_NODES = 64
MAX_NODES = 2 ** 15
RADIAL_NODES = 240
ESCALATION_DIGITS = 20
ESCALATION_TOL = 1e-10
NEWTON_STEPS = 30


def working_precision(n: int) -> int:
    """Decimal digits for degree n."""
    return 40 + 3 * n


def default_contour(w: float) -> tuple:
    """Circle with centre w/2 and radius w/2 + 1/(2w): encloses [0, w], excludes −1/w."""
    return w / 2, w / 2 + 1 / (2 * w)


def circle_integral(func: Callable, center: float, radius: float, dps: int,
                    initial_nodes: int = INITIAL_NODES, max_nodes: int = MAX_NODES):
    """
    ∮ func(z) dz over a positively oriented circle by nested trapezoid rules.

    func may return one mp number or a list of them. Nodes are doubled until
    every component changes by less than 10^{−(dps−10)} relative to the
    larger of its value and 10⁻⁵ of its absolute-sum scale.

    Raises:
        QuadratureError: no convergence at max_nodes
    """
    with mp.workdps(dps):
        c = mp.mpf(center)
        R = mp.mpf(radius)
        tol = mp.mpf(10) ** (-(dps - 10))

        def evaluate(m, indices):
            sums, scales = None, None
            for k in indices:
                z = c + R * mp.expjpi(mp.mpf(2 * k) / m)
                values = func(z)
                scalar = not isinstance(values, (list, tuple))
                values = [values] if scalar else list(values)
                terms = [v * (z - c) for v in values]
                if sums is None:
                    sums = terms
                    scales = [abs(t) for t in terms]
                else:
                    sums = [s + t for s, t in zip(sums, terms)]
                    scales = [s + abs(t) for s, t in zip(scales, terms)]
            return sums, scales, scalar

        m = initial_nodes
        sums, scales, scalar = evaluate(m, range(m))
        estimate = [2j * mp.pi * s / m for s in sums]
        while m < max_nodes:
            new_sums, new_scales, _ = evaluate(2 * m, range(1, 2 * m, 2))
            sums = [s + t for s, t in zip(sums, new_sums)]
            scales = [s + t for s, t in zip(scales, new_scales)]
            m *= 2
            refined = [2j * mp.pi * s / m for s in sums]
            worst = mp.mpf(0)
            for old, new, scale in zip(estimate, refined, scales):
                denom = max(abs(new), 2 * mp.pi * scale / m * mp.mpf(10) ** -5)
                if denom > 0:
                    worst = max(worst, abs(new - old) / denom)
            estimate = refined
            logger.debug(f"circle integral: {m} nodes, relative change {mp.nstr(worst, 3)}")
            if worst < tol:
                return estimate[0] if scalar else estimate
        raise QuadratureError(f"Circle integral did not converge with {max_nodes} nodes at {dps} digits")


@dataclass
class MomentTable:
    """
    Base moments m_k = ∮ z^k ((z−w)/z)^{NQ1} (1+wz)^{−(N+NQ0)} dz for k_min ≤ k ≤ k_max.

    For degree n the contour moments are ν_i = m_{i−n}.
    """
    params: ModelParams
    k_min: int
    k_max: int
    values: List = field(repr=False)
    center: float
    radius: float
    dps: int

    def base(self, k: int):
        if not self.k_min <= k <= self.k_max:
            raise ValueError(f"Unknown moment index: {k}. Available range: [{self.k_min}, {self.k_max}]")
        return self.values[k - self.k_min]

    def nu(self, i: int, n: int):
        return self.base(i - n)

    def covers(self, n: int) -> bool:
        return self.k_min <= -n and self.k_max >= n

    def to_dict(self) -> Dict:
        return {
            "k_min": self.k_min,
            "k_max": self.k_max,
            "center": self.center,
            "radius": self.radius,
            "dps": self.dps,
            "moments": [mp_to_str(v, self.dps) for v in self.values],
        }


def _base_integrand(params: ModelParams, k_min: int, k_max: int) -> Callable:
    w = params.w
    a = params.NQ1
    b = params.N + params.NQ0
    integer = params.integer_exponents

    def func(z):
        if integer:
            base = ((z - w) / z) ** int(round(a)) / (1 + w * z) ** int(round(b))
        else:
            base = mp.power((z - w) / z, a) * mp.power(1 + w * z, -b)
        power = mp.power(z, k_min)
        out = []
        for _ in range(k_min, k_max + 1):
            out.append(base * power)
            power *= z
        return out

    return func


def base_moments(params: ModelParams, k_min: int, k_max: int, dps: int,
                 center: Optional[float] = None, radius: Optional[float] = None,
                 initial_nodes: int = INITIAL_NODES, max_nodes: int = MAX_NODES) -> MomentTable:
    """Base moments on a circle that encloses [0, w] and excludes −1/w."""
    c0, r0 = default_contour(params.w)
    center = c0 if center is None else center
    radius = r0 if radius is None else radius
    if not (center - radius < -1e-15 and center + radius > params.w and center - radius > -1 / params.w):
        raise DomainError(f"Circle ({center}, {radius}) must enclose [0, {params.w}] and exclude {-1 / params.w}")
    values = circle_integral(_base_integrand(params, k_min, k_max), center, radius, dps,
                             initial_nodes=initial_nodes, max_nodes=max_nodes)
    logger.info(f"Computed {k_max - k_min + 1} moments at {dps} digits (N={params.N})")
    return MomentTable(params, k_min, k_max, values, center, radius, dps)


def contour_moment(params: ModelParams, i: int, dps: Optional[int] = None,
                   center: Optional[float] = None, radius: Optional[float] = None):
    """ν_i = ⟨z^i, 1⟩_co for degree params.n."""
    dps = dps or working_precision(params.n)
    k = i - params.n
    return base_moments(params, k, k, dps, center, radius).base(k)


def residue_moment(params: ModelParams, k: int, dps: int = 50):
    """
    m_k by residue calculus when N·Q0 and N·Q1 are integers.

    Only z = 0 lies inside the contour, so m_k is 2πi times the coefficient
    of z^{NQ1−k−1} in (z − w)^{NQ1}(1 + wz)^{−(N+NQ0)}.
    """
    if not params.integer_exponents:
        raise DomainError(f"Residue moments need integer N·Q0, N·Q1, got {params.NQ0}, {params.NQ1}")
    A = int(round(params.NQ1))
    K = params.N + int(round(params.NQ0))
    j = A - k - 1
    with mp.workdps(dps):
        w = mp.mpf(params.w)
        if j < 0:
            return mp.mpc(0)
        total = mp.mpf(0)
        for a in range(0, min(A, j) + 1):
            total += mp.binomial(A, a) * (-w) ** (A - a) * mp.binomial(-K, j - a) * w ** (j - a)
        return 2j * mp.pi * total


@dataclass
class PolySolution:
    """Monic P_{n,N} (ascending coefficients) with its contour norm."""
    params: ModelParams
    coeffs: List = field(repr=False)
    h_tilde: object
    dps: int
    moments: MomentTable = field(repr=False)
    zeros: Optional[List] = field(default=None, repr=False)
    h_planar: Optional[object] = None
    refined: Optional["PolySolution"] = field(default=None, repr=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def h_hat(self):
        """ĥ = h̃·w^{N+NQ0}."""
        with mp.workdps(self.dps):
            return self.h_tilde * mp.power(self.params.w, self.params.N + self.params.NQ0)

    def coeffs_complex(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs])

    def to_dict(self) -> Dict:
        data = {
            "params": self.params.to_dict(),
            "degree": self.degree,
            "dps": self.dps,
            "coefficients": [mp_to_str(c, self.dps) for c in self.coeffs],
            "h_tilde": mp_to_str(self.h_tilde, self.dps),
            "h_hat": mp_to_str(self.h_hat, self.dps),
        }
        if self.h_planar is not None:
            data["h"] = mp_to_str(self.h_planar, self.dps)
        if self.zeros is not None:
            data["zeros"] = [mp_to_str(z, self.dps) for z in self.zeros]
        return data


def build_monic_op(params: ModelParams, dps: Optional[int] = None,
                   moments: Optional[MomentTable] = None) -> PolySolution:
    """
    Monic P_{n,N} from the Hankel system Σ_j c_j ν_{i+j} = −ν_{i+n}, i = 0..n−1.

    The solution is contour-orthogonal to z^j for j = 0..n−1; h̃ = ⟨P, z^n⟩_co.

    Raises:
        HankelSingularError: singular Hankel matrix or orthogonality residual too large
    """
    n = params.n
    dps = dps or working_precision(n)
    if moments is None or not moments.covers(n) or moments.dps < dps:
        moments = base_moments(params, -(n + 1), n + 1, dps)
    with mp.workdps(dps):
        nu = [moments.nu(i, n) for i in range(2 * n + 1)]
        if n == 0:
            coeffs = [mp.mpc(1)]
        else:
            H = mp.matrix(n, n)
            rhs = mp.matrix(n, 1)
            for i in range(n):
                rhs[i] = -nu[i + n]
                for j in range(n):
                    H[i, j] = nu[i + j]
            try:
                c = mp.lu_solve(H, rhs)
            except ZeroDivisionError:
                raise HankelSingularError(
                    f"Hankel matrix of degree {n} is singular at {dps} digits; increase the precision"
                )
            coeffs = [c[j] for j in range(n)] + [mp.mpc(1)]
            bound = mp.mpf(10) ** (-dps / 3)
            for j in range(n):
                residual = mp.fsum(coeffs[i] * nu[i + j] for i in range(n + 1))
                scale = mp.fsum(abs(coeffs[i] * nu[i + j]) for i in range(n + 1))
                if abs(residual) > bound * scale:
                    raise HankelSingularError(
                        f"Orthogonality residual {mp.nstr(abs(residual) / scale, 3)} at j={j}, degree {n}; "
                        f"increase the precision"
                    )
        h_tilde = mp.fsum(coeffs[j] * nu[j + n] for j in range(n + 1))
    logger.info(f"Built P_(n={n}, N={params.N}) at {dps} digits: h_tilde = {mp.nstr(h_tilde, 12)}")
    return PolySolution(params, coeffs, h_tilde, dps, moments)


def contour_pairing(sol: PolySolution, j: int):
    """⟨P_{n,N}, z^j⟩_co from the moments."""
    n = sol.degree
    with mp.workdps(sol.dps):
        return mp.fsum(sol.coeffs[i] * sol.moments.nu(i + j, n) for i in range(n + 1))


def hankel_determinant(table: MomentTable, n: int, size: int):
    """det[ν_{i+j}]_{i,j<size} for the degree-n moments."""
    with mp.workdps(table.dps):
        if size == 0:
            return mp.mpf(1)
        H = mp.matrix(size, size)
        for i in range(size):
            for j in range(size):
                H[i, j] = table.nu(i + j, n)
        return mp.det(H)


@dataclass
class NormChain:
    """h̃ = ⟨P, z^n⟩_co, ĥ = h̃·w^{N+NQ0} and the planar norm h."""
    h_tilde: object
    h_hat: object
    h: object
    p_next_at_zero: object
    G: object
    dps: int

    def to_dict(self) -> Dict:
        return {key: mp_to_str(getattr(self, key), self.dps)
                for key in ("h_tilde", "h_hat", "h", "p_next_at_zero", "G")}


def gamma_ratio_mp(params: ModelParams, k: int, dps: int):
    """G_{k,N} in extended precision."""
    N = params.N
    with mp.workdps(dps):
        return mp.exp(mp.loggamma(N + params.NQ0 - k) + mp.loggamma(1 + k + params.NQ1)
                      - mp.loggamma(N * params.total_charge + 1))


def norm_chain(params: ModelParams, sol: PolySolution, sol_next: Optional[PolySolution] = None) -> NormChain:
    """
    h = −G_{n,N}·h̃/(2i·P_{n+1,N}(0)), with P_{n+1,N} built from the same base moments.

    Raises:
        DegeneracyError: P_{n+1,N}(0) vanishes at working precision
        PrecisionError: h is not real positive
    """
    n = sol.degree
    if sol_next is None:
        sol_next = build_monic_op(params.with_degree(n + 1), sol.dps, sol.moments)
    dps = sol.dps
    with mp.workdps(dps):
        p0 = sol_next.coeffs[0]
        scale = mp.fsum(abs(c) for c in sol_next.coeffs)
        if abs(p0) < mp.mpf(10) ** (-dps / 2) * scale:
            raise DegeneracyError(f"P_(n+1={n + 1}, N={params.N})(0) vanishes; the norm chain is undefined")
        G = gamma_ratio_mp(params, n, dps)
        h = -G * sol.h_tilde / (2j * p0)
        if abs(mp.im(h)) > mp.mpf(10) ** (-dps / 4) * abs(h) or mp.re(h) <= 0:
            raise PrecisionError(f"Planar norm is not real positive: h = {mp.nstr(h, 12)}")
        h = mp.re(h)
        sol.h_planar = h
        return NormChain(sol.h_tilde, sol.h_hat, h, p0, G, dps)


def poly_zeros(sol: PolySolution) -> List:
    """
    Zeros of P_{n,N} from companion-matrix eigenvalues at the working precision,
    polished by Newton's method.

    Raises:
        RootError: a polished root misses the residual bound
    """
    n = sol.degree
    if n == 0:
        sol.zeros = []
        return []
    with mp.workdps(sol.dps):
        C = mp.matrix(n, n)
        for i in range(1, n):
            C[i, i - 1] = 1
        for i in range(n):
            C[i, n - 1] = -sol.coeffs[i]
        roots = mp.eig(C, left=False, right=False)
        descending = list(reversed(sol.coeffs))
        bound = mp.mpf(10) ** (-sol.dps / 3)
        polished = []
        for root in roots:
            z = mp.mpc(root)
            for _ in range(NEWTON_STEPS):
                value, slope = mp.polyval(descending, z, derivative=True)
                if slope == 0:
                    break
                step = value / slope
                z -= step
                if abs(step) <= bound * max(1, abs(z)) * mp.mpf(10) ** (-sol.dps / 3):
                    break
            value = mp.polyval(descending, z)
            scale = mp.fsum(abs(c) * abs(z) ** k for k, c in enumerate(sol.coeffs))
            if abs(value) > bound * scale:
                raise RootError(f"Newton polish failed at root {mp.nstr(z, 12)}: residual {mp.nstr(abs(value), 3)}")
            polished.append(z)
    polished.sort(key=lambda z: (float(mp.re(z)), float(mp.im(z))))
    sol.zeros = polished
    return polished


def eval_poly(sol: PolySolution, z):
    with mp.workdps(sol.dps):
        return mp.polyval(list(reversed(sol.coeffs)), mp.mpc(z))


def escalation_check(params: ModelParams, sol: PolySolution, extra: int = ESCALATION_DIGITS,
                     tol: float = ESCALATION_TOL) -> Dict[str, float]:
    """
    Recompute at dps + extra digits and compare everything reported for degree n:
    coefficients, h̃, ĥ, the planar norm h and the zeros.

    The finer solution is kept on ``sol.refined`` so field comparisons can be
    repeated on it.

    Raises:
        PrecisionError: the working precision policy is insufficient
    """
    n = sol.degree
    finer = build_monic_op(params, sol.dps + extra)
    finer_next = build_monic_op(params.with_degree(n + 1), finer.dps, finer.moments)
    norm_chain(params, finer, finer_next)
    if sol.h_planar is None:
        norm_chain(params, sol)
    if sol.zeros is None:
        poly_zeros(sol)
    poly_zeros(finer)
    with mp.workdps(finer.dps):
        scale = max(abs(c) for c in finer.coeffs)
        coeff_change = max(abs(a - b) for a, b in zip(sol.coeffs, finer.coeffs)) / scale
        h_tilde_change = abs(sol.h_tilde - finer.h_tilde) / abs(finer.h_tilde)
        h_hat_change = abs(sol.h_hat - finer.h_hat) / abs(finer.h_hat)
        h_change = abs(sol.h_planar - finer.h_planar) / abs(finer.h_planar)
        # nearest-neighbour pairing; conjugate pairs share a real part
        zero_shift = max((min(abs(z - y) for y in finer.zeros) / max(1, abs(z)) for z in sol.zeros),
                         default=mp.mpf(0))
    sol.refined = finer
    result = {
        "coefficients": float(coeff_change),
        "h_tilde": float(h_tilde_change),
        "h_hat": float(h_hat_change),
        "h": float(h_change),
        "zeros": float(zero_shift),
        "dps": sol.dps + extra,
    }
    worst = max(value for key, value in result.items() if key != "dps")
    if worst > tol:
        raise PrecisionError(f"Precision escalation changed degree {n} results by {result}")
    return result


def _planar_grid(params: ModelParams, degree: int, radial_nodes: int):
    """Nodes and weights for ∫ F e^{−NV} dA with r = tan α and a trapezoid rule in θ."""
    m = 4 * (degree + 2 * math.ceil(params.NQ1) + 8)
    x, wx = np.polynomial.legendre.leggauss(radial_nodes)
    alpha = np.pi / 4 * (x + 1)
    r = np.tan(alpha)
    radial = (np.pi / 4) * wx * r / np.cos(alpha) ** 2
    theta = 2 * np.pi * np.arange(m) / m
    z = r[:, None] * np.exp(1j * theta)[None, :]
    weights = radial[:, None] * (2 * np.pi / m) * eval_planar_weight(params, z)
    return z, weights


def planar_pairing(params: ModelParams, p: Sequence[complex], q: Sequence[complex],
                   radial_nodes: int = RADIAL_NODES) -> complex:
    """
    ⟨p, q⟩_pl = ∫ p(z)·conj(q(z))·e^{−N·V(z)} dA for ascending coefficient vectors.

    Raises:
        DomainError: deg p + deg q too large for the weight to decay
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    degree = len(p) + len(q) - 2
    if degree >= 2 * (params.N + params.NQ0):
        raise DomainError(
            f"Planar pairing diverges for total degree {degree} ≥ 2(N + N·Q0) = {2 * (params.N + params.NQ0)}"
        )
    z, weights = _planar_grid(params, degree, radial_nodes)
    values = npoly.polyval(z, p) * np.conj(npoly.polyval(z, q))
    return complex(np.sum(values * weights))


def planar_moment(params: ModelParams, j: int, k: int, radial_nodes: int = RADIAL_NODES) -> complex:
    """∫ z^j conj((z − w)^k) e^{−NV} dA."""
    monomial = np.zeros(j + 1)
    monomial[j] = 1.0
    shifted = (npoly.Polynomial([-params.w, 1.0]) ** k).coef
    return planar_pairing(params, monomial, shifted, radial_nodes)


def duality_contour_side(params: ModelParams, j: int, k: int, dps: int = 30):
    """(G_{k,N}/2i)·∮ z^{j−k−1} ((z−w)/z)^{NQ1} (1+wz)^{k−(N+NQ0)} dz."""
    w = params.w
    a = params.NQ1
    b = params.N + params.NQ0 - k
    center, radius = default_contour(w)

    def func(z):
        return mp.power(z, j - k - 1) * mp.power((z - w) / z, a) * mp.power(1 + w * z, -b)

    integral = circle_integral(func, center, radius, dps)
    with mp.workdps(dps):
        return complex(gamma_ratio_mp(params, k, dps) / 2j * integral)


def planar_gram_norm(params: ModelParams, n: int, radial_nodes: int = RADIAL_NODES) -> float:
    """h_n = det[μ_{ij}]_{i,j≤n}/det[μ_{ij}]_{i,j<n} from planar moments μ_{ij} = ⟨z^i, z^j⟩_pl."""
    gram = np.zeros((n + 1, n + 1), dtype=complex)
    for i in range(n + 1):
        for j in range(n + 1):
            e_i = np.zeros(i + 1)
            e_i[i] = 1.0
            e_j = np.zeros(j + 1)
            e_j[j] = 1.0
            gram[i, j] = planar_pairing(params, e_i, e_j, radial_nodes)
    numerator = np.linalg.det(gram)
    denominator = np.linalg.det(gram[:n, :n]) if n > 0 else 1.0
    return float((numerator / denominator).real)


@dataclass
class KernelData:
    """P_{l,N} and planar norms h_{l,N} for l < N."""
    params: ModelParams
    solutions: List[PolySolution] = field(repr=False)
    norms: List = field(repr=False)


def planar_norms(params: ModelParams, dps: Optional[int] = None) -> KernelData:
    """Build P_l and h_l for every l < N from one base-moment table."""
    N = params.N
    dps = dps or working_precision(N)
    table = base_moments(params, -N, N, dps)
    solutions, norms = [], []
    for l in range(N):
        p_l = params.with_degree(l)
        sol = build_monic_op(p_l, dps, table)
        sol_next = build_monic_op(params.with_degree(l + 1), dps, table)
        chain = norm_chain(p_l, sol, sol_next)
        solutions.append(sol)
        norms.append(chain.h)
    return KernelData(params, solutions, norms)


def kernel_KN(params: ModelParams, x: complex, y: complex, data: Optional[KernelData] = None) -> complex:
    """
    K_N(x, y) = e^{−N(V(x)+V(y))/2}·Σ_{l<N} P_l(x)·conj(P_l(y))/h_l.

    Raises:
        DependencyError: norms for some l < N are missing
    """
    if data is None or len(data.norms) < params.N:
        have = 0 if data is None else len(data.norms)
        raise DependencyError(f"Kernel needs the planar norms h_l for l < {params.N}; {have} available")
    total = 0j
    for sol, h in zip(data.solutions[:params.N], data.norms[:params.N]):
        total += complex(eval_poly(sol, x)) * np.conj(complex(eval_poly(sol, y))) / float(h)
    damping = math.sqrt(float(eval_planar_weight(params, x)) * float(eval_planar_weight(params, y)))
    return complex(total * damping)


def log_partition(params: ModelParams, data: Optional[KernelData] = None) -> float:
    """log Q_N = log N! + Σ_{l<N} log h_{l,N}."""
    if data is None or len(data.norms) < params.N:
        raise DependencyError(f"Partition function needs the planar norms h_l for l < {params.N}")
    with mp.workdps(data.solutions[0].dps):
        return float(mp.log(mp.factorial(params.N)) + mp.fsum(mp.log(h) for h in data.norms[:params.N]))


# Example usage
if __name__ == "__main__":
    params = ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=4)
    sol = build_monic_op(params)
    chain = norm_chain(params, sol)
    print(f"h_(4,4) = {mp.nstr(chain.h, 15)}")
    print(f"zeros: {[mp.nstr(z, 8) for z in poly_zeros(sol)]}")
