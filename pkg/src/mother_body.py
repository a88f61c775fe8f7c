#!/usr/bin/env python3
"""
Mother body of the droplet.

Traces the critical trajectories of the quadratic differential R(z)dz² from
the branch point z1, picks the middle one as the support Γ0 of μ0, traces the
steepest-ascent arcs Γ1, Γ2 to the node c0 and assembles the closed contour
Γ = Γ0 ∪ Γ1 ∪ Γ2. Trajectories are integrated on arclength with RK45.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import cmath
import logging
import math

import numpy as np
import pandas as pd
from scipy.integrate import OdeSolution, RK45, cumulative_trapezoid
from scipy.optimize import brentq, minimize_scalar

from src.spectral_curve import SpectralCurve, abs_sqrt_R, eval_R
from src.utils.config import max_workers
from src.utils.errors import TopologyError
from src.utils.paths import distance_to_polyline, nearest_parameter, real_axis_crossings, signed_area, winding_number

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


class TrajectoryKind(Enum):
    """Kinds of traced arcs."""
    CRITICAL_LEFT = "critical_left"
    CRITICAL_MIDDLE = "critical_middle"
    CRITICAL_RIGHT = "critical_right"
    STEEPEST_ASCENT = "steepest_ascent"
    LOOP = "loop"


@dataclass(frozen=True)
class TraceSettings:
    """Integration and stopping parameters, relative to the curve scale |z1 − z2|."""
    rtol: float = 1e-10
    atol: float = 1e-12
    launch_offset: float = 1e-6
    capture_radius: float = 1e-5
    node_capture_radius: float = 1e-4
    escape_radius: float = 50.0
    max_length: float = 200.0
    max_step: float = 0.02
    samples: int = 2001
    gl_nodes: int = 400


DEFAULT_SETTINGS = TraceSettings()


class ArcParam:
    """Piecewise arclength parametrization z(s), s ∈ [0, length]."""

    def __init__(self, pieces: Sequence[Tuple[Callable, float]]):
        self.pieces = [(func, float(length)) for func, length in pieces if length > 0]
        self.breaks = np.concatenate([[0.0], np.cumsum([length for _, length in self.pieces])])

    @property
    def length(self) -> float:
        return float(self.breaks[-1])

    def __call__(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty(s_arr.shape, dtype=complex)
        idx = np.clip(np.searchsorted(self.breaks, s_arr, side="right") - 1, 0, len(self.pieces) - 1)
        for k, (func, length) in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = func(np.clip(s_arr[mask] - self.breaks[k], 0.0, length))
        return complex(out[0]) if np.ndim(s) == 0 else out

    @staticmethod
    def segment(p: complex, q: complex) -> Tuple[Callable, float]:
        length = abs(q - p)
        unit = (q - p) / length if length > 0 else 0j
        return (lambda s: p + unit * np.asarray(s)), length

    def reversed(self) -> "ArcParam":
        return ArcParam([((lambda s, f=f, L=L: f(L - np.asarray(s))), L) for f, L in reversed(self.pieces)])

    def conjugate(self) -> "ArcParam":
        return ArcParam([((lambda s, f=f: np.conj(f(s))), L) for f, L in self.pieces])

    def concat(self, other: "ArcParam") -> "ArcParam":
        return ArcParam(self.pieces + other.pieces)


@dataclass
class Trajectory:
    """A traced arc with arclength samples clustered at both ends."""
    kind: TrajectoryKind
    param: ArcParam
    start_label: str
    end_label: str
    samples: int = DEFAULT_SETTINGS.samples
    points: np.ndarray = field(init=False, repr=False)
    s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = np.arange(self.samples)
        self.s = self.length * (1 - np.cos(np.pi * k / (self.samples - 1))) / 2
        self.points = self.param(self.s)

    @property
    def length(self) -> float:
        return self.param.length

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    def at(self, s):
        return self.param(s)

    def crossings(self) -> np.ndarray:
        return real_axis_crossings(self.points)

    def first_crossing(self) -> Tuple[float, float]:
        """(s, x) of the first real-axis crossing, refined on the arc itself."""
        y = self.points.imag
        idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
        if len(idx) == 0:
            raise TopologyError(f"{self.kind.value} trajectory does not cross the real axis")
        k = int(idx[0])
        s_cross = brentq(lambda t: self.param(t).imag, self.s[k], self.s[k + 1], xtol=1e-15)
        return float(s_cross), float(self.param(s_cross).real)

    def conjugate(self, kind: Optional[TrajectoryKind] = None, start_label: str = "", end_label: str = "") -> "Trajectory":
        return Trajectory(kind or self.kind, self.param.conjugate(),
                          start_label or self.start_label, end_label or self.end_label, self.samples)

    def to_frame(self, value: Optional[np.ndarray] = None) -> pd.DataFrame:
        return pd.DataFrame({
            "s": self.s,
            "re": self.points.real,
            "im": self.points.imag,
            "value": value if value is not None else np.zeros_like(self.s),
        })


class _DirectionField:
    """Unit direction rot·conj(√R)/|√R| with the sign fixed by continuity."""

    def __init__(self, curve: SpectralCurve, rotation: complex, initial: complex):
        self.curve = curve
        self.rotation = rotation
        self.prev = initial

    def direction(self, z: complex) -> complex:
        s = cmath.sqrt(complex(eval_R(self.curve, z)))
        if s == 0 or not np.isfinite(abs(s)):
            return self.prev
        d = self.rotation * s.conjugate() / abs(s)
        if (d * self.prev.conjugate()).real < 0:
            d = -d
        return d

    def __call__(self, t, y):
        d = self.direction(complex(y[0], y[1]))
        return np.array([d.real, d.imag])


def _scale(curve: SpectralCurve) -> float:
    return abs(curve.z1 - curve.z2)


def _trace(curve: SpectralCurve, start: complex, theta: float, rotation: complex,
           targets: Dict[str, complex], stop_on_real_axis: bool = False,
           settings: TraceSettings = DEFAULT_SETTINGS,
           radii: Optional[Dict[str, float]] = None) -> Tuple[ArcParam, str]:
    """
    Integrate a trajectory from `start` launched in direction θ.

    Stops when captured by a target or, if requested, at the first real-axis
    crossing. Inside the capture radius the path is finished by the local
    model: trajectories reach a simple zero of R (z2) or of √R (c0) along a
    straight ray, so the tail is the radial segment to the exact target.
    `radii` overrides the capture radius per target label.

    Returns:
        (arclength parametrization, end label)
    """
    scale = _scale(curve)
    eps = settings.launch_offset * scale
    radii = radii or {}
    capture = {label: radii.get(label, settings.capture_radius) * scale for label in targets}
    escape = settings.escape_radius * (scale + curve.c0 + 1 / curve.params.w)
    d0 = cmath.exp(1j * theta)
    launch = start + eps * d0
    field_ = _DirectionField(curve, rotation, d0)
    solver = RK45(field_, 0.0, np.array([launch.real, launch.imag]),
                  t_bound=settings.max_length * scale, rtol=settings.rtol, atol=settings.atol,
                  max_step=settings.max_step * scale)
    ts: List[float] = [0.0]
    denses = []
    z_prev = launch
    end_label, tail = None, []

    while solver.status == "running":
        solver.step()
        if solver.status == "failed":
            raise TopologyError(f"Trajectory integration failed from {start} at angle {theta:.6f}")
        dense = solver.dense_output()
        z_new = complex(solver.y[0], solver.y[1])
        field_.prev = field_.direction(z_new)

        if stop_on_real_axis and z_prev.imag * z_new.imag < 0:
            t_cross = brentq(lambda t: dense(t)[1], solver.t_old, solver.t)
            ts.append(t_cross)
            denses.append(dense)
            end_label = "real_axis"
            break

        hit = _capture(dense, solver.t_old, solver.t, z_prev, z_new, targets, capture,
                       travelled=solver.t, min_travel=10 * min(capture.values(), default=0.0))
        if hit is not None:
            label, t_hit, z_hit = hit
            if t_hit > ts[-1]:
                ts.append(t_hit)
                denses.append(dense)
            end_label = label
            tail = [z_hit, targets[label]]
            break

        ts.append(solver.t)
        denses.append(dense)
        if abs(z_new) > escape:
            raise TopologyError(f"Trajectory from {start} escaped |z| > {escape:.3g}")
        z_prev = z_new

    if end_label is None:
        raise TopologyError(f"Trajectory from {start} exceeded the maximal arclength {settings.max_length * scale:.3g}")

    ode = OdeSolution(np.array(ts), denses)

    def ode_piece(s, ode=ode):
        y = ode(np.atleast_1d(s))
        return y[0] + 1j * y[1]

    pieces = [ArcParam.segment(start, launch), (ode_piece, ts[-1])]
    if tail:
        pieces.append(ArcParam.segment(tail[0], tail[1]))
    return ArcParam(pieces), end_label


def _capture(dense, t_old, t_new, z_prev, z_new, targets, capture, travelled, min_travel):
    """Closest approach of one step to the targets within their capture radii."""
    if travelled < min_travel:
        return None
    step = abs(z_new - z_prev)
    for label, target in targets.items():
        radius = capture[label]
        if distance_to_polyline(target, [z_prev, z_new])[0] > radius + step:
            continue
        t_grid = np.linspace(t_old, t_new, 65)
        y = dense(t_grid)
        z = y[0] + 1j * y[1]
        k = int(np.argmin(np.abs(z - target)))
        lo, hi = t_grid[max(k - 1, 0)], t_grid[min(k + 1, len(t_grid) - 1)]
        best = minimize_scalar(lambda t: abs(complex(*dense(t)) - target), bounds=(lo, hi), method="bounded",
                               options={"xatol": 1e-3 * radius})
        t_hit = float(best.x)
        z_hit = complex(*dense(t_hit))
        if abs(z_hit - target) >= radius:
            continue
        # finish only if the path was heading for the target
        z_back = complex(*dense(max(t_old, t_hit - 10 * radius)))
        heading, chord = z_hit - z_back, target - z_back
        if (heading * chord.conjugate()).real < 0:
            continue
        return label, t_hit, z_hit
    return None


def launch_angles(curve: SpectralCurve, critical: bool) -> List[float]:
    """Directions at z1 where R′(z1)e^{3iθ} is negative (critical) or positive (orthogonal)."""
    z1, z2, c0 = curve.z1, curve.z2, curve.c0
    D = curve.pole_polynomial()
    c4 = curve.quartic.coef[-1]
    r_prime = c4 * (z1 - z2) * (z1 - c0) ** 2 / D(z1) ** 2
    phase = cmath.phase(r_prime)
    offset = math.pi if critical else 0.0
    return [(offset - phase + 2 * math.pi * k) / 3 for k in range(3)]


def _classify_crossing(curve: SpectralCurve, x: float) -> TrajectoryKind:
    w = curve.params.w
    if x < -1 / w:
        return TrajectoryKind.CRITICAL_LEFT
    if x < 0:
        return TrajectoryKind.CRITICAL_MIDDLE
    return TrajectoryKind.CRITICAL_RIGHT


def trace_critical_trajectories(curve: SpectralCurve, settings: TraceSettings = DEFAULT_SETTINGS) -> Dict[TrajectoryKind, Trajectory]:
    """
    Trace the three critical trajectories from z1 to z2.

    Each is integrated along dz/dτ = i·conj(√R)/|√R| and classified by
    where it first crosses the real axis relative to −1/w and 0.

    Raises:
        TopologyError: escape, non-termination or a missing/duplicate class
    """
    angles = launch_angles(curve, critical=True)
    targets = {"z2": curve.z2}

    def run(theta):
        return _trace(curve, curve.z1, theta, 1j, targets, settings=settings)

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        traced = list(pool.map(run, angles))

    result: Dict[TrajectoryKind, Trajectory] = {}
    for (param, label), theta in zip(traced, angles):
        if label != "z2":
            raise TopologyError(f"Critical trajectory at angle {theta:.6f} ended at {label}, not z2")
        trajectory = Trajectory(TrajectoryKind.CRITICAL_MIDDLE, param, "z1", "z2", settings.samples)
        crossings = trajectory.crossings()
        if len(crossings) == 0:
            raise TopologyError(f"Critical trajectory at angle {theta:.6f} never crosses the real axis")
        trajectory.kind = _classify_crossing(curve, float(crossings[0]))
        if trajectory.kind in result:
            raise TopologyError(f"Two critical trajectories classified {trajectory.kind.value}")
        result[trajectory.kind] = trajectory
        logger.info(f"Traced {trajectory.kind.value} trajectory: length {trajectory.length:.6f}, "
                    f"crossing {crossings[0]:.8f}")
    return result


def steepest_ascent_paths(curve: SpectralCurve, settings: TraceSettings = DEFAULT_SETTINGS) -> Tuple[Trajectory, Trajectory]:
    """
    Steepest-ascent arcs Γ1 (from z1) and Γ2 = conj(Γ1) (from z2) to c0.

    The three orthogonal directions at z1 are traced; the one captured by
    c0 is the ascent path, the others run into poles.
    """
    w = curve.params.w
    targets = {"c0": complex(curve.c0), "pole_0": 0j, "pole_w": complex(w), "pole_-1/w": complex(-1 / w)}
    gamma1 = None
    for theta in launch_angles(curve, critical=False):
        try:
            param, label = _trace(curve, curve.z1, theta, 1.0, targets, settings=settings,
                                  radii={label: settings.node_capture_radius for label in targets})
        except TopologyError as e:
            logger.debug(f"Orthogonal trajectory at angle {theta:.6f} not captured: {e}")
            continue
        if label == "c0":
            gamma1 = Trajectory(TrajectoryKind.STEEPEST_ASCENT, param, "z1", "c0", settings.samples)
            break
    if gamma1 is None:
        raise TopologyError("No steepest-ascent path from z1 terminates at c0")
    gamma2 = gamma1.conjugate(start_label="z2", end_label="c0")
    logger.info(f"Steepest-ascent path Γ1 captured by c0: length {gamma1.length:.6f}")
    return gamma1, gamma2


def loops_from_c0(curve: SpectralCurve, settings: TraceSettings = DEFAULT_SETTINGS) -> Dict[str, Trajectory]:
    """
    The two critical loops through the double zero c0.

    Upper halves are traced from c0 to the real axis and closed by
    conjugation. Returns {"inner": loop around w, "outer": loop around all poles}.
    """
    w = curve.params.w
    k2 = complex(curve.quartic.coef[-1] * (curve.c0 - curve.z1) * (curve.c0 - curve.z2)
                 / curve.pole_polynomial()(curve.c0) ** 2)
    base = (math.pi / 2 - cmath.phase(cmath.sqrt(k2))) / 2
    upper = [base + m * math.pi / 2 for m in range(4)]
    upper = [theta for theta in upper if math.sin(theta) > 1e-12]

    loops: Dict[str, Trajectory] = {}
    for theta in upper:
        param, label = _trace(curve, complex(curve.c0), theta, 1j, {}, stop_on_real_axis=True, settings=settings)
        closed = param.concat(param.conjugate().reversed())
        loop = Trajectory(TrajectoryKind.LOOP, closed, "c0", "c0", settings.samples)
        x = float(param(param.length).real)
        if 0 < x < w:
            loops["inner"] = loop
        elif x < -1 / w:
            loops["outer"] = loop
        else:
            raise TopologyError(f"Loop from c0 crosses the real axis at {x:.6f}, expected (0, w) or < −1/w")
    if set(loops) != {"inner", "outer"}:
        raise TopologyError(f"Expected an inner and an outer loop from c0, got {sorted(loops)}")
    return loops


@dataclass
class MotherBody:
    """
    Mother body μ0 supported on Γ0 with its quadrature.

    Nodes cluster at z1, z2 through s = L(1 − cos θ)/2, which also removes
    the square-root vanishing of the density.
    """
    curve: SpectralCurve
    gamma0: Trajectory
    gamma1: Trajectory
    gamma2: Trajectory
    critical: Dict[TrajectoryKind, Trajectory]
    gamma: np.ndarray
    real_crossing: float
    crossing_s: float
    gl_nodes: int = DEFAULT_SETTINGS.gl_nodes
    s_nodes: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x, wx = np.polynomial.legendre.leggauss(self.gl_nodes)
        theta = np.pi * (x + 1) / 2
        L = self.gamma0.length
        self.s_nodes = L * (1 - np.cos(theta)) / 2
        self.nodes = self.gamma0.at(self.s_nodes)
        jac = (L / 2) * np.sin(theta) * (np.pi / 2)
        self.weights = self.density(self.nodes) * jac * wx

    @property
    def density_samples(self) -> np.ndarray:
        return self.density(self.gamma0.points)

    def density(self, z) -> np.ndarray:
        """μ0 density per unit arclength, |√R0|/(2π)."""
        return self.curve.total_charge * abs_sqrt_R(self.curve, z) / (2 * np.pi)

    def mass(self) -> float:
        return float(np.sum(self.weights))

    def mass_complex(self) -> float:
        """|(1/2πi)∫_Γ0 √R0 dz| with the branch continued along Γ0."""
        x, wx = np.polynomial.legendre.leggauss(self.gl_nodes)
        theta = np.pi * (x + 1) / 2
        L = self.gamma0.length
        h = 1e-7 * L
        s = L * (1 - np.cos(theta)) / 2
        z = self.gamma0.at(s)
        tangent = (self.gamma0.at(np.minimum(s + h, L)) - self.gamma0.at(np.maximum(s - h, 0.0)))
        tangent = tangent / np.abs(tangent)
        values = self.curve.total_charge * np.sqrt(eval_R(self.curve, z).astype(complex))
        for k in range(1, len(values)):
            if (values[k] * np.conj(values[k - 1])).real < 0:
                values[k] = -values[k]
        integral = np.sum(values * tangent * (L / 2) * np.sin(theta) * (np.pi / 2) * wx)
        return float(abs(integral) / (2 * np.pi))

    def cdf(self, s) -> np.ndarray:
        """μ0 mass of the part of Γ0 between z1 and arclength s, normalised to 1."""
        theta = np.linspace(0.0, np.pi, 4001)
        L = self.gamma0.length
        grid = L * (1 - np.cos(theta)) / 2
        integrand = self.density(self.gamma0.at(grid)) * (L / 2) * np.sin(theta)
        cumulative = cumulative_trapezoid(integrand, theta, initial=0.0)
        return np.interp(s, grid, cumulative / cumulative[-1])

    def distance_to_gamma0(self, z) -> np.ndarray:
        return distance_to_polyline(z, self.gamma0.points)

    def project_to_gamma0(self, z: complex) -> float:
        return nearest_parameter(z, self.gamma0.points, self.gamma0.s)

    def to_frame(self) -> pd.DataFrame:
        return self.gamma0.to_frame(self.density_samples)


def build_contour(curve: SpectralCurve, settings: TraceSettings = DEFAULT_SETTINGS) -> MotherBody:
    """
    Assemble Γ = Γ0 ∪ Γ1 ∪ Γ2 and the mother body on Γ0.

    The returned body carries the curve rebound to the cut Γ0.

    Raises:
        TopologyError: if Γ does not wind once around 0 and w and zero times around −1/w
    """
    critical = trace_critical_trajectories(curve, settings)
    gamma0 = critical[TrajectoryKind.CRITICAL_MIDDLE]
    gamma1, gamma2 = steepest_ascent_paths(curve, settings)
    gamma = np.concatenate([gamma0.points, gamma2.points[1:], gamma1.points[::-1][1:]])

    w = curve.params.w
    windings = {"w": winding_number(gamma, w), "0": winding_number(gamma, 0.0),
                "-1/w": winding_number(gamma, -1 / w)}
    if windings != {"w": 1, "0": 1, "-1/w": 0} or signed_area(gamma) <= 0:
        raise TopologyError(f"Contour Γ has winding numbers {windings}; expected w: 1, 0: 1, -1/w: 0")

    crossing_s, crossing = gamma0.first_crossing()
    rebound = curve.with_cut(gamma0.points)
    body = MotherBody(rebound, gamma0, gamma1, gamma2, critical, gamma, crossing, crossing_s, settings.gl_nodes)
    logger.info(f"Mother body built: mass {body.mass():.12f}, real crossing {crossing:.10f}")
    return body


# Example usage
if __name__ == "__main__":
    from src.model import ModelParams
    from src.spectral_curve import solve_curve

    body = build_contour(solve_curve(ModelParams(Q0=1.0, Q1=1.0, w=1.0, N=1)))
    print(f"Γ0 length = {body.gamma0.length:.8f}, mass = {body.mass():.12f}")
