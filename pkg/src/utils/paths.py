"""
Planar geometry for polylines in the complex plane: distances, crossings,
winding numbers, cut-avoiding path planning and path integrals.
"""

from typing import Callable, List, Optional, Sequence
import logging

import numpy as np
from matplotlib.path import Path
from scipy.integrate import quad

from src.utils.errors import MarginError

logger = logging.getLogger(__name__)


def as_polyline(points) -> np.ndarray:
    return np.asarray(points, dtype=complex).ravel()


def distance_to_polyline(z, polyline) -> np.ndarray:
    """Euclidean distance from each z to the polyline (vectorised over z)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    pts = as_polyline(polyline)
    if len(pts) == 1:
        return np.abs(z - pts[0])
    a = pts[:-1][None, :]
    d = (pts[1:] - pts[:-1])[None, :]
    zz = z[:, None]
    length2 = np.abs(d) ** 2
    length2 = np.where(length2 == 0, 1.0, length2)
    t = np.clip(((zz - a) * np.conj(d)).real / length2, 0.0, 1.0)
    return np.min(np.abs(zz - (a + t * d)), axis=1)


def nearest_parameter(z: complex, polyline, s_values) -> float:
    """Arclength parameter of the point of the polyline nearest to z."""
    pts = as_polyline(polyline)
    s_values = np.asarray(s_values, dtype=float)
    a, d = pts[:-1], pts[1:] - pts[:-1]
    length2 = np.where(np.abs(d) == 0, 1.0, np.abs(d) ** 2)
    t = np.clip(((z - a) * np.conj(d)).real / length2, 0.0, 1.0)
    k = int(np.argmin(np.abs(z - (a + t * d))))
    return float(s_values[k] + t[k] * (s_values[k + 1] - s_values[k]))


def segment_crosses(p: complex, q: complex, polyline) -> bool:
    """True when the segment p→q properly intersects any polyline segment."""
    pts = as_polyline(polyline)
    if len(pts) < 2:
        return False
    a, b = pts[:-1], pts[1:]

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    d1 = cross(q - p, a - p)
    d2 = cross(q - p, b - p)
    d3 = cross(b - a, p - a)
    d4 = cross(b - a, q - a)
    return bool(np.any((d1 * d2 <= 0) & (d3 * d4 <= 0)))


def real_axis_crossings(points) -> np.ndarray:
    """Real parts where a sampled curve changes the sign of its imaginary part."""
    pts = as_polyline(points)
    y = pts.imag
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    t = y[idx] / (y[idx] - y[idx + 1])
    return pts[idx].real + t * (pts[idx + 1].real - pts[idx].real)


def winding_number(closed_curve, point: complex) -> int:
    """Winding number of a closed sampled curve about a point."""
    pts = as_polyline(closed_curve)
    if pts[0] != pts[-1]:
        pts = np.append(pts, pts[0])
    angles = np.unwrap(np.angle(pts - point))
    return int(round((angles[-1] - angles[0]) / (2 * np.pi)))


def signed_area(closed_curve) -> float:
    """Shoelace area; positive for counterclockwise orientation."""
    pts = as_polyline(closed_curve)
    x, y = pts.real, pts.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_path(vertices) -> Path:
    pts = as_polyline(vertices)
    return Path(np.column_stack([pts.real, pts.imag]), closed=False)


def contains(path: Path, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return path.contains_points(np.column_stack([z.real, z.imag]))


def plan_path(start: complex, end: complex, obstacles: Sequence,
              avoid_points: Sequence[complex] = (), margin: float = 1e-3,
              height: Optional[float] = None) -> List[complex]:
    """
    Find a polyline from start to end that crosses no obstacle and keeps
    `margin` away from the avoid points.

    Candidates are tried from the direct segment to detours through the
    upper and lower half-planes; the shortest admissible one is returned.

    Raises:
        MarginError: if no candidate is admissible
    """
    obstacles = [as_polyline(o) for o in obstacles]
    all_pts = np.concatenate([o for o in obstacles] + [np.array([start, end], dtype=complex)])
    top = height if height is not None else float(np.max(np.abs(all_pts.imag))) + 1.0
    x_left = float(np.min(all_pts.real)) - 1.0
    x_right = float(np.max(all_pts.real)) + 1.0

    candidates = [[start, end]]
    for y in (top, -top):
        candidates.append([start, start.real + 1j * y, end.real + 1j * y, end])
        for x in (x_left, x_right):
            candidates.append([start, start.real + 1j * y, x + 1j * y, x + 1j * end.imag, end])
            candidates.append([start, x + 1j * start.imag, x + 1j * y, end.real + 1j * y, end])

    admissible = [c for c in candidates if _admissible(c, obstacles, avoid_points, margin)]
    if not admissible:
        raise MarginError(f"No cut-avoiding path from {start} to {end}")
    return min(admissible, key=lambda c: float(np.sum(np.abs(np.diff(np.asarray(c))))))


def _admissible(vertices, obstacles, avoid_points, margin) -> bool:
    for p, q in zip(vertices[:-1], vertices[1:]):
        if p == q:
            continue
        for o in obstacles:
            if segment_crosses(p, q, o):
                return False
        if len(avoid_points) and np.min(distance_to_polyline(np.asarray(avoid_points), [p, q])) < margin:
            return False
    return True


def integrate_path(func: Callable[[complex], complex], vertices: Sequence[complex],
                   epsabs: float = 1e-13, epsrel: float = 1e-12, limit: int = 200) -> complex:
    """
    ∫ func(z) dz along a polyline with scipy quad on each segment.

    Long segments whose far end is many times farther from the start than
    its length scale are split geometrically so quad resolves the decay.
    """
    total = 0j
    for p, q in zip(vertices[:-1], vertices[1:]):
        if p == q:
            continue
        for a, b in _split_segment(p, q):
            d = b - a

            def re_part(t, a=a, d=d):
                return (func(a + t * d) * d).real

            def im_part(t, a=a, d=d):
                return (func(a + t * d) * d).imag

            re, _ = quad(re_part, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=limit)
            im, _ = quad(im_part, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=limit)
            total += re + 1j * im
    return total


def _split_segment(p: complex, q: complex, ratio: float = 4.0):
    """Geometric subdivision of p→q by distance from p."""
    length = abs(q - p)
    base = max(abs(p), 1.0)
    if length <= ratio * base:
        return [(p, q)]
    pieces, s = [], 0.0
    step = base
    while s < length:
        s_next = min(length, s + step)
        pieces.append((p + (q - p) * s / length, p + (q - p) * s_next / length))
        s, step = s_next, step * 2.0
    return pieces
