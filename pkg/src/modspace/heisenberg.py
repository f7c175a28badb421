"""First Heisenberg group with the Koranyi metric.

Points are arrays whose last axis holds (x, y, z); every function broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class HeisenbergPoint(NamedTuple):
    x: float
    y: float
    z: float

    def __mul__(self, other):
        return HeisenbergPoint(*h_mul(self, other))

    def inv(self):
        return HeisenbergPoint(*h_inv(self))


ORIGIN = HeisenbergPoint(0.0, 0.0, 0.0)


def _split(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def h_mul(p, q) -> np.ndarray:
    """Group law (x1+x2, y1+y2, z1+z2 + (x1 y2 - y1 x2)/2)."""
    x1, y1, z1 = _split(p)
    x2, y2, z2 = _split(q)
    return np.stack([x1 + x2, y1 + y2, z1 + z2 + 0.5 * (x1 * y2 - y1 * x2)], axis=-1)


def h_inv(p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def koranyi_norm(p) -> np.ndarray:
    x, y, z = _split(p)
    return ((x * x + y * y) ** 2 + 16 * z * z) ** 0.25


def h_dist(p, q) -> np.ndarray:
    """Koranyi distance ||p^-1 q||."""
    return koranyi_norm(h_mul(h_inv(p), q))


def h_dilate(t: float, p) -> np.ndarray:
    """delta_t(x, y, z) = (t x, t y, t^2 z)."""
    if t <= 0:
        raise ValueError("dilation factor must be positive")
    x, y, z = _split(p)
    return np.stack([t * x, t * y, t * t * z], axis=-1)


@dataclass(frozen=True, eq=False)
class HeisenbergLattice:
    """Regular lattice on [-s, s]^3 with trapezoid weights summing to (2s)^3."""

    points: np.ndarray
    weights: np.ndarray
    n: int
    s: float

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def ball_measure(self, center, r: float) -> float:
        """Lattice measure of the open Koranyi ball B(center, r), summed over points."""
        d = h_dist(np.asarray(center, dtype=float), self.points)
        return float(self.weights[d < r].sum())

    def ball_volume(self, center, r: float, refine: int = 8) -> float:
        """Lebesgue measure of B(center, r) n [-s, s]^3.

        For fixed (x, y) the ball is a z-interval of half-length
        sqrt(r^4 - rho^4) / 4 around cz + (cx y - cy x) / 2, so z is
        integrated exactly; (x, y) uses the midpoint rule on a grid
        ``refine`` times finer than the lattice. Unlike :meth:`ball_measure`
        this stays accurate when r^2 is below the lattice spacing.
        """
        cx, cy, cz = (float(v) for v in center)
        h = 2 * self.s / self.n / refine
        m = int(round(2 * self.s / h))
        mid = -self.s + (np.arange(m) + 0.5) * h
        X, Y = np.meshgrid(mid, mid, indexing="ij")
        rho2 = (X - cx) ** 2 + (Y - cy) ** 2
        half = np.sqrt(np.maximum(r**4 - rho2**2, 0.0)) / 4
        zc = cz + 0.5 * (cx * Y - cy * X)
        lo = np.maximum(zc - half, -self.s)
        hi = np.minimum(zc + half, self.s)
        return float(np.clip(hi - lo, 0, None).sum() * h * h)


def heisenberg_lattice(n: int, s: float = 1.0) -> HeisenbergLattice:
    if n < 2:
        raise ValueError("n must be at least 2")
    axis = np.linspace(-s, s, n + 1)
    w1 = np.full(n + 1, 2 * s / n)
    w1[[0, -1]] *= 0.5
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    w = np.einsum("i,j,k->ijk", w1, w1, w1).ravel()
    return HeisenbergLattice(pts, w, n, s)


def alpha_curve(a: float, b: float, t) -> np.ndarray:
    """alpha_(a,b)(t) = (t, a, b - a t / 2) = (0, a, b) . (t, 0, 0)."""
    t = np.asarray(t, dtype=float)
    return np.stack([t, np.full_like(t, a), b - 0.5 * a * t], axis=-1)


def beta_curve(a: float, b: float, t) -> np.ndarray:
    """beta_(a,b)(t) = (a, t, b + a t / 2) = (a, 0, b) . (0, t, 0)."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.full_like(t, a), t, b + 0.5 * a * t], axis=-1)


def sweep_map(kind: str, a, b, t) -> np.ndarray:
    """(p, t) -> alpha_p(t) or beta_p(t), vectorized over all three arguments."""
    a, b, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, t)))
    if kind == "alpha":
        return np.stack([t, a, b - 0.5 * a * t], axis=-1)
    if kind == "beta":
        return np.stack([a, t, b + 0.5 * a * t], axis=-1)
    raise ValueError(f"unknown curve kind {kind!r}")


def sweep_jacobian(kind: str, a: float, b: float, t: float, h: float = 1e-3) -> float:
    """Absolute Jacobian determinant of (a, b, t) -> sweep point.

    The beta sweep reverses orientation, hence the absolute value.

    The sweep map is quadratic, so central differences carry no truncation
    error and a moderate ``h`` keeps rounding small.
    """
    base = np.array([a, b, t], dtype=float)
    J = np.empty((3, 3))
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        J[:, k] = (sweep_map(kind, *(base + step)) - sweep_map(kind, *(base - step))) / (2 * h)
    return float(abs(np.linalg.det(J)))
