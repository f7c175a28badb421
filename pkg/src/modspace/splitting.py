"""Rescalings, line tests and the product factorization Y = Z x V.

All clouds are taken in coordinates where the basepoint is the origin
(see :meth:`PointCloud.centered`).
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from modspace.errors import DependentDirectionsError
from modspace.metric import PointCloud, pointed_hausdorff_distance


def thread_count() -> int:
    """Worker cap from MODSPACE_THREADS (default: CPU count)."""
    try:
        return max(1, int(os.environ.get("MODSPACE_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def rescale(A: PointCloud, a, lam: float) -> PointCloud:
    """A_{a, lam} = (A - a) / lam, based at the origin."""
    if lam <= 0:
        raise ValueError("scale must be positive")
    a = np.asarray(a, dtype=float)
    return PointCloud((A.points - a) / lam, np.zeros(A.ambient_dim))


def lines_through_points(Y: PointCloud, v, R: float, eps: float, t_grid) -> tuple[bool, float]:
    """Check that y + t v stays within eps of Y for y in Y n B(0, R) and
    every offset t keeping the point inside B(0, R)."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    base = Y.window(R).points
    t = np.asarray(t_grid, dtype=float)
    if len(base) == 0 or len(t) == 0:
        return True, 1.0
    probes = (base[:, None, :] + t[None, :, None] * v).reshape(-1, Y.ambient_dim)
    probes = probes[np.linalg.norm(probes, axis=1) < R]
    if len(probes) == 0:
        return True, 1.0
    ok = Y.dist_to(probes) <= eps
    frac = float(ok.mean())
    return bool(ok.all()), frac


@dataclass
class SplittingReport:
    directions: np.ndarray
    V: np.ndarray
    Z: PointCloud
    product_error: float
    line_fraction: float
    lines_ok: bool
    eps: float
    step: float

    @property
    def passed(self) -> bool:
        return self.product_error <= self.eps and self.lines_ok

    def to_json_dict(self) -> dict:
        return {
            "directions": self.directions.tolist(),
            "V": self.V.tolist(),
            "Z": self.Z.points.tolist(),
            "productError": self.product_error,
            "lineTestFraction": self.line_fraction,
            "linesOk": self.lines_ok,
            "eps": self.eps,
            "step": self.step,
            "passed": self.passed,
        }


def _dedupe(points: np.ndarray, resolution: float) -> np.ndarray:
    if len(points) == 0:
        return points
    keys = np.round(points / resolution).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


def sample_step(Y: PointCloud) -> float:
    """Median nearest-neighbour spacing."""
    if len(Y) < 2:
        return 0.0
    d, _ = Y.tree.query(Y.points, k=2)
    return float(np.median(d[:, 1]))


def factor_product(Y: PointCloud, dirs, R: float, eps: float, step: float | None = None) -> SplittingReport:
    """Test Y n B(0, R) against Z x V with V = span(dirs), Z = proj_{V^perp} Y.

    Z x V is resampled with spacing ``step`` (default: the median spacing
    of Y) inside B(0, R); the product error is d_R between the two.
    """
    D = np.atleast_2d(np.asarray(dirs, dtype=float))
    k, n = D.shape
    if n != Y.ambient_dim:
        raise ValueError("directions and cloud live in different dimensions")
    if k > n:
        raise DependentDirectionsError("more directions than dimensions")
    Q, Rm = np.linalg.qr(D.T)
    diag = np.abs(np.diag(Rm))
    if np.any(diag <= 1e-10 * max(diag.max(), 1e-300)):
        raise DependentDirectionsError("directions are linearly dependent")
    step = sample_step(Y.window(R)) if step is None else step
    if step <= 0:
        raise ValueError("cannot infer a sample step; pass one explicitly")
    Yw = Y.window(R).points
    Z = Yw - (Yw @ Q) @ Q.T
    Z = _dedupe(Z, step / 4)
    s = np.arange(-np.ceil(R / step), np.ceil(R / step) + 1) * step
    coeffs = np.array(list(itertools.product(s, repeat=k)))
    coeffs = coeffs[np.linalg.norm(coeffs, axis=1) < R]
    recon = (Z[:, None, :] + (coeffs @ Q.T)[None, :, :]).reshape(-1, n)
    recon = recon[np.linalg.norm(recon, axis=1) < R]
    err = pointed_hausdorff_distance(Y, PointCloud(recon), R)
    fractions, oks = [], []
    t_grid = s
    for v in D:
        ok, frac = lines_through_points(Y, v / np.linalg.norm(v), R, eps, t_grid)
        oks.append(ok)
        fractions.append(frac)
    return SplittingReport(D, Q, PointCloud(Z), err, float(min(fractions)), all(oks), eps, step)


def tangent_sequence(A: PointCloud, a, scales, R: float, eps: float | None = None):
    """Rescalings (A - a)/lam clipped to B(0, 1.5 R) and their d_R matrix.

    Returns (clouds, matrix, cauchy) where ``cauchy`` says whether the last
    three rescalings are pairwise eps-close (None when eps is not given).
    """
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b >= a_ for a_, b in zip(scales, scales[1:])):
        raise ValueError("scales must be decreasing")
    clouds = [rescale(A, a, lam).window(1.5 * R) for lam in scales]
    m = len(clouds)
    M = np.zeros((m, m))
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        values = list(pool.map(lambda ij: pointed_hausdorff_distance(clouds[ij[0]], clouds[ij[1]], R), pairs))
    for (i, j), d in zip(pairs, values):
        M[i, j] = M[j, i] = d
    cauchy = None
    if eps is not None and m >= 2:
        tail = M[-3:, -3:] if m >= 3 else M
        cauchy = bool(tail.max() <= eps)
    return clouds, M, cauchy


# -- synthetic clouds -------------------------------------------------------------


def cantor_points(level: int) -> np.ndarray:
    """Endpoints of the 2^level intervals of the middle-thirds construction."""
    left = np.array([0.0])
    for j in range(1, level + 1):
        left = np.concatenate([left, left + 2 * 3.0**-j])
    return np.sort(np.concatenate([left, left + 3.0**-level]))


def cantor_line_cloud(level: int, step: float, R: float) -> PointCloud:
    """(C_level x step Z) n B(0, R) in R^2, based at the origin."""
    xs = cantor_points(level)
    ys = np.arange(-np.ceil(R / step), np.ceil(R / step) + 1) * step
    pts = np.array([(x, y) for x in xs for y in ys])
    pts = pts[np.linalg.norm(pts, axis=1) < R]
    return PointCloud(pts)


def circle_cloud(step: float, radius: float = 1.0) -> PointCloud:
    m = int(np.ceil(2 * np.pi * radius / step))
    th = 2 * np.pi * np.arange(m) / m
    return PointCloud(radius * np.stack([np.cos(th), np.sin(th)], axis=1))


def plane_cloud(step: float, R: float) -> PointCloud:
    s = np.arange(-np.ceil(R / step), np.ceil(R / step) + 1) * step
    X, Y = np.meshgrid(s, s)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return PointCloud(pts[np.linalg.norm(pts, axis=1) < R])
