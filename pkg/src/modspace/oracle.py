"""Independent brute-force oracle for the modulus of tiny instances.

Any nonzero density can be scaled until it is admissible, so

    Mod_p = min over rho in [0, 1]^d of  E(rho) * t(rho)^p,
    t(rho) = max over curves of b_c / (N rho)_c,

where E is the p-energy. Sublevel sets of this scale-free objective are cones
over convex sets, hence convex, so a zooming grid search cannot get trapped.
Nothing here shares code with the solver beyond the incidence matrix.
"""

from __future__ import annotations

import itertools

import numpy as np

from modspace.curves import CurveFamily
from modspace.errors import EmptyFamilyError, TooLargeError
from modspace.metric import MetricGraph
from modspace.modulus import R_CAP


def _objective(R: np.ndarray, A: np.ndarray, b: np.ndarray, w: np.ndarray, p: float) -> np.ndarray:
    s = R @ A.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s > 0, b / np.where(s > 0, s, 1.0), np.inf)
    t = ratio.max(axis=1)
    energy = (R**p) @ w
    with np.errstate(invalid="ignore"):
        out = energy * t**p
    return np.where(np.isfinite(t), out, np.inf)


def _best(points: np.ndarray, A, b, w, p, chunk: int = 50_000):
    best_val, best_pt = np.inf, None
    for k in range(0, len(points), chunk):
        block = points[k : k + chunk]
        vals = _objective(block, A, b, w, p)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pt = float(vals[i]), block[i].copy()
    return best_val, best_pt


def brute_force_modulus(
    g: MetricGraph,
    family: CurveFamily,
    p: float,
    grid_resolution: int = 100,
    max_edges: int = 6,
    r_cap: float = R_CAP,
) -> float:
    """Mod_p by exhaustive grid search plus local zooming (tiny graphs only)."""
    if grid_resolution < 100:
        raise ValueError("grid_resolution must be at least 100")
    if p < 1:
        raise ValueError("p must be at least 1")
    if len(family) == 0:
        raise EmptyFamilyError("family has no curves")
    N = family.incidence().toarray()
    used = np.any(N > 0, axis=0)
    free = used & (g.mu > 0)
    capped = used & (g.mu == 0)
    d = int(free.sum())
    if d > max_edges:
        raise TooLargeError(f"{d} measured edges in use; the oracle handles at most {max_edges}")
    b = 1 - N[:, capped] @ np.full(capped.sum(), r_cap)
    open_rows = b > 0
    if not open_rows.any():
        return 0.0
    A, b = N[open_rows][:, free], b[open_rows]
    w = g.mu[free]
    if np.any(A.sum(axis=1) == 0):
        return float("inf")

    coarse = max(5, min(101, int(round(2e5 ** (1 / d)))))
    axis = np.linspace(0.0, 1.0, coarse)
    pts = np.array(list(itertools.product(axis, repeat=d)))
    val, center = _best(pts[np.any(pts > 0, axis=1)], A, b, w, p)
    h = 1.0 / (coarse - 1)
    offsets = np.array(list(itertools.product(np.linspace(-1, 1, 7), repeat=d)))
    final = 1.0 / grid_resolution**2
    for _ in range(2000):
        if h < final:
            break
        local = np.clip(center + h * offsets, 0.0, 1.0)
        new_val, new_center = _best(local, A, b, w, p)
        if new_val < val * (1 - 1e-15):
            val, center = new_val, new_center  # recentre, same step
        else:
            h *= 0.5
    return val
