"""Generators for the planar example spaces: unit-square grids, Sierpinski
carpet prefractals and slit-carpet prefractals.

All three are built on the same square-cell complex at mesh ``h``; each
surviving cell hands ``h**2 / 4`` of its area to each of its four sides
(``grid_square`` keeps its uniform ``1 / (2 n**2)`` edge weight instead).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from modspace.errors import MeshTooCoarseError
from modspace.metric import MetricGraph, PointCloud


@dataclass(frozen=True)
class Slit:
    x: Fraction
    y_lo: Fraction
    y_hi: Fraction
    generation: int


@dataclass(frozen=True)
class SlitSpec:
    level: int
    slits: tuple[Slit, ...]

    def to_json(self) -> list:
        return [[float(s.x), float(s.y_lo), float(s.y_hi)] for s in self.slits]


def _cell_complex(alive: np.ndarray):
    """Edges of the union of alive cells on an N x N grid.

    Returns (u, v, share) where u, v are flat vertex indices i + j*(N+1) and
    share counts the alive cells adjacent to each edge (1 or 2).
    """
    N = alive.shape[0]
    pad = np.zeros((N + 2, N + 2), dtype=np.int64)
    pad[1:-1, 1:-1] = alive
    # horizontal edge (i,j)-(i+1,j) borders cells (i,j) and (i,j-1)
    i, j = np.meshgrid(np.arange(N), np.arange(N + 1), indexing="ij")
    h_share = pad[i + 1, j + 1] + pad[i + 1, j]
    # vertical edge (i,j)-(i,j+1) borders cells (i,j) and (i-1,j)
    vi, vj = np.meshgrid(np.arange(N + 1), np.arange(N), indexing="ij")
    v_share = pad[vi + 1, vj + 1] + pad[vi, vj + 1]
    flat = lambda a, b: a + b * (N + 1)
    u = np.concatenate([flat(i, j).ravel(), flat(vi, vj).ravel()])
    v = np.concatenate([flat(i + 1, j).ravel(), flat(vi, vj + 1).ravel()])
    share = np.concatenate([h_share.ravel(), v_share.ravel()])
    keep = share > 0
    return u[keep], v[keep], share[keep]


def _assemble(N: int, u, v, lengths, mu, meta, extra_coords=None) -> MetricGraph:
    used = np.unique(np.concatenate([u, v]))
    grid_used = used[used < (N + 1) ** 2]
    coords = np.stack([grid_used % (N + 1), grid_used // (N + 1)], axis=1) / N
    ids = [int(k) for k in grid_used]
    if extra_coords:
        extra_ids = sorted(k for k in extra_coords if k in set(used.tolist()))
        ids += extra_ids
        coords = np.vstack([coords, np.array([extra_coords[k] for k in extra_ids]).reshape(-1, 2)])
    pos = {vid: n for n, vid in enumerate(ids)}
    edges = np.array([[pos[a], pos[b]] for a, b in zip(u.tolist(), v.tolist())], dtype=np.int64)
    return MetricGraph(tuple(ids), coords, edges.reshape(-1, 2), lengths, mu, meta)


def grid_square(n: int) -> MetricGraph:
    """Axis grid on [0,1]^2 with (n+1)^2 vertices, edge length 1/n and
    uniform edge measure 1/(2 n^2)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    u, v, _ = _cell_complex(np.ones((n, n), dtype=bool))
    lengths = np.full(len(u), 1.0 / n)
    mu = np.full(len(u), 1.0 / (2 * n * n))
    return _assemble(n, u, v, lengths, mu, {"generator": "grid_square", "n": n})


def carpet_cells(p: int, k: int) -> np.ndarray:
    """Boolean p^k x p^k mask of cells surviving k removal rounds."""
    N = p**k
    alive = np.ones((N, N), dtype=bool)
    idx = np.arange(N)
    mid = (p - 1) // 2
    for level in range(k):
        digit = (idx // p**level) % p
        alive &= ~np.logical_and.outer(digit == mid, digit == mid)
    return alive


def sierpinski_carpet(p: int, k: int) -> MetricGraph:
    """Grid graph at mesh p^-k on the cells of the level-k carpet prefractal.

    Edge measure is the surviving-cell area share, normalized to total 1.
    """
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be an odd integer >= 3")
    if k < 0:
        raise ValueError("k must be nonnegative")
    alive = carpet_cells(p, k)
    N = p**k
    u, v, share = _cell_complex(alive)
    lengths = np.full(len(u), 1.0 / N)
    mu = share / share.sum()
    meta = {"generator": "sierpinski_carpet", "p": p, "k": k, "cells": int(alive.sum())}
    return _assemble(N, u, v, lengths, mu, meta)


def slit_list(k: int) -> list[Slit]:
    """Central vertical slits of every dyadic square of side 2^-j, j <= k."""
    out = []
    for j in range(k + 1):
        side = Fraction(1, 2**j)
        for a in range(2**j):
            for b in range(2**j):
                x = (2 * a + 1) * side / 2
                out.append(Slit(x, (4 * b + 1) * side / 4, (4 * b + 3) * side / 4, j))
    return out


def slit_carpet_level(k: int, m: float = 1) -> tuple[MetricGraph, SlitSpec]:
    """Cut grid on [0,1]^2 at mesh 2^(-k-2)/m along all slits of generation <= k.

    Vertices strictly inside a slit are split into a left copy (keeping the
    grid id) and a right copy; the two sides meet only at the slit tips.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    N_frac = Fraction(2 ** (k + 2)) * Fraction(m).limit_denominator(10**6)
    slits = slit_list(k)
    if N_frac.denominator != 1 or N_frac < 1:
        raise MeshTooCoarseError(f"mesh refinement m={m} does not give an integer grid")
    N = int(N_frac)
    grid_slits = []
    for s in slits:
        X, lo, hi = s.x * N, s.y_lo * N, s.y_hi * N
        if any(c.denominator != 1 for c in (X, lo, hi)):
            raise MeshTooCoarseError(f"slit {s} endpoints are not grid points at N={N}")
        grid_slits.append((int(X), int(lo), int(hi)))

    h = 1.0 / N
    u, v, share = _cell_complex(np.ones((N, N), dtype=bool))
    u, v, share = list(u.tolist()), list(v.tolist()), list(share.tolist())
    flat = lambda i, j: i + j * (N + 1)
    where = {(a, b): e for e, (a, b) in enumerate(zip(u, v))}
    next_id = (N + 1) ** 2
    extra = {}
    for X, lo, hi in grid_slits:
        right = {}
        for y in range(lo + 1, hi):
            right[y] = next_id
            extra[next_id] = (X * h, y * h)
            next_id += 1
            e = where[(flat(X, y), flat(X + 1, y))]
            u[e] = right[y]
        for y in range(lo, hi):
            e = where[(flat(X, y), flat(X, y + 1))]
            share[e] = 1  # left side keeps the left cell's share
            a = right.get(y, flat(X, y))
            b = right.get(y + 1, flat(X, y + 1))
            u.append(a)
            v.append(b)
            share.append(1)
    u, v, share = np.array(u), np.array(v), np.array(share, dtype=float)
    lengths = np.full(len(u), h)
    mu = share * h * h / 4
    meta = {
        "generator": "slit_carpet",
        "k": k,
        "m": float(m),
        "mesh": h,
        "slits": SlitSpec(k, tuple(slits)).to_json(),
    }
    g = _assemble(N, u, v, lengths, mu, meta, extra_coords=extra)
    return g, SlitSpec(k, tuple(slits))


def vertex_cloud(g: MetricGraph, basepoint=None) -> PointCloud:
    return PointCloud(np.asarray(g.coords), basepoint)
