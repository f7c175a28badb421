"""Finite metric measure spaces as weighted graphs, plus the ambient point
cloud distances (windowed Hausdorff distance and the set/function distance D)."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from modspace.errors import (
    DimensionMismatchError,
    DisconnectedError,
    EmptyBallError,
    GraphError,
)


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Weighted graph (X, d, mu) with the measure carried by edges.

    Vertices are addressed by arbitrary hashable ids; internally everything
    is indexed by position. Edge ``e`` joins ``edges[e, 0]`` and
    ``edges[e, 1]`` with length ``lengths[e]`` and measure ``mu[e]``.
    """

    ids: tuple
    coords: np.ndarray | None
    edges: np.ndarray
    lengths: np.ndarray
    mu: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        lengths = np.asarray(self.lengths, dtype=float).reshape(-1)
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        nv = len(self.ids)
        if len(set(self.ids)) != nv:
            raise GraphError("duplicate vertex ids")
        if not (len(edges) == len(lengths) == len(mu)):
            raise GraphError("edges, lengths and mu must have equal length")
        if len(edges) and (edges.min() < 0 or edges.max() >= nv):
            raise GraphError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise GraphError("self-loops are not allowed")
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            raise GraphError("edge lengths must be positive and finite")
        if not np.all(np.isfinite(mu)) or np.any(mu < 0):
            raise GraphError("edge measure must be nonnegative and finite")
        if mu.sum() <= 0:
            raise GraphError("total measure must be positive")
        pairs = np.sort(edges, axis=1)
        if len(np.unique(pairs, axis=0)) != len(pairs):
            raise GraphError("parallel edges are not allowed")
        coords = self.coords
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            if len(coords) != nv:
                raise GraphError("one coordinate row per vertex required")
            coords.setflags(write=False)
        for arr in (edges, lengths, mu):
            arr.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "_lock", threading.Lock())

    @classmethod
    def from_edge_list(
        cls,
        edge_list: Iterable[tuple],
        coords: dict | None = None,
        meta: dict | None = None,
    ) -> "MetricGraph":
        """Build from ``(u, v, length, mu)`` tuples keyed by vertex id."""
        edge_list = list(edge_list)
        ids: list = list(coords) if coords is not None else []
        seen = {vid: i for i, vid in enumerate(ids)}
        for u, v, *_ in edge_list:
            for vid in (u, v):
                if vid not in seen:
                    seen[vid] = len(ids)
                    ids.append(vid)
        edges = [(seen[u], seen[v]) for u, v, *_ in edge_list]
        lengths = [row[2] for row in edge_list]
        mu = [row[3] if len(row) > 3 else 0.0 for row in edge_list]
        xy = None
        if coords is not None:
            xy = np.array([coords[vid] for vid in ids], dtype=float)
        return cls(tuple(ids), xy, np.array(edges).reshape(-1, 2), lengths, mu, dict(meta or {}))

    @property
    def n_vertices(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_measure(self) -> float:
        return float(self.mu.sum())

    @cached_property
    def _index(self) -> dict:
        return {vid: i for i, vid in enumerate(self.ids)}

    def index(self, vid: Hashable) -> int:
        try:
            return self._index[vid]
        except KeyError:
            raise GraphError(f"unknown vertex id {vid!r}") from None

    @cached_property
    def _edge_lookup(self) -> dict:
        return {(min(a, b), max(a, b)): e for e, (a, b) in enumerate(self.edges.tolist())}

    def edge_between(self, i: int, j: int) -> int | None:
        """Edge index joining vertex positions ``i`` and ``j``, or None."""
        return self._edge_lookup.get((min(i, j), max(i, j)))

    @cached_property
    def adjacency(self) -> csr_matrix:
        n = self.n_vertices
        a, b = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([a, b])
        cols = np.concatenate([b, a])
        vals = np.concatenate([self.lengths, self.lengths])
        return csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def component_labels(self) -> np.ndarray:
        _, labels = connected_components(self.adjacency, directed=False)
        return labels

    def distances_from(self, sources, limit: float = np.inf) -> np.ndarray:
        """Shortest-path distances from vertex positions ``sources``."""
        return dijkstra(self.adjacency, directed=False, indices=sources, limit=limit)

    def all_pairs(self) -> np.ndarray:
        """All-pairs distance matrix, computed once and cached."""
        cached = self.__dict__.get("_all_pairs")
        if cached is not None:
            return cached
        with self._lock:
            cached = self.__dict__.get("_all_pairs")
            if cached is None:
                cached = dijkstra(self.adjacency, directed=False)
                cached.setflags(write=False)
                self.__dict__["_all_pairs"] = cached
        return cached

    def diameter(self, chunk: int = 512) -> float:
        """Largest finite shortest-path distance (max over components)."""
        best = 0.0
        for start in range(0, self.n_vertices, chunk):
            d = self.distances_from(np.arange(start, min(start + chunk, self.n_vertices)))
            finite = d[np.isfinite(d)]
            if finite.size:
                best = max(best, float(finite.max()))
        return best

    def measure_of(self, vertex_mask: np.ndarray) -> float:
        """mu of a vertex set: edges with both endpoints inside."""
        inside = vertex_mask[self.edges[:, 0]] & vertex_mask[self.edges[:, 1]]
        return float(self.mu[inside].sum())

    def with_measure(self, mu) -> "MetricGraph":
        return MetricGraph(self.ids, self.coords, self.edges, self.lengths, mu, dict(self.meta))

    def with_lengths(self, lengths) -> "MetricGraph":
        return MetricGraph(self.ids, self.coords, self.edges, lengths, self.mu, dict(self.meta))

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        vertices = []
        for i, vid in enumerate(self.ids):
            row = {"id": vid}
            if self.coords is not None:
                row["xy"] = [float(c) for c in self.coords[i]]
            vertices.append(row)
        edges = [
            {"u": self.ids[a], "v": self.ids[b], "len": float(l), "mu": float(m)}
            for (a, b), l, m in zip(self.edges.tolist(), self.lengths, self.mu)
        ]
        out = {"vertices": vertices, "edges": edges}
        if self.meta:
            out["metadata"] = self.meta
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MetricGraph":
        verts = obj["vertices"]
        ids = [_hashable(v["id"]) for v in verts]
        coords = None
        if verts and all("xy" in v for v in verts):
            coords = np.array([v["xy"] for v in verts], dtype=float)
        index = {vid: i for i, vid in enumerate(ids)}
        try:
            edges = [(index[_hashable(e["u"])], index[_hashable(e["v"])]) for e in obj["edges"]]
        except KeyError as exc:
            raise GraphError(f"edge refers to unknown vertex {exc.args[0]!r}") from None
        lengths = [e["len"] for e in obj["edges"]]
        mu = [e.get("mu", 0.0) for e in obj["edges"]]
        return cls(tuple(ids), coords, np.array(edges).reshape(-1, 2), lengths, mu, obj.get("metadata", {}))


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


def shortest_path(g: MetricGraph, u, v) -> tuple[float, list]:
    """Distance between vertex ids ``u`` and ``v`` and one geodesic path."""
    i, j = g.index(u), g.index(v)
    if i == j:
        return 0.0, [u]
    dist, pred = dijkstra(g.adjacency, directed=False, indices=i, return_predecessors=True)
    if not np.isfinite(dist[j]):
        raise DisconnectedError(f"no path between {u!r} and {v!r}")
    path = [j]
    while path[-1] != i:
        path.append(pred[path[-1]])
    return float(dist[j]), [g.ids[k] for k in reversed(path)]


def ball(g: MetricGraph, center, r: float) -> set:
    """Open ball {v : d(center, v) < r}."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    d = g.distances_from(g.index(center), limit=r)
    return {g.ids[k] for k in np.flatnonzero(d < r)}


def doubling_constant(g: MetricGraph, radii: Sequence[float], centers: Iterable) -> float:
    """max over sampled (x, r) of mu(B(x, 2r)) / mu(B(x, r)); empty balls skipped."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    best = None
    rmax = 2 * radii.max()
    for c in centers:
        d = g.distances_from(g.index(c), limit=rmax)
        for r in radii:
            small = g.measure_of(d < r)
            if small <= 0:
                continue
            ratio = g.measure_of(d < 2 * r) / small
            best = ratio if best is None else max(best, ratio)
    if best is None:
        raise EmptyBallError("every sampled ball has zero measure")
    return float(best)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    basepoint: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if pts.size else pts.reshape(0, 1)
        base = np.zeros(pts.shape[1]) if self.basepoint is None else np.asarray(self.basepoint, dtype=float)
        if base.shape != (pts.shape[1],):
            raise DimensionMismatchError("basepoint dimension differs from the cloud's")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "basepoint", base)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    def centered(self) -> "PointCloud":
        """Translate so the basepoint sits at the origin."""
        return PointCloud(self.points - self.basepoint, np.zeros(self.ambient_dim))

    def window(self, R: float) -> "PointCloud":
        """Points strictly inside B(0, R)."""
        keep = np.linalg.norm(self.points, axis=1) < R
        return PointCloud(self.points[keep], self.basepoint)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def dist_to(self, x: np.ndarray) -> np.ndarray:
        """Distance from each row of ``x`` to the cloud (inf if the cloud is empty)."""
        x = np.atleast_2d(x)
        if len(self.points) == 0:
            return np.full(len(x), np.inf)
        d, _ = self.tree.query(x)
        return d


def _check_dims(A: PointCloud, B: PointCloud):
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatchError(f"ambient dimensions {A.ambient_dim} and {B.ambient_dim} differ")


def pointed_hausdorff_distance(A: PointCloud, B: PointCloud, R: float) -> float:
    """d_R(A, B): max of the two one-sided sups over the open window B(0, R)."""
    if R <= 0:
        raise ValueError("R must be positive")
    _check_dims(A, B)
    a = A.window(R).points
    b = B.window(R).points
    out = 0.0
    if len(a):
        out = max(out, float(B.dist_to(a).max()))
    if len(b):
        out = max(out, float(A.dist_to(b).max()))
    return out


SampledMap = Callable[[np.ndarray], np.ndarray] | np.ndarray


def _evaluate(f: SampledMap, own: PointCloud, x: np.ndarray) -> np.ndarray:
    # Arrays hold values at the cloud's own points; elsewhere use the nearest point.
    if callable(f):
        vals = np.asarray(f(x), dtype=float)
    else:
        f = np.asarray(f, dtype=float)
        if len(f) != len(own):
            raise DimensionMismatchError("sampled map needs one value per cloud point")
        _, idx = own.tree.query(x)
        vals = f[idx]
    return vals.reshape(len(x), -1)


def dee_distance(
    A: PointCloud,
    f: SampledMap,
    B: PointCloud,
    g: SampledMap,
    eps_min: float = 1e-12,
    accuracy: float = 1e-9,
) -> float:
    """D = min(D~, 1/2) between (A, f) and (B, g).

    D~ is the infimum of eps with d_{1/eps}(A, B) < eps and |f - g| < eps on
    (A u B) n B(0, 1/eps). The condition is monotone in eps, so bisection
    finds D to within ``accuracy``; the returned value always satisfies it.
    """
    _check_dims(A, B)
    if len(A) == 0 and len(B) == 0:
        return eps_min
    pts = np.vstack([A.points, B.points])
    norms = np.linalg.norm(pts, axis=1)
    gap = np.concatenate([B.dist_to(A.points), A.dist_to(B.points)])
    fdiff = np.linalg.norm(_evaluate(f, A, pts) - _evaluate(g, B, pts), axis=1)
    order = np.argsort(norms)
    norms, gap, fdiff = norms[order], gap[order], fdiff[order]
    worst = np.maximum.accumulate(np.maximum(gap, fdiff))

    def holds(eps: float) -> bool:
        k = np.searchsorted(norms, 1.0 / eps, side="left")
        return k == 0 or worst[k - 1] < eps

    if holds(eps_min):
        return eps_min
    if not holds(0.5):
        return 0.5
    lo, hi = eps_min, 0.5
    while hi - lo > accuracy:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def metric_axiom_violations(D: np.ndarray, triples: np.ndarray, atol: float = 1e-12) -> int:
    """Count triangle/symmetry violations of a distance matrix on index triples."""
    i, j, k = triples.T
    bad = D[i, k] > D[i, j] + D[j, k] + atol
    bad |= np.abs(D[i, j] - D[j, i]) > atol
    return int(bad.sum())

