"""Discrete curves, fragments, line integrals and curve-family builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.spatial.distance import cdist

from modspace.errors import (
    ConstantCurveError,
    CurveError,
    IsolatedPointError,
    MissingEdgeDensityError,
    NoPathError,
    ZeroLengthError,
)
from modspace.heisenberg import h_dist, sweep_map
from modspace.io import space_hash
from modspace.metric import MetricGraph


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Vertex walk in a graph. Repeated consecutive vertices are pauses."""

    graph: MetricGraph
    vertices: tuple

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if len(verts) < 2:
            raise CurveError("a curve needs at least two vertices")
        steps = []
        for a, b in zip(verts, verts[1:]):
            if a == b:
                steps.append(-1)
                continue
            e = self.graph.edge_between(a, b)
            if e is None:
                raise CurveError(f"vertices {self.graph.ids[a]!r} and {self.graph.ids[b]!r} are not adjacent")
            steps.append(e)
        if all(s < 0 for s in steps):
            raise ConstantCurveError("constant curves are not allowed")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "steps", np.array(steps, dtype=np.int64))

    @classmethod
    def from_ids(cls, g: MetricGraph, ids: Iterable) -> "DiscreteCurve":
        return cls(g, tuple(g.index(v) for v in ids))

    @property
    def ids(self) -> list:
        return [self.graph.ids[v] for v in self.vertices]

    @property
    def edge_sequence(self) -> np.ndarray:
        return self.steps[self.steps >= 0]

    @cached_property
    def length(self) -> float:
        return float(self.graph.lengths[self.edge_sequence].sum())

    def edge_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Traversed edges and their multiplicities."""
        return np.unique(self.edge_sequence, return_counts=True)

    def __len__(self):
        return len(self.vertices)


def curve_length(curve: DiscreteCurve) -> float:
    return curve.length


def _density_array(rho, n_edges: int, needed: np.ndarray) -> np.ndarray:
    if isinstance(rho, dict):
        missing = [int(e) for e in needed if int(e) not in rho]
        if missing:
            raise MissingEdgeDensityError(f"no density on edges {missing[:5]}")
        arr = np.zeros(n_edges)
        for e, val in rho.items():
            arr[e] = val
    else:
        arr = np.asarray(rho, dtype=float)
        if arr.shape != (n_edges,):
            raise MissingEdgeDensityError(f"density has shape {arr.shape}, expected ({n_edges},)")
        if np.any(np.isnan(arr[needed])):
            raise MissingEdgeDensityError("density is NaN on a traversed edge")
    if np.any(arr[needed] < 0):
        raise ValueError("densities must be nonnegative")
    return arr


def line_integral(rho, curve: DiscreteCurve) -> float:
    """sum over traversed edges of rho(e) * len(e), counting repeats."""
    seq = curve.edge_sequence
    arr = _density_array(rho, curve.graph.n_edges, seq)
    return float(np.sum(arr[seq] * curve.graph.lengths[seq]))


@dataclass(frozen=True, eq=False)
class CurveFamily:
    """Finite curve family, or a lazily described family of all
    source-to-sink paths (``lazy=True``, ``curves`` empty)."""

    graph: MetricGraph
    curves: tuple = ()
    tag: dict = field(default_factory=dict)
    source: tuple | None = None
    sink: tuple | None = None
    lazy: bool = False

    def __post_init__(self):
        curves = tuple(self.curves)
        for c in curves:
            if c.graph is not self.graph:
                raise CurveError("all curves must live in the family's graph")
        object.__setattr__(self, "curves", curves)

    def __len__(self):
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, i):
        return self.curves[i]

    def incidence(self) -> csr_matrix:
        """Rows are curves; entry (c, e) = len(e) * multiplicity of e in c."""
        rows, cols, vals = [], [], []
        for c, curve in enumerate(self.curves):
            edges, counts = curve.edge_counts()
            rows.append(np.full(len(edges), c))
            cols.append(edges)
            vals.append(counts * self.graph.lengths[edges])
        if not rows:
            return csr_matrix((0, self.graph.n_edges))
        return csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(self.curves), self.graph.n_edges),
        )

    def subfamily(self, indices: Sequence[int], tag: dict | None = None) -> "CurveFamily":
        return CurveFamily(self.graph, tuple(self.curves[i] for i in indices), tag or dict(self.tag))

    def union(self, other: "CurveFamily") -> "CurveFamily":
        seen = {c.vertices for c in self.curves}
        extra = tuple(c for c in other.curves if c.vertices not in seen)
        return CurveFamily(self.graph, self.curves + extra, {"union": [self.tag, other.tag]})

    def to_json_dict(self) -> dict:
        out = {"space": space_hash(self.graph), "curves": [c.ids for c in self.curves], "tag": self.tag}
        if self.lazy:
            ids = self.graph.ids
            out["lazy"] = {"source": [ids[i] for i in self.source], "sink": [ids[i] for i in self.sink]}
        return out

    @classmethod
    def from_json_dict(cls, obj: dict, g: MetricGraph) -> "CurveFamily":
        if obj.get("space") not in (None, space_hash(g)):
            raise CurveError("family was generated for a different space")
        curves = tuple(DiscreteCurve.from_ids(g, [_hashable(v) for v in ids]) for ids in obj["curves"])
        lazy = obj.get("lazy")
        if lazy:
            src = tuple(g.index(_hashable(v)) for v in lazy["source"])
            snk = tuple(g.index(_hashable(v)) for v in lazy["sink"])
            return cls(g, curves, obj.get("tag", {}), src, snk, True)
        return cls(g, curves, obj.get("tag", {}))


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


# -- fragments ------------------------------------------------------------


def euclidean_pairwise(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return cdist(P, Q)


def heisenberg_pairwise(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return h_dist(P[:, None, :], Q[None, :, :])


@dataclass(frozen=True, eq=False)
class Fragment:
    """Bi-Lipschitz map from a finite increasing domain into a metric space.

    ``points`` are coordinates (used for directional derivatives);
    ``pairwise`` computes the space's distance matrix between point sets.
    Graph fragments also carry their vertex positions.
    """

    domain: np.ndarray
    points: np.ndarray
    pairwise: Callable = euclidean_pairwise
    vertices: tuple | None = None
    graph: MetricGraph | None = None

    def __post_init__(self):
        t = np.asarray(self.domain, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(t) != len(pts):
            raise CurveError("one point per domain value required")
        if len(t) < 1 or np.any(np.diff(t) <= 0):
            raise CurveError("fragment domain must be nonempty and strictly increasing")
        object.__setattr__(self, "domain", t)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.domain)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        if self.graph is not None and self.vertices is not None:
            verts = np.array(self.vertices)
            return self.graph.distances_from(verts)[:, verts]
        return self.pairwise(self.points, self.points)

    @cached_property
    def bi_lipschitz_constant(self) -> float:
        """Smallest L with |dt|/L <= d <= L |dt| over all domain pairs."""
        if len(self) < 2:
            return 1.0
        i, j = np.triu_indices(len(self), k=1)
        dt = self.domain[j] - self.domain[i]
        d = self.distance_matrix[i, j]
        if np.any(d <= 0):
            return float("inf")
        return float(max(1.0, np.max(d / dt), np.max(dt / d)))

    @property
    def length(self) -> float:
        """Arc length: traversed edge lengths for graph fragments, otherwise
        the length of the sampled polygon (consecutive distances)."""
        if self.graph is not None and self.vertices is not None:
            return float(self.graph.lengths[self.image_edges()].sum())
        D = self.distance_matrix
        idx = np.arange(len(self) - 1)
        return float(D[idx, idx + 1].sum())

    def image_edges(self) -> np.ndarray:
        if self.graph is None or self.vertices is None:
            raise CurveError("not a graph fragment")
        return np.array([self.graph.edge_between(a, b) for a, b in zip(self.vertices, self.vertices[1:])])


def metric_derivative(frag: Fragment, i: int) -> float:
    """Average of the one-sided difference quotients at domain index ``i``."""
    n = len(frag)
    if not -n <= i < n:
        raise IndexError(i)
    i %= n
    D = frag.distance_matrix
    t = frag.domain
    quotients = [D[i, j] / abs(t[j] - t[i]) for j in (i - 1, i + 1) if 0 <= j < n]
    if not quotients:
        raise IsolatedPointError("domain point has no neighbours")
    return float(np.mean(quotients))


def graph_fragment(g: MetricGraph, vertices: Sequence[int], domain: Sequence[float]) -> Fragment:
    coords = g.coords[list(vertices)] if g.coords is not None else np.zeros((len(vertices), 1))
    return Fragment(np.asarray(domain, dtype=float), coords, vertices=tuple(vertices), graph=g)


def fragment_from_curve(curve: DiscreteCurve) -> list[Fragment]:
    """Split a walk into injective, positive-speed pieces parametrized by arc length.

    A new piece starts at every pause and whenever the walk would revisit a
    vertex of the current piece (so back-and-forth traversals separate).
    """
    if curve.length <= 0:
        raise ZeroLengthError("curve never moves")
    g = curve.graph
    pieces: list[tuple[list[int], list[float]]] = []
    verts, ts = [curve.vertices[0]], [0.0]
    t = 0.0
    for step, nxt in zip(curve.steps, curve.vertices[1:]):
        if step < 0:
            if len(verts) > 1:
                pieces.append((verts, ts))
            verts, ts = [nxt], [t]
            continue
        t_next = t + g.lengths[step]
        if nxt in verts:
            pieces.append((verts, ts))
            verts, ts = [verts[-1]], [t]
        verts.append(nxt)
        ts.append(t_next)
        t = t_next
    if len(verts) > 1:
        pieces.append((verts, ts))
    return [graph_fragment(g, v, d) for v, d in pieces]


# -- family builders --------------------------------------------------------


def _positions(g: MetricGraph, ids) -> list[int]:
    return [g.index(v) for v in ids]


def _nx_graph(g: MetricGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n_vertices))
    for e, (a, b) in enumerate(g.edges.tolist()):
        G.add_edge(a, b, length=float(g.lengths[e]))
    return G


def _monotone_paths(g: MetricGraph, src: list[int], snk: set, limit: int) -> list[list[int]]:
    if g.coords is None:
        raise CurveError("monotone families need vertex coordinates")
    axis = g.coords[list(snk)].mean(axis=0) - g.coords[src].mean(axis=0)
    if not np.any(axis):
        raise CurveError("source and sink have the same centroid")
    axis = axis / np.linalg.norm(axis)
    forward: dict[int, list[int]] = {}
    for a, b in g.edges.tolist():
        for x, y in ((a, b), (b, a)):
            step = g.coords[y] - g.coords[x]
            along = step @ axis
            if along > 0 and np.linalg.norm(step - along * axis) <= 1e-12 * max(1.0, along):
                forward.setdefault(x, []).append(y)
    for x, nbrs in forward.items():
        # neighbours sharing coordinates (slit copies) trace the same line
        seen_xy, keep = set(), []
        for y in sorted(nbrs):
            key = tuple(np.round(g.coords[y], 12))
            if key not in seen_xy:
                seen_xy.add(key)
                keep.append(y)
        forward[x] = keep
    out: list[list[int]] = []
    traces: set = set()
    for s in sorted(src):
        stack = [[s]]
        while stack and len(out) < limit:
            path = stack.pop()
            if path[-1] in snk and len(path) > 1:
                # duplicated vertices (slit copies) share coordinates; keep
                # one path per geometric trace, the one found first
                trace = g.coords[path].round(12).tobytes()
                if trace not in traces:
                    traces.add(trace)
                    out.append(path)
                continue
            for y in reversed(forward.get(path[-1], [])):
                stack.append(path + [y])
    return out


def crossing_family(
    g: MetricGraph,
    source: Iterable,
    sink: Iterable,
    max_curves: int = 10_000,
    strategy: str = "monotone",
) -> CurveFamily:
    """Source-to-sink curves built by one of three strategies.

    ``all_simple`` enumerates simple paths, ``shortest_k`` takes the
    ``max_curves`` shortest simple paths, and ``monotone`` keeps the straight
    paths that only move along the source-to-sink axis.
    """
    src = _positions(g, source)
    snk = _positions(g, sink)
    if not src or not snk:
        raise CurveError("source and sink must be nonempty")
    if set(src) & set(snk):
        raise CurveError("source and sink must be disjoint")
    tag = {
        "generator": "crossing_family",
        "strategy": strategy,
        "source": [g.ids[i] for i in src],
        "sink": [g.ids[i] for i in snk],
    }
    if strategy == "monotone":
        paths = _monotone_paths(g, src, set(snk), max_curves)
    elif strategy in ("all_simple", "shortest_k"):
        G = _nx_graph(g)
        S, T = "_source", "_sink"
        G.add_edges_from((S, s) for s in src)
        G.add_edges_from((t, T) for t in snk)
        for _, _, data in G.edges(data=True):
            data.setdefault("length", 0.0)
        try:
            if strategy == "all_simple":
                gen = nx.all_simple_paths(G, S, T)
            else:
                gen = nx.shortest_simple_paths(G, S, T, weight="length")
            paths = []
            for p in gen:
                inner = p[1:-1]
                # through another terminal: the shorter sub-path is already listed
                if any(v in snk for v in inner[:-1]) or any(v in src for v in inner[1:]):
                    continue
                paths.append(inner)
                if len(paths) >= max_curves:
                    break
        except nx.NetworkXNoPath:
            paths = []
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    if not paths:
        raise NoPathError("no source-to-sink path found")
    return CurveFamily(g, tuple(DiscreteCurve(g, tuple(p)) for p in paths), tag)


def lazy_crossing_family(g: MetricGraph, source: Iterable, sink: Iterable) -> CurveFamily:
    """All source-to-sink paths, never enumerated; the modulus solver reaches
    them through a shortest-path oracle."""
    src = tuple(_positions(g, source))
    snk = tuple(_positions(g, sink))
    if not src or not snk or set(src) & set(snk):
        raise CurveError("source and sink must be nonempty and disjoint")
    labels = g.component_labels
    if not set(labels[list(src)]) & set(labels[list(snk)]):
        raise NoPathError("source and sink are in different components")
    tag = {"generator": "lazy_crossing_family", "source": [g.ids[i] for i in src], "sink": [g.ids[i] for i in snk]}
    return CurveFamily(g, (), tag, src, snk, True)


def side_vertices(g: MetricGraph, side: str, tol: float = 1e-12) -> list:
    """Ids of vertices on one side of the unit square: left/right/bottom/top."""
    axis, value = {"left": (0, 0.0), "right": (0, 1.0), "bottom": (1, 0.0), "top": (1, 1.0)}[side]
    mask = np.abs(g.coords[:, axis] - value) <= tol
    return [g.ids[i] for i in np.flatnonzero(mask)]


def heisenberg_curve_family(kind: str, parameter_grid, t_grid) -> list[Fragment]:
    """Fragments alpha_p or beta_p sampled on ``t_grid``, one per p = (a, b)."""
    params = np.atleast_2d(np.asarray(parameter_grid, dtype=float))
    t = np.sort(np.asarray(t_grid, dtype=float))
    if params.size == 0 or t.size == 0:
        raise ValueError("grids must be nonempty")
    return [Fragment(t, sweep_map(kind, a, b, t), heisenberg_pairwise) for a, b in params]
