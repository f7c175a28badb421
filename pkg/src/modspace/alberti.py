"""Alberti representations as finite data.

A representation is a probability vector P over fragments together with one
measure nu_frag per fragment, each a constant multiple ("density") of arc
length on the fragment's image. Measures are stored as a sparse matrix
``nu`` whose columns are atoms: graph edges, or cells of a box partition for
sampled curves. A :class:`CellPartition` groups atoms into test cells and
carries the target measure of each cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix, identity

from modspace.curves import DiscreteCurve, Fragment, fragment_from_curve, heisenberg_curve_family
from modspace.errors import DirectionViolationError, TooFewPointsError, WrongGeneratorError
from modspace.metric import MetricGraph

COS30 = math.sqrt(3) / 2


@dataclass(frozen=True, eq=False)
class Cone:
    """Cone(w, t) = {v != 0 : v . w >= t |v|}; w is normalized on construction."""

    w: np.ndarray
    t: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        norm = np.linalg.norm(w)
        if w.ndim != 1 or norm == 0:
            raise ValueError("cone axis must be a nonzero vector")
        object.__setattr__(self, "w", w / norm)

    @property
    def dim(self) -> int:
        return len(self.w)

    def to_json_dict(self) -> dict:
        return {"w": self.w.tolist(), "t": self.t}


def axis_cone(i: int, n: int, t: float = COS30) -> Cone:
    return Cone(np.eye(n)[i], t)


def cone_contains(C: Cone, v) -> bool:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        return False
    if C.t <= -1:
        return True
    # relative slack: boundary vectors must not flip on rounding
    return bool(v @ C.w >= C.t * norm - 1e-12 * norm)


def _in_cone(C: Cone, V: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(V, axis=1)
    if C.t <= -1:
        return norms > 0
    return (norms > 0) & (V @ C.w >= C.t * norms - 1e-12 * norms)


def _sample_in_cone(C: Cone, rng: np.random.Generator, boundary: bool) -> np.ndarray:
    n = C.dim
    if n == 1:
        return C.w * rng.uniform(0.5, 2.0)
    z = rng.standard_normal(n)
    z -= (z @ C.w) * C.w
    z /= np.linalg.norm(z)
    theta_max = math.pi if C.t <= -1 else math.acos(min(1.0, max(-1.0, C.t)))
    theta = theta_max if boundary else rng.uniform(0, theta_max)
    return (math.cos(theta) * C.w + math.sin(theta) * z) * rng.uniform(0.5, 2.0)


def cones_independent(cones: list[Cone], sample_count: int = 10_000, seed: int = 0):
    """Randomized refutation of cone independence.

    Two tests per sample: a random selection (interior and boundary vectors)
    is checked for rank deficiency, and for each cone C_i the subspace W
    spanned by a random selection from the other cones is checked for
    meeting C_i (it does iff |proj_W w_i| >= t_i), which yields an explicit
    dependent selection. Returns (True, None) if nothing was refuted, else
    (False, witness vectors). A pass is a necessary condition only.
    """
    k = len(cones)
    if k == 0:
        return True, None
    n = cones[0].dim
    if any(C.dim != n for C in cones):
        raise ValueError("cones live in different dimensions")
    if k > n:
        raise ValueError("more cones than dimensions")
    if k == 1:
        return True, None
    rng = np.random.default_rng(seed)
    for s in range(sample_count):
        boundary = s % 2 == 1
        V = np.array([_sample_in_cone(C, rng, boundary) for C in cones])
        sv = np.linalg.svd(V, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            return False, [v for v in V]
        i = s % k
        others = np.delete(V, i, axis=0)
        Q, _ = np.linalg.qr(others.T)
        proj = Q @ (Q.T @ cones[i].w)
        pn = np.linalg.norm(proj)
        if cones[i].t <= 0 or pn >= cones[i].t - 1e-12:
            v_i = proj / pn if pn > 0 else Q[:, 0]
            if cone_contains(cones[i], v_i):
                witness = [v for v in V]
                witness[i] = v_i
                return False, witness
    return True, None


# -- directions ----------------------------------------------------------------


def identity_phi(points: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=float)


def xy_phi(points: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=float)[:, :2]


PHIS: dict[str, Callable] = {"identity": identity_phi, "xy": xy_phi}


def _phi_name(phi) -> str:
    for name, fn in PHIS.items():
        if fn is phi:
            return name
    return getattr(phi, "__name__", "custom")


def fragment_direction(frag: Fragment, phi, cone: Cone, threshold: float = 0.0, mode: str = "central"):
    """Share of domain points where (phi o frag)' leaves the cone.

    ``central`` differentiates at interior domain points (symmetric
    quotient); ``segments`` uses the derivative on each sampled segment,
    i.e. almost every parameter of the piecewise-linear interpolant.
    Returns (fraction <= threshold, fraction).
    """
    if len(frag) < 3 and mode == "central":
        raise TooFewPointsError("need at least 3 domain points")
    if len(frag) < 2:
        raise TooFewPointsError("need at least 2 domain points")
    values = phi(frag.points)
    t = frag.domain
    if mode == "central":
        deriv = (values[2:] - values[:-2]) / (t[2:] - t[:-2])[:, None]
    elif mode == "segments":
        deriv = np.diff(values, axis=0) / np.diff(t)[:, None]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    outside = ~_in_cone(cone, deriv)
    fraction = float(outside.mean())
    return fraction <= threshold, fraction


# -- data types ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CellPartition:
    """Rows are cells, columns atoms; W[c, a] is the share of atom a in cell c."""

    W: csr_matrix
    target: np.ndarray | None = None
    labels: tuple = ()

    @property
    def n_cells(self) -> int:
        return self.W.shape[0]

    @classmethod
    def identity(cls, n: int, target=None) -> "CellPartition":
        return cls(identity(n, format="csr"), None if target is None else np.asarray(target, dtype=float))

    def cell_measure(self, atom_measure: np.ndarray) -> np.ndarray:
        return self.W @ np.asarray(atom_measure, dtype=float)


@dataclass(frozen=True, eq=False)
class AlbertiRepresentation:
    fragments: list
    P: np.ndarray
    nu: csr_matrix
    density: np.ndarray
    atoms: str = "edges"
    phi: Callable | None = None
    cone: Cone | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if np.any(P < 0) or not math.isclose(P.sum(), 1.0, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("fragment weights must be a probability vector")
        if self.nu.shape[0] != len(P) or len(self.fragments) != len(P):
            raise ValueError("one weight and one measure per fragment")
        object.__setattr__(self, "P", P)

    def __len__(self):
        return len(self.P)

    def represented_measure(self) -> np.ndarray:
        """sum over fragments of P * nu, as an atom measure."""
        return np.asarray(self.nu.T @ self.P).ravel()

    def to_json_dict(self) -> dict:
        frags = []
        for f, w, dens in zip(self.fragments, self.P, self.density):
            entry = {"domain": f.domain.tolist(), "density": float(dens)}
            if f.graph is not None and f.vertices is not None:
                entry["vertices"] = [f.graph.ids[v] for v in f.vertices]
            else:
                entry["points"] = f.points.tolist()
            frags.append({"fragment": entry, "w": float(w)})
        out = {"P": frags, "nu": "arclength", "atoms": self.atoms, "meta": self.meta}
        if self.cone is not None:
            out["direction"] = {"phi": _phi_name(self.phi), "cone": self.cone.to_json_dict()}
        return out

    @classmethod
    def from_json_dict(cls, obj: dict, g: MetricGraph) -> "AlbertiRepresentation":
        """Rebuild a graph representation (atoms = edges)."""
        if obj.get("atoms", "edges") != "edges":
            raise ValueError("only edge representations can be rebuilt from JSON")
        frags, P, dens = [], [], []
        for item in obj["P"]:
            fr = item["fragment"]
            verts = [g.index(tuple(v) if isinstance(v, list) else v) for v in fr["vertices"]]
            frags.append(Fragment(np.array(fr["domain"]), g.coords[verts], vertices=tuple(verts), graph=g))
            P.append(item["w"])
            dens.append(fr["density"])
        nu = _edge_nu(frags, np.array(dens), g)
        phi = cone = None
        if "direction" in obj:
            phi = PHIS.get(obj["direction"]["phi"])
            c = obj["direction"]["cone"]
            cone = Cone(np.array(c["w"]), c["t"])
        return cls(frags, np.array(P), nu, np.array(dens), "edges", phi, cone, obj.get("meta", {}))


def _edge_nu(frags, density, g: MetricGraph) -> csr_matrix:
    rows, cols, vals = [], [], []
    for r, (f, d) in enumerate(zip(frags, density)):
        edges = f.image_edges()
        rows.append(np.full(len(edges), r))
        cols.append(edges)
        vals.append(d * g.lengths[edges])
    return csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(frags), g.n_edges)
    )


# -- constructions -----------------------------------------------------------------


def fubini_cells(g: MetricGraph) -> CellPartition:
    """Grid squares of grid_square(n); each edge is split evenly among the
    squares it bounds. Target is Lebesgue measure 1/n^2 per square."""
    if g.meta.get("generator") != "grid_square":
        raise WrongGeneratorError("expected a grid_square graph")
    n = int(g.meta["n"])
    mids = (g.coords[g.edges[:, 0]] + g.coords[g.edges[:, 1]]) / 2 * n
    horizontal = np.abs(g.coords[g.edges[:, 0], 1] - g.coords[g.edges[:, 1], 1]) < 1e-12
    rows, cols, vals = [], [], []
    for e, (mx, my) in enumerate(mids):
        if horizontal[e]:
            i, j = int(np.floor(mx)), int(round(my))
            cells = [(i, jj) for jj in (j - 1, j) if 0 <= jj < n]
        else:
            i, j = int(round(mx)), int(np.floor(my))
            cells = [(ii, j) for ii in (i - 1, i) if 0 <= ii < n]
        for ci, cj in cells:
            rows.append(ci + cj * n)
            cols.append(e)
            vals.append(1.0 / len(cells))
    W = csr_matrix((vals, (rows, cols)), shape=(n * n, g.n_edges))
    labels = tuple((i, j) for j in range(n) for i in range(n))
    return CellPartition(W, np.full(n * n, 1.0 / n**2), labels)


def fubini_representation(g: MetricGraph, orientation: str = "rows", t: float = COS30) -> AlbertiRepresentation:
    """Lebesgue measure on [0,1]^2 as an average over the n+1 full grid lines.

    Line j carries P = 1/(n+1) and nu = (n+1) w_j arc length, with trapezoid
    weights w_j (1/n inside, 1/(2n) on the two boundary lines), so the
    identity holds exactly on :func:`fubini_cells`.
    """
    if g.meta.get("generator") != "grid_square":
        raise WrongGeneratorError("expected a grid_square graph")
    if orientation not in ("rows", "cols"):
        raise ValueError("orientation must be rows or cols")
    n = int(g.meta["n"])
    along, across = (0, 1) if orientation == "rows" else (1, 0)
    lookup = {tuple(np.round(xy * n).astype(int)): v for v, xy in enumerate(g.coords)}
    frags, dens = [], []
    for j in range(n + 1):
        verts = []
        for i in range(n + 1):
            key = [0, 0]
            key[along], key[across] = i, j
            verts.append(lookup[tuple(key)])
        frags.append(Fragment(np.arange(n + 1) / n, g.coords[verts], vertices=tuple(verts), graph=g))
        w_j = 1 / (2 * n) if j in (0, n) else 1 / n
        dens.append((n + 1) * w_j)
    P = np.full(n + 1, 1 / (n + 1))
    dens = np.array(dens)
    return AlbertiRepresentation(
        frags,
        P,
        _edge_nu(frags, dens, g),
        dens,
        "edges",
        identity_phi,
        axis_cone(along, 2, t),
        {"construction": "fubini", "orientation": orientation, "n": n},
    )


def box_cells(cells: int = 8, half_width: float = 0.25):
    """Edges of a cells^3 partition of [-h, h]^3 along each axis."""
    return np.linspace(-half_width, half_width, cells + 1)


def _interval_overlap(lo, hi, a, b):
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


def heisenberg_cell_measure(kind: str, params: np.ndarray, t_range, edges: np.ndarray) -> np.ndarray:
    """nu_p(A) = length of {t in t_range : curve_p(t) in A} for every box cell A.

    Along alpha_(a,b): x = t, y = a, z = b - a t / 2 (beta swaps the roles of
    x and y and flips the sign), so membership is an interval in t.
    Returns an array (len(params), cells^3) with cells ordered x fastest.
    """
    a, b = params[:, 0], params[:, 1]
    c = len(edges) - 1
    lo_t, hi_t = t_range
    out = np.zeros((len(params), c, c, c))
    sign = -1.0 if kind == "alpha" else 1.0
    if kind not in ("alpha", "beta"):
        raise ValueError(f"unknown curve kind {kind!r}")
    for ix in range(c):
        for iy in range(c):
            # coordinate fixed by a, and the t-window from the moving coordinate
            fixed_lo, fixed_hi = (edges[iy], edges[iy + 1]) if kind == "alpha" else (edges[ix], edges[ix + 1])
            move_lo, move_hi = (edges[ix], edges[ix + 1]) if kind == "alpha" else (edges[iy], edges[iy + 1])
            inside = (a >= fixed_lo) & (a < fixed_hi)
            t0 = np.maximum(move_lo, lo_t)
            t1 = np.minimum(move_hi, hi_t)
            for iz in range(c):
                z0, z1 = edges[iz], edges[iz + 1]
                # z(t) = b + sign * a t / 2 lies in [z0, z1)
                slope = sign * a / 2
                with np.errstate(divide="ignore", invalid="ignore"):
                    ta = (z0 - b) / slope
                    tb = (z1 - b) / slope
                lo = np.where(slope > 0, ta, np.where(slope < 0, tb, np.where((b >= z0) & (b < z1), -np.inf, np.inf)))
                hi = np.where(slope > 0, tb, np.where(slope < 0, ta, np.where((b >= z0) & (b < z1), np.inf, -np.inf)))
                out[:, ix, iy, iz] = np.where(inside, _interval_overlap(lo, hi, t0, t1), 0.0)
    return out.transpose(0, 3, 2, 1).reshape(len(params), -1)


def heisenberg_representation(
    kind: str,
    n_params: int,
    n_t: int = 9,
    cells: int = 8,
    half_width: float = 0.25,
    t: float = COS30,
) -> tuple[AlbertiRepresentation, CellPartition]:
    """Lebesgue measure on [-h, h]^3 through the alpha (or beta) geodesics.

    P is uniform over the n_params x n_params midpoint grid of [-1/2, 1/2]^2
    and nu_p is arc length (dt) along the curve for t in [-1/2, 1/2], measured
    exactly on each box cell. Since (p, t) -> curve_p(t) preserves volume,
    the residual is the midpoint-rule error in p.
    """
    mids = (np.arange(n_params) + 0.5) / n_params - 0.5
    A, B = np.meshgrid(mids, mids, indexing="ij")
    params = np.stack([A.ravel(), B.ravel()], axis=1)
    edges = box_cells(cells, half_width)
    nu = heisenberg_cell_measure(kind, params, (-0.5, 0.5), edges)
    t_grid = np.linspace(-0.5, 0.5, n_t)
    frags = heisenberg_curve_family(kind, params, t_grid)
    P = np.full(len(params), 1.0 / len(params))
    vol = (edges[1] - edges[0]) ** 3
    partition = CellPartition.identity(cells**3, np.full(cells**3, vol))
    rep = AlbertiRepresentation(
        frags,
        P,
        csr_matrix(nu),
        np.ones(len(params)),
        "cells",
        xy_phi,
        axis_cone(0 if kind == "alpha" else 1, 2, t),
        {"construction": "heisenberg", "kind": kind, "n_params": n_params, "cells": cells, "half_width": half_width},
    )
    return rep, partition


def curves_to_alberti(
    weights,
    curves: list[DiscreteCurve],
    g: MetricGraph,
    phi=identity_phi,
    cone: Cone | None = None,
    threshold: float = 0.0,
) -> AlbertiRepresentation:
    """Push a curve measure P forward to fragments.

    Every curve is cut into injective positive-speed fragments (pauses carry
    no arc length and disappear); a fragment f of curve c gets weight
    P(c) len(f)/len(c) and nu_f = (len(c)/len(f)) arc length, so the fragments
    of c together carry exactly P(c) times the arc length of c, i.e. eta_P.
    """
    if cone is None:
        cone = Cone(np.eye(g.coords.shape[1])[0], -1.0)
    frags, P, dens = [], [], []
    worst = 0.0
    for w, c in zip(weights, curves):
        if w <= 0:
            continue
        for f in fragment_from_curve(c):
            _, frac = fragment_direction(f, phi, cone, mode="segments")
            worst = max(worst, frac)
            frags.append(f)
            P.append(w * f.length / c.length)
            dens.append(c.length / f.length)
    if worst > threshold:
        raise DirectionViolationError(f"{worst:.3f} of some fragment's segments leave the cone")
    P = np.array(P)
    P = P / P.sum()
    dens = np.array(dens)
    total = float(np.sum(np.asarray(weights, dtype=float)[np.asarray(weights) > 0]))
    return AlbertiRepresentation(
        frags,
        P,
        _edge_nu(frags, dens * total, g),
        dens * total,
        "edges",
        phi,
        cone,
        {"construction": "curve_measure", "curves": int(np.sum(np.asarray(weights) > 0))},
    )


# -- validation -----------------------------------------------------------------


@dataclass
class RepresentationReport:
    residuals: np.ndarray
    max_abs: float
    max_rel: float
    tol: float
    direction_fraction: float | None
    mass_ok: bool
    warnings: list

    @property
    def passed(self) -> bool:
        direction_ok = self.direction_fraction is None or self.direction_fraction == 0.0
        return self.max_rel <= self.tol and direction_ok and self.mass_ok

    def to_json_dict(self) -> dict:
        return {
            "cells": int(len(self.residuals)),
            "maxAbsResidual": self.max_abs,
            "maxRelResidual": self.max_rel,
            "tol": self.tol,
            "directionViolation": self.direction_fraction,
            "massOk": self.mass_ok,
            "warnings": self.warnings,
            "passed": self.passed,
        }


def validate_representation(
    rep: AlbertiRepresentation,
    mu=None,
    partition: CellPartition | None = None,
    tol: float = 1e-12,
    check_direction: bool = True,
) -> RepresentationReport:
    """Compare mu(A) with sum_frag P nu_frag(A) on every cell A.

    ``mu`` is an atom measure; if omitted the partition's target cell measure
    is used. Residuals are relative to mu(A) (cells with mu(A) = 0 use the
    absolute residual).
    """
    warnings = []
    n_atoms = rep.nu.shape[1]
    if partition is None:
        partition = CellPartition.identity(n_atoms)
    if partition.n_cells == 0:
        warnings.append("empty partition: identity holds vacuously")
        return RepresentationReport(np.zeros(0), 0.0, 0.0, tol, None, True, warnings)
    if mu is not None:
        target = partition.cell_measure(mu)
    elif partition.target is not None:
        target = partition.target
    else:
        raise ValueError("no measure to compare with")
    got = partition.cell_measure(rep.represented_measure())
    residuals = np.abs(target - got)
    rel = np.where(target > 0, residuals / np.where(target > 0, target, 1.0), residuals)
    covered = np.asarray(partition.W.sum(axis=0)).ravel()
    if np.any((covered == 0) & (rep.represented_measure() > 0)):
        warnings.append("partition misses atoms charged by the representation")
    # nu_f(image) = density * length, and never more
    lengths = np.array([f.length for f in rep.fragments]) if rep.atoms == "edges" else None
    mass = np.asarray(rep.nu.sum(axis=1)).ravel()
    if lengths is not None:
        mass_ok = bool(np.all(mass <= (1 + tol) * rep.density * lengths + 1e-300))
    else:
        domain = np.array([f.domain[-1] - f.domain[0] for f in rep.fragments])
        mass_ok = bool(np.all(mass <= (1 + tol) * rep.density * domain + 1e-12))
    direction = None
    if check_direction and rep.cone is not None:
        fracs = []
        for f in rep.fragments:
            if len(f) >= 2:
                fracs.append(fragment_direction(f, rep.phi, rep.cone, mode="segments")[1])
        direction = max(fracs) if fracs else 0.0
    return RepresentationReport(
        residuals, float(residuals.max()), float(rel.max()), tol, direction, mass_ok, warnings
    )
