"""Acceptance scenarios and report scenarios.

Each acceptance criterion has a JSON config next to this module holding
every numeric parameter; ``run_criterion`` executes it and returns a
:class:`CriterionResult`. The CLI ``report`` command and the acceptance
tests both go through here.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from modspace.alberti import (
    cones_independent,
    fubini_cells,
    fubini_representation,
    heisenberg_representation,
    validate_representation,
)
from modspace.curves import CurveFamily, crossing_family, lazy_crossing_family, side_vertices
from modspace.heisenberg import alpha_curve, beta_curve, h_dilate, h_dist, h_inv, h_mul, sweep_jacobian
from modspace.metric import MetricGraph, PointCloud, dee_distance, pointed_hausdorff_distance
from modspace.modulus import solve_modulus, verify_duality
from modspace.oracle import brute_force_modulus
from modspace.spaces import grid_square, slit_carpet_level, vertex_cloud
from modspace.splitting import cantor_line_cloud, cantor_points, circle_cloud, factor_product


@dataclass
class CriterionResult:
    number: int | None
    name: str
    passed: bool
    elapsed: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = f"criterion {self.number:2d}" if self.number is not None else "scenario"
        return f"{tag} {self.name:<20s} {'PASS' if self.passed else 'FAIL'} ({self.elapsed:.1f}s)"

    def to_json_dict(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "elapsed": self.elapsed,
            "details": self.details,
        }


def list_configs() -> list[str]:
    root = resources.files("modspace.scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(name: str) -> dict:
    path = resources.files("modspace.scenarios") / f"{name}.json"
    if not path.is_file():
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(list_configs())}")
    return json.loads(path.read_text())


def criterion_names() -> dict[int, str]:
    out = {}
    for name in list_configs():
        cfg = load_config(name)
        if cfg.get("criterion") is not None:
            out[int(cfg["criterion"])] = name
    return dict(sorted(out.items()))


# -- shared builders ---------------------------------------------------------------


def grid_family(g: MetricGraph, orientation: str) -> CurveFamily:
    """Monotone left-right (horizontal) or bottom-top (vertical) lines."""
    src, snk = {"horizontal": ("left", "right"), "vertical": ("bottom", "top")}[orientation]
    return crossing_family(g, side_vertices(g, src), side_vertices(g, snk), strategy="monotone")


@lru_cache(maxsize=None)
def _grid_case(n: int, p: float, orientation: str, tol: float):
    g = grid_square(n)
    t0 = time.perf_counter()
    cert = solve_modulus(g, grid_family(g, orientation), p, tol=tol)
    return cert, time.perf_counter() - t0


def _duality_matrix(cfg: dict):
    rows = []
    total = 0.0
    for n, p, orient in itertools.product(cfg["grid_n"], cfg["p"], cfg["families"]):
        cert, dt = _grid_case(int(n), float(p), orient, float(cfg["solver_tol"]))
        t0 = time.perf_counter()
        rep = verify_duality(cert, tol=cfg["tol"], weight_threshold=cfg.get("weight_threshold"))
        total += dt + time.perf_counter() - t0
        rows.append((n, p, orient, cert, rep))
    return rows, total


def random_small_graph(rng: np.random.Generator, max_edges: int = 6, zero_measure_prob: float = 0.15):
    """Connected random graph with at most ``max_edges`` measured edges and
    its source-to-sink simple path family (vertex 0 to the last vertex)."""
    while True:
        nv = int(rng.integers(3, 6))
        pairs = [(i, j) for i in range(nv) for j in range(i + 1, nv)]
        m = int(rng.integers(nv - 1, min(len(pairs), max_edges + 2) + 1))
        chosen = [pairs[i] for i in rng.choice(len(pairs), m, replace=False)]
        lengths = rng.uniform(0.2, 1.5, m)
        mu = rng.uniform(0.1, 2.0, m)
        mu[rng.random(m) < zero_measure_prob] = 0.0
        if np.count_nonzero(mu) > max_edges or np.count_nonzero(mu) == 0:
            continue
        coords = rng.uniform(0, 1, (nv, 2))
        g = MetricGraph(tuple(range(nv)), coords, np.array(chosen), lengths, mu, {"generator": "random"})
        try:
            fam = crossing_family(g, [0], [nv - 1], strategy="all_simple")
        except Exception:
            continue
        return g, fam


# -- criteria ----------------------------------------------------------------------


def _c_duality(cfg):
    rows, total = _duality_matrix(cfg)
    worst = max(r.norm_residual for *_, r in rows)
    cases = [{"n": n, "p": p, "family": o, "mod": c.value, "normResidual": r.norm_residual} for n, p, o, c, r in rows]
    ok = worst <= cfg["tol"] and total <= cfg["time_limit"]
    return ok, {"worstNormResidual": worst, "seconds": total, "cases": cases}


def _c_beurling(cfg):
    rows, _ = _duality_matrix(cfg)
    worst = max(r.beurling_residual for *_, r in rows)
    return worst <= cfg["tol"], {"worstBeurlingResidual": worst, "cases": len(rows)}


def _c_pointwise(cfg):
    rows, _ = _duality_matrix(cfg)
    worst = max(r.pointwise_residual for *_, r in rows)
    edges = sum(r.checked_edges for *_, r in rows)
    return worst <= cfg["tol"], {"worstPointwiseResidual": worst, "checkedEdges": edges}


def _c_oracle(cfg):
    rng = np.random.default_rng(cfg["seed"])
    t0 = time.perf_counter()
    worst, cases = 0.0, []
    for _ in range(cfg["graphs"]):
        g, fam = random_small_graph(rng, cfg["max_edges"])
        for p in cfg["p"]:
            a = solve_modulus(g, fam, p, tol=cfg["solver_tol"]).value
            b = brute_force_modulus(g, fam, p, grid_resolution=cfg["grid_resolution"], max_edges=cfg["max_edges"])
            rel = abs(a - b) / max(abs(b), 1e-12) if b > 0 else abs(a - b)
            worst = max(worst, rel)
            cases.append({"p": p, "solver": a, "oracle": b, "relDiff": rel})
    elapsed = time.perf_counter() - t0
    ok = worst <= cfg["rel_tol"] and elapsed <= cfg["time_limit"]
    return ok, {"graphs": cfg["graphs"], "worstRelDiff": worst, "seconds": elapsed, "cases": cases}


def _c_facts(cfg):
    rng = np.random.default_rng(cfg["seed"])
    base_g = grid_square(cfg["grid_n"])
    base = crossing_family(base_g, side_vertices(base_g, "left"), side_vertices(base_g, "right"), strategy="all_simple")
    worst_mono, worst_sub = -np.inf, -np.inf
    for _ in range(cfg["trials"]):
        g = base_g.with_measure(base_g.mu * rng.uniform(0.5, 2.0, base_g.n_edges))
        fam = CurveFamily(g, tuple(type(c)(g, c.vertices) for c in base.curves), base.tag)
        p = float(rng.choice(cfg["p"]))
        m = len(fam)
        big = rng.choice(m, int(rng.integers(2, m + 1)), replace=False)
        small = rng.choice(big, int(rng.integers(1, len(big) + 1)), replace=False)
        other = rng.choice(m, int(rng.integers(1, m + 1)), replace=False)
        G, Gs, Go = fam.subfamily(sorted(big)), fam.subfamily(sorted(small)), fam.subfamily(sorted(other))
        mod = lambda F: solve_modulus(g, F, p, tol=cfg["solver_tol"]).value
        mG, mGs, mGo, mU = mod(G), mod(Gs), mod(Go), mod(G.union(Go))
        worst_mono = max(worst_mono, mGs - mG)
        worst_sub = max(worst_sub, mU - mG - mGo)
    ok = worst_mono <= cfg["tol"] and worst_sub <= cfg["tol"]
    return ok, {"trials": cfg["trials"], "worstMonotonicityExcess": worst_mono, "worstSubadditivityExcess": worst_sub}


def _c_fubini(cfg):
    worst, dirs, cases = 0.0, 0.0, []
    for n in cfg["grid_n"]:
        g = grid_square(n)
        part = fubini_cells(g)
        for orient in ("rows", "cols"):
            rep = fubini_representation(g, orient, cfg["cone_t"])
            r = validate_representation(rep, partition=part, tol=cfg["tol"])
            worst = max(worst, r.max_rel)
            dirs = max(dirs, r.direction_fraction or 0.0)
            cases.append({"n": n, "orientation": orient, "maxRelResidual": r.max_rel, "direction": r.direction_fraction})
    g = grid_square(cfg["grid_n"][0])
    cones = [fubini_representation(g, o, cfg["cone_t"]).cone for o in ("rows", "cols")]
    indep, witness = cones_independent(cones, sample_count=cfg["sample_count"], seed=cfg["seed"])
    ok = worst <= cfg["tol"] and dirs == 0.0 and indep
    return ok, {"worstResidual": worst, "directionViolation": dirs, "conesIndependent": indep, "cases": cases}


def _c_heisenberg(cfg):
    rng = np.random.default_rng(cfg["seed"])
    n, tol = cfg["tuples"], cfg["group_tol"]
    P, Q, R = (rng.uniform(-1, 1, (n, 3)) for _ in range(3))
    ts = rng.uniform(cfg["dilation_range"][0], cfg["dilation_range"][1], n)[:, None]
    err = {}
    err["associativity"] = np.abs(h_mul(h_mul(P, Q), R) - h_mul(P, h_mul(Q, R))).max()
    err["inverse"] = max(np.abs(h_mul(P, h_inv(P))).max(), np.abs(h_mul(h_inv(P), P)).max())
    err["identity"] = np.abs(h_mul(P, np.zeros(3)) - P).max()
    d = h_dist(P, Q)
    err["leftInvariance"] = np.abs(h_dist(h_mul(R, P), h_mul(R, Q)) - d).max()
    dil = lambda X: np.stack([h_dilate(float(t), x) for t, x in zip(ts[:, 0], X)])
    err["dilationHomomorphism"] = (np.abs(dil(h_mul(P, Q)) - h_mul(dil(P), dil(Q))) / np.maximum(ts**2, 1)).max()
    err["dilationHomogeneity"] = (np.abs(h_dist(dil(P), dil(Q)) - ts[:, 0] * d) / np.maximum(ts[:, 0] * d, 1)).max()
    algebra_ok = all(v <= tol for v in err.values())

    geo = 0.0
    for curve in (alpha_curve, beta_curve):
        ab = rng.uniform(-0.5, 0.5, (cfg["geodesic_samples"], 2))
        st = rng.uniform(-0.5, 0.5, (cfg["geodesic_samples"], 2))
        for (a, b), (s, t) in zip(ab, st):
            pts = curve(a, b, np.array([s, t]))
            geo = max(geo, abs(float(h_dist(pts[0], pts[1])) - abs(s - t)))
    jac = 0.0
    for kind in ("alpha", "beta"):
        for a, b, t in rng.uniform(-0.5, 0.5, (cfg["jacobian_samples"], 3)):
            jac = max(jac, abs(sweep_jacobian(kind, a, b, t) - 1))

    refinement = {}
    halving_ok = True
    for kind in ("alpha", "beta"):
        res = []
        for N in cfg["refinement_params"]:
            rep, part = heisenberg_representation(kind, N, cells=cfg["cells"], half_width=cfg["half_width"])
            res.append(validate_representation(rep, partition=part, tol=1.0, check_direction=False).max_rel)
        ratios = [a / b if b > 0 else math.inf for a, b in zip(res, res[1:])]
        halving_ok &= all(r >= cfg["min_halving_ratio"] for r in ratios)
        refinement[kind] = {"params": cfg["refinement_params"], "maxRelResidual": res, "ratios": ratios}
    ok = algebra_ok and geo <= cfg["geodesic_tol"] and jac <= cfg["jacobian_tol"] and halving_ok
    details = {
        "algebraErrors": {k: float(v) for k, v in err.items()},
        "geodesicError": geo,
        "jacobianError": jac,
        "refinement": refinement,
    }
    return ok, details


def _special_vertices(g: MetricGraph) -> list[int]:
    """Corners, slit tips and slit midpoints (both copies)."""
    out = []
    targets = [(0.0, 0.0), (1.0, 1.0)]
    for x, lo, hi in g.meta.get("slits", []):
        targets += [(x, lo), (x, (lo + hi) / 2)]
    for xy in targets:
        out += np.flatnonzero(np.linalg.norm(g.coords - np.array(xy), axis=1) < 1e-12).tolist()
    return out


def slit_vertical_modulus(k: int, p: float = 2.0, tol: float = 1e-6, m: float = 1) -> dict:
    g, _ = slit_carpet_level(k, m)
    lazy = lazy_crossing_family(g, side_vertices(g, "bottom"), side_vertices(g, "top"))
    mono = crossing_family(g, side_vertices(g, "bottom"), side_vertices(g, "top"), strategy="monotone")
    return {
        "k": k,
        "mesh": g.meta["mesh"],
        "all_curves": solve_modulus(g, lazy, p, tol=tol).value,
        "vertical_lines": solve_modulus(g, mono, p, tol=tol).value,
    }


def _c_slit(cfg):
    diam = {k: slit_carpet_level(k, 1)[0].diameter() for k in cfg["diameter_levels"]}
    rng = np.random.default_rng(cfg["seed"])
    ratios = []
    for k in cfg["ahlfors_levels"]:
        m = cfg["ahlfors_grid"] / 2 ** (k + 2)
        g, _ = slit_carpet_level(k, m)
        h = g.meta["mesh"]
        radii = np.geomspace(10 * h, cfg["ahlfors_rmax"], cfg["ahlfors_radii"])
        centers = rng.choice(g.n_vertices, cfg["ahlfors_centers"], replace=False).tolist() + _special_vertices(g)
        for c in centers:
            D = g.distances_from([c], limit=radii[-1] * (1 + 1e-9)).ravel()
            ratios += [g.measure_of(D <= r) / r**2 for r in radii]
    spread = max(ratios) / min(ratios)
    mods = [slit_vertical_modulus(k, 2.0, cfg["solver_tol"]) for k in cfg["modulus_levels"]]
    values = [r["all_curves"] for r in mods]
    variation = (max(values) - min(values)) / max(values)
    ok = (
        max(diam.values()) <= cfg["max_diameter"]
        and spread <= cfg["ahlfors_factor"]
        and min(values) >= cfg["modulus_floor"]
        and variation <= cfg["max_variation"]
    )
    details = {
        "diameters": {str(k): v for k, v in diam.items()},
        "ahlforsRatioRange": [min(ratios), max(ratios)],
        "ahlforsSpread": spread,
        "modulus": mods,
        "variation": variation,
    }
    return ok, details


def _c_splitting(cfg):
    step, R = cfg["step"], cfg["R"]
    Y = cantor_line_cloud(cfg["cantor_level"], step, R)
    rep = factor_product(Y, [[0.0, 1.0]], R, 2 * step, step)
    Z0 = PointCloud(np.c_[cantor_points(cfg["cantor_level"]), np.zeros(2 ** (cfg["cantor_level"] + 1))])
    z_err = pointed_hausdorff_distance(rep.Z, Z0, R)
    cantor_ok = rep.product_error <= 2 * step and z_err <= step

    angles = np.arange(cfg["directions"]) * np.pi / cfg["directions"]
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    rejections = []
    C = circle_cloud(step)
    for v in dirs:
        r = factor_product(C, [v], cfg["circle_R"], 2 * step, step)
        rejections.append({"cloud": "circle", "dir": v.tolist(), "ratio": r.product_error / step})
    for k in cfg["slit_levels"]:
        g, _ = slit_carpet_level(k, cfg["slit_grid"] / 2 ** (k + 2))
        h = g.meta["mesh"]
        Yc = vertex_cloud(g, cfg["slit_base"]).centered()
        for v in dirs:
            r = factor_product(Yc, [v], cfg["slit_R"], 2 * h, h)
            rejections.append({"cloud": f"slit k={k}", "dir": v.tolist(), "ratio": r.product_error / h})
    worst = min(r["ratio"] for r in rejections)
    ok = cantor_ok and worst >= cfg["reject_factor"]
    details = {
        "cantorProductError": rep.product_error,
        "cantorZError": z_err,
        "step": step,
        "minRejectionRatio": worst,
        "rejections": rejections,
    }
    return ok, details


def random_cloud_triple(rng: np.random.Generator):
    """Three nearby clouds in R^2 with 1/2-Lipschitz maps to R."""
    base = rng.uniform(-3, 3, (int(rng.integers(5, 40)), 2))
    scale = 10.0 ** rng.uniform(-3, 0)
    w0 = rng.normal(size=2)
    c0 = rng.normal()
    out = []
    for _ in range(3):
        keep = rng.random(len(base)) < 0.9
        keep[0] = True
        pts = base[keep] + scale * rng.normal(size=(keep.sum(), 2))
        w = w0 + scale * rng.normal(size=2)
        w = 0.5 * w / max(np.linalg.norm(w), 1e-12) * rng.uniform(0, 1)
        c = c0 + scale * rng.normal()
        out.append((PointCloud(pts), lambda X, w=w, c=c: c + X @ w))
    return out


def _c_dee(cfg):
    rng = np.random.default_rng(cfg["seed"])
    worst_tri, worst_sym, worst_self = -np.inf, 0.0, 0.0
    for _ in range(cfg["triples"]):
        (A, f), (B, g), (C, h) = random_cloud_triple(rng)
        d12, d23, d13 = dee_distance(A, f, B, g), dee_distance(B, g, C, h), dee_distance(A, f, C, h)
        worst_tri = max(worst_tri, d13 - 2 * (d12 + d23))
        worst_sym = max(worst_sym, abs(d12 - dee_distance(B, g, A, f)))
        worst_self = max(worst_self, dee_distance(A, f, A, f))
    ok = worst_tri <= cfg["slack"] and worst_sym == 0.0 and worst_self <= cfg["self_tol"]
    return ok, {"triples": cfg["triples"], "worstTriangleExcess": worst_tri, "worstAsymmetry": worst_sym, "worstSelf": worst_self}


def _r_slit_vertical(cfg):
    rows = [slit_vertical_modulus(k, cfg["p"], cfg["solver_tol"]) for k in cfg["k"]]
    return True, {"rows": rows}


def _r_grid_modulus(cfg):
    rows = []
    for n, p in itertools.product(cfg["grid_n"], cfg["p"]):
        cert, _ = _grid_case(int(n), float(p), cfg["family"], float(cfg["solver_tol"]))
        rows.append({"n": n, "p": p, "mod": cert.value, "expected": (n + 1) / (2 * n)})
    return True, {"rows": rows}


RUNNERS = {
    "duality": _c_duality,
    "beurling": _c_beurling,
    "pointwise": _c_pointwise,
    "oracle": _c_oracle,
    "modulus_facts": _c_facts,
    "fubini": _c_fubini,
    "heisenberg": _c_heisenberg,
    "slit_carpet": _c_slit,
    "splitting": _c_splitting,
    "dee_distance": _c_dee,
    "slit_vertical": _r_slit_vertical,
    "grid_modulus": _r_grid_modulus,
}


def run_config(cfg: dict, name: str | None = None) -> CriterionResult:
    t0 = time.perf_counter()
    passed, details = RUNNERS[cfg["runner"]](cfg)
    return CriterionResult(cfg.get("criterion"), name or cfg["runner"], bool(passed), time.perf_counter() - t0, details)


def run_scenario(name: str, **overrides) -> CriterionResult:
    cfg = load_config(name)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(cfg.get(key), list) and not isinstance(value, list):
            value = [value]
        cfg[key] = value
    return run_config(cfg, name)


def run_criterion(number: int) -> CriterionResult:
    return run_scenario(criterion_names()[number])
