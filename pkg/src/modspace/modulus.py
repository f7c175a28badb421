"""p-modulus of curve families as a finite convex program, with a full
primal-dual certificate.

The program is

    minimize  sum_e mu(e) rho(e)^p   subject to  (N rho)_c >= 1 for every curve c,

where N[c, e] = len(e) * (times c traverses e). Curves are brought in lazily:
an active set is solved, then the most violated curves (a scan of an explicit
family, or a shortest-path query under weights rho * len for a lazy crossing
family) are added until every curve is satisfied.

For p > 1 the restricted problems are solved on the dual side,

    maximize  g(lam) = b . lam - (1/q) sum_e c_e s_e^q,   s = N^T lam,  lam >= 0,

with c_e = (p mu_e)^(1-q), whose maximizer gives rho_e = c_e s_e^(q-1).
The iteration is a projected gradient/Newton ascent with backtracking.
For p = 1 the restricted problem is a linear program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from modspace.curves import CurveFamily, DiscreteCurve, line_integral
from modspace.errors import EmptyFamilyError, ModspaceError, NonconvergenceError
from modspace.metric import MetricGraph

R_CAP = 1e6


def dual_exponent(p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    return math.inf if p == 1 else p / (p - 1)


def is_admissible(rho, family: CurveFamily, tol: float = 0.0):
    """Check every line integral is at least 1 - tol.

    Returns (admissible, worst curve, worst integral).
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if len(family) == 0:
        raise EmptyFamilyError("family has no curves")
    values = [line_integral(rho, c) for c in family]
    k = int(np.argmin(values))
    return values[k] >= 1 - tol, family[k], values[k]


def eta_measure(weights, curves, g: MetricGraph) -> np.ndarray:
    """eta_P(e) = sum_c P(c) len(e) mult(e, c)."""
    eta = np.zeros(g.n_edges)
    for w, c in zip(weights, curves):
        if w < 0:
            raise ValueError("curve weights must be nonnegative")
        if w == 0:
            continue
        edges, counts = c.edge_counts()
        eta[edges] += w * counts * g.lengths[edges]
    return eta


@dataclass
class ModulusCertificate:
    p: float
    q: float
    value: float
    lower_bound: float
    rho: np.ndarray
    curves: list
    dual: np.ndarray
    eta: np.ndarray
    f: np.ndarray
    mu: np.ndarray
    lengths: np.ndarray
    gap: float
    beurling: np.ndarray
    capped_edges: np.ndarray
    stationarity_residual: float = 0.0
    rounds: int = 0
    iterations: int = 0
    notes: list = field(default_factory=list)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.dual > 0)

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "q": None if math.isinf(self.q) else self.q,
            "value": self.value,
            "lowerBound": self.lower_bound,
            "primalDualGap": self.gap,
            "rhoStar": self.rho.tolist(),
            "mu": self.mu.tolist(),
            "lengths": self.lengths.tolist(),
            "curves": [c.ids for c in self.curves],
            "curveEdges": [c.edge_sequence.tolist() for c in self.curves],
            "dualP": self.dual.tolist(),
            "etaP": self.eta.tolist(),
            "f": [None if not math.isfinite(x) else x for x in self.f.tolist()],
            "beurlingResiduals": self.beurling.tolist(),
            "cappedEdges": self.capped_edges.tolist(),
            "stationarityResidual": self.stationarity_residual,
            "rounds": self.rounds,
            "iterations": self.iterations,
            "notes": self.notes,
        }

    @classmethod
    def from_json_dict(cls, obj: dict, g: MetricGraph | None = None) -> "ModulusCertificate":
        curves = obj["curveEdges"]
        if g is not None:
            curves = [DiscreteCurve.from_ids(g, [_hashable(v) for v in ids]) for ids in obj["curves"]]
        else:
            curves = [_EdgeWalk(np.array(e, dtype=np.int64)) for e in curves]
        p = float(obj["p"])
        return cls(
            p=p,
            q=dual_exponent(p),
            value=obj["value"],
            lower_bound=obj["lowerBound"],
            rho=np.array(obj["rhoStar"], dtype=float),
            curves=curves,
            dual=np.array(obj["dualP"], dtype=float),
            eta=np.array(obj["etaP"], dtype=float),
            f=np.array([np.inf if x is None else x for x in obj["f"]], dtype=float),
            mu=np.array(obj["mu"], dtype=float),
            lengths=np.array(obj["lengths"], dtype=float),
            gap=obj["primalDualGap"],
            beurling=np.array(obj["beurlingResiduals"], dtype=float),
            capped_edges=np.array(obj["cappedEdges"], dtype=np.int64),
            stationarity_residual=obj.get("stationarityResidual", 0.0),
            rounds=obj.get("rounds", 0),
            iterations=obj.get("iterations", 0),
            notes=obj.get("notes", []),
        )


@dataclass(frozen=True)
class _EdgeWalk:
    """Curve reduced to its edge sequence (enough to recheck a certificate)."""

    edge_sequence: np.ndarray

    def edge_counts(self):
        return np.unique(self.edge_sequence, return_counts=True)


def _hashable(x):
    return tuple(x) if isinstance(x, list) else x


# -- restricted problem, p > 1 -------------------------------------------------


class _DualProblem:
    def __init__(self, M: csr_matrix, b: np.ndarray, mu: np.ndarray, p: float):
        self.M = M
        self.MT = M.T.tocsr()
        self.b = b
        self.mu = mu
        self.p = p
        self.q = p / (p - 1)
        self.c = (p * mu) ** (1 - self.q)

    def rho(self, lam):
        s = self.MT @ lam
        return self.c * np.maximum(s, 0.0) ** (self.q - 1), s

    def value(self, lam):
        rho, s = self.rho(lam)
        return float(self.b @ lam - (s * rho).sum() / self.q), rho, s

    def primal_upper(self, rho):
        """Value of rho rescaled to be admissible for the active curves."""
        integrals = self.M @ rho
        theta = float(np.min(integrals / self.b))
        if theta <= 0:
            return math.inf, theta
        return float((self.mu * rho**self.p).sum()) / theta**self.p, theta

    def initial(self):
        # each curve's own single-curve multiplier, shared among the m curves
        M = self.M
        lam = np.empty(M.shape[0])
        for i in range(M.shape[0]):
            row = M.getrow(i)
            a, mu = row.data, self.mu[row.indices]
            single = self.b[i] ** self.p * float(np.sum(a**self.q * mu ** (1 - self.q))) ** (1 - self.p)
            lam[i] = self.p * single / self.b[i]
        return lam / max(1, M.shape[0])


def _projected_gradient_norm(lam, grad) -> float:
    return float(np.linalg.norm(np.where(lam > 0, grad, np.maximum(grad, 0.0))))


def _solve_dual(prob: _DualProblem, lam0, rtol: float, max_iter: int):
    """Projected Newton ascent (gradient steps as fallback) on the dual."""
    lam = np.maximum(lam0, 0.0)
    if not np.any(lam > 0):
        lam = prob.initial()
    g, rho, s = prob.value(lam)
    upper, _ = prob.primal_upper(rho)
    it = 0
    for it in range(1, max_iter + 1):
        grad = prob.b - prob.M @ rho
        if upper - g <= rtol * max(abs(upper), 1e-300):
            break
        eps = min(1e-8 * max(lam.max(), 1e-300), float(np.linalg.norm(grad)))
        bound = (lam <= eps) & (grad < 0)
        free = ~bound
        direction = np.where(bound, grad, 0.0)
        if free.any():
            weight = np.where(s > 0, prob.c * (prob.q - 1) * np.where(s > 0, s, 1.0) ** (prob.q - 2), 0.0)
            diag = np.asarray(prob.M.multiply(prob.M).multiply(weight).sum(axis=1)).ravel()
            # coordinates without curvature (all their edges unloaded) take a gradient step
            flat = free & (diag <= 1e-12 * max(diag.max(), 1e-300))
            newton = free & ~flat
            if flat.any():
                direction[flat] = grad[flat] * max(lam.max(), 1e-12) / max(np.abs(grad[flat]).max(), 1e-300)
            if newton.any():
                Mf = prob.M[newton]
                H = (Mf.multiply(weight) @ Mf.T).toarray()
                H += np.eye(len(H)) * (1e-10 * np.diag(H).max())
                try:
                    step = np.linalg.solve(H, grad[newton])
                except np.linalg.LinAlgError:
                    step = np.linalg.lstsq(H, grad[newton], rcond=None)[0]
                direction[newton] = step
        improved = False
        pg = _projected_gradient_norm(lam, grad)
        for use_newton in (True, False):
            d = direction if use_newton else grad
            alpha = 1.0 if use_newton else 1.0 / max(np.abs(grad).max(), 1e-300) * max(lam.max(), 1e-12)
            for _ in range(60):
                trial = np.maximum(lam + alpha * d, 0.0)
                g_new, rho_new, s_new = prob.value(trial)
                if g_new >= g + 1e-4 * float(grad @ (trial - lam)) and g_new > g - 1e-15 * abs(g):
                    improved = g_new > g or np.array_equal(trial, lam)
                    if improved:
                        break
                # near the optimum g is flat to rounding while rho is still off
                # by sqrt of the dual error; accept steps that shrink the gradient
                if g_new >= g - 1e-14 * abs(g):
                    if _projected_gradient_norm(trial, prob.b - prob.M @ rho_new) < 0.5 * pg:
                        improved = True
                        break
                alpha *= 0.5
            if improved:
                break
        if not improved:
            break
        lam, g, rho, s = trial, g_new, rho_new, s_new
        upper = min(upper, prob.primal_upper(rho)[0])
    return lam, g, rho, it


def _solve_restricted_lp(M: csr_matrix, b: np.ndarray, mu: np.ndarray):
    res = linprog(
        mu,
        A_ub=-M,
        b_ub=-b,
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise ModspaceError(f"restricted linear program failed: {res.message}")
    lam = np.maximum(-res.ineqlin.marginals, 0.0)
    return lam, float(b @ lam), np.maximum(res.x, 0.0)


# -- driver ------------------------------------------------------------------


def _cheapest_paths(g: MetricGraph, family: CurveFamily, w: np.ndarray, limit: int):
    """Cheapest source-to-sink path into each sink under edge weights ``w``."""
    a, b = g.edges[:, 0], g.edges[:, 1]
    W = csr_matrix(
        (np.concatenate([w, w]), (np.concatenate([a, b]), np.concatenate([b, a]))),
        shape=(g.n_vertices, g.n_vertices),
    )
    dist, pred, _ = dijkstra(W, directed=False, indices=list(family.source), min_only=True, return_predecessors=True)
    sinks = np.array(family.sink)
    sinks = sinks[np.isfinite(dist[sinks])]
    sources, sink_set = set(family.source), set(family.sink)
    paths = []
    for t in sinks[np.argsort(dist[sinks], kind="stable")]:
        path = [int(t)]
        while path[-1] not in sources:
            path.append(int(pred[path[-1]]))
        if len(path) < 2 or any(v in sink_set for v in path[1:]):
            continue  # passes through another sink: that shorter path is listed too
        paths.append(DiscreteCurve(g, tuple(reversed(path))))
        if len(paths) >= limit:
            break
    return paths


def _oracle_paths(g: MetricGraph, family: CurveFamily, rho: np.ndarray, limit: int, threshold: float, known: set):
    """Minimum line integral over all source-to-sink paths, plus up to
    ``limit`` new paths whose integral falls below ``threshold``.

    After the per-sink cheapest paths, further violated paths are searched
    for greedily with the edges of the paths already found blocked.
    """
    # small length term breaks ties toward short paths when rho vanishes
    w = rho * g.lengths + 1e-12 * g.lengths
    first = _cheapest_paths(g, family, w, len(family.sink))
    if not first:
        raise ModspaceError("no source-to-sink path")
    values = [line_integral(rho, c) for c in first]
    best = min(values)
    found = [c for c, v in zip(first, values) if v < threshold and c.vertices not in known]
    seen = set(known) | {c.vertices for c in found}
    blocked = w.copy()
    big = 1e3 * max(float(w.sum()), 1.0)
    while 0 < len(found) < limit:
        for c in found:
            blocked[c.edge_sequence] = big
        extra = [
            c
            for c in _cheapest_paths(g, family, blocked, len(family.sink))
            if c.vertices not in seen and line_integral(rho, c) < threshold
        ]
        if not extra:
            break
        extra = extra[: limit - len(found)]
        found.extend(extra)
        seen.update(c.vertices for c in extra)
    return best, found[:limit]


def _recover_multipliers(M: csr_matrix, rho: np.ndarray, mu: np.ndarray, p: float, ridge: float):
    """Nonnegative multipliers with p mu rho^(p-1) = M^T lam (min-norm via a small ridge)."""
    target = p * mu * rho ** (p - 1)
    cols = np.unique(M.indices)
    A = M[:, cols].T.toarray()
    scale = max(np.abs(A).max(), 1e-300)
    if ridge > 0:
        A_aug = np.vstack([A / scale, ridge * np.eye(A.shape[1])])
        t_aug = np.concatenate([target[cols] / scale, np.zeros(A.shape[1])])
    else:
        A_aug, t_aug = A / scale, target[cols] / scale
    lam, _ = nnls(A_aug, t_aug, maxiter=50 * A.shape[1] + 100)
    resid = float(np.linalg.norm(A @ lam - target[cols]))
    return lam, resid


def solve_modulus(
    g: MetricGraph,
    family: CurveFamily,
    p: float,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    r_cap: float = R_CAP,
    batch: int = 16,
    method: str = "auto",
) -> ModulusCertificate:
    """Mod_p(family, mu) with optimal density, dual curve measure and gap report.

    ``method`` is ``cutting_plane`` (any family), ``potential`` (lazy
    source-to-sink families with p > 1 and positive measure everywhere) or
    ``auto``, which picks ``potential`` whenever it applies.
    """
    q = dual_exponent(p)
    if family.graph is not g:
        raise ModspaceError("family lives in a different graph")
    if not family.lazy and len(family) == 0:
        raise EmptyFamilyError("family has no curves")
    potential_ok = family.lazy and p > 1 and bool(np.all(g.mu > 0))
    if method == "auto":
        method = "potential" if potential_ok else "cutting_plane"
    if method == "potential":
        if not potential_ok:
            raise ModspaceError("potential method needs a lazy family, p > 1 and positive edge measure")
        return _solve_potential(g, family, p, tol, max_iter)
    if method != "cutting_plane":
        raise ValueError(f"unknown method {method!r}")
    mu = g.mu
    free = mu > 0
    capped = np.flatnonzero(~free)
    rho_fixed = np.where(free, 0.0, r_cap)
    notes = []
    if capped.size:
        notes.append(f"{capped.size} zero-measure edges capped at rho={r_cap:g}")

    curves: list[DiscreteCurve] = list(family.curves)
    N = family.incidence() if curves else csr_matrix((0, g.n_edges))
    active: list[int] = []

    def offsets(rows: csr_matrix) -> np.ndarray:
        return rows @ rho_fixed

    if family.lazy:
        batch = max(batch, len(family.sink))
        first = _cheapest_paths(g, family, g.lengths.astype(float), batch)
        curves.extend(first)
        N = _stack(N, CurveFamily(g, tuple(first)).incidence())
        active = list(range(len(first)))
        known = {c.vertices for c in first}
    else:
        b_all = 1 - offsets(N)
        open_rows = np.flatnonzero(b_all > 0)
        if open_rows.size == 0:
            notes.append("every curve crosses a capped edge")
        else:
            lengths = np.asarray(N[open_rows][:, free].sum(axis=1)).ravel() / b_all[open_rows]
            active = list(open_rows[np.argsort(lengths, kind="stable")[:batch]])

    lam = np.zeros(0)
    rounds = iterations = 0
    lower = 0.0
    rho = rho_fixed.copy()
    while True:
        rounds += 1
        A = np.array(active, dtype=np.int64)
        MA = N[A]
        b = 1 - offsets(MA)
        Mf = MA[:, free].tocsr()
        if len(A) == 0:
            lower, lam, rho_f = 0.0, np.zeros(0), np.zeros(free.sum())
        elif p == 1:
            lam, lower, rho_f = _solve_restricted_lp(Mf, b, mu[free])
            iterations += 1
        else:
            prob = _DualProblem(Mf, b, mu[free], p)
            # new curves start loaded so the Hessian sees their edges
            fresh = prob.initial()[len(lam):] if len(lam) else np.zeros(0)
            lam0 = np.concatenate([lam, fresh])
            lam, lower, rho_f, its = _solve_dual(prob, lam0, min(0.05 * tol, 1e-13), max_iter - iterations)
            iterations += its
        rho = rho_fixed.copy()
        rho[free] = rho_f
        if family.lazy:
            best, violated = _oracle_paths(g, family, rho, batch, 1 - 0.05 * tol / p, known)
            # without capped edges every constraint has rhs 1, so the oracle's
            # minimum is also the minimum ratio and rho may shrink by it
            theta = (best if capped.size == 0 else min(1.0, best)) if len(A) else 0.0
            if violated:
                known.update(c.vertices for c in violated)
                curves.extend(violated)
                N = _stack(N, CurveFamily(g, tuple(violated)).incidence())
                active.extend(range(len(curves) - len(violated), len(curves)))
        else:
            integrals = N @ rho
            b_all = 1 - offsets(N)
            open_rows = b_all > 0
            theta = float(np.min((integrals - (1 - b_all))[open_rows] / b_all[open_rows])) if open_rows.any() else 1.0
            inactive = np.setdiff1d(np.arange(len(curves)), A)
            bad = inactive[integrals[inactive] < 1 - 0.05 * tol / p]
            bad = bad[np.argsort(integrals[bad], kind="stable")[:batch]]
            violated = list(bad)
            active.extend(int(i) for i in bad)
        if not violated:
            break
        if iterations >= max_iter or rounds > max_iter:
            upper = _energy(rho, mu, p) / theta**p if theta > 0 else math.inf
            raise NonconvergenceError("iteration cap reached", lower=lower, upper=upper)

    if theta <= 0:
        raise NonconvergenceError("no admissible density found", lower=lower, upper=math.inf)
    rho_star = rho.copy()
    if family.lazy and capped.size and theta < 1:
        rho_star = rho / theta
    else:
        rho_star[free] = rho[free] / theta
    value = _energy(rho_star, mu, p)
    gap = max(value - lower, 0.0)
    if gap > tol * max(1.0, value):
        raise NonconvergenceError(f"gap {gap:.3e} above tolerance", lower=lower, upper=value)

    A = np.array(active, dtype=np.int64)
    dual_raw = np.zeros(len(curves))
    stationarity = 0.0
    if len(A) and p > 1:
        target = p * mu[free] * rho_star[free] ** (p - 1)
        target_norm = max(float(np.linalg.norm(target)), 1e-300)
        MA = N[A][:, free].tocsr()
        # complementary slackness: only curves that are tight for rho* may carry weight
        slack = MA @ rho_star[free] + offsets(N[A]) - 1
        tight = slack <= 0.1 * tol
        lam_iter = np.where(tight, lam, 0.0) / theta ** (p - 1)
        resid_iter = float(np.linalg.norm(MA.T @ lam_iter - target))
        lam_nnls = np.zeros(len(A))
        lam_nnls[tight], resid = _recover_multipliers(MA[tight], rho_star[free], mu[free], p, ridge=1e-9)
        resid = float(np.linalg.norm(MA.T @ lam_nnls - target))
        if resid <= max(resid_iter, 1e-9 * target_norm):
            dual_raw[A] = lam_nnls
            stationarity = resid / target_norm
        else:
            dual_raw[A] = lam_iter
            stationarity = resid_iter / target_norm
            notes.append("multipliers taken from the dual iterate")
    elif len(A):
        dual_raw[A] = lam
    total = dual_raw.sum()
    if total <= 0 and value > 0:
        raise NonconvergenceError("dual measure vanished", lower=lower, upper=value)
    if total <= 0:
        notes.append("modulus 0: capped edges carry every curve, no dual measure")
    P = dual_raw / total if total > 0 else dual_raw
    eta = eta_measure(P, curves, g)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(free, eta / np.where(free, mu, 1.0), np.where(eta > 0, np.inf, 0.0))
    integrals = np.array([line_integral(rho_star, c) for c in curves])
    beurling = np.where(P > 0, np.abs(integrals - 1), 0.0)
    overlaps = _overlapping_support(curves, P)
    if overlaps:
        notes.append(f"{overlaps} edges shared by several supporting curves")
    return ModulusCertificate(
        p=p,
        q=q,
        value=value,
        lower_bound=lower,
        rho=rho_star,
        curves=curves,
        dual=P,
        eta=eta,
        f=f,
        mu=mu.copy(),
        lengths=g.lengths.copy(),
        gap=gap,
        beurling=beurling,
        capped_edges=capped,
        stationarity_residual=stationarity,
        rounds=rounds,
        iterations=iterations,
        notes=notes,
    )


# -- connecting families through potentials ---------------------------------
#
# For the family of all source-to-sink paths, Mod_p equals the discrete
# p-capacity  min sum_e mu_e (|u_a - u_b| / len_e)^p  over potentials u with
# u = 0 on the source and u = 1 on the sink: rho = |du| / len is admissible
# because every path climbs from 0 to 1, and conversely u(x) = min(1, rho-
# distance from the source) is a competitor. The p-harmonic current splits
# into monotone source-to-sink paths, each with rho-length exactly 1; their
# flows are the Lagrange multipliers.


def _edge_operator(g: MetricGraph) -> csr_matrix:
    E = g.n_edges
    rows = np.repeat(np.arange(E), 2)
    cols = g.edges.ravel()
    vals = np.tile([-1.0, 1.0], E)
    return csr_matrix((vals, (rows, cols)), shape=(E, g.n_vertices))


def _p_harmonic(g: MetricGraph, source, sink, p: float, max_iter: int):
    from scipy.sparse import diags
    from scipy.sparse.linalg import spsolve

    n = g.n_vertices
    B = _edge_operator(g)
    sigma = g.mu * g.lengths ** (-p)
    u = np.zeros(n)
    u[list(sink)] = 1.0
    fixed = np.zeros(n, dtype=bool)
    fixed[list(source)] = fixed[list(sink)] = True
    labels = g.component_labels
    live = np.isin(labels, np.unique(labels[fixed]))
    free = live & ~fixed
    Bf = B[:, free].tocsc()

    def solve(weights, rhs):
        H = (Bf.T @ diags(weights) @ Bf).tocsc()
        H = H + diags(np.full(H.shape[0], 1e-14 * max(H.diagonal().max(), 1e-300)))
        return spsolve(H, rhs)

    if free.any():
        # harmonic start (exact for p = 2)
        u[free] = solve(sigma, -(Bf.T @ (sigma * (B @ np.where(free, 0.0, u)))))
    # Newton on the smoothed energy sum sigma (du^2 + eps^2)^(p/2), with eps
    # driven to zero; each stage is smooth and strictly convex
    it = 0
    if free.any() and p != 2:
        scale = max(float(np.abs(B @ u).max()), 1e-300)
        for eps in scale * 10.0 ** -np.arange(1, 14):
            E_u = float(np.sum(sigma * ((B @ u) ** 2 + eps**2) ** (p / 2)))
            for _ in range(100):
                it += 1
                du = B @ u
                r2 = du**2 + eps**2
                grad = Bf.T @ (sigma * p * r2 ** (p / 2 - 1) * du)
                h = sigma * p * r2 ** (p / 2 - 2) * ((p - 1) * du**2 + eps**2)
                d = -solve(h, grad)
                slope = float(grad @ d)
                if slope >= 0:
                    break
                alpha = 1.0
                for _ in range(60):
                    trial = u.copy()
                    trial[free] += alpha * d
                    E_t = float(np.sum(sigma * ((B @ trial) ** 2 + eps**2) ** (p / 2)))
                    if E_t <= E_u + 1e-4 * alpha * slope:
                        break
                    alpha *= 0.5
                else:
                    break
                u, E_u = trial, E_t
                if -slope <= 1e-14 * E_u or it >= max_iter:
                    break
            if it >= max_iter:
                break
    return u, it


def _decompose_flow(g: MetricGraph, u: np.ndarray, flow: np.ndarray, source, sink):
    """Split an edge flow running uphill in u into source-to-sink paths."""
    a, b = g.edges[:, 0], g.edges[:, 1]
    up = u[b] >= u[a]
    tail, head = np.where(up, a, b), np.where(up, b, a)
    out: dict[int, list[tuple[int, int]]] = {}
    thr = 1e-14 * max(flow.max(), 1e-300)
    for e in np.flatnonzero(flow > thr):
        out.setdefault(int(tail[e]), []).append((int(e), int(head[e])))
    remaining = flow.copy()
    ptr = dict.fromkeys(out, 0)
    sinks = set(sink)
    paths, amounts = [], []
    for s in source:
        while True:
            v, edges, verts = s, [], [s]
            while v not in sinks:
                lst = out.get(v, [])
                i = ptr.get(v, 0)
                while i < len(lst) and remaining[lst[i][0]] <= thr:
                    i += 1
                ptr[v] = i
                if i == len(lst):
                    if not edges:
                        break
                    # dead end (conservation residue): drop the last edge
                    remaining[edges.pop()] = 0.0
                    verts.pop()
                    v = verts[-1]
                    continue
                e, w = lst[i]
                edges.append(e)
                verts.append(w)
                v = w
            if v not in sinks:
                break
            amount = float(remaining[edges].min())
            remaining[edges] -= amount
            paths.append(tuple(verts))
            amounts.append(amount)
    return paths, np.array(amounts)


def _solve_potential(g: MetricGraph, family: CurveFamily, p: float, tol: float, max_iter: int):
    q = dual_exponent(p)
    mu = g.mu
    u, iterations = _p_harmonic(g, family.source, family.sink, p, max_iter)
    du = _edge_operator(g) @ u
    rho = np.abs(du) / g.lengths
    flow = p * mu * rho ** (p - 1) / g.lengths
    paths, lam = _decompose_flow(g, u, flow, family.source, family.sink)
    if not paths:
        raise NonconvergenceError("current carries no flow", lower=0.0, upper=math.inf)
    curves = [DiscreteCurve(g, path) for path in paths]
    fam = CurveFamily(g, tuple(curves))
    N = fam.incidence()
    s_edge = N.T @ lam
    c = (p * mu) ** (1 - q)
    lower = float(lam.sum() - np.sum(c * s_edge**q) / q)
    best, _ = _oracle_paths(g, family, rho, 0, -math.inf, set())
    theta = best
    if theta <= 0:
        raise NonconvergenceError("no admissible density found", lower=lower, upper=math.inf)
    rho_star = rho / theta
    value = _energy(rho_star, mu, p)
    gap = max(value - lower, 0.0)
    if gap > tol * max(1.0, value):
        raise NonconvergenceError(f"gap {gap:.3e} above tolerance", lower=lower, upper=value)
    target = p * mu * rho_star ** (p - 1)
    stationarity = float(np.linalg.norm(s_edge - target)) / max(float(np.linalg.norm(target)), 1e-300)
    P = lam / lam.sum()
    eta = eta_measure(P, curves, g)
    integrals = np.array([line_integral(rho_star, cv) for cv in curves])
    return ModulusCertificate(
        p=p,
        q=q,
        value=value,
        lower_bound=lower,
        rho=rho_star,
        curves=curves,
        dual=P,
        eta=eta,
        f=eta / mu,
        mu=mu.copy(),
        lengths=g.lengths.copy(),
        gap=gap,
        beurling=np.abs(integrals - 1),
        capped_edges=np.zeros(0, dtype=np.int64),
        stationarity_residual=stationarity,
        rounds=1,
        iterations=iterations,
        notes=["solved through the p-harmonic potential; multipliers are path flows"],
    )


def _stack(N: csr_matrix, row: csr_matrix) -> csr_matrix:
    from scipy.sparse import vstack

    return vstack([N, row]).tocsr()


def _energy(rho: np.ndarray, mu: np.ndarray, p: float) -> float:
    m = mu > 0
    return float(np.sum(mu[m] * rho[m] ** p))


def _overlapping_support(curves, P) -> int:
    seen: dict[int, int] = {}
    for w, c in zip(P, curves):
        if w > 0:
            for e in c.edge_counts()[0]:
                seen[int(e)] = seen.get(int(e), 0) + 1
    return sum(1 for v in seen.values() if v > 1)


# -- verification --------------------------------------------------------------


@dataclass
class DualityReport:
    p: float
    value: float
    norm_residual: float
    pointwise_residual: float | None
    beurling_residual: float
    off_support_max: float
    tol: float
    checked_edges: int
    skipped: list = field(default_factory=list)

    @property
    def norm_ok(self) -> bool:
        return self.norm_residual <= self.tol

    @property
    def pointwise_ok(self) -> bool:
        return self.pointwise_residual is None or self.pointwise_residual <= self.tol

    @property
    def beurling_ok(self) -> bool:
        return self.beurling_residual <= self.tol

    @property
    def passed(self) -> bool:
        return self.norm_ok and self.pointwise_ok and self.beurling_ok

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "value": self.value,
            "tol": self.tol,
            "normResidual": self.norm_residual,
            "pointwiseResidual": self.pointwise_residual,
            "beurlingResidual": self.beurling_residual,
            "offSupportMaxRhoP": self.off_support_max,
            "checkedEdges": self.checked_edges,
            "skipped": self.skipped,
            "pass": {"norm": self.norm_ok, "pointwise": self.pointwise_ok, "beurling": self.beurling_ok},
            "passed": self.passed,
        }


def verify_duality(
    cert: ModulusCertificate,
    tol: float = 1e-6,
    weight_threshold: float | None = None,
    support_threshold: float = 1e-9,
) -> DualityReport:
    """Recompute eta_P and f from the certificate and measure the three identities.

    (a) ||f||_q * Mod^(1/p) = 1, (b) rho^p = Mod^((p+q)/p) f^q on edges with
    eta_P > 0 (skipped for p = 1), (c) line integral 1 on curves with dual
    weight above ``weight_threshold`` (default 10 * tol).

    Edges count as eta_P-positive when eta_P exceeds ``support_threshold``
    times its maximum; the largest rho^p on the remaining measured edges is
    reported separately.
    """
    p, V = cert.p, cert.value
    q = dual_exponent(p)
    mu, rho = cert.mu, cert.rho
    if V <= 0 or cert.dual.sum() <= 0:
        return DualityReport(p, V, 0.0, None, 0.0, 0.0, tol, 0, ["all identities (modulus 0, no dual measure)"])
    eta = np.zeros(len(mu))
    for w, c in zip(cert.dual, cert.curves):
        if w > 0:
            edges, counts = c.edge_counts()
            eta[edges] += w * counts * cert.lengths[edges]
    measured = mu > 0
    f = np.zeros_like(eta)
    f[measured] = eta[measured] / mu[measured]
    if math.isinf(q):
        fnorm = float(f[measured].max())
    else:
        fnorm = float(np.sum(f[measured] ** q * mu[measured])) ** (1 / q)
    norm_residual = abs(fnorm * V ** (1 / p) - 1)

    skipped = []
    positive = measured & (eta > support_threshold * max(eta.max(), 1e-300))
    off_support = measured & ~positive
    off_max = float((rho[off_support] ** p).max()) if off_support.any() else 0.0
    if math.isinf(q):
        pointwise = None
        skipped.append("pointwise identity (p = 1)")
    else:
        lhs = rho[positive] ** p
        rhs = V ** ((p + q) / p) * f[positive] ** q
        denom = np.maximum(np.maximum(lhs, rhs), 1e-300)
        pointwise = float(np.max(np.abs(lhs - rhs) / denom)) if positive.any() else 0.0

    threshold = 10 * tol if weight_threshold is None else weight_threshold
    worst = 0.0
    for w, c in zip(cert.dual, cert.curves):
        if w > threshold:
            seq = c.edge_sequence
            worst = max(worst, abs(float(np.sum(rho[seq] * cert.lengths[seq])) - 1))
    return DualityReport(p, V, norm_residual, pointwise, worst, off_max, tol, int(positive.sum()), skipped)
