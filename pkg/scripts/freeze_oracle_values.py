"""Compute reference moduli for the frozen test instances with two
independent methods: the package's brute-force grid oracle and a direct
convex solve through cvxpy (not a package dependency).

    python scripts/freeze_oracle_values.py
"""

import argparse

import numpy as np

from modspace.curves import crossing_family
from modspace.metric import MetricGraph
from modspace.oracle import brute_force_modulus


def kite() -> MetricGraph:
    """Four vertices, five edges: two routes from 0 to 3 plus a crossbar."""
    edges = [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)]
    lengths = [1.0, 0.5, 0.75, 1.25, 0.4]
    mu = [1.0, 2.0, 0.5, 1.5, 0.8]
    coords = [(0, 0), (0.5, 0.5), (0.5, -0.5), (1, 0)]
    return MetricGraph((0, 1, 2, 3), np.array(coords, float), edges, lengths, mu, {"generator": "kite"})


def cvxpy_modulus(g, family, p):
    import cvxpy as cp

    N = family.incidence().toarray()
    rho = cp.Variable(g.n_edges, nonneg=True)
    obj = cp.sum(cp.multiply(g.mu, cp.abs(rho) ** p)) if p > 1 else g.mu @ rho
    prob = cp.Problem(cp.Minimize(obj), [N @ rho >= 1])
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-resolution", type=int, default=200)
    args = ap.parse_args()
    g = kite()
    fam = crossing_family(g, [0], [3], strategy="all_simple")
    print(f"kite: {len(fam)} curves")
    for p in (1.0, 1.5, 2.0, 3.0):
        a = brute_force_modulus(g, fam, p, grid_resolution=args.grid_resolution)
        try:
            b = cvxpy_modulus(g, fam, p)
        except ImportError:
            b = float("nan")
        print(f"p={p:<4} oracle={a:.12f} cvxpy={b:.12f} rel={abs(a - b) / b:.2e}")


if __name__ == "__main__":
    main()
