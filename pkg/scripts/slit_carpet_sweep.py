"""Mod_p of the bottom-to-top crossing family on slit-carpet prefractals.

For each level k and refinement m this reports the lazy all-curves modulus
(potential method) next to the modulus of the straight vertical lines, and
the diameter of the graph.

    python scripts/slit_carpet_sweep.py --k 1 2 3 --m 1 2 --p 2
"""

import argparse
import csv
import sys
import time
from dataclasses import asdict, dataclass

from modspace.curves import crossing_family, lazy_crossing_family, side_vertices
from modspace.modulus import solve_modulus
from modspace.spaces import slit_carpet_level


@dataclass
class Row:
    k: int
    m: float
    p: float
    vertices: int
    mesh: float
    diameter: float
    mod_all: float
    mod_vertical: float
    seconds: float


def sweep_one(k: int, m: float, p: float, tol: float, diameter: bool) -> Row:
    t0 = time.perf_counter()
    g, _ = slit_carpet_level(k, m)
    bottom, top = side_vertices(g, "bottom"), side_vertices(g, "top")
    lazy = solve_modulus(g, lazy_crossing_family(g, bottom, top), p, tol=tol).value
    lines = solve_modulus(g, crossing_family(g, bottom, top), p, tol=tol).value
    diam = g.diameter() if diameter else float("nan")
    return Row(k, m, p, g.n_vertices, g.meta["mesh"], diam, lazy, lines, time.perf_counter() - t0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--m", type=float, nargs="+", default=[1])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--diameter", action="store_true", help="also compute graph diameters (slow for k >= 4)")
    ap.add_argument("--csv", help="write rows here instead of stdout")
    args = ap.parse_args()
    rows = [sweep_one(k, m, args.p, args.tol, args.diameter) for k in args.k for m in args.m]
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    w = csv.DictWriter(out, fieldnames=list(asdict(rows[0])))
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
    if args.csv:
        out.close()


if __name__ == "__main__":
    main()
