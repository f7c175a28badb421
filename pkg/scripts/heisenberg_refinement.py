"""Convergence of the alpha/beta Alberti representations of Lebesgue measure
on a box in the Heisenberg group, and lattice versus exact ball volumes.

    python scripts/heisenberg_refinement.py --params 12 24 48 96 --cells 8
"""

import argparse

import numpy as np

from modspace.alberti import heisenberg_representation, validate_representation
from modspace.heisenberg import heisenberg_lattice


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--params", type=int, nargs="+", default=[12, 24, 48, 96])
    ap.add_argument("--cells", type=int, default=8)
    ap.add_argument("--half-width", type=float, default=0.3)
    ap.add_argument("--lattice-n", type=int, default=40)
    args = ap.parse_args()

    print("kind   params  max_rel_residual  ratio")
    for kind in ("alpha", "beta"):
        prev = None
        for n in args.params:
            rep, cells = heisenberg_representation(kind, n, cells=args.cells, half_width=args.half_width)
            r = validate_representation(rep, partition=cells, check_direction=False).max_rel
            ratio = "" if prev is None else f"{prev / r:.2f}"
            print(f"{kind:<6} {n:>6}  {r:16.6f}  {ratio}")
            prev = r

    lat = heisenberg_lattice(args.lattice_n, 1.0)
    print(f"\nball measures on the n={args.lattice_n} lattice (unit ball volume pi^2/8 = {np.pi**2 / 8:.6f})")
    print("r       summed/r^4  exact/r^4")
    for r in np.linspace(4 / args.lattice_n, 0.5, 6):
        s = lat.ball_measure(np.zeros(3), r) / r**4
        e = lat.ball_volume(np.zeros(3), r) / r**4
        print(f"{r:.3f}  {s:10.4f}  {e:9.4f}")


if __name__ == "__main__":
    main()
