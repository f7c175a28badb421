"""Command-line front end.

Exit codes: 0 when every check passes, 2 when a check fails, 1 on errors
(including usage errors). JSON goes to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from modspace import io
from modspace.alberti import (
    PHIS,
    Cone,
    curves_to_alberti,
    fubini_cells,
    fubini_representation,
    heisenberg_representation,
    validate_representation,
)
from modspace.curves import CurveFamily, crossing_family, lazy_crossing_family, side_vertices
from modspace.errors import ModspaceError
from modspace.heisenberg import heisenberg_lattice
from modspace.metric import MetricGraph, PointCloud
from modspace.modulus import ModulusCertificate, solve_modulus, verify_duality
from modspace.report import graph_svg, line_chart, to_csv
from modspace.scenarios import criterion_names, list_configs, run_scenario
from modspace.spaces import grid_square, sierpinski_carpet, slit_carpet_level
from modspace.splitting import (
    cantor_line_cloud,
    circle_cloud,
    factor_product,
    plane_cloud,
    sample_step,
    tangent_sequence,
)

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
SIDES = ("left", "right", "bottom", "top")


@dataclass
class RunConfig:
    command: str
    input_paths: list[str] = field(default_factory=list)
    output_path: str | None = None
    p: float | None = None
    tol: float = 1e-6
    k: list[int] | None = None
    n: int | None = None
    m: float | None = None
    scales: list[float] | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


def parse_range(text: str) -> list[int]:
    """'1..4' -> [1, 2, 3, 4]; '1,3' -> [1, 3]; '2' -> [2]."""
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out += list(range(int(a), int(b) + 1))
        elif part.strip():
            out.append(int(part))
    return out


def parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def parse_vectors(text: str) -> np.ndarray:
    """'0,1;1,0' -> [[0, 1], [1, 0]]."""
    return np.array([parse_floats(v) for v in text.split(";") if v.strip()], dtype=float)


def _emit(obj, path: str | None) -> None:
    text = io.dumps(obj)
    if path:
        Path(path).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _write(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _terminals(g: MetricGraph, spec: str) -> list:
    if spec in SIDES:
        return side_vertices(g, spec)
    return [int(x) if x.lstrip("-").isdigit() else x for x in spec.split(",")]


def _read_cloud(path: str, base) -> PointCloud:
    obj = io.read_json(path)
    if "points" in obj:
        pts = np.array(obj["points"], dtype=float)
        bp = obj.get("basepoint")
    else:
        pts = MetricGraph.from_json_dict(obj).coords
        bp = None
    if base is not None:
        bp = base
    return PointCloud(pts, None if bp is None else np.asarray(bp, dtype=float)).centered()


# -- commands -----------------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> int:
    kind = cfg.options["kind"]
    if kind == "grid":
        obj = grid_square(cfg.n).to_json_dict()
    elif kind == "carpet":
        obj = sierpinski_carpet(int(cfg.p), cfg.k[0]).to_json_dict()
    elif kind == "slit":
        g, spec = slit_carpet_level(cfg.k[0], cfg.m)
        obj = g.to_json_dict()
    else:
        lat = heisenberg_lattice(cfg.n, cfg.options["s"])
        obj = {
            "vertices": [{"id": i, "xy": p.tolist()} for i, p in enumerate(lat.points)],
            "edges": [],
            "metadata": {"generator": "heisenberg_lattice", "n": lat.n, "s": lat.s, "metric": "koranyi", "weights": lat.weights},
        }
    _emit(obj, cfg.output_path)
    return EXIT_OK


def cmd_family(cfg: RunConfig) -> int:
    g = io.read_space(cfg.input_paths[0])
    src, snk = _terminals(g, cfg.options["source"]), _terminals(g, cfg.options["sink"])
    strategy = cfg.options["strategy"]
    if strategy == "lazy":
        fam = lazy_crossing_family(g, src, snk)
    else:
        fam = crossing_family(g, src, snk, cfg.options["max_curves"], strategy)
    _emit(fam.to_json_dict(), cfg.output_path)
    return EXIT_OK


def cmd_modulus(cfg: RunConfig) -> int:
    g = io.read_space(cfg.input_paths[0])
    fam = CurveFamily.from_json_dict(io.read_json(cfg.input_paths[1]), g)
    cert = solve_modulus(g, fam, cfg.p, tol=cfg.tol, method=cfg.options["method"])
    _emit(cert.to_json_dict(), cfg.output_path)
    if cfg.options.get("svg") and g.coords is not None:
        rho = cert.rho / max(cert.rho[np.isfinite(cert.rho) & (cert.mu > 0)].max(), 1e-300)
        _write(cfg.options["svg"], graph_svg(g.coords.tolist(), g.edges.tolist(), dict(enumerate(np.clip(rho, 0, 1)))))
    return EXIT_OK


def cmd_duality_check(cfg: RunConfig) -> int:
    cert = ModulusCertificate.from_json_dict(io.read_json(cfg.input_paths[0]))
    rep = verify_duality(cert, tol=cfg.tol, weight_threshold=cfg.options.get("weight_threshold"))
    _emit(rep.to_json_dict(), cfg.output_path)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_alberti(cfg: RunConfig) -> int:
    kind = cfg.options["construction"]
    mu = partition = None
    if kind == "fubini":
        g = grid_square(cfg.n or 8)
        rep = fubini_representation(g, cfg.options["orientation"])
        partition = fubini_cells(g)
    elif kind == "heisenberg":
        rep, partition = heisenberg_representation(
            cfg.options["kind"], cfg.n or 24, cells=cfg.options["cells"], half_width=cfg.options["half_width"]
        )
    else:
        g = io.read_space(cfg.input_paths[0])
        cert = ModulusCertificate.from_json_dict(io.read_json(cfg.input_paths[1]), g)
        w = cfg.options.get("cone_w")
        cone = Cone(np.asarray(w, dtype=float), cfg.options["cone_t"]) if w is not None else None
        rep = curves_to_alberti(cert.dual, cert.curves, g, PHIS[cfg.options["phi"]], cone)
        mu = cert.eta
    report = validate_representation(rep, mu=mu, partition=partition, tol=cfg.tol)
    if cfg.output_path:
        _write(cfg.output_path, io.dumps(rep.to_json_dict()) + "\n")
    _emit(report.to_json_dict(), cfg.options.get("report"))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_heis(cfg: RunConfig) -> int:
    res = run_scenario("heisenberg", seed=cfg.seed, tuples=cfg.options.get("tuples"))
    out = res.to_json_dict()
    out.pop("elapsed")
    lat = heisenberg_lattice(cfg.n, cfg.options["s"])
    radii = [0.25, 0.5, 0.75, 1.0]
    out["ahlfors"] = []
    for r in radii:
        summed, exact = lat.ball_measure(np.zeros(3), r), lat.ball_volume(np.zeros(3), r)
        out["ahlfors"].append({"r": r, "ballMeasure": summed, "ratio": summed / r**4, "ballVolume": exact, "volumeRatio": exact / r**4})
    _emit(out, cfg.output_path)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_blowup(cfg: RunConfig) -> int:
    if cfg.options.get("cloud"):
        A = PointCloud(np.array(io.read_json(cfg.options["cloud"])["points"], dtype=float))
    else:
        A = PointCloud(io.read_space(cfg.input_paths[0]).coords)
    base = np.asarray(cfg.options["base"], dtype=float)
    clouds, M, cauchy = tangent_sequence(A, base, cfg.scales, cfg.options["R"], cfg.options.get("eps"))
    out = {"base": base, "scales": cfg.scales, "R": cfg.options["R"], "sizes": [len(c) for c in clouds], "dR": M, "cauchy": cauchy}
    _emit(out, cfg.output_path)
    return EXIT_OK if cauchy in (None, True) else EXIT_FAIL


def cmd_split(cfg: RunConfig) -> int:
    syn = cfg.options.get("synthetic")
    step = cfg.options.get("step")
    R = cfg.options["R"]
    if syn:
        step = step or 0.01
        Y = {"cantor": lambda: cantor_line_cloud(cfg.options["level"], step, R), "circle": lambda: circle_cloud(step), "plane": lambda: plane_cloud(step, R)}[syn]()
    else:
        Y = _read_cloud(cfg.input_paths[0], cfg.options.get("base"))
    eps = cfg.options.get("eps")
    if eps is None:
        eps = 2 * (step or sample_step(Y.window(R)))
    rep = factor_product(Y, cfg.options["dirs"], R, eps, step)
    _emit(rep.to_json_dict(), cfg.output_path)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k not in ("elapsed", "seconds")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _scenario_tables(name: str, details: dict, out: Path) -> list[str]:
    written = []
    if name == "slit-vertical":
        rows = details["rows"]
        _write(out / f"{name}.csv", to_csv(rows, ["k", "mesh", "all_curves", "vertical_lines"]))
        ks = [r["k"] for r in rows]
        chart = line_chart(
            {"all crossing curves": (ks, [r["all_curves"] for r in rows]), "vertical lines": (ks, [r["vertical_lines"] for r in rows])},
            "Mod_2 of the vertical crossing family",
            "level k",
            "Mod_2",
            y_range=(0.0, 0.6),
        )
        _write(out / f"{name}.svg", chart)
        written += [f"{name}.csv", f"{name}.svg"]
    elif name == "grid-modulus":
        rows = details["rows"]
        _write(out / f"{name}.csv", to_csv(rows, ["n", "p", "mod", "expected"]))
        series = {}
        for r in rows:
            xs, ys = series.setdefault(f"p={r['p']:g}", ([], []))
            xs.append(r["n"])
            ys.append(r["mod"])
        ns = sorted({r["n"] for r in rows})
        series["(n+1)/(2n)"] = (ns, [(n + 1) / (2 * n) for n in ns])
        _write(out / f"{name}.svg", line_chart(series, "Mod_p of horizontal grid lines", "n", "Mod_p"))
        written += [f"{name}.csv", f"{name}.svg"]
    elif name == "heisenberg":
        ref = details["refinement"]
        rows = [
            {"kind": kind, "params": N, "maxRelResidual": r}
            for kind, d in ref.items()
            for N, r in zip(d["params"], d["maxRelResidual"])
        ]
        _write(out / f"{name}.csv", to_csv(rows))
        series = {kind: (d["params"], d["maxRelResidual"]) for kind, d in ref.items()}
        _write(out / f"{name}.svg", line_chart(series, "Representation residual vs parameter grid", "grid points per axis", "max rel residual"))
        written += [f"{name}.csv", f"{name}.svg"]
    return written


def cmd_report(cfg: RunConfig) -> int:
    out = Path(cfg.output_path or "report")
    out.mkdir(parents=True, exist_ok=True)
    names = []
    if cfg.options.get("all"):
        names = list(criterion_names().values())
    if cfg.options.get("criterion"):
        table = criterion_names()
        names += [table[c] for c in cfg.options["criterion"]]
    if cfg.options.get("scenario"):
        names.append(cfg.options["scenario"])
    if not names:
        raise ValueError(f"nothing to run; pick --scenario ({', '.join(list_configs())}), --criterion or --all")
    overrides = {"k": cfg.k, "seed": cfg.options.get("seed_override")}
    if cfg.p is not None:
        overrides["p"] = cfg.p
    summary = []
    ok = True
    for name in names:
        res = run_scenario(name, **overrides)
        print(res.line())
        ok &= res.passed
        obj = res.to_json_dict()
        if not cfg.options.get("timings"):
            obj = _strip_timing(obj)
        _write(out / f"{name}.json", io.dumps(obj) + "\n")
        _scenario_tables(name, res.details, out)
        summary.append({"criterion": res.number, "name": name, "passed": res.passed})
    _write(out / "summary.csv", to_csv(summary, ["criterion", "name", "passed"]))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "gen": cmd_gen,
    "family": cmd_family,
    "modulus": cmd_modulus,
    "duality-check": cmd_duality_check,
    "alberti": cmd_alberti,
    "heis": cmd_heis,
    "blowup": cmd_blowup,
    "split": cmd_split,
    "report": cmd_report,
}


def run(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="modspace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a space as JSON")
    gsub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    g = gsub.add_parser("grid")
    g.add_argument("--n", type=int, required=True)
    c = gsub.add_parser("carpet")
    c.add_argument("--p", type=int, default=3)
    c.add_argument("--k", type=int, required=True)
    s = gsub.add_parser("slit")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--m", type=float, default=1)
    h = gsub.add_parser("heis")
    h.add_argument("--n", type=int, required=True)
    h.add_argument("--s", type=float, default=1.0)
    for p in (g, c, s, h):
        p.add_argument("--out")

    fam = sub.add_parser("family", help="build a curve family")
    fam.add_argument("--space", required=True)
    fam.add_argument("--strategy", choices=["monotone", "all_simple", "shortest_k", "lazy"], default="monotone")
    fam.add_argument("--source", default="left", help="side name or comma-separated vertex ids")
    fam.add_argument("--sink", default="right")
    fam.add_argument("--max-curves", type=int, default=10_000)
    fam.add_argument("--out")

    mod = sub.add_parser("modulus", help="solve for Mod_p with a certificate")
    mod.add_argument("--space", required=True)
    mod.add_argument("--family", required=True)
    mod.add_argument("--p", type=float, required=True)
    mod.add_argument("--tol", type=float, default=1e-6)
    mod.add_argument("--method", choices=["auto", "cutting_plane", "potential"], default="auto")
    mod.add_argument("--svg", help="draw rho* on the graph")
    mod.add_argument("--out")

    dc = sub.add_parser("duality-check", help="verify a certificate")
    dc.add_argument("cert")
    dc.add_argument("--tol", type=float, default=1e-6)
    dc.add_argument("--weight-threshold", type=float)
    dc.add_argument("--out")

    al = sub.add_parser("alberti", help="build and validate an Alberti representation")
    al.add_argument("construction", choices=["fubini", "heisenberg", "curves"])
    al.add_argument("--n", type=int, help="grid size (fubini, default 8) or parameter points per axis (heisenberg, default 24)")
    al.add_argument("--orientation", choices=["rows", "cols"], default="rows")
    al.add_argument("--kind", choices=["alpha", "beta"], default="alpha")
    al.add_argument("--cells", type=int, default=8)
    al.add_argument("--half-width", type=float, default=0.3)
    al.add_argument("--space")
    al.add_argument("--cert")
    al.add_argument("--phi", choices=sorted(PHIS), default="identity")
    al.add_argument("--cone-w", type=parse_floats)
    al.add_argument("--cone-t", type=float, default=-1.0)
    al.add_argument("--tol", type=float, default=1e-12)
    al.add_argument("--out", help="representation JSON")
    al.add_argument("--report", help="validation report JSON (default stdout)")

    he = sub.add_parser("heis", help="Heisenberg group checks")
    he.add_argument("--seed", type=int, default=7)
    he.add_argument("--tuples", type=int, default=10_000)
    he.add_argument("--n", type=int, default=24, help="lattice resolution for ball measures")
    he.add_argument("--s", type=float, default=1.0)
    he.add_argument("--out")

    bl = sub.add_parser("blowup", help="rescalings about a point and their d_R matrix")
    bl.add_argument("--space")
    bl.add_argument("--cloud")
    bl.add_argument("--base", type=parse_floats, required=True)
    bl.add_argument("--scales", type=parse_floats, required=True)
    bl.add_argument("--R", type=float, default=1.0)
    bl.add_argument("--eps", type=float)
    bl.add_argument("--out")

    sp = sub.add_parser("split", help="test a cloud for a product factorization")
    sp.add_argument("--cloud")
    sp.add_argument("--synthetic", choices=["cantor", "circle", "plane"])
    sp.add_argument("--level", type=int, default=3)
    sp.add_argument("--base", type=parse_floats)
    sp.add_argument("--dirs", type=parse_vectors, required=True)
    sp.add_argument("--R", type=float, default=1.0)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--step", type=float)
    sp.add_argument("--out")

    rp = sub.add_parser("report", help="run scenarios and write JSON/CSV/SVG")
    rp.add_argument("--scenario", help="one of: " + ", ".join(list_configs()))
    rp.add_argument("--criterion", type=parse_range)
    rp.add_argument("--all", action="store_true", help="every acceptance criterion")
    rp.add_argument("--k", type=parse_range)
    rp.add_argument("--p", type=float)
    rp.add_argument("--seed", type=int)
    rp.add_argument("--timings", action="store_true", help="keep wall-clock fields in the JSON")
    rp.add_argument("--out-dir", default="report")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cmd = ns.command
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "out", "tol", "p", "k", "n", "m", "scales", "seed")}
    inputs = []
    if cmd in ("family", "modulus"):
        inputs = [ns.space] + ([ns.family] if cmd == "modulus" else [])
    elif cmd == "duality-check":
        inputs = [ns.cert]
    elif cmd == "alberti" and ns.construction == "curves":
        if not (ns.space and ns.cert):
            raise ValueError("alberti curves needs --space and --cert")
        inputs = [ns.space, ns.cert]
    elif cmd == "blowup":
        if not (ns.space or ns.cloud):
            raise ValueError("blowup needs --space or --cloud")
        inputs = [ns.space] if ns.space else []
    elif cmd == "split":
        if not (ns.cloud or ns.synthetic):
            raise ValueError("split needs --cloud or --synthetic")
        inputs = [ns.cloud] if ns.cloud else []
    k = getattr(ns, "k", None)
    if isinstance(k, int):
        k = [k]
    output = ns.out_dir if cmd == "report" else getattr(ns, "out", None)
    if cmd == "report":
        opts["seed_override"] = ns.seed
    return RunConfig(
        command=cmd,
        input_paths=inputs,
        output_path=output,
        p=getattr(ns, "p", None),
        tol=getattr(ns, "tol", 1e-6),
        k=k,
        n=getattr(ns, "n", None),
        m=getattr(ns, "m", None),
        scales=getattr(ns, "scales", None),
        seed=getattr(ns, "seed", None) or 0,
        options=opts,
    )


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except (ModspaceError, ValueError, KeyError, OSError) as exc:
        print(f"modspace {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
