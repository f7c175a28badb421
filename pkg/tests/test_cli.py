import json

import pytest

from modspace.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main, parse_floats, parse_range, parse_vectors


def run(argv):
    return main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


def test_parsers():
    assert parse_range("1..4") == [1, 2, 3, 4]
    assert parse_range("3") == [3]
    assert parse_floats("0.5,0.25") == [0.5, 0.25]
    assert parse_vectors("0,1;1,0").tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_grid_pipeline(tmp_path):
    space, fam, cert, check = (tmp_path / f for f in ("g.json", "f.json", "c.json", "d.json"))
    assert run(["gen", "grid", "--n", 4, "--out", space]) == EXIT_OK
    assert len(load(space)["vertices"]) == 25
    assert run(["family", "--space", space, "--source", "left", "--sink", "right", "--out", fam]) == EXIT_OK
    assert len(load(fam)["curves"]) == 5
    svg = tmp_path / "rho.svg"
    assert run(["modulus", "--space", space, "--family", fam, "--p", 2, "--tol", 1e-9, "--out", cert, "--svg", svg]) == EXIT_OK
    assert load(cert)["value"] == pytest.approx(0.625, rel=1e-8)
    assert svg.read_text().startswith("<svg")
    assert run(["duality-check", cert, "--tol", 1e-6, "--out", check]) == EXIT_OK
    assert load(check)["passed"]


def test_lazy_slit_pipeline(tmp_path):
    space, fam, cert = (tmp_path / f for f in ("s.json", "f.json", "c.json"))
    assert run(["gen", "slit", "--k", 1, "--out", space]) == EXIT_OK
    assert run(["family", "--space", space, "--strategy", "lazy", "--source", "bottom", "--sink", "top", "--out", fam]) == EXIT_OK
    assert run(["modulus", "--space", space, "--family", fam, "--p", 2, "--out", cert]) == EXIT_OK
    assert load(cert)["value"] == pytest.approx(0.5, rel=1e-5)
    assert run(["duality-check", cert, "--tol", 1e-4]) == EXIT_OK


def test_curves_alberti_from_certificate(tmp_path):
    space, fam, cert, rep = (tmp_path / f for f in ("g.json", "f.json", "c.json", "r.json"))
    run(["gen", "grid", "--n", 3, "--out", space])
    run(["family", "--space", space, "--out", fam])
    run(["modulus", "--space", space, "--family", fam, "--p", 2, "--out", cert])
    code = run(["alberti", "curves", "--space", space, "--cert", cert, "--cone-w", "1,0", "--cone-t", 0.8, "--out", rep, "--report", tmp_path / "v.json"])
    assert code == EXIT_OK
    assert load(tmp_path / "v.json")["passed"]
    assert len(load(rep)["P"]) == 4


def test_alberti_exit_codes(tmp_path):
    assert run(["alberti", "fubini", "--n", 4, "--report", tmp_path / "a.json"]) == EXIT_OK
    assert run(["alberti", "heisenberg", "--n", 8, "--report", tmp_path / "b.json"]) == EXIT_FAIL
    assert load(tmp_path / "b.json")["maxRelResidual"] > 1e-12


def test_split_exit_codes(tmp_path):
    assert run(["split", "--synthetic", "cantor", "--dirs", "0,1", "--out", tmp_path / "c.json"]) == EXIT_OK
    assert run(["split", "--synthetic", "circle", "--dirs", "0,1", "--out", tmp_path / "o.json"]) == EXIT_FAIL
    assert load(tmp_path / "o.json")["productError"] > 0.1


def test_blowup(tmp_path):
    cloud = tmp_path / "line.json"
    cloud.write_text(json.dumps({"points": [[i / 100, 0.0] for i in range(-300, 301)]}))
    out = tmp_path / "seq.json"
    assert run(["blowup", "--cloud", cloud, "--base", "0,0", "--scales", "1,0.5,0.25", "--R", 1, "--eps", 0.1, "--out", out]) == EXIT_OK
    assert load(out)["cauchy"] is True


def test_gen_variants(tmp_path):
    assert run(["gen", "carpet", "--k", 2, "--out", tmp_path / "c.json"]) == EXIT_OK
    assert run(["gen", "heis", "--n", 4, "--out", tmp_path / "h.json"]) == EXIT_OK
    assert len(load(tmp_path / "h.json")["vertices"]) == 125


def test_errors_exit_one(tmp_path, capsys):
    assert run(["modulus", "--space", tmp_path / "missing.json", "--family", tmp_path / "f.json", "--p", 2]) == EXIT_ERROR
    with pytest.raises(SystemExit) as info:
        main(["modulus", "--space", "x.json", "--family", "f.json"])
    assert info.value.code == EXIT_ERROR
    assert run(["report", "--out-dir", tmp_path]) == EXIT_ERROR
    assert run(["split", "--dirs", "0,1"]) == EXIT_ERROR
    assert "modspace" in capsys.readouterr().err


def test_bad_tolerance_exits_one(tmp_path):
    run(["gen", "grid", "--n", 2, "--out", tmp_path / "g.json"])
    run(["family", "--space", tmp_path / "g.json", "--out", tmp_path / "f.json"])
    assert run(["modulus", "--space", tmp_path / "g.json", "--family", tmp_path / "f.json", "--p", 2, "--tol", 2]) == EXIT_ERROR


def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["report", "--scenario", "slit-vertical", "--k", "1..2", "--seed", 3, "--out-dir", out]) == EXIT_OK
    assert (a / "slit-vertical.json").read_bytes() == (b / "slit-vertical.json").read_bytes()
    assert (a / "slit-vertical.csv").read_text().splitlines()[0] == "k,mesh,all_curves,vertical_lines"
    assert (a / "slit-vertical.svg").exists()
    assert (a / "summary.csv").read_text().splitlines()[1].endswith("True")


def test_report_grid_modulus_override(tmp_path):
    assert run(["report", "--scenario", "grid-modulus", "--p", 2, "--out-dir", tmp_path]) == EXIT_OK
    rows = load(tmp_path / "grid-modulus.json")["details"]["rows"]
    assert {r["p"] for r in rows} == {2.0}
    assert all(r["mod"] == pytest.approx(r["expected"], rel=1e-6) for r in rows)
