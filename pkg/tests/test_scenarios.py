import pytest

from modspace.report import line_chart, to_csv
from modspace.scenarios import criterion_names, list_configs, load_config, run_scenario


def test_every_criterion_has_a_config():
    names = criterion_names()
    assert sorted(names) == list(range(1, 11))
    assert set(names.values()) <= set(list_configs())
    for number, name in names.items():
        assert load_config(name)["criterion"] == number


def test_report_only_scenarios_have_no_criterion():
    assert load_config("slit-vertical")["criterion"] is None
    assert load_config("grid-modulus")["criterion"] is None


def test_unknown_config():
    with pytest.raises(KeyError):
        load_config("no-such-scenario")


def test_scalar_override_wraps_into_list():
    res = run_scenario("grid-modulus", grid_n=4, p=3.0)
    assert [(r["n"], r["p"]) for r in res.details["rows"]] == [(4, 3.0)]
    assert res.passed and res.number is None
    assert res.line().startswith("scenario grid-modulus")


def test_seed_override_changes_samples():
    a = run_scenario("dee-distance", seed=1, triples=50)
    b = run_scenario("dee-distance", seed=1, triples=50)
    c = run_scenario("dee-distance", seed=2, triples=50)
    assert a.details == b.details
    assert a.details != c.details


def test_slit_vertical_rows():
    res = run_scenario("slit-vertical", k=[1, 2])
    rows = res.details["rows"]
    assert [r["k"] for r in rows] == [1, 2]
    assert all(r["all_curves"] == pytest.approx(0.5, rel=1e-5) for r in rows)
    assert all(r["vertical_lines"] < r["all_curves"] for r in rows)


def test_csv_and_svg_output():
    text = to_csv([{"k": 1, "v": 0.5}, {"k": 2, "v": 0.25}])
    assert text == "k,v\n1,0.5\n2,0.25\n"
    assert to_csv([]) == ""
    svg = line_chart({"a": ([1, 2, 3], [0.1, 0.2, 0.15]), "b & c": ([1, 3], [0.3, 0.05])}, "t", "x", "y")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2 and "b &amp; c" in svg
    with pytest.raises(ValueError):
        line_chart({"empty": ([], [])})
