import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modspace.curves import CurveFamily, DiscreteCurve, crossing_family, lazy_crossing_family, side_vertices
from modspace.errors import EmptyFamilyError, NonconvergenceError
from modspace.metric import MetricGraph
from modspace.modulus import (
    ModulusCertificate,
    dual_exponent,
    eta_measure,
    is_admissible,
    solve_modulus,
    verify_duality,
)
from modspace.spaces import grid_square


def kite():
    edges = [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)]
    lengths = [1.0, 0.5, 0.75, 1.25, 0.4]
    mu = [1.0, 2.0, 0.5, 1.5, 0.8]
    coords = np.array([(0, 0), (0.5, 0.5), (0.5, -0.5), (1, 0)], float)
    return MetricGraph((0, 1, 2, 3), coords, edges, lengths, mu)


# Mod_p of the four simple 0 -> 3 paths in the kite, from an independent
# conic solver (scripts/freeze_oracle_values.py); p = 1 is exactly 28/15.
KITE_MODULUS = {1.0: 28 / 15, 1.5: 1.771527262911, 2.0: 1.484793605271, 3.0: 0.923331968647}


def kite_family(g):
    return crossing_family(g, [0], [3], strategy="all_simple")


def path_graph(n, length, mu):
    return MetricGraph(tuple(range(n + 1)), None, [(i, i + 1) for i in range(n)], [length] * n, [mu] * n)


def test_dual_exponent():
    assert dual_exponent(2) == 2
    assert dual_exponent(3) == 1.5
    assert dual_exponent(1) == math.inf
    with pytest.raises(ValueError):
        dual_exponent(0.5)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("m,length,w", [(1, 1.0, 1.0), (3, 0.5, 2.0), (5, 0.2, 0.1)])
def test_single_curve_closed_form(p, m, length, w):
    g = path_graph(m, length, w)
    fam = CurveFamily(g, (DiscreteCurve(g, tuple(range(m + 1))),))
    cert = solve_modulus(g, fam, p, tol=1e-10)
    assert cert.value == pytest.approx(w * m ** (1 - p) * length ** (-p), rel=1e-8)
    if p > 1:
        assert np.allclose(cert.rho, 1 / (m * length))
    report = verify_duality(cert, tol=1e-6)
    assert report.passed and report.norm_residual <= 1e-8


@pytest.mark.parametrize("p", sorted(KITE_MODULUS))
def test_kite_against_frozen_values(p):
    g = kite()
    cert = solve_modulus(g, kite_family(g), p, tol=1e-10)
    assert cert.value == pytest.approx(KITE_MODULUS[p], rel=1e-7)
    assert cert.lower_bound <= cert.value * (1 + 1e-12)
    assert cert.gap <= 1e-9 * cert.value
    assert verify_duality(cert, tol=1e-5).passed


def test_kite_p1_dual_is_a_probability_measure():
    g = kite()
    cert = solve_modulus(g, kite_family(g), 1.0, tol=1e-10)
    assert cert.dual.sum() == pytest.approx(1.0)
    assert np.max(cert.f[g.mu > 0]) == pytest.approx(15 / 28, rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_grid_monotone_family(n, p):
    g = grid_square(n)
    fam = crossing_family(g, side_vertices(g, "left"), side_vertices(g, "right"))
    cert = solve_modulus(g, fam, p, tol=1e-10)
    # n + 1 disjoint unit lines of n edges, each of measure 1 / (2 n^2)
    assert cert.value == pytest.approx((n + 1) / (2 * n), rel=1e-8)


@pytest.mark.parametrize("n", [8, 16])
def test_grid_monotone_family_near_continuum_value(n):
    # the continuum rectangle has modulus 1; with edge measure 1/(2 n^2)
    # the discrete value is (n + 1)/(2n), about half of that
    g = grid_square(n)
    fam = crossing_family(g, side_vertices(g, "left"), side_vertices(g, "right"))
    assert solve_modulus(g, fam, 2.0, tol=1e-10).value == pytest.approx(1.0, rel=0.15)


@pytest.mark.parametrize("n", [8, 16])
def test_grid_with_horizontal_lebesgue_measure_is_near_one(n):
    g = grid_square(n)
    horizontal = np.abs(g.coords[g.edges[:, 0], 1] - g.coords[g.edges[:, 1], 1]) < 1e-12
    g = g.with_measure(np.where(horizontal, 1 / n**2, 0.5 / n**2))
    fam = crossing_family(g, side_vertices(g, "left"), side_vertices(g, "right"))
    assert solve_modulus(g, fam, 2.0, tol=1e-10).value == pytest.approx(1.0, rel=0.15)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_lazy_family_methods_agree(p):
    g = grid_square(4)
    fam = lazy_crossing_family(g, side_vertices(g, "left"), side_vertices(g, "right"))
    a = solve_modulus(g, fam, p, tol=1e-9, method="potential")
    b = solve_modulus(g, fam, p, tol=1e-9, method="cutting_plane")
    assert a.value == pytest.approx(b.value, rel=1e-6)
    assert verify_duality(a, tol=1e-4).passed
    assert verify_duality(b, tol=1e-4).passed


def test_lazy_family_dominates_monotone_family():
    g = grid_square(4)
    left, right = side_vertices(g, "left"), side_vertices(g, "right")
    lazy = solve_modulus(g, lazy_crossing_family(g, left, right), 2.0, tol=1e-9).value
    mono = solve_modulus(g, crossing_family(g, left, right), 2.0, tol=1e-9).value
    assert lazy >= mono - 1e-9


subsets = st.lists(st.booleans(), min_size=4, max_size=4).filter(any)


@settings(max_examples=25)
@given(subsets, subsets, st.sampled_from([1.5, 2.0, 3.0]))
def test_monotone_and_subadditive(a, b, p):
    g = kite()
    fam = kite_family(g)
    A = fam.subfamily([i for i, x in enumerate(a) if x])
    B = fam.subfamily([i for i, x in enumerate(b) if x])
    AB = fam.subfamily([i for i, (x, y) in enumerate(zip(a, b)) if x or y])
    mod = lambda F: solve_modulus(g, F, p, tol=1e-10).value
    mA, mB, mAB = mod(A), mod(B), mod(AB)
    assert mA <= mAB * (1 + 1e-8) and mB <= mAB * (1 + 1e-8)
    assert mAB <= (mA + mB) * (1 + 1e-8)
    assert mAB <= KITE_MODULUS[p] * (1 + 1e-7)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_measure_and_length_scaling(p):
    g = kite()
    base = solve_modulus(g, kite_family(g), p, tol=1e-10).value
    g2 = g.with_measure(3 * g.mu)
    assert solve_modulus(g2, kite_family(g2), p, tol=1e-10).value == pytest.approx(3 * base, rel=1e-7)
    g3 = g.with_lengths(2 * g.lengths)
    assert solve_modulus(g3, kite_family(g3), p, tol=1e-10).value == pytest.approx(2.0**-p * base, rel=1e-7)


def test_is_admissible_examples():
    g = path_graph(2, 0.5, 1.0)
    fam = CurveFamily(g, (DiscreteCurve(g, (0, 1, 2)), DiscreteCurve(g, (0, 1))))
    ok, worst, value = is_admissible([1.0, 1.0], fam)
    assert not ok and worst.vertices == (0, 1) and value == 0.5
    assert is_admissible([2.0, 0.0], fam)[0]
    assert is_admissible([1.9, 0.0], fam, tol=0.05)[0]
    with pytest.raises(ValueError):
        is_admissible([1.0, 1.0], fam, tol=-1)
    with pytest.raises(EmptyFamilyError):
        is_admissible([1.0, 1.0], CurveFamily(g))


def test_eta_measure_examples():
    g = path_graph(2, 0.5, 1.0)
    curves = [DiscreteCurve(g, (0, 1, 2)), DiscreteCurve(g, (1, 2, 1))]
    assert eta_measure([1.0, 0.0], curves, g).tolist() == [0.5, 0.5]
    assert eta_measure([0.5, 2.0], curves, g).tolist() == [0.25, 2.25]
    with pytest.raises(ValueError):
        eta_measure([-1.0, 0.0], curves, g)


def test_zero_measure_edges_are_capped():
    g = MetricGraph((0, 1, 2), None, [(0, 1), (1, 2), (0, 2)], [1.0, 1.0, 1.0], [1.0, 1.0, 0.0])
    free = CurveFamily(g, (DiscreteCurve(g, (0, 2)),))
    cert = solve_modulus(g, free, 2.0)
    assert cert.value == 0.0
    assert cert.capped_edges.tolist() == [2] and cert.notes
    assert verify_duality(cert).passed
    fam = CurveFamily(g, (DiscreteCurve(g, (0, 2)), DiscreteCurve(g, (0, 1, 2))))
    assert solve_modulus(g, fam, 2.0, tol=1e-10).value == pytest.approx(0.5, rel=1e-8)


def test_certificate_json_round_trip(tmp_path):
    g = kite()
    cert = solve_modulus(g, kite_family(g), 2.0, tol=1e-10)
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(cert.to_json_dict()))
    obj = json.loads(path.read_text())
    for back in (ModulusCertificate.from_json_dict(obj, g), ModulusCertificate.from_json_dict(obj)):
        assert back.value == cert.value
        assert np.array_equal(back.rho, cert.rho)
        assert verify_duality(back, tol=1e-5).to_json_dict() == verify_duality(cert, tol=1e-5).to_json_dict()


def test_verify_duality_detects_tampering():
    g = kite()
    cert = solve_modulus(g, kite_family(g), 2.0, tol=1e-10)
    cert.rho = cert.rho * 1.01
    report = verify_duality(cert, tol=1e-4)
    assert not report.pointwise_ok and not report.beurling_ok and not report.passed


def test_p1_skips_pointwise_identity():
    g = kite()
    report = verify_duality(solve_modulus(g, kite_family(g), 1.0, tol=1e-10), tol=1e-6)
    assert report.pointwise_residual is None and report.skipped and report.passed


def test_empty_family():
    g = kite()
    with pytest.raises(EmptyFamilyError):
        solve_modulus(g, CurveFamily(g), 2.0)


def test_iteration_cap_raises_with_bounds():
    g = grid_square(8)
    g = g.with_measure(np.random.default_rng(0).uniform(0.1, 2.0, g.n_edges))
    fam = lazy_crossing_family(g, side_vertices(g, "left"), side_vertices(g, "right"))
    with pytest.raises(NonconvergenceError) as info:
        solve_modulus(g, fam, 2.0, tol=1e-12, max_iter=1, batch=1, method="cutting_plane")
    assert info.value.lower <= info.value.upper


def test_unknown_method():
    g = kite()
    with pytest.raises(ValueError):
        solve_modulus(g, kite_family(g), 2.0, method="magic")
