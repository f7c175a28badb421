import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modspace.heisenberg import (
    HeisenbergPoint,
    alpha_curve,
    beta_curve,
    h_dilate,
    h_dist,
    h_inv,
    h_mul,
    heisenberg_lattice,
    koranyi_norm,
    sweep_jacobian,
)

coord = st.floats(-2, 2, allow_nan=False)
points = st.tuples(coord, coord, coord).map(np.array)


def test_identity_element():
    p = np.array([0.3, -1.2, 2.5])
    assert np.array_equal(h_mul(p, np.zeros(3)), p)


def test_group_law_examples():
    assert h_mul([1, 0, 0], [0, 1, 0]).tolist() == [1, 1, 0.5]
    assert h_mul([0, 1, 0], [1, 0, 0]).tolist() == [1, 1, -0.5]


def test_point_type_uses_the_group_law():
    p, q = HeisenbergPoint(1, 0, 0), HeisenbergPoint(0, 1, 0)
    assert p * q == HeisenbergPoint(1, 1, 0.5)
    assert p.inv() == HeisenbergPoint(-1, 0, 0)


def test_inverse_examples():
    assert h_inv([0, 0, 0]).tolist() == [0, 0, 0]
    assert h_inv([1, 2, 3]).tolist() == [-1, -2, -3]
    assert h_mul([1, 2, 3], h_inv([1, 2, 3])).tolist() == [0, 0, 0]


def test_norm_examples():
    assert koranyi_norm([1, 0, 0]) == 1.0
    assert koranyi_norm([0, 0, 1]) == 2.0


def test_dilation_examples():
    assert h_dilate(2, [1, 1, 1]).tolist() == [2, 2, 4]
    p = np.array([0.4, -0.1, 0.7])
    assert np.array_equal(h_dilate(1, p), p)
    with pytest.raises(ValueError):
        h_dilate(0, p)


@given(points, points, points)
def test_associativity(p, q, r):
    assert np.allclose(h_mul(h_mul(p, q), r), h_mul(p, h_mul(q, r)), rtol=0, atol=1e-12)


@given(points)
def test_inverse_both_sides_and_norm_symmetry(p):
    assert np.abs(h_mul(h_inv(p), p)).max() <= 1e-12
    assert koranyi_norm(p) == pytest.approx(koranyi_norm(h_inv(p)), abs=1e-12)


@given(points, points, points)
def test_left_invariance(p, q, r):
    assert h_dist(h_mul(r, p), h_mul(r, q)) == pytest.approx(h_dist(p, q), abs=1e-12)


@given(points, points, st.floats(0.05, 10))
def test_dilation_homomorphism_and_homogeneity(p, q, t):
    lhs = h_dilate(t, h_mul(p, q))
    rhs = h_mul(h_dilate(t, p), h_dilate(t, q))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert h_dist(h_dilate(t, p), h_dilate(t, q)) == pytest.approx(t * h_dist(p, q), rel=1e-12, abs=1e-12)


def test_distance_is_a_metric_on_random_triples(rng):
    P = rng.uniform(-1, 1, (1000, 3, 3))
    d = lambda a, b: h_dist(P[:, a], P[:, b])
    assert np.all(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12)
    assert np.allclose(d(0, 1), d(1, 0), atol=1e-15)


def test_curves_are_left_translates_of_axes():
    a, b, t = 0.3, -0.2, np.linspace(-0.5, 0.5, 7)
    assert np.allclose(alpha_curve(a, b, t), h_mul([0, a, b], np.stack([t, 0 * t, 0 * t], axis=1)))
    assert np.allclose(beta_curve(a, b, t), h_mul([a, 0, b], np.stack([0 * t, t, 0 * t], axis=1)))


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_alpha_beta_unit_speed_geodesics(a, b, s, t):
    for curve in (alpha_curve, beta_curve):
        pts = curve(a, b, np.array([s, t]))
        assert abs(h_dist(pts[0], pts[1]) - abs(s - t)) <= 1e-12


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_sweeps_preserve_volume(a, b, t):
    assert sweep_jacobian("alpha", a, b, t) == pytest.approx(1, abs=1e-10)
    assert sweep_jacobian("beta", a, b, t) == pytest.approx(1, abs=1e-10)


def test_lattice_counts_and_volume():
    lat = heisenberg_lattice(4, 1.5)
    assert len(lat.points) == 125
    assert lat.total_measure == pytest.approx(27.0, abs=1e-12)


def test_lattice_ball_measure_scales_like_r4():
    n, s = 40, 1.0
    lat = heisenberg_lattice(n, s)
    radii = np.linspace(4 / n, s / 2, 6)
    ratios = [lat.ball_measure(np.zeros(3), r) / r**4 for r in radii]
    assert max(ratios) / min(ratios) <= 4


KORANYI_UNIT_BALL_VOLUME = np.pi**2 / 8  # pi * int_0^1 rho sqrt(1 - rho^4) d rho


@pytest.mark.parametrize("r", [0.1, 0.2, 0.35, 0.5])
def test_ball_volume_matches_closed_form(r):
    lat = heisenberg_lattice(40, 1.0)
    assert lat.ball_volume(np.zeros(3), r) / r**4 == pytest.approx(KORANYI_UNIT_BALL_VOLUME, rel=0.02)


def test_ball_volume_is_left_invariant():
    lat = heisenberg_lattice(40, 1.0)
    c = np.array([0.2, -0.1, 0.05])
    assert lat.ball_volume(c, 0.3, refine=16) == pytest.approx(lat.ball_volume(np.zeros(3), 0.3, refine=16), rel=0.01)


def test_ball_volume_ratio_stable_across_scales():
    n, s = 40, 1.0
    lat = heisenberg_lattice(n, s)
    ratios = [lat.ball_volume(np.zeros(3), r) / r**4 for r in np.linspace(4 / n, s / 2, 6)]
    assert max(ratios) / min(ratios) <= 4
