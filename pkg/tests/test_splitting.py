import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modspace.errors import DependentDirectionsError
from modspace.metric import PointCloud, pointed_hausdorff_distance
from modspace.spaces import sierpinski_carpet, slit_carpet_level
from modspace.splitting import (
    cantor_line_cloud,
    cantor_points,
    circle_cloud,
    factor_product,
    lines_through_points,
    plane_cloud,
    rescale,
    tangent_sequence,
    thread_count,
)


def square_cloud(m=8):
    s = np.linspace(0, 1, m + 1)
    X, Y = np.meshgrid(s, s)
    return PointCloud(np.stack([X.ravel(), Y.ravel()], axis=1))


# -- rescaling ------------------------------------------------------------------------


def test_rescale_identity():
    A = square_cloud()
    B = rescale(A, np.zeros(2), 1.0)
    assert np.array_equal(B.points, A.points) and np.array_equal(B.basepoint, [0, 0])


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_rescale_composition(lam, mu):
    A = square_cloud(4)
    a = np.array([0.25, 0.75])
    twice = rescale(rescale(A, a, lam), np.zeros(2), mu)
    once = rescale(A, a, lam * mu)
    assert np.allclose(twice.points, once.points, rtol=1e-12, atol=1e-12)


def test_rescale_about_corner_magnifies():
    A = square_cloud(4)
    assert np.array_equal(rescale(A, [0, 0], 0.5).points, 2 * A.points)
    with pytest.raises(ValueError):
        rescale(A, [0, 0], 0.0)


@pytest.mark.parametrize("lam", [0.5, 0.25, 3.0])
def test_rescale_equivariance(rng, lam):
    A = PointCloud(rng.uniform(-2, 2, (300, 2)))
    B = PointCloud(rng.uniform(-2, 2, (300, 2)))
    a, R = np.array([0.3, -0.2]), 0.8
    lhs = pointed_hausdorff_distance(rescale(A, a, lam), rescale(B, a, lam), R)
    rhs = pointed_hausdorff_distance(PointCloud(A.points - a), PointCloud(B.points - a), lam * R) / lam
    assert lhs == pytest.approx(rhs, rel=1e-12)


# -- lines through points ---------------------------------------------------------------


def test_dense_line_sample_contains_lines():
    step = 0.01
    v = np.array([0.6, 0.8])
    Y = PointCloud(np.arange(-300, 301)[:, None] * step * v)
    ok, frac = lines_through_points(Y, v, 2.0, 2 * step, np.arange(-2, 2, 0.05))
    assert ok and frac == 1.0


def test_cantor_times_line_contains_vertical_lines():
    step = 0.01
    Y = cantor_line_cloud(3, step, 2.0)
    assert lines_through_points(Y, [0, 1], 1.5, step, np.arange(-2, 2, 0.013))[0]
    assert not lines_through_points(Y, [1, 0], 1.5, step, np.arange(-2, 2, 0.013))[0]


def test_circle_contains_no_lines():
    Y = circle_cloud(0.01)
    for v in ([1, 0], [0, 1], [1, 1]):
        assert not lines_through_points(Y, v, 1.5, 0.02, np.linspace(-1, 1, 41))[0]


def test_zero_direction_rejected():
    with pytest.raises(ValueError):
        lines_through_points(square_cloud(), [0, 0], 1.0, 0.1, [0.1])


# -- product factorization ----------------------------------------------------------------


def test_cantor_product_splits():
    step = 0.01
    Y = cantor_line_cloud(3, step, 2.0)
    rep = factor_product(Y, [[0, 1]], 1.5, step, step=step)
    assert rep.product_error <= step
    assert rep.passed
    assert np.allclose(rep.V.T @ rep.V, np.eye(1), atol=1e-12)


def test_plane_splits_fully():
    step = 0.05
    rep = factor_product(plane_cloud(step, 2.0), [[1, 0], [0, 1]], 1.5, step, step=step)
    assert len(rep.Z) == 1 and np.allclose(rep.Z.points, 0)
    assert rep.product_error <= step and rep.passed


def test_slit_carpet_does_not_split():
    # the window of radius 1 about the centre reaches past the square, so the
    # sample cannot be invariant under vertical translation at any level
    for k in (1, 2, 3):
        g, _ = slit_carpet_level(k, 64 / 2 ** (k + 2))
        h = g.meta["mesh"]
        Y = PointCloud(g.coords - [0.5, 0.5])
        rep = factor_product(Y, [[0, 1]], 1.0, 2 * h, step=h)
        assert not rep.passed
        assert rep.product_error >= 10 * h


def test_dependent_directions():
    Y = plane_cloud(0.1, 1.0)
    with pytest.raises(DependentDirectionsError):
        factor_product(Y, [[1, 0], [2, 0]], 1.0, 0.1)
    with pytest.raises(DependentDirectionsError):
        factor_product(Y, [[1, 0], [0, 1], [1, 1]], 1.0, 0.1)


@settings(max_examples=20)
@given(st.lists(st.floats(-0.8, 0.8), min_size=1, max_size=6), st.sampled_from([0.02, 0.05]))
def test_z_recovered_from_a_product_sample(z0, step):
    z0 = np.unique(np.round(np.array(z0) / step) * step)
    ys = np.arange(-np.ceil(2 / step), np.ceil(2 / step) + 1) * step
    pts = np.array([(x, y) for x in z0 for y in ys])
    Y = PointCloud(pts[np.linalg.norm(pts, axis=1) < 2])
    rep = factor_product(Y, [[0, 1]], 1.5, step, step=step)
    Z0 = PointCloud(np.stack([z0, 0 * z0], axis=1))
    Z0 = PointCloud(Z0.points[np.abs(z0) < 1.5])
    assert pointed_hausdorff_distance(rep.Z, Z0, 1.5) <= 2 * step


# -- tangents ---------------------------------------------------------------------------------


def test_half_plane_boundary_is_cauchy():
    step = 0.01
    line = PointCloud(np.stack([np.arange(-400, 401) * step, np.zeros(801)], axis=1))
    _, M, cauchy = tangent_sequence(line, [0, 0], [1.0, 0.5, 0.25, 0.125], 1.0, eps=2 * step / 0.125)
    assert cauchy


def test_carpet_corner_rescalings_are_self_similar():
    g = sierpinski_carpet(3, 5)
    A = PointCloud(g.coords)
    scales = [1.0, 1 / 3, 1 / 9]
    clouds, M, _ = tangent_sequence(A, [0, 0], scales, 1.0)
    mesh = lambda lam: 3.0**-5 / lam
    for j in range(len(scales) - 1):
        assert M[j, j + 1] <= 2 * mesh(scales[j + 1])


def test_moved_basepoint_stays_near_the_tangent_list():
    step = 3.0**-7
    xs = cantor_points(7)
    ys = np.arange(-1, 1 + step / 2, step)
    A = PointCloud(np.array([(x, y) for x in xs for y in ys]))
    scales = [1 / 3, 1 / 9, 1 / 27]
    clouds, _, _ = tangent_sequence(A, [0, 0], scales, 1.0)
    T = rescale(A, [0, 0], scales[-1])
    moved = rescale(T, [2, 0], 1 / 3).window(1.5)
    mesh = step / scales[-1] * 3
    assert min(pointed_hausdorff_distance(moved, C, 1.0) for C in clouds) <= 3 * mesh


def test_tangent_sequence_guards():
    A = square_cloud()
    with pytest.raises(ValueError):
        tangent_sequence(A, [0, 0], [0.5, 1.0], 1.0)
    with pytest.raises(ValueError):
        tangent_sequence(A, [0, 0], [1.0, -0.5], 1.0)
    _, M, cauchy = tangent_sequence(A, [0.3, 0.4], [1.0, 0.7, 0.2], 1.0)
    assert cauchy is None and M.shape == (3, 3) and np.allclose(M, M.T)


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("MODSPACE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("MODSPACE_THREADS", "zero")
    assert thread_count() >= 1
    A = square_cloud()
    monkeypatch.setenv("MODSPACE_THREADS", "1")
    _, serial, _ = tangent_sequence(A, [0, 0], [1.0, 0.5, 0.25], 1.0)
    monkeypatch.setenv("MODSPACE_THREADS", "4")
    _, parallel, _ = tangent_sequence(A, [0, 0], [1.0, 0.5, 0.25], 1.0)
    assert np.array_equal(serial, parallel)
