import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modspace.curves import CurveFamily, DiscreteCurve, crossing_family
from modspace.errors import EmptyFamilyError, TooLargeError
from modspace.metric import MetricGraph
from modspace.modulus import solve_modulus
from modspace.oracle import brute_force_modulus
from modspace.spaces import grid_square


def path_graph(lengths, mu):
    n = len(lengths)
    return MetricGraph(tuple(range(n + 1)), None, [(i, i + 1) for i in range(n)], lengths, mu)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_single_curve_closed_form(p):
    lengths, mu = [0.5, 1.0, 0.25], [1.0, 0.5, 2.0]
    g = path_graph(lengths, mu)
    fam = CurveFamily(g, (DiscreteCurve(g, (0, 1, 2, 3)),))
    if p == 1:
        expected = min(m / l for l, m in zip(lengths, mu))
    else:
        s = sum(l ** (p / (p - 1)) * m ** (-1 / (p - 1)) for l, m in zip(lengths, mu))
        expected = s ** (1 - p)
    assert brute_force_modulus(g, fam, p) == pytest.approx(expected, rel=0.01)


def test_disjoint_curves_add():
    g = MetricGraph((0, 1, 2, 3), None, [(0, 1), (2, 3)], [1.0, 2.0], [1.0, 3.0])
    fam = CurveFamily(g, (DiscreteCurve(g, (0, 1)), DiscreteCurve(g, (2, 3))))
    assert brute_force_modulus(g, fam, 2.0) == pytest.approx(1.0 + 3.0 / 4.0, rel=0.01)


def test_matches_solver_on_a_square():
    g = grid_square(1)
    fam = crossing_family(g, [g.ids[0]], [g.ids[3]], strategy="all_simple")
    for p in (1.0, 2.0, 3.0):
        exact = solve_modulus(g, fam, p, tol=1e-10).value
        assert brute_force_modulus(g, fam, p) == pytest.approx(exact, rel=0.01)


@settings(max_examples=15)
@given(st.lists(st.booleans(), min_size=4, max_size=4).filter(any), st.lists(st.booleans(), min_size=4, max_size=4).filter(any))
def test_subadditive(a, b):
    g = grid_square(1)
    fam = crossing_family(g, [g.ids[0]], [g.ids[3]], strategy="all_simple")
    fam = fam.union(crossing_family(g, [g.ids[1]], [g.ids[2]], strategy="all_simple"))
    pick = lambda mask: fam.subfamily([i for i, x in enumerate(mask) if x])
    both = fam.subfamily([i for i, (x, y) in enumerate(zip(a, b)) if x or y])
    mod = lambda F: brute_force_modulus(g, F, 2.0)
    assert mod(both) <= (mod(pick(a)) + mod(pick(b))) * 1.01


def test_zero_measure_edge_makes_modulus_zero():
    g = path_graph([1.0, 1.0], [1.0, 0.0])
    fam = CurveFamily(g, (DiscreteCurve(g, (0, 1, 2)),))
    assert brute_force_modulus(g, fam, 2.0) == 0.0


def test_guards():
    g = grid_square(2)
    fam = crossing_family(g, [g.ids[0]], [g.ids[8]], strategy="all_simple")
    with pytest.raises(TooLargeError):
        brute_force_modulus(g, fam, 2.0)
    small = grid_square(1)
    one = crossing_family(small, [small.ids[0]], [small.ids[1]], strategy="all_simple")
    with pytest.raises(ValueError):
        brute_force_modulus(small, one, 2.0, grid_resolution=50)
    with pytest.raises(ValueError):
        brute_force_modulus(small, one, 0.5)
    with pytest.raises(EmptyFamilyError):
        brute_force_modulus(small, CurveFamily(small), 2.0)
