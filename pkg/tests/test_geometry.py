import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from diophlab.core import Mat
from diophlab.errors import DimensionMismatch, NotOnSubspace, ParallelSubspaces, ZeroDenominatorVector
from diophlab.geometry import (
    BoxRegion,
    ResonantSubspace,
    TPoint,
    intersect_two,
    jacobian_probe,
    nearest_point_on,
    project,
    scale_check,
    subspace_distance,
    unique_pair_locator,
)

ints = st.integers(-20, 20)


def L(x, theta):
    return ResonantSubspace.from_tpoint(x, theta)


def test_project_examples():
    t = project((2,), (3, 4))
    assert t.x == pytest.approx((0.4,)) and t.theta == pytest.approx((0.6, 0.8))
    assert project((0, 0), (0, 1)) == TPoint((0.0, 0.0), (0.0, 1.0))
    neg = project((-2,), (-3, -4))
    assert neg.theta == pytest.approx((-0.6, -0.8))
    assert neg.canonical().close_to(t)
    with pytest.raises(ZeroDenominatorVector):
        project((1,), (0, 0))


def test_scale_check_examples():
    assert scale_check((1,), (1, 1), 3)
    assert scale_check((0,), (0, 2), -1)
    assert scale_check((1, 2), (2, 0, 0), 0.5)


@given(st.lists(ints, min_size=1, max_size=3), st.lists(ints, min_size=1, max_size=4),
       st.integers(-9, 9))
def test_scaling_invariance(p, q, c):
    assume(any(q) and c != 0)
    assert scale_check(tuple(p), tuple(q), c)
    a = ResonantSubspace.from_pair(tuple(p), tuple(q))
    b = ResonantSubspace.from_pair(tuple(c * x for x in p), tuple(c * x for x in q))
    assert a.same_as(b)


def test_distance_examples():
    assert subspace_distance([[1, 0]], L((0,), (0, 1))) == 0
    assert subspace_distance([[1, 0]], L((1,), (0, 1))) == 1
    assert subspace_distance([[3, 4]], L((0,), (0.6, 0.8))) == pytest.approx(5)
    with pytest.raises(DimensionMismatch):
        subspace_distance([[1, 0, 0]], L((0,), (0, 1)))


def test_nearest_point_examples():
    assert nearest_point_on(Mat.of([[1.0, 0.0]]), L((1,), (0, 1))).to_rows() == [[1.0, 1.0]]
    A = Mat.of([[3.0, 4.0]])
    assert np.allclose(nearest_point_on(A, L((0,), (0.6, 0.8))).to_array(), 0, atol=1e-12)
    on = Mat.of([[Fraction(1, 2), 0]])
    assert nearest_point_on(on, ResonantSubspace.from_pair((1,), (2, 0))) == on


@given(st.lists(ints, min_size=2, max_size=2), st.lists(ints, min_size=6, max_size=6), ints)
def test_nearest_point_exact_lands_on_subspace(q3, a, p):
    q = tuple(q3) + (1,)
    Lx = ResonantSubspace.from_pair((p, -p), q)
    A = Mat.of([[Fraction(x, 7) for x in a[:3]], [Fraction(x, 5) for x in a[3:]]])
    Y = nearest_point_on(A, Lx)
    assert Lx.contains(Y)
    assert subspace_distance(Y.as_float(), Lx) <= 1e-10
    assert math.isclose(float(np.linalg.norm(A.to_array() - Y.to_array())),
                        subspace_distance(A.as_float(), Lx), rel_tol=1e-9, abs_tol=1e-12)


def test_product_structure_of_distance():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m, n = 3, 4
        th = rng.normal(size=n)
        th /= np.linalg.norm(th)
        x = rng.normal(size=m)
        A = rng.normal(size=(m, n))
        rows = [subspace_distance(A[i:i + 1], L((x[i],), th)) for i in range(m)]
        assert subspace_distance(A, L(x, th)) == pytest.approx(math.hypot(*rows))


def test_intersect_two_example():
    L1, L2 = L((0,), (1, 0)), L((0.6,), (0, 1))
    Y = intersect_two([[0, 0.5]], [[0.1, 0.6]], L1, L2)
    assert np.allclose(Y.to_array(), [[0, 0.6]])
    assert np.linalg.norm(Y.to_array() - [[0, 0.5]]) <= math.sqrt(0.02)
    same = intersect_two([[0, 0.6]], [[0, 0.6]], L1, L2)
    assert np.allclose(same.to_array(), [[0, 0.6]])


def test_intersect_two_errors():
    with pytest.raises(ParallelSubspaces):
        intersect_two([[0, 0]], [[0, 1]], L((0,), (1, 0)), L((0,), (-1, 0)))
    with pytest.raises(NotOnSubspace):
        intersect_two([[1, 0]], [[0, 0.6]], L((0,), (1, 0)), L((0.6,), (0, 1)))


def test_unique_pair_locator_examples():
    tp, flag = unique_pair_locator([[1, 2]], [], [(1, 0), (0, 1)])
    assert flag == "unique"
    assert tp.close_to(TPoint((0.0,), (2 / math.sqrt(5), -1 / math.sqrt(5))))
    tp, flag = unique_pair_locator([[3, 4]], [(1,)], [(1, 0)])
    assert flag == "unique" and tp.close_to(TPoint((3.0,), (1.0, 0.0)))
    with pytest.raises(DimensionMismatch):
        unique_pair_locator(np.eye(2), [], [(1, 0), (0, 1), (1, 1)])


def test_unique_pair_locator_solution_is_resonant():
    rng = np.random.default_rng(3)
    for _ in range(30):
        A = rng.normal(size=(2, 3))
        tp, flag = unique_pair_locator(A, [(1, 0)], [(1, 0, 0), (0, 1, 0)])
        assert flag == "unique"
        assert np.allclose(A @ np.array(tp.theta), tp.x, atol=1e-9)
        assert abs(tp.theta[2]) < 1e-12 and abs(tp.x[1]) < 1e-9


@pytest.mark.parametrize("m,n,k", [(1, 2, 1), (2, 3, 1), (2, 2, 1), (3, 4, 2)])
def test_jacobian_probe(m, n, k):
    rep = jacobian_probe(m, n, k, trials=30, seed=2)
    assert rep["max_rel_error"] < 1e-4 and rep["nonzero_fraction"] == 1.0


def test_jacobian_probe_k0_is_identity():
    rep = jacobian_probe(2, 3, 0, trials=5, seed=0)
    assert rep["analytic"] == [1.0] * 5
    assert rep["numeric"] == pytest.approx([1.0] * 5, rel=1e-6)


def test_jacobian_probe_seeded_repeatable():
    assert jacobian_probe(1, 2, 1, 10, 4) == jacobian_probe(1, 2, 1, 10, 4)


def test_box_region():
    b = BoxRegion.around(Mat.of([[Fraction(1, 2), 0]]), Fraction(1, 4))
    assert b.contains(Mat.of([[Fraction(3, 4), Fraction(-1, 4)]]))
    assert not b.contains(Mat.of([[1, 0]]))
    assert b.inside(BoxRegion(1, 2, (0, -1), (1, 1)))
    with pytest.raises(ValueError):
        BoxRegion(1, 1, (1,), (0,))
