from fractions import Fraction as F

import numpy as np
import pytest

from diophlab.density import (
    box_hits,
    cell_grid,
    check_hypotheses,
    coverage_scan,
    omega_region,
    scan_cells,
    subcoll_filter,
    subspaces_meet_in_box,
    total_density_probe,
    _pairs_family,
    collect_pairs,
)
from diophlab.errors import AnchorMissesWindow, BadStructuralData, DimensionMismatch, SigmaTooLarge
from diophlab.geometry import BoxRegion, ResonantSubspace, subspace_distance
from diophlab.sets import Lattice, example_set, parse_generator

Z = Lattice(1)
Z2 = parse_generator("lattice(2,nonzero)")
UNIT = BoxRegion(1, 2, (0, 0), (1, 1))


def _centres(box, h):
    return cell_grid(box, h)[1]


def test_full_lattice_covers_unit_square():
    assert coverage_scan(Z, Z2, UNIT, 1 / 32, 10).fraction == 1.0


def test_horizontal_lines_only():
    rep = coverage_scan(Z, parse_generator("explicit([[0,1]])"), UNIT, 1 / 32, 10)
    # oracle: cell centres within h/2 of an integer height y
    y = _centres(UNIT, 1 / 32)[:, 1]
    expect = np.mean(np.abs(y - np.round(y)) <= 1 / 64 + 1e-15)
    assert rep.fraction == pytest.approx(expect) == pytest.approx(0.0625)


def _strip_oracle(box, h, bound):
    """Explicit line list ``x + k y = p`` with ``p in {0, 1}`` and ``|k| <= bound``."""
    c = _centres(box, h)
    best = np.full(len(c), np.inf)
    for k in range(-bound, bound + 1):
        for p in (0, 1):
            d = np.abs(c[:, 0] + k * c[:, 1] - p) / np.hypot(1, k)
            best = np.minimum(best, d)
    return np.mean(best <= h / 2 * (1 + 1e-12))


def test_subcollection_strip_stabilises_below_one():
    S = example_set("subcoll")
    strip = BoxRegion(1, 2, (0, F(1, 10)), (1, F(2, 10)))
    fr = [coverage_scan(Z, S, strip, 1 / 32, b, pair_filter=subcoll_filter(0, 1, closed=True)).fraction
          for b in (50, 100, 200)]
    assert fr[0] == fr[1] == fr[2] == pytest.approx(_strip_oracle(strip, 1 / 32, 200))
    assert fr[-1] == pytest.approx(0.96875)
    assert coverage_scan(Z, S, strip, 1 / 32, 100, pair_filter=subcoll_filter(0, 1)).fraction == 0.0


def test_coverage_monotone_in_bound():
    box = BoxRegion(1, 2, (0, 0), (1, 1))
    prev = 0.0
    for b in (1, 2, 3, 5, 8):
        f = coverage_scan(Z, Z2, box, 1 / 32, b).fraction
        assert f >= prev
        prev = f


def test_parallel_scan_is_identical():
    S = example_set("subcoll")
    box = BoxRegion(1, 2, (0, 0), (1, 1))
    pairs = collect_pairs(Z, S, box, 40, 1 / 256)
    fam = _pairs_family(pairs, 1, 2)
    cells = _centres(box, 1 / 64)
    a = scan_cells(fam, cells, 1 / 128, jobs=1)
    b = scan_cells(fam, cells, 1 / 128, jobs=3, chunk=500)
    assert np.array_equal(a, b)
    r1 = coverage_scan(Z, Z2, box, 1 / 128, 6, jobs=1)
    r3 = coverage_scan(Z, Z2, box, 1 / 128, 6, jobs=3)
    assert r1.to_json() == r3.to_json()


def test_coverage_errors():
    with pytest.raises(DimensionMismatch):
        coverage_scan(Z, Z, UNIT, 1 / 8, 5)
    with pytest.raises(ValueError):
        cell_grid(UNIT, 0)


def test_box_hits_exact():
    # x + y ranges over [1, 3] on the box
    box = BoxRegion(1, 2, (F(1, 2), F(1, 2)), (F(3, 2), F(3, 2)))
    hits, ex = box_hits(box, [((1,), (1, 1)), ((5,), (1, 1)), ((2,), (1, 1))])
    assert hits == 2 and ex[0] == ((1,), (1, 1))
    hits, _ = box_hits(box, [((1,), (1, 1)), ((2,), (1, 1)), ((3,), (1, 1))], open_box=True)
    assert hits == 1


def test_total_density_examples():
    W = BoxRegion(1, 2, (0, F(-1, 10)), (1, F(1, 10)))
    assert total_density_probe(Z, Z2, ((0,), (0, 1)), W, 1 / 16, 20).found
    axes = example_set("axes")
    assert total_density_probe(Z, axes, ((F(1, 2),), (1, 0)), UNIT, 1 / 16, 50).found
    with pytest.raises(AnchorMissesWindow):
        total_density_probe(Z, Z2, ((5,), (0, 1)), W, 1 / 16, 20)


def test_subspaces_meet_in_box():
    box = BoxRegion(1, 2, (0, 0), (1, 1))
    L1 = ResonantSubspace.from_pair((1,), (1, 1))
    L2 = ResonantSubspace.from_pair((0,), (1, -1))
    L3 = ResonantSubspace.from_pair((3,), (1, 1))
    assert subspaces_meet_in_box(L1, L2, box)
    assert not subspaces_meet_in_box(L3, L2, box)


def test_omega_region():
    L = ResonantSubspace.from_pair((0,), (0, 1))
    Y0 = np.array([[0.5, 0.0]])
    om = omega_region(L, Y0, 0.01, 0.05)
    assert om.contains(np.array([[0.505, 0.0]]))
    assert not om.contains(np.array([[0.51, 0.0]]))
    assert not om.contains(np.array([[0.5, 0.01]]))
    rng = np.random.default_rng(1)
    for Y in om.sample(1000, seed=2):
        r = om.inner_radius(Y)
        assert r > 0
        D = rng.standard_normal(Y.shape)
        assert om.contains(Y + D / np.linalg.norm(D) * r * rng.random())
    with pytest.raises(SigmaTooLarge):
        omega_region(L, Y0, 0.025, 0.05)
    with pytest.raises(ValueError):
        omega_region(L, np.array([[0.5, 0.2]]), 0.01, 0.05)


def test_check_hypotheses_examples():
    assert check_hypotheses("not_on_line", Z, example_set("axes"), {"k": 0}, eps=0.05, bound=1000)["passed"]
    rays = check_hypotheses("not_on_line", Z, parse_generator("rays([[1,1]],n1)"), {"k": 0}, eps=0.05, bound=1000)
    assert not rays["passed"]
    assert [c["clause"] for c in rays["clauses"] if not c["passed"]] == ["nonprop"]
    par = check_hypotheses("ch", Z, example_set("parabolas"),
                           {"H_normal": [1], "Theta2": [[0, 1], [0, -1]]}, eps=0.05, bound=2000)
    assert par["passed"]


def test_check_hypotheses_errors():
    with pytest.raises(BadStructuralData):
        check_hypotheses("nope", Z, Z2, {})
    with pytest.raises(BadStructuralData):
        check_hypotheses("not_on_line", Z, Z2, {"k": 1})
    with pytest.raises(BadStructuralData):
        check_hypotheses("any_k_a", Z, Z2, {"k": 0, "H": [[1]]})
    with pytest.raises(BadStructuralData):
        check_hypotheses("ch", Z, Z2, {"H_normal": [1, 0]})
