import math

import numpy as np
import pytest
import sympy

from diophlab.errors import AnnulusViolation, FewerThanTwoPoints
from diophlab.logdensity import (
    annulus_test,
    gap_counterexample,
    gap_ratio_profile,
    geometric_grid,
    logdense_in_subspace,
    logdense_test,
    prime_ratio_onset,
    sphere_directions,
)
from diophlab.sets import Lattice, PolyValues, Powers, Primes, Product, Translate, parse_generator


def test_integers_pass_with_small_onset():
    r = logdense_test(Lattice(1), (1.0,), 0.05, 10, 10 ** 4)
    assert r.passed and r.onset <= 20 and not r.misses()


def test_powers_of_two_miss_forever():
    r = logdense_test(Powers(2), (1.0,), 0.2, 10, 10 ** 6)
    assert not r.passed
    miss = r.misses()
    assert max(miss) > 10 ** 5 and len(miss) > 10
    for C in miss:
        k = math.floor(math.log2(C))
        lo, hi = 2 ** k, 2 ** (k + 1)
        assert C - lo >= 0.2 * C and hi - C >= 0.2 * C


def test_primes_pass_on_window():
    assert logdense_test(Primes(), (1.0,), 0.05, 10 ** 3, 10 ** 6).passed


def test_prime_ratio_onset_against_sympy():
    ps = list(sympy.primerange(2, 10 ** 5))
    onset = max(b for a, b in zip(ps, ps[1:]) if b / a >= 1.05)
    assert onset == 223
    assert prime_ratio_onset(10 ** 5, 0.05) == onset


def test_grid_is_geometric_and_ratio_checked():
    g = geometric_grid(10, 1000, 1.1)
    r = np.diff(np.log(g))
    assert np.all(r > 0) and np.allclose(r[:-1], math.log(1.1))
    with pytest.raises(ValueError):
        logdense_test(Lattice(1), (1.0,), 0.05, 10, 100, grid_ratio=1.2)
    with pytest.raises(ValueError):
        logdense_test(Lattice(1), (2.0,), 0.05, 10, 100)
    with pytest.raises(ValueError):
        logdense_test(Lattice(1), (1.0,), 0.0, 10, 100)


def test_gap_ratio_profiles():
    z = gap_ratio_profile(Lattice(1), (1.0,), 0.5, 100)
    assert z["ratios"] == pytest.approx([(k + 1) / k for k in range(1, 100)])
    assert z["tail_max"] < 1.03
    p3 = gap_ratio_profile(Powers(3), (1.0,), 0.5, 1000)
    assert p3["ratios"] == pytest.approx([3.0] * 6)
    sq = gap_ratio_profile(PolyValues((0, 0, 1), "n1"), (1.0,), 0.5, 10 ** 4)
    assert sq["ratios"] == pytest.approx([((k + 1) / k) ** 2 for k in range(1, 100)])
    with pytest.raises(FewerThanTwoPoints):
        gap_ratio_profile(Powers(2), (1.0,), 0.5, 1)


def test_annulus_and_ball_tests_agree_in_tail():
    for gen in (Lattice(1), Primes(), Powers(2)):
        eps = 0.3
        grid = geometric_grid(100, 10 ** 4, 1 + eps / 2)
        ann = annulus_test(gen, (1.0,), eps / 3, grid)
        ball = logdense_test(gen, (1.0,), eps, 100, 10 ** 4).hits
        # (iii) with eps/3 implies (iv) with eps
        assert all(b for a, b in zip(ann, ball) if a)


def test_translation_invariance():
    rng = np.random.default_rng(5)
    for gen in (Lattice(1), Primes(), Powers(2)):
        base = logdense_test(gen, (1.0,), 0.05, 10 ** 3, 10 ** 5).passed
        for b in rng.uniform(-50, 50, 4):
            assert logdense_test(Translate(gen, (float(b),)), (1.0,), 0.05, 10 ** 3, 10 ** 5).passed == base


def test_subspace_examples():
    assert logdense_in_subspace(Lattice(2), [(1, 0), (0, 1)], 0.1, 50, 10 ** 4)["passed"]
    axis = parse_generator("product(int,range(0,0))")
    res = logdense_in_subspace(axis, [(1, 0), (0, 1)], 0.1, 50, 10 ** 3)
    assert not res["passed"] and len(res["failed_directions"]) >= 45
    prod = Product((Primes(), Lattice(1)))
    assert logdense_in_subspace(prod, [(1, 0), (0, 1)], 0.1, 12, 10 ** 4)["passed"]
    with pytest.raises(ValueError):
        logdense_in_subspace(Lattice(2), [(1, 0), (2, 0)], 0.1, 5, 100)


def test_sphere_directions_seeded():
    a = sphere_directions([(1, 0, 0), (0, 1, 0)], 10, seed=4)
    b = sphere_directions([(1, 0, 0), (0, 1, 0)], 10, seed=4)
    assert np.array_equal(np.array(a), np.array(b))
    assert np.allclose(np.linalg.norm(a, axis=1), 1) and np.allclose(np.array(a)[:, 2], 0)


def test_gap_counterexample_example():
    res = gap_counterexample(parse_generator("gapset(1,10,5)"), 1, 10, 5, audit_bound=10 ** 4)
    assert res.hits == 0 and res.pairs_checked > 0
    assert res.box.lo[:2] == (1, 1) and res.box.hi[:2] == (5, 5)
    assert [int(b) for b in res.b] == [10, 100, 1000, 10000]
    assert len(res.genQ.enumerate(10 ** 4)) == 8


def test_gap_counterexample_errors():
    with pytest.raises(AnnulusViolation) as exc:
        gap_counterexample(Lattice(1), 1, 10, 5, audit_bound=100)
    assert exc.value.index == 1 and 10 < exc.value.offending[0] < 50
    with pytest.raises(ValueError):
        gap_counterexample(parse_generator("gapset(1,10,5)"), 1, 10, 1)
    with pytest.raises(NotImplementedError):
        gap_counterexample(parse_generator("gapset(1,10,5)"), 1, 10, 5, k=1)
