import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diophlab.sets import (
    Curve,
    Explicit,
    Lattice,
    Powers,
    Primes,
    augment_for_inhomogeneous,
    cone_slice,
    enumerate_bounded,
    example_set,
    limit_directions,
    parse_generator,
    primes_upto,
    symmetrize,
)

DESCRIPTORS = [
    "int", "int_nonzero", "lattice(2,nonzero)", "primes", "powers(3)", "range(0,10)",
    "poly([1,0,1])", "curve(2)", "product(int,primes)", "subgroup([[2,0],[1,3]])",
    "rays([[1,0],[1,2]],n1)", "translate(int,[1/2])", "sym(explicit([[1,2]]))",
    "union(explicit([[1,0]]),explicit([[0,1]]))", "augment(int_nonzero)", "gapset(1,10,5)",
]


def test_enumeration_examples():
    assert enumerate_bounded(Lattice(1, True), 2) == [(-1,), (1,), (-2,), (2,)]
    assert sorted(v[0] for v in enumerate_bounded(Primes(), 10)) == [-7, -5, -3, -2, 2, 3, 5, 7]
    assert sorted(enumerate_bounded(Curve(2), 4, exclude_zero=True)) == [(-2, 4), (-1, 1), (1, 1), (2, 4)]


def test_symmetrize_and_augment_examples():
    assert sorted(enumerate_bounded(symmetrize(Explicit(((1, 2),))), 5)) == [(-1, -2), (1, 2)]
    assert sorted(enumerate_bounded(augment_for_inhomogeneous(Explicit(((1, 0),))), 5)) == [(1, 0, -1)]
    aug = augment_for_inhomogeneous(Lattice(1, True))
    assert sorted(enumerate_bounded(aug, 1)) == [(-1, -1), (1, -1)]
    aug_curve = augment_for_inhomogeneous(Curve(2))
    assert sorted(enumerate_bounded(aug_curve, 2, exclude_zero=True)) == [(-1, 1, -1), (1, 1, -1)]


def test_cone_slice_examples():
    assert cone_slice(Lattice(1, True), (1.0,), 0.5, 3).norms == [1.0, 2.0, 3.0]
    assert cone_slice(Powers(2), (1.0,), 0.1, 10).norms == [1.0, 2.0, 4.0, 8.0]
    phi = (1 / math.sqrt(5), 2 / math.sqrt(5))
    sl = cone_slice(example_set("pentagon"), phi, 0.01, 10)
    # sup-norm bound: k (1, 2) qualifies for 2k <= 10
    assert sl.norms == pytest.approx([k * math.sqrt(5) for k in range(1, 6)])


def test_limit_direction_examples():
    cl = limit_directions(Curve(2), 100, 0.05, 10 ** 6)
    assert len(cl) == 1 and np.allclose(cl[0].representative, (0, 1), atol=0.05)
    one = limit_directions(Explicit(((5, 0),)), 1, 0.1, 10)
    assert len(one) == 1 and np.allclose(one[0].representative, (1, 0))
    cl = limit_directions(Lattice(2, True), 10, 0.2, 60)
    reps = np.array([c.representative for c in cl])
    angles = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    probe = np.stack([np.cos(angles), np.sin(angles)], 1)
    # every direction on the circle is within 2 cluster radii of a representative
    assert (np.linalg.norm(probe[:, None] - reps[None], axis=2).min(axis=1) < 0.4).all()


def test_primes_against_trial_division():
    def isprime(k):
        return k > 1 and all(k % d for d in range(2, int(k ** 0.5) + 1))
    assert primes_upto(2000) == [k for k in range(2001) if isprime(k)]


@pytest.mark.parametrize("desc", DESCRIPTORS)
def test_monotone_enumeration_and_coherence(desc):
    g = parse_generator(desc)
    small, big = enumerate_bounded(g, 6), enumerate_bounded(g, 12)
    assert set(small) <= set(big)
    assert all(max(abs(x) for x in v) <= 12 for v in big)
    for v in big:
        assert g.contains(v), v
    # heights then lex order
    keys = [(max(abs(x) for x in v), v) for v in big]
    assert keys == sorted(keys)


@pytest.mark.parametrize("desc", DESCRIPTORS)
def test_contains_random_probes(desc):
    g = parse_generator(desc)
    members = set(enumerate_bounded(g, 8))
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = tuple(int(x) for x in rng.integers(-8, 9, g.dim))
        assert g.contains(v) == (v in members), v


@pytest.mark.parametrize("desc", ["int", "primes", "curve(2)", "rays([[1,0],[1,2]],n1)"])
def test_symmetrize_idempotent(desc):
    g = symmetrize(parse_generator(desc))
    assert enumerate_bounded(symmetrize(g), 10) == enumerate_bounded(g, 10)
    assert set(enumerate_bounded(g, 10)) == {tuple(-x for x in v) for v in enumerate_bounded(g, 10)}


def test_q_role_excludes_zero():
    for desc in DESCRIPTORS:
        g = parse_generator(desc)
        assert all(any(x != 0 for x in v) for v in enumerate_bounded(g, 5, exclude_zero=True))
    assert (0,) in enumerate_bounded(Lattice(1), 1)


@given(st.integers(1, 40), st.floats(0.05, 1.0))
def test_cone_slice_subset_of_enumeration(bound, eps):
    g = Lattice(2, True)
    sl = cone_slice(g, (0.6, 0.8), eps, bound)
    allm = set(enumerate_bounded(g, bound))
    assert set(sl.members) <= allm
    for v in sl.members:
        u = np.asarray(v, float) / np.linalg.norm(v)
        assert np.linalg.norm(u - (0.6, 0.8)) < eps
    assert sl.norms == sorted(sl.norms)


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_generator("int int")
    with pytest.raises(Exception):
        parse_generator("nosuch(1)")
    with pytest.raises(KeyError):
        example_set("nope")


def test_gapset_avoids_annuli():
    g = parse_generator("gapset(1,10,5)")
    for v in enumerate_bounded(g, 2000):
        r = abs(Fraction(v[0]))
        assert not any(10 ** i < r < 5 * 10 ** i for i in range(1, 4)), v
