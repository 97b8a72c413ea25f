import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diophlab import kernels
from diophlab.core import Mat, dirichlet_psi, parse_psi
from diophlab.density import box_hits
from diophlab.errors import EmptyAdmissibleSet, ParseError
from diophlab.sets import Explicit, Lattice, augment_for_inhomogeneous, example_set
from diophlab.geometry import BoxRegion
from diophlab.uniformity import (
    FailureWitness,
    Obstruction,
    UniformityCertificate,
    best_remainder,
    build_uniform_witness,
    check_uniform,
    check_uniform_augmented,
    check_uniform_inhom,
    dirichlet_margin,
    enumerate_subspaces,
    height_profile,
    is_trivially_singular,
    make_snapshot,
    parse_certificate,
    sample_box,
)

Z, Zx = Lattice(1), Lattice(1, True)
SQRT2 = 1.4142135623730951
# continued-fraction oracle for sqrt(2) over [10, 1000] (Pell denominators), frozen
SQRT2_MARGIN = 0.8536802942


def cf_margin(x, t0, T):
    """Oracle: best approximations of a real are its convergents, so best(t) = ||q_k x|| on [q_k, q_{k+1})."""
    x = Fraction(x)
    qs, (h0, h1), (k0, k1) = [], (0, 1), (1, 0)
    y = x
    while True:
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > 0:
            qs.append(k1)
        if y == a or k1 > 4 * T:
            break
        y = 1 / (y - a)
    qs = sorted(set(qs))
    best = 0
    for a, b in zip(qs, qs[1:]):
        if a <= T and b > t0:
            r = abs(x * a - round(x * a))
            best = max(best, min(b, T) * r)
    return float(best)


def brute_best(A, t, b=None):
    """Oracle: exhaustive (q, p) search with the (|q|, lex q, lex p) order."""
    m, n = len(A), len(A[0])
    b = b or [0] * m
    best = None
    h = int(t)
    for q in itertools.product(range(-h, h + 1), repeat=n):
        if not any(q):
            continue
        rows = [sum(Fraction(a) * c for a, c in zip(row, q)) - Fraction(o) for row, o in zip(A, b)]
        p = tuple(math.floor(x + Fraction(1, 2)) if x - math.floor(x) != Fraction(1, 2) else math.floor(x)
                  for x in rows)
        r = max(abs(x - c) for x, c in zip(rows, p))
        key = (r, max(map(abs, q)), q, p)
        if best is None or key < best:
            best = key
    return best[0], (best[3], best[2])


fracs = st.fractions(min_value=-2, max_value=2, max_denominator=60)


def test_best_remainder_examples():
    assert best_remainder([[Fraction(1, 2)]], Z, Zx, 2) == (0, ((-1,), (-2,)))
    v, (p, q) = best_remainder([[Fraction(1, 3)]], Z, Zx, 2)
    assert v == Fraction(1, 3) and q == (-1,)
    niceQ = Explicit(((1, 0), (0, 1)))
    assert best_remainder([[0.5, 0.25]], Z, niceQ, 1)[0] == Fraction(1, 4)
    with pytest.raises(EmptyAdmissibleSet):
        best_remainder([[0.5, 0.25]], Z, Explicit(((3, 0),)), 1)


@given(st.lists(fracs, min_size=2, max_size=2), st.integers(1, 6))
def test_best_remainder_matches_brute_force_m1n2(row, t):
    A = [row]
    assert best_remainder(A, Z, Lattice(2, True), t) == brute_best(A, t)


@given(st.lists(fracs, min_size=2, max_size=2), st.integers(1, 12), fracs)
def test_best_remainder_inhom_matches_brute_force(col, t, b):
    A = [[col[0]], [col[1]]]
    got = best_remainder(A, Lattice(2), Zx, t, b=[b, -b])
    assert got == brute_best(A, t, [b, -b])


@given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=4, max_size=4), st.integers(1, 30))
@settings(max_examples=30)
def test_kernel_twins_agree(ints, T):
    N = np.array([ints[:2]], dtype=np.int64)
    off = np.array([ints[2]], dtype=np.int64)
    D = abs(ints[3]) + 1
    a = kernels.height_minima_lattice_np(N, off, D, T)
    b = kernels.height_minima_lattice_jit(N, off, D, T)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    Q = np.array(list(itertools.product(range(-3, 4), repeat=2)), dtype=np.int64)
    a = kernels.remainders_array_np(N, off, D, Q)
    b = kernels.remainders_array_jit(N, off, D, Q)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_lattice_and_array_routes_agree():
    A = Mat.of([[0.3141, 0.2718]])
    lat = height_profile(A, Z, Lattice(2, True), 40)
    arr = height_profile(A, Z, Explicit(tuple(q for q in itertools.product(range(-40, 41), repeat=2) if any(q))), 40)
    assert lat.heights == arr.heights and lat.rem == arr.rem and lat.q == arr.q


@pytest.mark.parametrize("x", [0.6180339887498949, SQRT2, 0.3183098861837907, 0.7182818284590451])
def test_margin_matches_continued_fraction_oracle(x):
    got = dirichlet_margin([[x]], Z, Zx, 10, 1000)["margin"]
    assert got == pytest.approx(cf_margin(x, 10, 1000), rel=1e-8)


def test_sqrt2_margin_frozen():
    assert cf_margin(SQRT2, 10, 1000) == pytest.approx(SQRT2_MARGIN, abs=1e-9)


def test_rational_margin_is_zero():
    assert dirichlet_margin([[Fraction(3, 7)]], Z, Zx, 7, 100)["margin"] == 0


def test_golden_mean_examples():
    g = [[0.6180339887498949]]
    assert isinstance(check_uniform(g, parse_psi("power 7/10 1"), Z, Zx, 10, 10 ** 4), FailureWitness)
    assert isinstance(check_uniform(g, parse_psi("power 3/4 1"), Z, Zx, 100, 10 ** 4), UniformityCertificate)


def test_inhom_examples():
    psi = parse_psi("power 2/5 1")
    res = check_uniform_inhom([[0]], [0.5], psi, Z, Zx, 2, 100)
    assert isinstance(res, FailureWitness) and res.best == Fraction(1, 2)
    ok = check_uniform_inhom([[0.5]], [0.5], parse_psi("power 1/1000 9"), Z, Zx, 2, 100)
    assert isinstance(ok, UniformityCertificate) and ok.checkpoints[0].remainder == 0
    A = [[0.37, 0.81]]
    plain = check_uniform(A, dirichlet_psi(1, 2), Z, Lattice(2, True), 3, 50)
    zero = check_uniform_augmented(A, [0], dirichlet_psi(1, 2), Z, Lattice(2, True), 3, 50)
    assert [c.remainder for c in plain.checkpoints] == [c.remainder for c in zero.checkpoints]


def test_trivially_singular_examples():
    q, p = is_trivially_singular([[Fraction(1, 2), Fraction(1, 3)]], Lattice(2, True), 6)
    assert (q, p) == ((-2, 0), (-1,))
    assert is_trivially_singular([[SQRT2]], Zx, 1000, tol=1e-9) is None
    assert is_trivially_singular([[0]], Zx, 3) == ((-1,), (0,))


def _replay(res, A, genP, genQ):
    cps = res.checkpoints
    for a, b in zip(cps, cps[1:]):
        v, _ = best_remainder(A, genP, genQ, a.t)
        assert v == a.remainder
        assert res.psi.le_left(v, b.t)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=25)
def test_certificate_soundness_and_round_trip(a, b):
    A = [[Fraction(a), Fraction(b)]]  # exact, so the replay sees the same matrix
    res = check_uniform(A, dirichlet_psi(1, 2), Z, Lattice(2, True), 3, 60)
    assert isinstance(res, UniformityCertificate)
    _replay(res, A, Z, Lattice(2, True))
    back = parse_certificate(res.to_text())
    assert back.checkpoints == res.checkpoints and back.psi == res.psi


@given(st.floats(0.01, 0.99))
@settings(max_examples=25)
def test_failure_witness_soundness(x):
    psi = parse_psi("power 1/20 1")
    A = [[Fraction(x)]]
    res = check_uniform(A, psi, Z, Zx, 5, 500)
    if isinstance(res, UniformityCertificate):
        return
    assert res.gap[0] <= res.t_star <= res.gap[1]
    v, _ = best_remainder(A, Z, Zx, res.t_star)
    assert v == res.best and not psi.le(v, res.t_star)
    back = parse_certificate(res.to_text())
    assert (back.t_star, back.best, back.q) == (res.t_star, res.best, res.q)


@given(st.floats(0.01, 0.99), st.fractions(Fraction(1, 10), 2, max_denominator=20),
       st.fractions(Fraction(1, 10), 2, max_denominator=20))
@settings(max_examples=25)
def test_monotone_in_psi(x, c1, c2):
    lo, hi = sorted((c1, c2))
    r1 = check_uniform([[x]], parse_psi(f"power {lo} 1"), Z, Zx, 5, 300)
    r2 = check_uniform([[x]], parse_psi(f"power {hi} 1"), Z, Zx, 5, 300)
    if isinstance(r1, UniformityCertificate):
        assert isinstance(r2, UniformityCertificate)


def test_parse_certificate_errors():
    with pytest.raises(ParseError):
        parse_certificate("m 1\nn 1\ncheckpoints 2\n1 0 1 0\n")


def test_snapshot_is_exact_for_rationals():
    s = make_snapshot(Mat.of([[Fraction(1, 3), Fraction(2, 5)]]), [Fraction(1, 2)])
    assert s.D == 30 and s.N == ((10, 12),) and s.off == (15,)


def test_witness_m1_examples():
    psi = parse_psi("power 1 1")
    cert = build_uniform_witness(psi, Z, Zx, 1, 64, seed=1)
    assert cert.verdict == "certified" and cert.verify_stages()
    assert isinstance(check_uniform(cert.center, psi, Z, Zx, 1, 64), UniformityCertificate)
    for A in sample_box(cert.final_box, 20, seed=1, T=64):
        assert isinstance(check_uniform(A, psi, Z, Zx, 1, 64), UniformityCertificate)


def test_witness_axis_rays_with_avoid():
    psi = parse_psi("power 1/10 1")
    Q = example_set("axes")
    avoid = enumerate_subspaces(1, 2, 10)
    cert = build_uniform_witness(psi, Z, Q, 2, 128, avoid=avoid, seed=5)
    assert cert.verdict == "certified"
    assert min(cert.separations) > 0
    assert isinstance(check_uniform(cert.center, psi, Z, Q, 2, 128), UniformityCertificate)


def test_witness_obstruction_is_genuine():
    psi = parse_psi("power 1/10 2")
    box = BoxRegion.around(Mat.of([[Fraction(1, 2), Fraction(3, 10)]]), Fraction(1, 100))
    res = build_uniform_witness(psi, Z, example_set("subcoll"), 2, 64, seed_box=box)
    assert isinstance(res, Obstruction) and res.stage == 0
    qs = [(1, k) for k in range(-2, 3)] + [(0, 1)]
    pairs = [((p,), q) for q in qs for p in range(-5, 6)]
    assert box_hits(res.box, pairs)[0] == 0


def test_witness_requires_integer_lattice():
    with pytest.raises(ValueError):
        build_uniform_witness(parse_psi("power 1 1"), example_set("axes"), Zx, 1, 8)


def test_enumerate_subspaces_distinct():
    subs = enumerate_subspaces(1, 2, 30)
    assert len(subs) == 30
    assert not any(a.same_as(b) for a, b in itertools.combinations(subs, 2))
