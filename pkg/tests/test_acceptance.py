"""Acceptance suite: one test per criterion, summarised as PASS/FAIL lines at the end of the run."""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from diophlab.convex import (
    DirectionSet,
    HullCertificate,
    SeparationWitness,
    caratheodory_reduce,
    empty_open_box,
    generalized_caratheodory,
    origin_in_hull,
)
from diophlab.core import Mat, dirichlet_psi, parse_psi
from diophlab.density import (
    ProductFamily,
    box_hits,
    coverage_scan,
    halfspace_pairs,
    total_density_probe,
)
from diophlab.geometry import (
    BoxRegion,
    ResonantSubspace,
    intersect_two,
    jacobian_probe,
    nearest_point_on,
    normal_angle,
    subspace_distance,
)
from diophlab.logdensity import logdense_in_subspace, logdense_test
from diophlab.sets import Lattice, Powers, Primes, Product, Translate, example_set, parse_generator
from diophlab.uniformity import (
    FailureWitness,
    UniformityCertificate,
    build_uniform_witness,
    check_uniform,
    check_uniform_augmented,
    check_uniform_inhom,
    dirichlet_margin,
    enumerate_subspaces,
    sample_box,
)

GOLDEN = 0.6180339887498949
# continued-fraction oracle value of the margin over [100, 10^4], frozen (see _fibonacci_margin)
GOLDEN_MARGIN = 0.7236094635


def _fibonacci_margin(x, t0, T):
    """Independent oracle: best approximations of the golden mean are Fibonacci denominators."""
    x = Fraction(x)
    fib = [1, 2]
    while fib[-1] <= 2 * T:
        fib.append(fib[-1] + fib[-2])
    best = 0
    for a, b in zip(fib, fib[1:]):
        if a <= T and b > t0:
            r = abs(x * a - round(x * a))
            best = max(best, min(b, T) * r)
    return float(best)


@pytest.mark.criterion(1, "Dirichlet check on M11, M12, M21")
def test_c1_dirichlet_check():
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    for m, n in [(1, 1), (1, 2), (2, 1)]:
        psi = dirichlet_psi(m, n, 1)
        P, Q = Lattice(m), Lattice(n, True)
        for _ in range(100):
            A = rng.random((m, n)).tolist()
            res = check_uniform(A, psi, P, Q, 5, 1000)
            assert isinstance(res, UniformityCertificate), (m, n, A, res.to_json())
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(2, "Golden-mean threshold")
def test_c2_golden_mean():
    start = time.perf_counter()
    P, Q = Lattice(1), Lattice(1, True)
    oracle = _fibonacci_margin(GOLDEN, 100, 10 ** 4)
    assert oracle == pytest.approx(GOLDEN_MARGIN, abs=1e-9)
    got = dirichlet_margin([[GOLDEN]], P, Q, 100, 10 ** 4)["margin"]
    assert 0.70 <= got <= 0.745
    assert got == pytest.approx(oracle, rel=1e-8)
    fail = check_uniform([[GOLDEN]], parse_psi("power 7/10 1"), P, Q, 100, 10 ** 4)
    ok = check_uniform([[GOLDEN]], parse_psi("power 3/4 1"), P, Q, 100, 10 ** 4)
    assert isinstance(fail, FailureWitness)
    assert isinstance(ok, UniformityCertificate)
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(3, "m = n = 1 rigidity")
def test_c3_rigidity():
    start = time.perf_counter()
    P, Q = Lattice(1), Lattice(1, True)
    tiny = parse_psi("power 1/1000000000 5")
    for b in range(1, 51):
        for a in range(0, b + 1):
            if math.gcd(a, b) != 1:
                continue
            res = check_uniform([[Fraction(a, b)]], tiny, P, Q, b, b + 40)
            assert isinstance(res, UniformityCertificate), (a, b)
            assert all(c.remainder == 0 for c in res.checkpoints)
    rng = np.random.default_rng(7)
    for x in rng.random(20):
        assert dirichlet_margin([[float(x)]], P, Q, 100, 10 ** 4)["margin"] > 0.2
    assert time.perf_counter() - start < 30


def _random_theta(rng, k):
    v = rng.normal(size=(k, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.mark.criterion(4, "Convexity and density equivalence")
def test_c4_convexity_density():
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    box = BoxRegion(1, 3, (-1.0,) * 3, (1.0,) * 3)
    seen = {"hull": 0, "sep": 0}
    for _ in range(50):
        k = int(rng.integers(3, 13))
        thetas = _random_theta(rng, k)
        v = (float(rng.choice([-1.0, 1.0])),)
        S = DirectionSet.of([tuple(t) for t in thetas])
        verdict = origin_in_hull(S)
        if isinstance(verdict, HullCertificate):
            seen["hull"] += 1
            fam = ProductFamily(thetas, 1, normal=v)
            rep = coverage_scan(None, None, box, 1 / 32, 0, family=fam)
            assert rep.fraction == 1.0
        else:
            seen["sep"] += 1
            eb = empty_open_box(S, v)
            assert eb.C > 0
            hits, ex = box_hits(eb.box, halfspace_pairs(v, S.points, 1000))
            assert hits == 0, ex
    assert seen["hull"] > 0 and seen["sep"] > 0
    assert time.perf_counter() - start < 300


def _lp_in_hull(pts):
    pts = np.asarray(pts, float)
    k, d = pts.shape
    A_eq = np.vstack([pts.T, np.ones(k)])
    b_eq = np.r_[np.zeros(d), 1.0]
    r = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    return r.status == 0


def _brute_in_hull(pts, d):
    """0 in conv(S) iff some subset of at most d+1 points has it in its hull."""
    for size in range(1, d + 2):
        for sub in itertools.combinations(pts, size):
            if _lp_in_hull(sub):
                return True
    return False


def _random_direction_set(rng, d):
    size = int(rng.integers(2, 13 if d > 1 else 7))
    vecs = set()
    while len(vecs) < size:
        v = tuple(int(x) for x in rng.integers(-3, 4, d))
        if any(v):
            vecs.add(v)
    return DirectionSet.of(sorted(vecs))


@pytest.mark.criterion(5, "Caratheodory bounds")
def test_c5_caratheodory():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    hull_cases = gen_cases = 0
    for _ in range(200):
        d = int(rng.integers(1, 4))
        S = _random_direction_set(rng, d)
        verdict = origin_in_hull(S)
        if len(S) <= 8:
            assert isinstance(verdict, HullCertificate) == _brute_in_hull(S.points, d)
        if isinstance(verdict, SeparationWitness):
            assert verdict.verify(S)
            continue
        assert verdict.verify()
        hull_cases += 1
        sub, cert = caratheodory_reduce(S)
        assert len(sub) <= d + 1 and cert.verify()
        assert _lp_in_hull(sub.points)
        S1 = [s for s in S.vectors if len(S) > 1 and _lp_in_hull(S.without(s).points)]
        if not S1:
            continue
        gen_cases += 1
        out = generalized_caratheodory(S, S1)
        assert len(out) <= (d + 1) * (d + 2)
        for s in S1:
            assert _lp_in_hull(out.without(s).points), s
    assert hull_cases > 20 and gen_cases > 5
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(6, "Angle lemma bound")
def test_c6_angle_lemma():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    for _ in range(1000):
        m, n = int(rng.integers(1, 4)), int(rng.integers(2, 5))
        t1, t2 = rng.normal(size=n), rng.normal(size=n)
        t1, t2 = t1 / np.linalg.norm(t1), t2 / np.linalg.norm(t2)
        L1 = ResonantSubspace.from_tpoint(tuple(rng.normal(size=m)), tuple(t1))
        L2 = ResonantSubspace.from_tpoint(tuple(rng.normal(size=m)), tuple(t2))
        Y1 = nearest_point_on(rng.normal(size=(m, n)), L1).to_array()
        Y2 = nearest_point_on(Y1 + 0.1 * rng.normal(size=(m, n)), L2).to_array()
        Y = intersect_two(Y1, Y2, L1, L2).to_array()
        assert subspace_distance(Y, L1) <= 1e-9 and subspace_distance(Y, L2) <= 1e-9
        eps = np.linalg.norm(Y1 - Y2)
        sin_g = math.sin(normal_angle(L1, L2))
        assert np.linalg.norm(Y - Y1) <= eps / sin_g * (1 + 1e-12) + 1e-15
        assert np.linalg.norm(Y - Y2) <= (1 / sin_g + 1) * eps * (1 + 1e-12) + 1e-15
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(7, "Witness builder soundness")
@pytest.mark.parametrize("m,n", [(1, 2), (2, 1)])
def test_c7_witness_builder(m, n):
    start = time.perf_counter()
    psi = parse_psi(f"power 1/10 {Fraction(n, m)}")
    P, Q = Lattice(m), Lattice(n, True)
    avoid = enumerate_subspaces(m, n, 10)
    cert = build_uniform_witness(psi, P, Q, 2, 256, avoid=avoid, seed=11)
    assert cert.verdict == "certified"
    assert cert.verify_stages()
    assert isinstance(check_uniform(cert.center, psi, P, Q, 2, 256), UniformityCertificate)
    assert len(cert.separations) == 10 and min(cert.separations) > 0
    for A in sample_box(cert.final_box, 100, seed=3, T=256):
        assert isinstance(check_uniform(A, psi, P, Q, 2, 256), UniformityCertificate)
        for L, sep in zip(avoid, cert.separations):
            assert subspace_distance(A.to_array(), L) >= sep
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(8, "Counterexample reproductions")
def test_c8a_subcollection():
    start = time.perf_counter()
    P, Q = Lattice(1), example_set("subcoll")
    W = BoxRegion(1, 2, (0, -1), (1, 1))
    above = BoxRegion(1, 2, (0, Fraction(1, 2)), (1, 1))
    for bound in (100, 200, 400):
        probe = total_density_probe(P, Q, ((0,), (0, 1)), W, 1 / 32, bound, region=above)
        assert not probe.found, bound
    full = coverage_scan(P, Q, BoxRegion(1, 2, (0, 0), (1, 1)), 1 / 32, 100)
    assert full.fraction == 1.0
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(8, "Counterexample reproductions")
def test_c8b_gap_construction():
    from diophlab.logdensity import gap_counterexample

    res = gap_counterexample(parse_generator("gapset(1,10,5)"), 1, 10, 5, audit_bound=10 ** 4)
    assert res.box.lo == (1, 1) and res.box.hi == (5, 5)
    assert res.hits == 0 and res.pairs_checked > 0
    Q = [q for q in res.genQ.enumerate(10 ** 4)]
    pairs = ((p, q) for q in Q for p in parse_generator("gapset(1,10,5)").enumerate(5 * 10 ** 4))
    hits, _ = box_hits(res.box, pairs, open_box=True)
    assert hits == 0


@pytest.mark.criterion(9, "Log-density suite")
def test_c9_logdensity():
    start = time.perf_counter()
    eps = 0.05
    assert logdense_test(Lattice(1), (1.0,), eps, 1, 10 ** 4).passed
    pw = logdense_test(Powers(2), (1.0,), eps, 1, 10 ** 4)
    assert not pw.passed and pw.ratio_tail_max == pytest.approx(2.0)
    pr = logdense_test(Primes(), (1.0,), eps, 10 ** 3, 10 ** 6)
    assert pr.passed
    sympy = pytest.importorskip("sympy")
    for C, hit in zip(pr.grid, pr.hits):
        lo = math.floor(C * (1 - eps))
        assert (sympy.nextprime(lo) < C * (1 + eps)) == hit
    rng = np.random.default_rng(9)
    for b in rng.uniform(-100, 100, 10):
        for base in (Lattice(1), Primes()):
            shifted = logdense_test(Translate(base, (float(b),)), (1.0,), eps, 10 ** 3, 10 ** 5).passed
            assert shifted == logdense_test(base, (1.0,), eps, 10 ** 3, 10 ** 5).passed
    prod = logdense_in_subspace(Product((Primes(), Lattice(1))), [(1, 0), (0, 1)], eps, 8, 10 ** 4)
    assert prod["passed"], prod["failed_directions"]
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(10, "Jacobian probe")
@pytest.mark.parametrize("m,n,k", [(1, 2, 1), (2, 3, 1), (2, 2, 1)])
def test_c10_jacobian(m, n, k):
    start = time.perf_counter()
    rep = jacobian_probe(m, n, k, trials=100, seed=10)
    assert rep["max_rel_error"] <= 1e-4
    assert rep["nonzero_fraction"] == 1.0
    assert time.perf_counter() - start < 10


@pytest.mark.criterion(11, "Inhomogeneous reduction")
def test_c11_inhomogeneous():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    P, Q = Lattice(1), Lattice(2, True)
    verdicts = set()
    for i in range(50):
        A = rng.random((1, 2)).tolist()
        b = [float(rng.uniform(-1, 1))]
        psi = parse_psi(f"power {Fraction(1 + i % 5, 4)} 2")
        direct = check_uniform_inhom(A, b, psi, P, Q, 2, 200)
        aug = check_uniform_augmented(A, b, psi, P, Q, 2, 200)
        assert type(direct) is type(aug)
        assert [(c.t, c.p, c.q, c.remainder) for c in direct.checkpoints] == \
               [(c.t, c.p, c.q, c.remainder) for c in aug.checkpoints]
        if isinstance(direct, FailureWitness):
            assert (direct.t_star, direct.best) == (aug.t_star, aug.best)
        verdicts.add(direct.verdict)
    assert verdicts == {"certified", "failed"}
    assert time.perf_counter() - start < 30
