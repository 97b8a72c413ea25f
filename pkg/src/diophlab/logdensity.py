"""Windowed tests of logarithmic density and the gap-set counterexample.

A set ``P`` is logarithmically dense along a unit vector ``phi`` when the
balls ``B(C phi, C eps)`` all meet ``P`` for large ``C``.  Every verdict here
is finite evidence on a geometric grid of ``C`` values and is labelled with
its window and onset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import to_fraction
from .errors import AnnulusViolation, FewerThanTwoPoints
from .geometry import BoxRegion
from .sets import (
    Explicit,
    IntRange,
    Lattice,
    Product,
    SetGenerator,
    Translate,
    _Sorted1D,
    cone_slice,
    enumerate_bounded,
)


def _unit(phi):
    v = np.asarray([float(x) for x in phi])
    nv = np.linalg.norm(v)
    if abs(nv - 1) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return v


def geometric_grid(c_min, c_max, ratio):
    out, c = [], float(c_min)
    while c <= c_max * (1 + 1e-12):
        out.append(c)
        c *= ratio
    return out


def _euclid_nearest(gen: SetGenerator, x):
    """Euclidean nearest member for coordinate-separable generators, else None."""
    if isinstance(gen, (Lattice, _Sorted1D, IntRange)) or (
            isinstance(gen, Product) and all(isinstance(f, (Lattice, _Sorted1D, IntRange)) for f in gen.factors)):
        return tuple(gen.nearest(tuple(x)))
    if isinstance(gen, Translate):
        inner = _euclid_nearest(gen.gen, [a - float(b) for a, b in zip(x, gen.b)])
        if inner is None:
            return None
        return tuple(float(a) + float(b) for a, b in zip(inner, gen.b))
    return None


class _Finder:
    """Answers 'is there p in P with ||p - y|| < r' for a sequence of queries."""

    def __init__(self, gen, max_bound):
        self.gen = gen
        self.pts = None
        if _euclid_nearest(gen, [0.0] * gen.dim) is None:
            mem = enumerate_bounded(gen, max_bound)
            self.pts = np.array(mem, dtype=float).reshape(len(mem), gen.dim)

    def nearest(self, y):
        if self.pts is None:
            p = np.array(_euclid_nearest(self.gen, y), dtype=float)
            return p, float(np.linalg.norm(p - y))
        if len(self.pts) == 0:
            return None, math.inf
        d = np.linalg.norm(self.pts - y, axis=1)
        i = int(np.argmin(d))
        return self.pts[i], float(d[i])


@dataclass
class LogDensityReport:
    direction: tuple
    aperture: float
    grid: list
    hits: list
    nearest_norms: list
    onset: float | None
    ratio_tail_max: float | None
    window: tuple

    @property
    def passed(self) -> bool:
        """All grid points hit from an onset in the lower half (log scale) of the window."""
        if self.onset is None:
            return False
        lo, hi = self.window
        return self.onset <= math.sqrt(lo * hi)

    def misses(self):
        return [c for c, h in zip(self.grid, self.hits) if not h]

    def to_rows(self):
        tail = "" if self.ratio_tail_max is None else repr(self.ratio_tail_max)
        return [(repr(c), int(h), repr(nn), tail) for c, h, nn in zip(self.grid, self.hits, self.nearest_norms)]


def logdense_test(gen, phi, eps, c_min, c_max, grid_ratio=None, ratio_bound=None) -> LogDensityReport:
    """Ball test ``{p : ||p - C phi|| < C eps} != {}`` on a geometric grid of ``C``.

    ``grid_ratio`` defaults to ``1 + eps/2``.  ``ratio_tail_max`` is taken from
    :func:`gap_ratio_profile` up to ``ratio_bound`` (default ``c_max`` for
    one-dimensional sets, skipped otherwise).
    """
    phi = _unit(phi)
    if eps <= 0:
        raise ValueError("eps must be positive")
    ratio = 1 + eps / 2 if grid_ratio is None else grid_ratio
    if not 1 < ratio <= 1 + eps + 1e-15:
        raise ValueError("grid ratio must lie in (1, 1 + eps]")
    grid = geometric_grid(c_min, c_max, ratio)
    finder = _Finder(gen, c_max * (1 + eps) + 1)
    hits, norms = [], []
    for C in grid:
        p, d = finder.nearest(C * phi)
        hits.append(bool(d < C * eps))
        norms.append(float(np.linalg.norm(p)) if p is not None else math.nan)
    onset = None
    for i in range(len(grid) - 1, -1, -1):
        if not hits[i]:
            break
        onset = grid[i]
    tail = None
    if ratio_bound is not None or gen.dim == 1:
        try:
            tail = gap_ratio_profile(gen, phi, eps, ratio_bound or c_max)["tail_max"]
        except FewerThanTwoPoints:
            tail = None
    return LogDensityReport(tuple(phi.tolist()), eps, grid, hits, norms, onset, tail, (float(c_min), float(c_max)))


def annulus_test(gen, phi, eps, grid):
    """Per ``C``: is there ``p`` in the ``eps``-cone with ``C < ||p|| < (1 + eps) C``."""
    phi = _unit(phi)
    top = max(grid) * (1 + eps) + 1
    sl = cone_slice(gen, tuple(phi), eps, top)
    norms = np.array(sl.norms)
    out = []
    for C in grid:
        i = np.searchsorted(norms, C, side="right")
        out.append(bool(i < len(norms) and norms[i] < (1 + eps) * C))
    return out


def gap_ratio_profile(gen, phi, eps, bound):
    """Consecutive ratios ``s_{k+1}/s_k`` of the distinct norms in the ``eps``-cone.

    ``tail_max`` is the largest ratio over the upper half (by count) of the norms.
    """
    sl = cone_slice(gen, tuple(float(x) for x in phi), eps, bound)
    norms = sorted(set(round(x, 12) for x in sl.norms if x > 0))
    if len(norms) < 2:
        raise FewerThanTwoPoints("fewer than two members in the cone")
    ratios = [b / a for a, b in zip(norms, norms[1:])]
    half = len(ratios) // 2
    return {"norms": norms, "ratios": ratios, "max": max(ratios), "tail_max": max(ratios[half:])}


def sphere_directions(basis, count, seed=0):
    """Seeded uniform unit vectors in the span of ``basis`` (normalised Gaussians)."""
    B = np.array([[float(x) for x in b] for b in basis])
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        g = rng.standard_normal(B.shape[0])
        v = g @ B
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            out.append(v / nv)
    return out


def logdense_in_subspace(gen, H_basis, eps, direction_samples, bound, seed=0, c_min=None):
    """Run :func:`logdense_test` along sampled directions of ``span(H_basis)``."""
    B = np.array([[float(x) for x in b] for b in H_basis])
    if np.linalg.matrix_rank(B) != B.shape[0]:
        raise ValueError("H basis must be linearly independent")
    c_min = c_min if c_min is not None else max(1.0, bound / 1000.0)
    reports = []
    for phi in sphere_directions(H_basis, direction_samples, seed):
        reports.append(logdense_test(gen, phi, eps, c_min, bound))
    return {"passed": all(r.passed for r in reports), "reports": reports,
            "failed_directions": [r.direction for r in reports if not r.passed]}


# ----------------------------------------------------------------------------
# counterexample
# ----------------------------------------------------------------------------

@dataclass
class GapCounterexample:
    genQ: SetGenerator
    box: BoxRegion
    delta: Fraction
    eps: float
    phi: tuple
    b: list
    audit_bound: int
    pairs_checked: int
    hits: int
    m: int
    n: int
    hit_examples: list = field(default_factory=list)

    def to_json(self):
        return {"m": self.m, "n": self.n, "delta": str(self.delta), "eps": self.eps,
                "phi": list(self.phi), "b": [str(x) for x in self.b], "box": self.box.to_json(),
                "audit_bound": self.audit_bound, "pairs_checked": self.pairs_checked,
                "hits": self.hits, "Q": self.genQ.describe()}


def gap_counterexample(genP, B, rho, delta, audit_bound=10 ** 4, n=2, k=0, phi=None, eps=1.0):
    """Denominators ``{b_i e_1} u {b_i e_2}`` and an open box ``U`` missed by every ``L_{p,q}``.

    ``b_i = B rho^i`` (``i >= 1``), ``c_i = delta b_i``.  ``P`` must avoid the
    annuli ``b_i < ||p|| < c_i`` inside the ``eps``-cone around ``phi``; this is
    audited for ``||p|| <= delta * audit_bound`` and a violation raises
    :class:`AnnulusViolation`.  ``U`` constrains the first two columns of ``A``
    to a box inside ``{x : 1 < ||x|| < delta, ||x/||x|| - phi|| < eps}``.  Only
    ``k = 0`` is implemented.
    """
    B, rho, delta = to_fraction(B), to_fraction(rho), to_fraction(delta)
    if delta <= 1:
        raise ValueError("delta must exceed 1 (no gap otherwise)")
    if rho <= delta:
        raise ValueError("need rho > delta so that the annuli are disjoint")
    if k != 0:
        raise NotImplementedError("only k = 0 is implemented")
    if n < 2:
        raise ValueError("need n >= 2")
    m = genP.dim
    phi = np.array([1.0] + [0.0] * (m - 1)) if phi is None else _unit(phi)
    bs = []
    i = 1
    while B * rho ** i <= audit_bound:
        bs.append(B * rho ** i)
        i += 1
    # audit the gap hypothesis
    members = enumerate_bounded(genP, float(delta) * audit_bound + 1)
    for p in members:
        pv = np.array([float(x) for x in p])
        r2 = sum(to_fraction(x) ** 2 for x in p)
        if r2 == 0:
            continue
        if np.linalg.norm(pv / np.linalg.norm(pv) - phi) >= eps:
            continue
        for idx, b in enumerate(bs, 1):
            if b * b < r2 < (delta * b) ** 2:
                raise AnnulusViolation(f"p={p} lies in the annulus {idx}", idx, p)
    # the box for one column
    if m == 1 and phi[0] > 0:
        col_lo, col_hi = [Fraction(1)], [delta]
        open_col = True
    else:
        rad = 0.9 * min((float(delta) - 1) / 2, eps * (1 + float(delta)) / 4) / math.sqrt(m)
        c = (1 + float(delta)) / 2 * phi
        col_lo = [Fraction(x - rad) for x in c]
        col_hi = [Fraction(x + rad) for x in c]
        open_col = False
    lo, hi = [], []
    for row in range(m):
        for j in range(n):
            if j < 2:
                lo.append(col_lo[row])
                hi.append(col_hi[row])
            else:
                lo.append(Fraction(-1))
                hi.append(Fraction(1))
    box = BoxRegion(m, n, tuple(lo), tuple(hi))
    Q = []
    for b in bs:
        for j in (0, 1):
            q = [0] * n
            q[j] = b.numerator if b.denominator == 1 else b
            Q.append(tuple(q))
    genQ = Explicit(tuple(Q))
    # zero-hit audit: A q = p with q = b e_j forces column j of A to equal p / b
    hits, examples, checked = 0, [], 0
    for q in Q:
        j = 0 if q[0] != 0 else 1
        b = to_fraction(q[j])
        for p in members:
            checked += 1
            col = [to_fraction(x) / b for x in p]
            if open_col:
                inside = all(lo_ < x < hi_ for x, lo_, hi_ in zip(col, col_lo, col_hi))
            else:
                inside = all(lo_ <= x <= hi_ for x, lo_, hi_ in zip(col, col_lo, col_hi))
            if inside:
                hits += 1
                if len(examples) < 10:
                    examples.append((p, q))
    return GapCounterexample(genQ, box, delta, eps, tuple(phi.tolist()), bs, audit_bound,
                             checked, hits, m, n, examples)


# ----------------------------------------------------------------------------
# primes
# ----------------------------------------------------------------------------

def prime_ratio_onset(limit, eps):
    """Smallest prime ``p0`` after which consecutive prime ratios stay below ``1 + eps``."""
    from .sets import primes_upto

    ps = primes_upto(limit)
    onset = ps[0]
    for a, b in zip(ps, ps[1:]):
        if b / a >= 1 + eps:
            onset = b
    return onset
