"""Coverage scans for collections of resonant subspaces.

Density of a union of subspaces is a topological statement; what can be
checked is an ``h``-net: a cell of side at most ``h`` counts as covered when
some enumerated subspace passes within ``h/2`` of its centre.  Every report is
stamped with its resolution and enumeration bound.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from ._jit import backend_name
from .core import Mat, to_fraction
from .errors import AnchorMissesWindow, BadStructuralData, DimensionMismatch, SigmaTooLarge
from .geometry import BoxRegion, ResonantSubspace, TPoint, nearest_point_on, subspace_distance
from .sets import (
    SetGenerator,
    enumerate_bounded,
    is_integer_lattice,
    limit_directions,
)

MAX_CELLS = 5_000_000


# ----------------------------------------------------------------------------
# cell grids
# ----------------------------------------------------------------------------

def cell_grid(box: BoxRegion, h):
    """Cell counts per coordinate and the ``(C, mn)`` array of cell centres.

    Each coordinate interval is split into ``ceil(width/h)`` equal cells, so
    every cell has side at most ``h``.  Centres are listed in C order.
    """
    if h <= 0:
        raise ValueError("resolution must be positive")
    lo = np.array([float(x) for x in box.lo])
    hi = np.array([float(x) for x in box.hi])
    w = hi - lo
    if np.any(w <= 0):
        raise ValueError("box is degenerate")
    counts = np.maximum(1, np.ceil(w / h - 1e-9)).astype(int)
    total = int(np.prod(counts))
    if total > MAX_CELLS:
        raise ValueError(f"{total} cells exceed the scan limit {MAX_CELLS}")
    axes = [lo[i] + (np.arange(counts[i]) + 0.5) * (w[i] / counts[i]) for i in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.ravel() for g in mesh], axis=1)
    return tuple(int(c) for c in counts), centers


def _sub_box(box, counts, start, size):
    lo, hi = [], []
    for i, (a, b) in enumerate(zip(box.lo, box.hi)):
        w = (float(b) - float(a)) / counts[i]
        lo.append(float(a) + start[i] * w)
        hi.append(float(a) + (start[i] + size) * w)
    return BoxRegion(box.m, box.n, tuple(lo), tuple(hi))


# ----------------------------------------------------------------------------
# families of subspaces
# ----------------------------------------------------------------------------

@dataclass
class PairFamily:
    """Explicit list of pairs ``(p, q)`` as float arrays."""

    P: np.ndarray
    Q: np.ndarray

    def __len__(self):
        return len(self.Q)

    def distances(self, cells, halfh):
        if len(self.Q) == 0:
            return np.full(len(cells), np.inf)
        return kernels.coverage_pairs(np.ascontiguousarray(cells), np.ascontiguousarray(self.P),
                                      np.ascontiguousarray(self.Q), halfh)


@dataclass
class LatticeFamily:
    """``P = Z^m`` with a list of denominators; the nearest numerator is row-wise rounding."""

    Q: np.ndarray
    m: int

    def __len__(self):
        return len(self.Q)

    def distances(self, cells, halfh):
        if len(self.Q) == 0:
            return np.full(len(cells), np.inf)
        return kernels.coverage_lattice(np.ascontiguousarray(cells), np.ascontiguousarray(self.Q),
                                        self.m, halfh)


@dataclass
class ProductFamily:
    """All ``L_{x,theta}`` with ``x`` in ``H`` and ``theta`` in a finite direction set.

    ``H`` is either a linear subspace (``basis``) or the closed half-space
    ``{x : v . x >= 0}`` (``normal``).  The distance from ``A`` to the union
    is ``min_theta dist(A theta, H)``.
    """

    thetas: np.ndarray
    m: int
    basis: np.ndarray | None = None
    normal: np.ndarray | None = None

    def __post_init__(self):
        self.thetas = np.array([np.asarray(t, float) / np.linalg.norm(t) for t in self.thetas])
        if (self.basis is None) == (self.normal is None):
            raise ValueError("give exactly one of basis or normal")
        if self.basis is not None:
            B = np.asarray(self.basis, float).reshape(-1, self.m)
            self._proj = (np.linalg.qr(B.T)[0] if len(B) else np.zeros((self.m, 0)))
        else:
            v = np.asarray(self.normal, float)
            self.normal = v / np.linalg.norm(v)

    def __len__(self):
        return len(self.thetas)

    def distances(self, cells, halfh=None):
        C = len(cells)
        n = self.thetas.shape[1]
        A = np.asarray(cells, float).reshape(C, self.m, n)
        Y = np.einsum("cij,kj->cki", A, self.thetas)
        if self.normal is not None:
            d = np.maximum(0.0, -(Y @ self.normal))
        else:
            U = self._proj
            R = Y - (Y @ U) @ U.T
            d = np.linalg.norm(R, axis=2)
        return d.min(axis=1)


def _nonzero_q(genQ, bound):
    Q = enumerate_bounded(genQ, bound, exclude_zero=True)
    return [tuple(q) for q in Q]


def _row_ranges(box, q):
    """Per row ``i`` the interval of ``(A q)_i`` for ``A`` in the box."""
    n = box.n
    out = []
    for i in range(box.m):
        lo = hi = 0.0
        for j in range(n):
            a, b = float(box.lo[i * n + j]) * float(q[j]), float(box.hi[i * n + j]) * float(q[j])
            lo += min(a, b)
            hi += max(a, b)
        out.append((lo, hi))
    return out


def collect_pairs(genP, genQ, box, bound, slack=0.0, pair_filter=None):
    """Pairs ``(p, q)``, ``|q|_sup <= bound``, whose subspace can come within ``slack`` of the box.

    ``slack`` is relative to ``||q||``; ``pair_filter(p, q)`` prunes further.
    """
    Q = _nonzero_q(genQ, bound)
    if not Q:
        return []
    reach = 0.0
    ranges = []
    for q in Q:
        qn = math.sqrt(sum(float(x) ** 2 for x in q))
        r = _row_ranges(box, q)
        r = [(a - slack * qn, b + slack * qn) for a, b in r]
        ranges.append(r)
        reach = max(reach, max(max(abs(a), abs(b)) for a, b in r))
    members = enumerate_bounded(genP, reach + 1)
    if not members:
        return []
    Pf = np.array(members, dtype=float).reshape(len(members), genP.dim)
    out = []
    for q, r in zip(Q, ranges):
        ok = np.ones(len(members), bool)
        for i, (a, b) in enumerate(r):
            ok &= (Pf[:, i] >= a - 1e-12) & (Pf[:, i] <= b + 1e-12)
        for idx in np.nonzero(ok)[0]:
            p = members[idx]
            if pair_filter is None or pair_filter(p, q):
                out.append((p, q))
    return out


def _pairs_family(pairs, m, n):
    if not pairs:
        return PairFamily(np.zeros((0, m)), np.zeros((0, n)))
    P = np.array([[float(x) for x in p] for p, _ in pairs])
    Q = np.array([[float(x) for x in q] for _, q in pairs])
    return PairFamily(P, Q)


def _scan_chunk(args):
    family, cells, halfh = args
    return family.distances(cells, halfh)


def scan_cells(family, cells, halfh, jobs=1, chunk=4096):
    """Distances from each cell centre to the family, sharded by cell ranges."""
    if len(cells) == 0:
        return np.zeros(0)
    if jobs <= 1 or len(cells) <= chunk:
        return family.distances(cells, halfh)
    parts = [cells[i:i + chunk] for i in range(0, len(cells), chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        res = list(ex.map(_scan_chunk, [(family, c, halfh) for c in parts]))
    return np.concatenate(res)


# ----------------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------------

@dataclass
class DensityReport:
    box: BoxRegion
    h: float
    bound: float
    counts: tuple
    covered: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    subspaces: int = 0
    backend: str = "numpy"
    uncovered_cap: int = 1000

    @property
    def fraction(self) -> float:
        return float(self.covered.mean()) if self.covered.size else 0.0

    @property
    def uncovered(self) -> list:
        return [int(i) for i in np.nonzero(~self.covered)[0][: self.uncovered_cap]]

    @property
    def n_cells(self):
        return int(self.covered.size)

    def grid(self):
        return self.covered.reshape(self.counts)

    def to_json(self):
        return {"box": self.box.to_json(), "h": self.h, "bound": self.bound,
                "cells": list(self.counts), "covered_fraction": self.fraction,
                "uncovered": self.uncovered, "uncovered_total": int((~self.covered).sum()),
                "subspaces": self.subspaces, "backend": self.backend}


def coverage_scan(genP, genQ, box: BoxRegion, h, bound, pair_filter=None, family=None, jobs=1):
    """Covered-cell fraction of ``box`` at resolution ``h``.

    The subspaces are ``L_{p,q}`` with ``|q|_sup <= bound`` (optionally
    filtered by ``pair_filter(p, q)``), or an explicit ``family`` object with
    a ``distances(cells, halfh)`` method.  A cell is covered iff the distance
    from its centre is at most ``h/2``.
    """
    counts, cells = cell_grid(box, h)
    halfh = h / 2
    if family is None:
        if genQ.dim != box.n or genP.dim != box.m:
            raise DimensionMismatch("generator dimensions do not match the box")
        if pair_filter is None and is_integer_lattice(genP, box.m):
            Q = np.array(_nonzero_q(genQ, bound), dtype=float).reshape(-1, box.n)
            family = LatticeFamily(Q, box.m)
        else:
            family = _pairs_family(collect_pairs(genP, genQ, box, bound, halfh, pair_filter), box.m, box.n)
    d = scan_cells(family, cells, halfh, jobs)
    covered = d <= halfh * (1 + 1e-12)
    return DensityReport(box, float(h), float(bound), counts, covered, d, len(family), backend_name())


# ----------------------------------------------------------------------------
# exact feasibility
# ----------------------------------------------------------------------------

def _lp_feasible(M, b):
    """Exact phase one for ``{x >= 0 : M x = b}`` (Bland's rule)."""
    rows = len(M)
    k = len(M[0]) if rows else 0
    M = [list(r) for r in M]
    b = list(b)
    for i in range(rows):
        if b[i] < 0:
            M[i] = [-x for x in M[i]]
            b[i] = -b[i]
    T = [M[i] + [Fraction(int(i == r)) for r in range(rows)] + [b[i]] for i in range(rows)]
    basis = [k + i for i in range(rows)]
    cost = [Fraction(0)] * k + [Fraction(1)] * rows
    ncols = k + rows
    for _ in range(5000):
        enter = None
        for j in range(ncols):
            if cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(rows)) < 0:
                enter = j
                break
        if enter is None:
            break
        ratios = [(T[i][-1] / T[i][enter], basis[i], i) for i in range(rows) if T[i][enter] > 0]
        if not ratios:
            break
        piv = min(ratios)[2]
        pv = T[piv][enter]
        T[piv] = [x / pv for x in T[piv]]
        for i in range(rows):
            if i != piv and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * c for a, c in zip(T[i], T[piv])]
        basis[piv] = enter
    return sum(cost[basis[i]] * T[i][-1] for i in range(rows)) == 0


def _row_meets(lo, hi, eqs):
    """Is there ``a`` with ``lo <= a <= hi`` and ``a . q = p`` for all ``(q, p)`` in ``eqs``?"""
    n = len(lo)
    if n == 2 and len(eqs) == 2:
        (q1, p1), (q2, p2) = eqs
        det = q1[0] * q2[1] - q1[1] * q2[0]
        if det != 0:
            # float screen first; exact only near the boundary
            fd = float(det)
            xf = float(p1 * q2[1] - p2 * q1[1]) / fd
            yf = float(q1[0] * p2 - q2[0] * p1) / fd
            m = 1e-9 * (1 + abs(xf) + abs(yf))
            lf = [float(v) for v in lo]
            hf = [float(v) for v in hi]
            if xf < lf[0] - m or xf > hf[0] + m or yf < lf[1] - m or yf > hf[1] + m:
                return False
            if lf[0] + m < xf < hf[0] - m and lf[1] + m < yf < hf[1] - m:
                return True
            x = Fraction(p1 * q2[1] - p2 * q1[1]) / det
            y = Fraction(q1[0] * p2 - q2[0] * p1) / det
            return lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]
    w = [b - a for a, b in zip(lo, hi)]
    # a = lo + u, 0 <= u <= w:  u.q = p - lo.q  and  u + s = w
    M, rhs = [], []
    for q, p in eqs:
        M.append(list(q) + [Fraction(0)] * n)
        rhs.append(p - sum(a * c for a, c in zip(lo, q)))
    for j in range(n):
        M.append([Fraction(int(i == j)) for i in range(n)] + [Fraction(int(i == j)) for i in range(n)])
        rhs.append(w[j])
    return _lp_feasible(M, rhs)


def _exact_data(L: ResonantSubspace):
    if L.q is not None:
        return L.q, L.p
    return (tuple(to_fraction(x) for x in L.rep.theta), tuple(to_fraction(x) for x in L.rep.x))


def _box_rows(box: BoxRegion, tol=0):
    n = box.n
    t = to_fraction(tol)
    return [([to_fraction(x) - t for x in box.lo[i * n:(i + 1) * n]],
             [to_fraction(x) + t for x in box.hi[i * n:(i + 1) * n]]) for i in range(box.m)]


def _meets(d1, d2, rows) -> bool:
    (q1, p1), (q2, p2) = d1, d2
    return all(_row_meets(lo, hi, [(q1, p1[i]), (q2, p2[i])]) for i, (lo, hi) in enumerate(rows))


def subspaces_meet_in_box(L1: ResonantSubspace, L2: ResonantSubspace, box: BoxRegion, tol=0) -> bool:
    """Exact test of ``L1 & L2 & box != {}`` (rows decouple)."""
    return _meets(_exact_data(L1), _exact_data(L2), _box_rows(box, tol))


def _subspace_meets_box(L: ResonantSubspace, box: BoxRegion, tol=0) -> bool:
    return subspaces_meet_in_box(L, L, box, tol)


# ----------------------------------------------------------------------------
# total density
# ----------------------------------------------------------------------------

@dataclass
class TotalDensityProbe:
    anchor: TPoint
    window: BoxRegion
    region: BoxRegion
    h: float
    bound: float
    min_cells: int
    collected: int
    sub_box: BoxRegion | None
    region_fraction: float
    counts: tuple
    covered: np.ndarray = field(repr=False, default=None)

    @property
    def found(self) -> bool:
        return self.sub_box is not None

    def to_json(self):
        return {"anchor": {"x": list(self.anchor.x), "theta": list(self.anchor.theta)},
                "window": self.window.to_json(), "region": self.region.to_json(), "h": self.h,
                "bound": self.bound, "min_cells": self.min_cells, "collected": self.collected,
                "sub_box": None if self.sub_box is None else self.sub_box.to_json(),
                "found": self.found, "region_fraction": self.region_fraction}


def _anchor_subspace(r0):
    if isinstance(r0, ResonantSubspace):
        return r0
    if isinstance(r0, TPoint):
        return ResonantSubspace.from_tpoint(r0.x, r0.theta)
    p, q = r0
    return ResonantSubspace.from_pair(p, q)


def _find_block(covered_grid, size):
    """First (C order) cube of ``size`` cells per axis that is fully covered."""
    shape = covered_grid.shape
    if any(s < size for s in shape):
        return None
    win = np.lib.stride_tricks.sliding_window_view(covered_grid, (size,) * covered_grid.ndim)
    full = win.reshape(win.shape[:covered_grid.ndim] + (-1,)).all(axis=-1)
    idx = np.argwhere(full)
    return tuple(int(x) for x in idx[0]) if len(idx) else None


def total_density_probe(genP, genQ, r0, W: BoxRegion, h, bound, region: BoxRegion | None = None,
                        min_cells=2, jobs=1) -> TotalDensityProbe:
    """Look for a fully covered sub-box among the subspaces meeting ``L_{r0} & W``.

    The meeting test is exact for rational data (float anchors are converted
    exactly and tested with tolerance ``1e-9``).  The search runs over the
    cells of ``region`` (default ``W``) and reports the first cube of
    ``min_cells`` cells per axis that is covered at resolution ``h``.
    """
    L0 = _anchor_subspace(r0)
    tol = 0 if L0.q is not None else 1e-9
    if (L0.m, L0.n) != (W.m, W.n):
        raise DimensionMismatch("anchor and window live in different matrix spaces")
    if not _subspace_meets_box(L0, W, tol):
        raise AnchorMissesWindow("the anchor subspace does not meet the window")
    pairs = []
    d0 = _exact_data(L0)
    rows = _box_rows(W, tol)
    for p, q in collect_pairs(genP, genQ, W, bound):
        if _meets((q, p), d0, rows):
            pairs.append((p, q))
    region = region or W
    counts, cells = cell_grid(region, h)
    fam = _pairs_family(pairs, W.m, W.n)
    d = scan_cells(fam, cells, h / 2, jobs)
    covered = d <= (h / 2) * (1 + 1e-12)
    start = _find_block(covered.reshape(counts), min_cells)
    sub = None if start is None else _sub_box(region, counts, start, min_cells)
    return TotalDensityProbe(L0.rep, W, region, float(h), float(bound), int(min_cells), len(pairs),
                             sub, float(covered.mean()), counts, covered)


def subcoll_filter(a, b, closed=False):
    """Pair filter keeping the lines ``x + k y = p`` that meet ``{y = 0}`` at ``a < x < b``.

    ``closed=True`` uses ``a <= x <= b``.  Horizontal lines (``q = (0, 1)``)
    meet ``{y = 0}`` only when they equal it.
    """
    a, b = to_fraction(a), to_fraction(b)

    def keep(p, q):
        if q[0] == 0:
            return to_fraction(p[0]) == 0
        x = to_fraction(p[0]) / to_fraction(q[0])
        return a <= x <= b if closed else a < x < b
    return keep


# ----------------------------------------------------------------------------
# the region Omega
# ----------------------------------------------------------------------------

@dataclass
class OmegaRegion:
    """Union of the balls ``B(Y)`` around points ``Y`` of ``L`` near ``Y0``.

    A matrix is decomposed as ``Y1 + Y2`` with ``Y1`` its projection on ``L``;
    it is a member iff ``||Y1 - Y0|| < sigma`` and ``||Y2|| < rho(Y1)`` where
    ``rho(Y1) = (sigma - ||Y1 - Y0||) / C``.
    """

    anchor: ResonantSubspace
    Y0: np.ndarray
    sigma: float
    eps: float
    rho0: float
    C: float

    def _parts(self, Y):
        Y = np.asarray(Y.to_array() if isinstance(Y, Mat) else Y, float).reshape(self.Y0.shape)
        Y1 = nearest_point_on(Mat.of(Y, exact=False), self.anchor).to_array()
        return Y1, Y - Y1

    def rho(self, Y1):
        return (self.sigma - float(np.linalg.norm(Y1 - self.Y0))) / self.C

    def contains(self, Y) -> bool:
        Y1, Y2 = self._parts(Y)
        d1 = float(np.linalg.norm(Y1 - self.Y0))
        return d1 < self.sigma and float(np.linalg.norm(Y2)) < (self.sigma - d1) / self.C

    def inner_radius(self, Y) -> float:
        """A radius ``r > 0`` with ``B(Y, r)`` inside the region (0 for non-members).

        Both components of the decomposition are 1-Lipschitz, so
        ``r (1 + 1/C) < (sigma - d1)/C - d2`` suffices.
        """
        Y1, Y2 = self._parts(Y)
        d1 = float(np.linalg.norm(Y1 - self.Y0))
        d2 = float(np.linalg.norm(Y2))
        slack = (self.sigma - d1) / self.C - d2
        if d1 >= self.sigma or slack <= 0:
            return 0.0
        return slack / (1 + 1 / self.C) * (1 - 1e-9)

    def sample(self, count, seed=0):
        """Seeded members: a random point of ``L`` near ``Y0`` plus a small normal offset."""
        rng = np.random.default_rng(seed)
        th = np.asarray(self.anchor.rep.theta)
        out = []
        while len(out) < count:
            D = rng.standard_normal(self.Y0.shape)
            D = D - np.outer(D @ th, th)
            D *= rng.random() * self.sigma / max(np.linalg.norm(D), 1e-300)
            Y1 = self.Y0 + D
            N = np.outer(rng.standard_normal(self.Y0.shape[0]), th)
            N *= rng.random() * self.rho(Y1) / max(np.linalg.norm(N), 1e-300)
            Y = Y1 + N
            if self.contains(Y):
                out.append(Y)
        return out

    def to_json(self):
        return {"anchor": {"x": list(self.anchor.rep.x), "theta": list(self.anchor.rep.theta)},
                "Y0": self.Y0.ravel().tolist(), "sigma": self.sigma, "eps": self.eps,
                "rho0": self.rho0, "C": self.C}


def angle_constant(eps, rho0):
    """``1/sin(eps/(2 rho0)) + 1``."""
    return 1 / math.sin(eps / (2 * rho0)) + 1


def omega_region(r0, Y0, sigma, eps, rho0=1.0) -> OmegaRegion:
    L = _anchor_subspace(r0)
    Y0 = np.asarray(Y0.to_array() if isinstance(Y0, Mat) else Y0, float).reshape(L.m, L.n)
    if not 0 < sigma:
        raise ValueError("sigma must be positive")
    if sigma >= eps / 2:
        raise SigmaTooLarge(f"sigma={sigma} must be below eps/2={eps / 2}")
    if rho0 < 1:
        raise ValueError("rho0 must be at least 1")
    if subspace_distance(Y0, L) > 1e-9:
        raise ValueError("Y0 is not on the anchor subspace")
    return OmegaRegion(L, Y0, float(sigma), float(eps), float(rho0), angle_constant(eps, rho0))


# ----------------------------------------------------------------------------
# hypothesis checks
# ----------------------------------------------------------------------------

class _Approximator:
    """Nearest points of ``pi(P x Q)`` to targets ``(x, theta)`` at a given bound."""

    def __init__(self, genP, genQ, bound, x_radius, exclude=None):
        self.m, self.n = genP.dim, genQ.dim
        Q = _nonzero_q(genQ, bound)
        self.Q = Q
        Qf = np.array(Q, dtype=float).reshape(-1, self.n)
        self.qn = np.linalg.norm(Qf, axis=1)
        self.U = Qf / self.qn[:, None]
        reach = x_radius * (float(self.qn.max()) if len(Q) else 1) + 2
        self.P = enumerate_bounded(genP, reach)
        self.Pf = np.array(self.P, dtype=float).reshape(-1, self.m)
        self.exclude = exclude

    def gap(self, x, theta, eps):
        """``min max(||p/|q| - x||, ||q/|q| - theta||)`` over enumerated pairs (inf if none)."""
        x = np.asarray(x, float)
        theta = np.asarray(theta, float)
        dth = np.linalg.norm(self.U - theta, axis=1)
        best = math.inf
        if len(self.Pf) == 0:
            return best
        for i in np.nonzero(dth < eps)[0]:
            if dth[i] >= best:
                continue
            d = np.linalg.norm(self.Pf / self.qn[i] - x, axis=1)
            order = np.argsort(d)
            for j in order[:8]:
                g = max(float(d[j]), float(dth[i]))
                if g >= best:
                    break
                if self.exclude is not None and self.exclude(self.P[j], self.Q[i]):
                    continue
                best = g
                break
        return best


def _in_span(v, basis, tol=1e-9):
    if len(basis) == 0:
        return bool(np.allclose(v, 0, atol=tol))
    B = np.asarray(basis, float).reshape(len(basis), -1)
    coef, *_ = np.linalg.lstsq(B.T, np.asarray(v, float), rcond=None)
    return float(np.linalg.norm(B.T @ coef - v)) <= tol * max(1.0, float(np.linalg.norm(v)))


def _sphere_points(basis, count, rng, half=None):
    """Unit vectors in ``span(basis)``; with ``half`` keep ``half . u >= 0``."""
    B = np.asarray(basis, float).reshape(len(basis), -1)
    out = []
    while len(out) < count:
        v = rng.standard_normal(len(B)) @ B
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            continue
        v /= nv
        if half is not None and float(np.dot(half, v)) < 0:
            v = -v
        out.append(v)
    return out


def _ball_points(basis, m, count, radius, rng, normal=None):
    if basis is not None and len(basis) == 0:
        return [np.zeros(m)] * count
    B = np.eye(m) if basis is None else np.asarray(basis, float).reshape(len(basis), m)
    out = []
    for _ in range(count):
        v = rng.uniform(-1, 1, len(B)) @ B
        nv = np.linalg.norm(v)
        if nv > radius:
            v *= radius / nv
        if normal is not None and float(np.dot(normal, v)) < 0:
            v = -v
        out.append(v)
    return out


def _clause(name, worst, eps, samples, note=""):
    return {"clause": name, "passed": bool(worst < eps), "worst_gap": float(worst),
            "samples": samples, "note": note}


def _targets_gap(approx, xs, thetas, eps):
    worst = 0.0
    for x, th in itertools.product(xs, thetas):
        worst = max(worst, approx.gap(x, th, eps))
        if worst == math.inf:
            break
    return worst


def check_hypotheses(tag, genP, genQ, data: dict, eps=0.05, bound=1000, samples=8, seed=0):
    """Windowed checks of the structural hypotheses of the main theorems.

    ``data`` keys: ``k``; ``H`` (basis of an ``(m-k)``-subspace) or, for
    ``ch``, ``H_normal`` (half-space ``v . x >= 0``); ``Phi`` /
    ``Phi1`` / ``Phi2`` (bases of ``(k+1)``-subspaces of ``R^n``),
    ``halves`` (optional normals selecting halfspheres), ``Theta1`` /
    ``Theta2`` (declared closure directions), ``radius`` (size of the target
    ball in ``H``, default 1) and ``C`` (norm threshold for limit directions).
    Each clause reports the worst approximation gap over its sampled targets.
    """
    m, n = genP.dim, genQ.dim
    k = int(data.get("k", 0))
    if tag not in ("not_on_line", "any_k_a", "any_k_b", "any_k_c", "ch"):
        raise BadStructuralData(f"unknown theorem tag {tag!r}")
    kmax = min(n - 2, m) if tag == "not_on_line" else min(n - 1, m)
    if tag != "ch" and not 0 <= k <= kmax:
        raise BadStructuralData(f"k={k} outside 0..{kmax}")
    rng = np.random.default_rng(seed)
    radius = float(data.get("radius", 1.0))

    def basis(key, dim, count):
        B = data.get(key)
        if B is None:
            return None
        B = [[float(x) for x in v] for v in B]
        if len(B) != count or any(len(v) != dim for v in B):
            raise BadStructuralData(f"{key} must be {count} vectors of length {dim}")
        if count and np.linalg.matrix_rank(np.array(B)) != count:
            raise BadStructuralData(f"{key} is not linearly independent")
        return B

    clauses = []
    if tag == "not_on_line":
        H = basis("H", m, m - k)
        if H is None:
            H = np.eye(m).tolist() if k == 0 else None
        if H is None:
            raise BadStructuralData("H is required for k > 0")
        from .logdensity import logdense_in_subspace

        if m - k > 0:
            ld = logdense_in_subspace(genP, H, eps, samples, bound, seed=seed)
            worst = 0.0 if ld["passed"] else math.inf
            clauses.append(_clause("logdense_in_H", worst, eps, samples,
                                   f"{len(ld['failed_directions'])} failed directions"))
        C = float(data.get("C", bound / 10))
        if k == 0 and "Phi1" not in data:
            cl = limit_directions(genQ, C, eps, bound)
            reps = [np.array(c.representative) for c in cl]
            ok = any(abs(abs(float(np.dot(a, b))) - 1) > 1e-6 for a, b in itertools.combinations(reps, 2))
            clauses.append(_clause("nonprop", 0.0 if ok else math.inf, eps, len(reps),
                                   f"{len(reps)} direction clusters"))
        else:
            P1, P2 = basis("Phi1", n, k + 1), basis("Phi2", n, k + 1)
            if P1 is None or P2 is None:
                raise BadStructuralData("Phi1 and Phi2 are required")
            span = np.linalg.matrix_rank(np.array(P1 + P2))
            clauses.append(_clause("nonprop", 0.0 if span > k + 1 else math.inf, eps, 0,
                                   f"span dimension {span}"))
            halves = data.get("halves", [None, None])
            far = [q for q in _nonzero_q(genQ, bound) if np.linalg.norm(np.array(q, float)) > C]
            U = np.array([np.array(q, float) / np.linalg.norm(np.array(q, float)) for q in far]).reshape(-1, n)
            worst = 0.0
            for B, half in zip((P1, P2), halves):
                for th in _sphere_points(B, samples, rng, None if half is None else np.asarray(half, float)):
                    d = np.linalg.norm(U - th, axis=1).min() if len(U) else math.inf
                    worst = max(worst, float(d))
            clauses.append(_clause("halfspheres_in_closure", worst, eps, 2 * samples))
    elif tag in ("any_k_a", "any_k_b", "any_k_c"):
        approx = None
        if tag == "any_k_a":
            H = basis("H", m, m - k)
            P1, P2 = basis("Phi1", n, k + 1), basis("Phi2", n, k + 1)
            if H is None or P1 is None or P2 is None:
                raise BadStructuralData("H, Phi1 and Phi2 are required")
            approx = _Approximator(genP, genQ, bound, radius)
            for name, B in (("H_x_Phi1", P1), ("H_x_Phi2", P2)):
                w = _targets_gap(approx, _ball_points(H, m, samples, radius, rng), _sphere_points(B, samples, rng), eps)
                clauses.append(_clause(name, w, eps, samples * samples))
        elif tag == "any_k_b":
            H1, H2 = basis("H1", m, m - k), basis("H2", m, m - k)
            Ph = basis("Phi", n, k + 1)
            if H1 is None or H2 is None or Ph is None:
                raise BadStructuralData("H1, H2 and Phi are required")
            approx = _Approximator(genP, genQ, bound, radius)
            for name, H in (("H1_x_Phi", H1), ("H2_x_Phi", H2)):
                w = _targets_gap(approx, _ball_points(H, m, samples, radius, rng), _sphere_points(Ph, samples, rng), eps)
                clauses.append(_clause(name, w, eps, samples * samples))
        else:
            H = basis("H", m, m - k)
            Ph = basis("Phi", n, k + 1)
            if H is None or Ph is None:
                raise BadStructuralData("H and Phi are required")

            def excl(p, q):
                return _in_span(np.array(p, float), H) and _in_span(np.array(q, float), Ph)
            approx = _Approximator(genP, genQ, bound, radius, exclude=excl)
            w = _targets_gap(approx, _ball_points(H, m, samples, radius, rng), _sphere_points(Ph, samples, rng), eps)
            clauses.append(_clause("H_x_Phi_off_slice", w, eps, samples * samples))
    else:
        v = data.get("H_normal")
        if v is None or len(v) != m:
            raise BadStructuralData(f"H_normal must have length {m}")
        v = np.asarray([float(x) for x in v])
        T1 = [np.asarray([float(x) for x in t]) for t in data.get("Theta1", [])]
        T2 = [np.asarray([float(x) for x in t]) for t in data.get("Theta2", [])]
        if any(len(t) != n for t in T1 + T2):
            raise BadStructuralData(f"Theta vectors must have length {n}")
        T1 = [t / np.linalg.norm(t) for t in T1]
        T2 = [t / np.linalg.norm(t) for t in T2]
        xs = _ball_points(None, m, samples, radius, rng, normal=v)
        if T1:
            approx = _Approximator(genP, genQ, bound, radius)
            clauses.append(_clause("H_x_Theta1", _targets_gap(approx, xs, T1, eps), eps, samples * len(T1)))
        for t in T2:
            def excl(p, q, t=t):
                u = np.array(q, float)
                u /= np.linalg.norm(u)
                return float(np.dot(v, np.array(p, float))) >= 0 and np.allclose(u, t, atol=1e-12)
            approx = _Approximator(genP, genQ, bound, radius, exclude=excl)
            clauses.append(_clause(f"H_x_theta_off_slice[{','.join(f'{x:g}' for x in t)}]",
                                   _targets_gap(approx, xs, [t], eps), eps, samples))
        from .convex import DirectionSet, check_ch_condition

        ok, bad, _ = check_ch_condition(DirectionSet.of([tuple(x) for x in T1]) if T1 else DirectionSet((), "empty"),
                                        DirectionSet.of([tuple(x) for x in T2]) if T2 else DirectionSet((), "empty"))
        clauses.append(_clause("convex_hull", 0.0 if ok else math.inf, eps, len(T1) + len(T2),
                               "" if ok else f"violated at {bad}"))
    return {"tag": tag, "k": k, "eps": eps, "bound": bound, "seed": seed,
            "passed": all(c["passed"] for c in clauses), "clauses": clauses}


# ----------------------------------------------------------------------------
# box audits
# ----------------------------------------------------------------------------

def box_hits(box: BoxRegion, pairs, open_box=False, limit=10):
    """Exact count of pairs ``(p, q)`` whose subspace ``A q = p`` meets the box.

    Each row of ``A q`` ranges over an interval computed in rational
    arithmetic, and rows are independent, so a subspace meets the closed
    box iff ``p_i`` lies in the ``i``-th interval for every row.  Returns
    ``(hits, examples)``.
    """
    n = box.n
    lo = [to_fraction(x) for x in box.lo]
    hi = [to_fraction(x) for x in box.hi]
    cache = {}
    hits, examples = 0, []
    for p, q in pairs:
        key = tuple(q)
        if key not in cache:
            qf = [to_fraction(x) for x in q]
            rows = []
            for i in range(box.m):
                a = sum(min(lo[i * n + j] * qf[j], hi[i * n + j] * qf[j]) for j in range(n))
                b = sum(max(lo[i * n + j] * qf[j], hi[i * n + j] * qf[j]) for j in range(n))
                rows.append((a, b))
            cache[key] = rows
        rows = cache[key]
        inside = True
        for (a, b), x in zip(rows, p):
            x = to_fraction(x)
            if (open_box and not a < x < b) or (not open_box and not a <= x <= b):
                inside = False
                break
        if inside:
            hits += 1
            if len(examples) < limit:
                examples.append((tuple(p), tuple(q)))
    return hits, examples


def halfspace_pairs(normal, thetas, bound):
    """Integer ``p`` with ``|p|_sup <= bound`` and ``normal . p >= 0``, paired with each theta."""
    m = len(normal)
    pts = [p for p in itertools.product(range(-int(bound), int(bound) + 1), repeat=m)
           if sum(to_fraction(v) * x for v, x in zip(normal, p)) >= 0]
    for th in thetas:
        for p in pts:
            yield p, tuple(th)
