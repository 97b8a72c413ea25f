"""Resonant subspaces ``L_{p,q} = {A : Aq = p}`` and the parameter space ``R^m x S^{n-1}``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Mat, to_fraction
from .errors import DimensionMismatch, NotOnSubspace, ParallelSubspaces, ZeroDenominatorVector

UNIT_TOL = 1e-12


def _as_array(A) -> np.ndarray:
    if isinstance(A, Mat):
        return A.to_array()
    arr = np.asarray(A, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr


def _vec(v) -> np.ndarray:
    if isinstance(v, (int, float, Fraction, np.number)):
        v = [v]
    return np.asarray([float(x) for x in v], dtype=float)


@dataclass(frozen=True)
class TPoint:
    """A pair ``(x, theta)`` with ``theta`` a unit vector; names ``L = {A : A theta = x}``."""

    x: tuple
    theta: tuple

    def __post_init__(self):
        if abs(math.sqrt(sum(t * t for t in self.theta)) - 1.0) > 1e-9:
            raise ValueError("theta must be a unit vector")

    @property
    def m(self):
        return len(self.x)

    @property
    def n(self):
        return len(self.theta)

    def canonical(self) -> "TPoint":
        """Representative with the first nonzero theta coordinate positive."""
        for t in self.theta:
            if t != 0:
                if t < 0:
                    return TPoint(tuple(-a for a in self.x), tuple(-a for a in self.theta))
                return self
        return self

    def close_to(self, other: "TPoint", tol=1e-9) -> bool:
        a, b = self.canonical(), other.canonical()
        return (np.allclose(a.x, b.x, atol=tol, rtol=0) and
                np.allclose(a.theta, b.theta, atol=tol, rtol=0))


@dataclass(frozen=True)
class ResonantSubspace:
    """``L_{x,theta}``; when built from integer data the exact pair ``(p, q)`` is kept."""

    rep: TPoint
    p: tuple | None = None
    q: tuple | None = None

    @classmethod
    def from_pair(cls, p, q) -> "ResonantSubspace":
        p = tuple(to_fraction(x) for x in (p if isinstance(p, (list, tuple)) else [p]))
        q = tuple(to_fraction(x) for x in q)
        # canonical exact sign too, so equal subspaces compare equal
        first = next((x for x in q if x != 0), None)
        if first is None:
            raise ZeroDenominatorVector("q must be nonzero")
        if first < 0:
            p, q = tuple(-x for x in p), tuple(-x for x in q)
        return cls(project(p, q).canonical(), p, q)

    @classmethod
    def from_tpoint(cls, x, theta) -> "ResonantSubspace":
        return cls(TPoint(tuple(float(a) for a in x), tuple(float(a) for a in theta)).canonical())

    @property
    def m(self):
        return self.rep.m

    @property
    def n(self):
        return self.rep.n

    def contains(self, A, tol=0.0) -> bool:
        """Membership ``A q = p`` (exact for rational data) or ``|A theta - x| <= tol``."""
        if isinstance(A, Mat) and A.exact and self.q is not None:
            Aq = A.apply(self.q)
            if tol == 0:
                return all(a == b for a, b in zip(Aq, self.p))
            qn = math.sqrt(sum(float(x) ** 2 for x in self.q))
            return max(abs(float(a - b)) for a, b in zip(Aq, self.p)) / qn <= tol
        return subspace_distance(A, self) <= max(tol, 1e-12)

    def same_as(self, other: "ResonantSubspace") -> bool:
        if self.q is not None and other.q is not None:
            # exact: proportional (p, q)
            a = self.p + self.q
            b = other.p + other.q
            i = next(k for k, x in enumerate(a) if x != 0)
            if b[i] == 0:
                return False
            c = b[i] / a[i]
            return all(y == c * x for x, y in zip(a, b))
        return self.rep.close_to(other.rep)


def project(p, q) -> TPoint:
    """``(p, q) -> (p/||q||, q/||q||)``."""
    pv, qv = _vec(p), _vec(q)
    nq = float(np.linalg.norm(qv))
    if nq == 0:
        raise ZeroDenominatorVector("q must be nonzero")
    return TPoint(tuple((pv / nq).tolist()), tuple((qv / nq).tolist()))


def scale_check(p, q, c) -> bool:
    if c == 0:
        raise ValueError("scale factor must be nonzero")
    a = project(p, q)
    b = project(_vec(p) * float(c), _vec(q) * float(c))
    return a.close_to(b)


def _check_dims(A: np.ndarray, L: ResonantSubspace):
    if A.shape != (L.m, L.n):
        raise DimensionMismatch(f"matrix {A.shape} vs subspace in M_{{{L.m},{L.n}}}")


def subspace_distance(A, L: ResonantSubspace) -> float:
    """Frobenius distance from ``A`` to ``L``, i.e. ``||A theta - x||_2``."""
    arr = _as_array(A)
    _check_dims(arr, L)
    r = arr @ np.asarray(L.rep.theta) - np.asarray(L.rep.x)
    return float(np.linalg.norm(r))


def nearest_point_on(A, L: ResonantSubspace):
    """Orthogonal projection ``A - (A theta - x) theta^T`` onto ``L``.

    Exact matrices with an exact subspace stay exact (using ``q`` and
    ``||q||^2`` instead of the normalised ``theta``).
    """
    if isinstance(A, Mat) and A.exact and L.q is not None:
        if (A.rows, A.cols) != (L.m, L.n):
            raise DimensionMismatch("dimension mismatch")
        q = L.q
        qq = sum(x * x for x in q)
        res = [a - b for a, b in zip(A.apply(q), L.p)]
        rows = [[A[i, j] - res[i] * q[j] / qq for j in range(A.cols)] for i in range(A.rows)]
        return Mat.of(rows, exact=True)
    arr = _as_array(A)
    _check_dims(arr, L)
    th = np.asarray(L.rep.theta)
    r = arr @ th - np.asarray(L.rep.x)
    return Mat.of(arr - np.outer(r, th), exact=False)


def normal_angle(L1: ResonantSubspace, L2: ResonantSubspace) -> float:
    """Angle in ``[0, pi/2]`` between the normal directions ``theta_1`` and ``+-theta_2``."""
    c = abs(float(np.dot(L1.rep.theta, L2.rep.theta)))
    return math.acos(min(1.0, c))


def intersect_two(Y1, Y2, L1: ResonantSubspace, L2: ResonantSubspace, tol=1e-9) -> Mat:
    """A point of ``L1 & L2`` close to ``Y1`` given ``Y1 in L1`` and ``Y2 in L2``.

    Row by row, ``Y1`` is moved inside ``L1`` along ``theta_2 - (theta_1 . theta_2) theta_1``
    until it satisfies the second equation; the move has length
    ``|(y_2 - y_1) . theta_2| / sin(gamma)``, which gives
    ``||Y - Y1|| <= eps / sin(gamma)`` and ``||Y - Y2|| <= (1/sin(gamma) + 1) eps``
    with ``eps = ||Y1 - Y2||``.
    """
    a1, a2 = _as_array(Y1), _as_array(Y2)
    _check_dims(a1, L1)
    _check_dims(a2, L2)
    if L1.m != L2.m or L1.n != L2.n:
        raise DimensionMismatch("subspaces live in different matrix spaces")
    t1, t2 = np.asarray(L1.rep.theta), np.asarray(L2.rep.theta)
    if subspace_distance(a1, L1) > tol:
        raise NotOnSubspace("Y1 is not on L1")
    if subspace_distance(a2, L2) > tol:
        raise NotOnSubspace("Y2 is not on L2")
    w = t2 - np.dot(t1, t2) * t1
    s2 = float(np.dot(w, t2))          # = sin^2(gamma)
    if s2 <= 1e-15:
        raise ParallelSubspaces("normals are parallel")
    x2 = np.asarray(L2.rep.x)
    lam = (x2 - a1 @ t2) / s2
    Y = a1 + np.outer(lam, w)
    return Mat.of(Y, exact=False)


def unique_pair_locator(A, H_basis: Sequence, Phi_basis: Sequence, tol=1e-10):
    """Solve ``A (sum l_i phi_i) = sum mu_j h_j`` for the pair ``(p, theta)``.

    Returns ``(TPoint, "unique")`` when the solution space is one dimensional,
    ``(TPoint, "degenerate")`` (an arbitrary solution) otherwise.
    """
    arr = _as_array(A)
    m, n = arr.shape
    H = [_vec(h) for h in H_basis]
    Phi = [_vec(f) for f in Phi_basis]
    k = len(Phi) - 1
    if not (0 <= k <= min(n - 1, m)):
        raise DimensionMismatch(f"k={k} outside 0..min(n-1, m)")
    if len(H) != m - k:
        raise DimensionMismatch(f"H must have dimension m-k={m - k}, got {len(H)}")
    if any(len(h) != m for h in H) or any(len(f) != n for f in Phi):
        raise DimensionMismatch("basis vectors of wrong length")
    F = np.stack(Phi, axis=1)                     # n x (k+1)
    Hm = np.stack(H, axis=1) if H else np.zeros((m, 0))
    M = np.hstack([arr @ F, -Hm])                  # m x (m+1)
    _, s, vt = np.linalg.svd(M)
    rank = int((s > tol * max(1.0, s.max() if s.size else 0.0)).sum())
    null_dim = M.shape[1] - rank
    v = vt[-1]
    lam, mu = v[:k + 1], v[k + 1:]
    theta = F @ lam
    nt = float(np.linalg.norm(theta))
    if nt < tol:
        return None, "degenerate"
    x = (Hm @ mu) / nt if H else np.zeros(m)
    tp = TPoint(tuple((x).tolist()), tuple((theta / nt).tolist())).canonical()
    return tp, ("unique" if null_dim == 1 else "degenerate")


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box of matrices: entrywise intervals ``[lo, hi]`` (row-major)."""

    m: int
    n: int
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != self.m * self.n or len(self.hi) != self.m * self.n:
            raise DimensionMismatch("box bounds of wrong length")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box lower bound exceeds upper bound")

    @classmethod
    def around(cls, center: Mat, radius) -> "BoxRegion":
        r = to_fraction(radius) if center.exact else float(radius)
        return cls(center.rows, center.cols,
                   tuple(c - r for c in center.entries), tuple(c + r for c in center.entries))

    @classmethod
    def from_intervals(cls, m, n, intervals) -> "BoxRegion":
        lo = tuple(a for a, _ in intervals)
        hi = tuple(b for _, b in intervals)
        return cls(m, n, lo, hi)

    def center(self) -> Mat:
        exact = all(isinstance(x, (int, Fraction)) for x in self.lo + self.hi)
        vals = [(a + b) / 2 if not exact else (to_fraction(a) + to_fraction(b)) / 2
                for a, b in zip(self.lo, self.hi)]
        return Mat(self.m, self.n, tuple(vals), exact)

    def contains(self, A) -> bool:
        ents = A.entries if isinstance(A, Mat) else tuple(_as_array(A).ravel())
        return all(a <= x <= b for a, x, b in zip(self.lo, ents, self.hi))

    def inside(self, other: "BoxRegion") -> bool:
        return (all(a >= b for a, b in zip(self.lo, other.lo)) and
                all(a <= b for a, b in zip(self.hi, other.hi)))

    def widths(self):
        return [b - a for a, b in zip(self.lo, self.hi)]

    def sample(self, rng, count) -> np.ndarray:
        lo = np.array([float(x) for x in self.lo])
        hi = np.array([float(x) for x in self.hi])
        return lo + (hi - lo) * rng.random((count, len(lo)))

    def to_json(self):
        return {"m": self.m, "n": self.n, "lo": [str(x) for x in self.lo], "hi": [str(x) for x in self.hi]}


# ----------------------------------------------------------------------------
# Jacobian structure of the parametrisation of a neighbourhood of L
# ----------------------------------------------------------------------------

def _pi_map(vec, m, n, k, p0):
    """The map ``(a_{.,1}, a_{.,2..n}) -> matrix``; ``a_{i,1}`` is ``x_i`` or ``theta``."""
    a = vec.reshape(m, n)
    out = a.copy()
    theta = a[m - k:, 0]                     # theta_2..theta_{k+1}
    for s in range(m):
        corr = float(np.dot(a[s, 1:k + 1], theta)) if k else 0.0
        if s < m - k:
            out[s, 0] = p0[s] + a[s, 0] - corr
        else:
            out[s, 0] = -corr
    return out.ravel()


def jacobian_probe(m, n, k, trials=100, seed=0, h=1e-6):
    """Compare the analytic Jacobian determinant ``(-1)^k det(A_2)`` with central differences.

    Returns a dict with both determinant lists, the maximal relative error over
    nondegenerate trials and the fraction of trials with nonzero determinant.
    """
    if not (0 <= k <= min(n - 1, m)):
        raise DimensionMismatch(f"k={k} outside 0..min(n-1, m)")
    rng = np.random.default_rng(seed)
    N = m * n
    analytic, numeric, rel = [], [], []
    for _ in range(trials):
        vec = rng.uniform(-1, 1, N)
        p0 = rng.uniform(-1, 1, m)
        a = vec.reshape(m, n)
        A2 = a[m - k:, 1:k + 1]
        det_a = (-1) ** k * (float(np.linalg.det(A2)) if k else 1.0)
        J = np.empty((N, N))
        for c in range(N):
            e = np.zeros(N)
            e[c] = h
            J[:, c] = (_pi_map(vec + e, m, n, k, p0) - _pi_map(vec - e, m, n, k, p0)) / (2 * h)
        det_n = float(np.linalg.det(J))
        analytic.append(det_a)
        numeric.append(det_n)
        if abs(det_a) > 1e-12:
            rel.append(abs(det_n - det_a) / abs(det_a))
    nonzero = sum(1 for d in analytic if abs(d) > 1e-12) / max(trials, 1)
    return {
        "m": m, "n": n, "k": k, "trials": trials, "seed": seed,
        "analytic": analytic, "numeric": numeric,
        "max_rel_error": max(rel) if rel else 0.0,
        "nonzero_fraction": nonzero,
    }
