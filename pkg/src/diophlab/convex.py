"""Convex position of direction sets: hull membership, separators, Caratheodory reductions.

Membership of the origin in a convex hull is decided by an exact phase-one
simplex over rationals (float inputs are converted exactly).  Separators are
the max-margin ones obtained from Wolfe's minimum-norm-point algorithm, with
the simplex Farkas certificate as a fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import to_fraction
from .errors import NoSeparator, NotDisjoint, OriginNotInHull, PreconditionFailed
from .geometry import BoxRegion

UNIT_TOL = 1e-12


def _is_exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True)
class DirectionSet:
    """Finite set of directions.

    ``vectors`` are the raw (possibly unnormalised, possibly exact) vectors;
    ``points`` are their unit-normalised float views.  Positive rescaling
    does not change whether the origin lies in the convex hull, so exact
    computations use ``vectors``.
    """

    vectors: tuple
    provenance: str = "explicit"

    def __post_init__(self):
        if len({len(v) for v in self.vectors}) > 1:
            raise ValueError("directions of different dimensions")
        for v in self.vectors:
            if all(x == 0 for x in v):
                raise ValueError("zero vector is not a direction")

    @classmethod
    def of(cls, vectors, provenance="explicit", normalize=False) -> "DirectionSet":
        out, keys = [], set()
        for v in vectors:
            v = tuple(v)
            if all(x == 0 for x in v):
                raise ValueError("zero vector is not a direction")
            if normalize or not all(_is_exact(x) for x in v):
                vv = tuple(float(x) for x in v)
                nr = math.sqrt(sum(x * x for x in vv))
                v = tuple(x / nr for x in vv) if normalize else vv
            key = _direction_key(v)
            if key in keys:
                continue
            keys.add(key)
            out.append(v)
        return cls(tuple(out), provenance)

    @property
    def dim(self):
        return len(self.vectors[0]) if self.vectors else 0

    @property
    def exact(self):
        return all(_is_exact(x) for v in self.vectors for x in v)

    @property
    def points(self):
        out = []
        for v in self.vectors:
            vv = np.array([float(x) for x in v])
            out.append(tuple((vv / np.linalg.norm(vv)).tolist()))
        return tuple(out)

    def __len__(self):
        return len(self.vectors)

    def without(self, v) -> "DirectionSet":
        return DirectionSet(tuple(w for w in self.vectors if w != tuple(v)), self.provenance)

    def union(self, other: "DirectionSet") -> "DirectionSet":
        return DirectionSet.of(self.vectors + other.vectors, self.provenance)

    def to_text(self) -> str:
        from .core import format_rational

        lines = [f"# directions {len(self)} dim {self.dim} provenance {self.provenance}"]
        for v in self.vectors:
            lines.append(" ".join(format_rational(x) if _is_exact(x) else repr(x) for x in v))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DirectionSet":
        vecs, prov = [], "explicit"
        for line in text.splitlines():
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                toks = s[1:].split()
                if "provenance" in toks:
                    prov = toks[toks.index("provenance") + 1]
                continue
            vec = []
            for t in s.split():
                if any(c in t for c in ".eE") and "/" not in t:
                    vec.append(float(t))
                else:
                    f = Fraction(t)
                    vec.append(f.numerator if f.denominator == 1 else f)
            vecs.append(tuple(vec))
        return cls.of(vecs, prov)


def _direction_key(v):
    if all(_is_exact(x) for x in v):
        v = [to_fraction(x) for x in v]
        s = max(abs(x) for x in v)
        return tuple(x / s for x in v)
    return tuple(v)


@dataclass
class HullCertificate:
    """``sum w_i v_i = 0`` with ``w_i > 0``, ``sum w_i = 1`` over ``support`` (raw vectors)."""

    support: tuple
    weights: tuple
    exact: bool

    def residual(self) -> float:
        d = len(self.support[0])
        acc = [0.0] * d
        for w, v in zip(self.weights, self.support):
            for i in range(d):
                acc[i] += float(w) * float(v[i])
        return max(abs(x) for x in acc)

    def verify(self, tol=1e-10) -> bool:
        if any(w <= 0 for w in self.weights):
            return False
        if self.exact:
            d = len(self.support[0])
            tot = [sum((to_fraction(w) * to_fraction(v[i]) for w, v in zip(self.weights, self.support)),
                       Fraction(0)) for i in range(d)]
            return all(x == 0 for x in tot) and sum(self.weights) == 1
        return self.residual() <= tol and abs(sum(float(w) for w in self.weights) - 1) <= tol

    def normalized_weights(self):
        """Weights for the unit-normalised support points."""
        raw = [float(w) * math.sqrt(sum(float(x) ** 2 for x in v)) for w, v in zip(self.weights, self.support)]
        s = sum(raw)
        return tuple(x / s for x in raw)

    verdict = "in_hull"


@dataclass
class SeparationWitness:
    """Unit ``alpha`` with ``alpha . theta >= delta > 0`` for all unit points ``theta``."""

    alpha: tuple
    delta: float

    verdict = "separated"

    def verify(self, S: DirectionSet) -> bool:
        a = np.asarray(self.alpha)
        return self.delta > 0 and all(float(np.dot(a, p)) >= self.delta - 1e-12 for p in S.points)


# ----------------------------------------------------------------------------
# exact phase-one simplex
# ----------------------------------------------------------------------------

def _phase_one(cols):
    """Feasibility of ``sum w_i c_i = 0, sum w_i = 1, w >= 0`` over rationals.

    ``cols`` are rational vectors.  Returns ``("feasible", weights)`` or
    ``("infeasible", z)`` where ``z`` is a Farkas vector with
    ``z[:d] . c_i >= -z[d] > 0`` for all ``i``.
    """
    k = len(cols)
    d = len(cols[0])
    rows = d + 1
    # constraint matrix M (rows x k) with rhs b = (0,...,0,1)
    M = [[to_fraction(cols[j][i]) for j in range(k)] for i in range(d)]
    M.append([Fraction(1)] * k)
    b = [Fraction(0)] * d + [Fraction(1)]
    # tableau: [M | I | b]; artificial variables k..k+rows-1
    T = [M[i] + [Fraction(int(i == r)) for r in range(rows)] + [b[i]] for i in range(rows)]
    basis = [k + i for i in range(rows)]
    ncols = k + rows
    cost = [Fraction(0)] * k + [Fraction(1)] * rows

    def reduced(j):
        return cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(rows))

    for _ in range(10000):
        # Bland: smallest index with negative reduced cost
        enter = next((j for j in range(ncols) if reduced(j) < 0), None)
        if enter is None:
            break
        ratios = [(T[i][-1] / T[i][enter], basis[i], i) for i in range(rows) if T[i][enter] > 0]
        if not ratios:
            break
        _, _, piv = min(ratios)
        pv = T[piv][enter]
        T[piv] = [x / pv for x in T[piv]]
        for i in range(rows):
            if i != piv and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * c for a, c in zip(T[i], T[piv])]
        basis[piv] = enter
    obj = sum(cost[basis[i]] * T[i][-1] for i in range(rows))
    if obj == 0:
        w = [Fraction(0)] * k
        for i, bv in enumerate(basis):
            if bv < k:
                w[bv] = T[i][-1]
        return "feasible", w
    # duals y = c_B B^{-1}; B^{-1} sits in the artificial columns
    y = [sum(cost[basis[i]] * T[i][k + r] for i in range(rows)) for r in range(rows)]
    return "infeasible", [-v for v in y]


# ----------------------------------------------------------------------------
# Wolfe minimum-norm point
# ----------------------------------------------------------------------------

def min_norm_point(P: np.ndarray, tol=1e-12, max_iter=1000):
    """Wolfe's algorithm: the point of ``conv(rows of P)`` nearest to the origin.

    Returns ``(x, weights)``.
    """
    P = np.asarray(P, dtype=float)
    k = P.shape[0]
    j = int(np.argmin((P * P).sum(axis=1)))
    S = [j]
    lam = np.array([1.0])
    x = P[j].copy()
    for _ in range(max_iter):
        g = P @ x
        j = int(np.argmin(g))
        if x @ x - g[j] <= tol * max(1.0, float(np.max((P * P).sum(axis=1)))) or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Ps = P[S]
            # affine minimiser over the current corral
            G = np.ones((len(S) + 1, len(S) + 1))
            G[0, 0] = 0.0
            G[1:, 1:] = Ps @ Ps.T
            rhs = np.zeros(len(S) + 1)
            rhs[0] = 1.0
            sol = np.linalg.lstsq(G, rhs, rcond=None)[0]
            mu = sol[1:]
            if np.all(mu > tol):
                lam = mu
                break
            mask = mu <= tol
            denom = lam[mask] - mu[mask]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[mask] / denom, np.inf)
            theta = min(1.0, float(np.min(ratios))) if ratios.size else 1.0
            lam = theta * mu + (1 - theta) * lam
            keep = lam > tol
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = lam @ P[S]
    w = np.zeros(k)
    w[S] = lam
    return x, w


# ----------------------------------------------------------------------------
# public operations
# ----------------------------------------------------------------------------

def origin_in_hull(S: DirectionSet, tol=1e-9):
    """:class:`HullCertificate` if ``0`` is in the convex hull of ``S``, else a :class:`SeparationWitness`."""
    if len(S) == 0:
        raise ValueError("empty direction set")
    vecs = S.vectors
    status, data = _phase_one(vecs)
    if status == "feasible":
        sup = tuple(v for v, w in zip(vecs, data) if w > 0)
        ws = tuple(w for w in data if w > 0)
        if S.exact:
            return HullCertificate(sup, ws, True)
        return HullCertificate(sup, tuple(float(w) for w in ws), False)
    pts = np.array(S.points)
    x, w = min_norm_point(pts)
    nx = float(np.linalg.norm(x))
    if not S.exact and nx <= tol:
        sup = tuple(v for v, wi in zip(vecs, w) if wi > 0)
        return HullCertificate(sup, tuple(float(wi) for wi in w if wi > 0), False)
    if nx > 0:
        alpha = x / nx
        delta = float(np.min(pts @ alpha))
        if delta > 0:
            return SeparationWitness(tuple(alpha.tolist()), delta)
    z = np.array([float(v) for v in data[:-1]])
    alpha = z / np.linalg.norm(z)
    delta = float(np.min(pts @ alpha))
    if delta <= 0:
        raise NoSeparator("separator verification failed")
    return SeparationWitness(tuple(alpha.tolist()), delta)


def _kernel_vector(cols):
    """Nonzero ``z`` with ``sum z_i (c_i, 1) = 0`` (exact), or None."""
    k = len(cols)
    d = len(cols[0])
    rows = [[to_fraction(cols[j][i]) for j in range(k)] for i in range(d)] + [[Fraction(1)] * k]
    piv_cols = []
    r = 0
    for c in range(k):
        sel = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(c)
        r += 1
        if r == len(rows):
            break
    free = next((c for c in range(k) if c not in piv_cols), None)
    if free is None:
        return None
    z = [Fraction(0)] * k
    z[free] = Fraction(1)
    for i, c in enumerate(piv_cols):
        z[c] = -rows[i][free]
    return z


def _reduce_support(sup, ws, d):
    sup, ws = list(sup), [to_fraction(w) for w in ws]
    while len(sup) > d + 1:
        z = _kernel_vector(sup)
        if z is None:
            break
        if not any(x > 0 for x in z):
            z = [-x for x in z]
        t = min(w / x for w, x in zip(ws, z) if x > 0)
        ws = [w - t * x for w, x in zip(ws, z)]
        keep = [i for i, w in enumerate(ws) if w > 0]
        sup = [sup[i] for i in keep]
        ws = [ws[i] for i in keep]
    return sup, ws


def caratheodory_reduce(S: DirectionSet):
    """Subset of size at most ``d + 1`` whose hull still contains the origin.

    Returns ``(DirectionSet, HullCertificate)``.
    """
    cert = origin_in_hull(S)
    if not isinstance(cert, HullCertificate):
        raise OriginNotInHull("origin is not in the convex hull")
    d = S.dim
    if cert.exact or all(isinstance(w, float) for w in cert.weights):
        # float weights of exactly representable vectors: redo exactly when possible
        status, data = _phase_one(cert.support)
        if status == "feasible":
            sup = [v for v, w in zip(cert.support, data) if w > 0]
            ws = [w for w in data if w > 0]
            sup, ws = _reduce_support(sup, ws, d)
            out = DirectionSet(tuple(sup), S.provenance)
            if S.exact:
                return out, HullCertificate(tuple(sup), tuple(ws), True)
            return out, HullCertificate(tuple(sup), tuple(float(w) for w in ws), False)
    # tolerance-based membership: float reduction via SVD null vectors
    sup = [np.array([float(x) for x in v]) for v in cert.support]
    ws = np.array([float(w) for w in cert.weights])
    raw = list(cert.support)
    while len(sup) > d + 1:
        M = np.vstack([np.array(sup).T, np.ones(len(sup))])
        z = np.linalg.svd(M)[2][-1]
        if not np.any(z > 0):
            z = -z
        pos = z > 1e-14
        t = float(np.min(ws[pos] / z[pos]))
        ws = ws - t * z
        keep = ws > 1e-14
        sup = [s for s, kp in zip(sup, keep) if kp]
        raw = [s for s, kp in zip(raw, keep) if kp]
        ws = ws[keep]
    ws = ws / ws.sum()
    return DirectionSet(tuple(raw), S.provenance), HullCertificate(tuple(raw), tuple(ws.tolist()), False)


def generalized_caratheodory(S: DirectionSet, S1):
    """Subset ``S'`` of size at most ``(d+1)(d+2)`` with ``0 in conv(S' - {s})`` for all ``s`` in ``S1``.

    ``S' = S~ u U_i S~_i`` where ``S~`` reduces ``S`` and ``S~_i`` reduces
    ``S - {s_i}`` for each ``s_i`` in ``S~ & S1``.
    """
    S1 = [tuple(s) for s in S1]
    for s in S1:
        rest = S.without(s)
        if len(rest) == 0 or not isinstance(origin_in_hull(rest), HullCertificate):
            raise PreconditionFailed(f"0 is not in conv(S - {{{s}}})", violating=s)
    base, _ = caratheodory_reduce(S)
    out = list(base.vectors)
    for s in base.vectors:
        if s in S1:
            sub, _ = caratheodory_reduce(S.without(s))
            for v in sub.vectors:
                if v not in out:
                    out.append(v)
    return DirectionSet(tuple(out), S.provenance)


def check_ch_condition(theta1: DirectionSet, theta2: DirectionSet):
    """Convex-hull condition on ``(Theta_1, Theta_2)``.

    Returns ``(ok, violating_theta, witness)``.  With ``Theta_1`` nonempty the
    origin must lie in ``conv(Theta_1 u Theta_2 - {theta})`` for every
    ``theta`` in ``Theta_1``; otherwise in ``conv(Theta_2)``.
    """
    k1 = {_direction_key(v) for v in theta1.vectors}
    if any(_direction_key(v) in k1 for v in theta2.vectors):
        raise NotDisjoint("Theta_1 and Theta_2 intersect")
    if len(theta1) == 0:
        if len(theta2) == 0:
            return False, None, None
        res = origin_in_hull(theta2)
        if isinstance(res, HullCertificate):
            return True, None, res
        return False, None, res
    full = DirectionSet(theta1.vectors + theta2.vectors, theta1.provenance)
    certs = []
    for th in theta1.vectors:
        rest = full.without(th)
        if len(rest) == 0:
            return False, th, None
        res = origin_in_hull(rest)
        if not isinstance(res, HullCertificate):
            return False, th, res
        certs.append(res)
    return True, None, certs


@dataclass
class EmptyBox:
    box: BoxRegion
    C: float
    alpha: tuple
    delta: float
    normal: tuple

    def to_json(self):
        return {"box": self.box.to_json(), "C": self.C, "alpha": list(self.alpha),
                "delta": self.delta, "normal": list(self.normal)}


def empty_open_box(S: DirectionSet, v, shrink=0.05):
    """Box of matrices missed by every ``L_{p,theta}`` with ``v . p >= 0`` and ``theta`` in ``S``.

    Centre ``A0 = -v alpha^T`` for the separator ``(alpha, delta)``; entrywise
    radius ``r = shrink delta / sqrt(mn)``.  For ``A`` in the box and ``p`` with
    ``v . p >= 0``: ``dist(A, L_{p,theta}) >= |v.(A theta - p)| >= -(v^T A) theta >= C``
    where ``C = min_theta [alpha.theta - r |v|_1 |theta|_1] > 0``.
    """
    res = origin_in_hull(S)
    if isinstance(res, HullCertificate):
        raise NoSeparator("origin lies in the convex hull; no separator")
    alpha = np.asarray(res.alpha)
    v = np.asarray([float(x) for x in v])
    v = v / np.linalg.norm(v)
    m, n = len(v), len(alpha)
    r = shrink * res.delta / math.sqrt(m * n)
    A0 = -np.outer(v, alpha)
    pts = np.array(S.points)
    C = float(np.min(pts @ alpha - r * np.abs(v).sum() * np.abs(pts).sum(axis=1)))
    C *= 1 - 1e-12
    lo = tuple((A0.ravel() - r).tolist())
    hi = tuple((A0.ravel() + r).tolist())
    return EmptyBox(BoxRegion(m, n, lo, hi), C, tuple(alpha.tolist()), res.delta, tuple(v.tolist()))
