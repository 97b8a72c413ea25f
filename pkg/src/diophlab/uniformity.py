"""Windowed psi-uniformity of matrices over restricted numerator/denominator sets.

All verdicts are exact.  Float matrices are replaced by dyadic snapshots
before enumeration, and comparisons with psi go through
:meth:`ApproxFunction.le`.  The best remainder as a function of the height
``t`` is a right-continuous step function that only changes at heights of
members of ``Q``, so checking the window ``[t0, T]`` reduces to one
comparison per gap between consecutive checkpoints.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .core import (
    ApproxFunction,
    Mat,
    format_rational,
    lcm_denominator,
    parse_psi,
    to_fraction,
)
from .errors import DimensionMismatch, EmptyAdmissibleSet, ParseError
from .geometry import BoxRegion, ResonantSubspace
from .sets import (
    Lattice,
    SetGenerator,
    enumerate_bounded,
    is_integer_lattice,
)

MAX_BITS = 52


# ----------------------------------------------------------------------------
# exact snapshots and height profiles
# ----------------------------------------------------------------------------

def snapshot_bits(A: Mat, b=None, T=1) -> int:
    """Dyadic precision used for float matrices.

    Chosen so that ``N q - off`` stays below ``2**60`` for ``|q|_sup <= T``.
    The bound only depends on the sum of absolute entries of ``A`` and ``b``,
    so ``A`` with shift ``b`` and the augmented matrix ``(A|b)`` get the same
    precision.
    """
    total = sum(abs(float(x)) for x in A.entries) + sum(abs(float(x)) for x in (b or ()))
    scale = (total + 1.0) * max(float(T), 1.0)
    return max(8, min(MAX_BITS, 60 - int(math.ceil(math.log2(scale))) - 1))


@dataclass(frozen=True)
class Snapshot:
    """``A = N / D`` and shift ``b = off / D`` with integer ``N``, ``off``."""

    N: tuple
    off: tuple
    D: int

    @property
    def m(self):
        return len(self.N)

    @property
    def n(self):
        return len(self.N[0])

    def exact_matrix(self) -> Mat:
        return Mat.of([[Fraction(x, self.D) for x in row] for row in self.N], exact=True)


def make_snapshot(A: Mat, b=None, T=1, bits=None) -> Snapshot:
    if b is not None and len(b) != A.rows:
        raise DimensionMismatch("shift vector has wrong length")
    if A.exact and (b is None or all(not isinstance(x, float) for x in b)):
        ents = list(A.entries)
        bb = [to_fraction(x) for x in (b or [0] * A.rows)]
    else:
        k = snapshot_bits(A, b, T) if bits is None else bits
        ents = [Fraction(round(to_fraction(x) * (1 << k)), 1 << k) for x in A.entries]
        bb = [Fraction(round(to_fraction(x) * (1 << k)), 1 << k) for x in (b or [0] * A.rows)]
    D = lcm_denominator(ents + bb)
    N = tuple(tuple(int(ents[i * A.cols + j] * D) for j in range(A.cols)) for i in range(A.rows))
    off = tuple(int(x * D) for x in bb)
    return Snapshot(N, off, D)


def _round_lower(x: int, D: int):
    r = x % D
    if 2 * r <= D:
        return (x - r) // D, r
    return (x - r) // D + 1, D - r


@dataclass
class HeightProfile:
    """Best pair per distinct denominator height, in increasing height order.

    ``rem`` holds exact remainders ``|A q - b - p|_sup``.
    """

    heights: list
    rem: list
    p: list
    q: list
    backend: str = "exact"

    def best_upto(self, t):
        """Index of the best pair among heights ``<= t`` (ties to the smaller height)."""
        best = None
        for i, h in enumerate(self.heights):
            if h > t:
                break
            if best is None or self.rem[i] < self.rem[best]:
                best = i
        return best

    def cumulative(self):
        """List of indices ``j_i``: best pair among the first ``i+1`` heights."""
        out, best = [], None
        for i, r in enumerate(self.rem):
            if best is None or r < self.rem[best]:
                best = i
            out.append(best)
        return out


def _profile_from_scaled(hs, rs, ps, qs, D, backend):
    return HeightProfile(list(hs), [Fraction(int(r), D) for r in rs],
                         [tuple(int(x) for x in p) for p in ps],
                         [tuple(q) for q in qs], backend)


def height_profile(A: Mat, genP: SetGenerator, genQ: SetGenerator, T, b=None,
                   snap: Snapshot | None = None) -> HeightProfile:
    """Exhaustive per-height minima of ``|A q - b - p|_sup`` over ``|q|_sup <= T``."""
    m, n = A.rows, A.cols
    if genP.dim != m or genQ.dim != n:
        raise DimensionMismatch(f"P in R^{genP.dim}, Q in R^{genQ.dim} for a {m}x{n} matrix")
    snap = snap or make_snapshot(A, b, T)
    lattice_p = is_integer_lattice(genP, m)
    if lattice_p and is_integer_lattice(genQ, n):
        Tint = int(math.floor(T))
        if Tint < 1:
            return HeightProfile([], [], [], [])
        if kernels.int64_safe(snap.N, snap.off, Tint):
            N = np.array(snap.N, dtype=np.int64)
            off = np.array(snap.off, dtype=np.int64)
            best, argq = kernels.height_minima_lattice(N, off, snap.D, Tint)
            hs, rs, qs = [], [], []
            for h in range(1, Tint + 1):
                if best[h] >= 0:
                    hs.append(h)
                    rs.append(int(best[h]))
                    qs.append(tuple(int(x) for x in argq[h]))
            ps = [_nearest_lattice(snap, q)[0] for q in qs]
            return _profile_from_scaled(hs, rs, ps, qs, snap.D, "lattice-" + _backend())
        Q = enumerate_bounded(Lattice(n, True), Tint)
    else:
        Q = enumerate_bounded(genQ, T, exclude_zero=True)
    if not Q:
        return HeightProfile([], [], [], [])
    try:
        Qa = np.array(Q)  # int64 exactly when every coordinate is a machine-size integer
    except OverflowError:
        Qa = np.array(Q, dtype=object)
    if lattice_p and Qa.dtype.kind == "i":
        if kernels.int64_safe(snap.N, snap.off, int(np.abs(Qa).max())):
            rs, ps = kernels.remainders_array(np.array(snap.N, dtype=np.int64),
                                              np.array(snap.off, dtype=np.int64), snap.D, Qa)
            return _group_by_height(Q, [int(r) for r in rs], [tuple(int(x) for x in p) for p in ps],
                                    snap.D, "array-" + _backend())
        rs, ps = _remainders_object(snap, Q)
        return _group_by_height(Q, rs, ps, snap.D, "array-object")
    # general sets: exact rational arithmetic with nearest-member queries
    rs, ps = [], []
    D = snap.D
    for q in Q:
        qf = [to_fraction(x) for x in q]
        x = [sum((Fraction(a) * c for a, c in zip(row, qf)), Fraction(0)) - o
             for row, o in zip(snap.N, snap.off)]
        x = [v / D for v in x]
        p = genP.nearest(tuple(x))
        ps.append(tuple(p))
        rs.append(max(abs(v - to_fraction(c)) for v, c in zip(x, p)))
    return _group_by_height(Q, rs, ps, 1, "exact")


def _backend():
    return "numba" if kernels.NUMBA_ENABLED else "numpy"


def _nearest_lattice(snap: Snapshot, q):
    ps, worst = [], 0
    for row, o in zip(snap.N, snap.off):
        p, r = _round_lower(sum(a * c for a, c in zip(row, q)) - o, snap.D)
        ps.append(p)
        worst = max(worst, r)
    return tuple(ps), worst


def _remainders_object(snap, Q):
    Qo = np.array(Q, dtype=object)
    No = np.array(snap.N, dtype=object)
    X = Qo.dot(No.T) - np.array(snap.off, dtype=object)
    rs, ps = [], []
    for row in X:
        pr = [_round_lower(int(x), snap.D) for x in row]
        ps.append(tuple(p for p, _ in pr))
        rs.append(max(r for _, r in pr))
    return rs, ps


def _group_by_height(Q, rs, ps, D, backend):
    # Q is sorted by (height, lex); keep the first strict minimum per height
    hs, br, bp, bq = [], [], [], []
    for q, r, p in zip(Q, rs, ps):
        h = max(map(abs, q))
        if not isinstance(h, int):
            h = to_fraction(h)
            if h.denominator == 1:
                h = h.numerator
        if hs and hs[-1] == h:
            if r < br[-1]:
                br[-1], bp[-1], bq[-1] = r, p, q
            continue
        hs.append(h)
        br.append(r)
        bp.append(p)
        bq.append(q)
    rem = [Fraction(r, D) if isinstance(r, int) else to_fraction(r) / D for r in br]
    return HeightProfile(hs, rem, bp, bq, backend)


# ----------------------------------------------------------------------------
# records
# ----------------------------------------------------------------------------

@dataclass
class Checkpoint:
    t: Fraction
    p: tuple
    q: tuple
    remainder: Fraction


@dataclass
class UniformityCertificate:
    m: int
    n: int
    psi: ApproxFunction
    t0: Fraction
    T: Fraction
    checkpoints: list
    backend: str = ""
    inhomogeneous: tuple | None = None

    verdict = "certified"

    def to_text(self) -> str:
        return _records_to_text(self, "certified", self.checkpoints)

    def to_json(self):
        return {
            "verdict": "certified", "m": self.m, "n": self.n, "psi": self.psi.describe(),
            "window": [format_rational(self.t0), format_rational(self.T)],
            "checkpoints": [_cp_json(c) for c in self.checkpoints],
            "backend": self.backend,
        }


@dataclass
class FailureWitness:
    m: int
    n: int
    psi: ApproxFunction
    t0: Fraction
    T: Fraction
    t_star: Fraction
    best: Fraction
    p: tuple
    q: tuple
    gap: tuple
    onset: Fraction | None = None
    checkpoints: list = field(default_factory=list)
    backend: str = ""

    verdict = "failed"

    def to_text(self) -> str:
        extra = [f"t_star {format_rational(self.t_star)}",
                 f"best {format_rational(self.best)} p {_vec_text(self.p)} q {_vec_text(self.q)}",
                 f"gap {format_rational(self.gap[0])} {format_rational(self.gap[1])}",
                 "onset " + ("none" if self.onset is None else format_rational(self.onset))]
        return _records_to_text(self, "failed", self.checkpoints, extra)

    def to_json(self):
        return {
            "verdict": "failed", "m": self.m, "n": self.n, "psi": self.psi.describe(),
            "window": [format_rational(self.t0), format_rational(self.T)],
            "t_star": format_rational(self.t_star), "best": format_rational(self.best),
            "p": [format_rational(x) for x in self.p], "q": [format_rational(x) for x in self.q],
            "gap": [format_rational(x) for x in self.gap],
            "onset": None if self.onset is None else format_rational(self.onset),
            "backend": self.backend,
        }


def _vec_text(v):
    return ",".join(format_rational(x) for x in v)


def _cp_json(c: Checkpoint):
    return {"t": format_rational(c.t), "p": [format_rational(x) for x in c.p],
            "q": [format_rational(x) for x in c.q], "remainder": format_rational(c.remainder)}


def _records_to_text(rec, verdict, cps, extra=()):
    lines = [
        "# diophlab uniformity certificate",
        f"m {rec.m}",
        f"n {rec.n}",
        f"psi {rec.psi.describe()}",
        f"window {format_rational(rec.t0)} {format_rational(rec.T)}",
        f"verdict {verdict}",
    ]
    lines.extend(extra)
    lines.append(f"checkpoints {len(cps)}")
    for c in cps:
        lines.append(f"{format_rational(c.t)}  {_vec_text(c.p)}  {_vec_text(c.q)}  "
                     f"{format_rational(c.remainder)}")
    return "\n".join(lines) + "\n"


def parse_certificate(text: str):
    """Inverse of ``to_text`` for both certificates and failure witnesses."""
    head, cps = {}, []
    lines = text.splitlines()
    count = None
    for no, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if count is not None and len(cps) < count:
            parts = s.split()
            if len(parts) != 4:
                raise ParseError(no, "checkpoint line needs: t p q remainder")
            try:
                cps.append(Checkpoint(Fraction(parts[0]), _parse_vec(parts[1]),
                                      _parse_vec(parts[2]), Fraction(parts[3])))
            except ValueError as exc:
                raise ParseError(no, str(exc)) from None
            continue
        key, _, rest = s.partition(" ")
        if key == "checkpoints":
            count = int(rest)
        else:
            head[key] = rest
    if count is None or len(cps) != count:
        raise ParseError(len(lines), "checkpoint count does not match")
    try:
        m, n = int(head["m"]), int(head["n"])
        psi = parse_psi(head["psi"])
        t0, T = (Fraction(x) for x in head["window"].split())
        verdict = head["verdict"]
    except (KeyError, ValueError) as exc:
        raise ParseError(0, f"bad header: {exc}") from None
    if verdict == "certified":
        return UniformityCertificate(m, n, psi, t0, T, cps)
    best_parts = head["best"].split()
    onset = head.get("onset", "none")
    return FailureWitness(m, n, psi, t0, T, Fraction(head["t_star"]), Fraction(best_parts[0]),
                          _parse_vec(best_parts[2]), _parse_vec(best_parts[4]),
                          tuple(Fraction(x) for x in head["gap"].split()),
                          None if onset == "none" else Fraction(onset), cps)


def _parse_vec(s):
    out = []
    for x in s.split(","):
        f = Fraction(x)
        out.append(f.numerator if f.denominator == 1 else f)
    return tuple(out)


# ----------------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------------

def _as_mat(A) -> Mat:
    return A if isinstance(A, Mat) else Mat.of(A)


def best_remainder(A, genP, genQ, t, b=None):
    """Minimum of ``|A q - b - p|_sup`` over ``p in P``, ``q in Q``, ``|q|_sup <= t``.

    Returns ``(value, (p, q))`` with ties broken by smallest ``|q|_sup``, then
    lexicographic ``q``, then ``p``.
    """
    A = _as_mat(A)
    prof = height_profile(A, genP, genQ, t, b)
    i = prof.best_upto(to_fraction(t))
    if i is None:
        raise EmptyAdmissibleSet(f"no q in Q with |q| <= {t}")
    return prof.rem[i], (prof.p[i], prof.q[i])


def _checkpoints(prof: HeightProfile, t0, T):
    pts = {t0, T}
    pts.update(h for h in prof.heights if t0 <= h <= T)
    return sorted(pts)


def _left_witness(psi, best, lo, hi):
    """A ``t`` in ``(lo, hi)`` with ``best > psi(t)``; exists when ``best > psi(hi-)``."""
    t = hi
    step = (hi - lo) / 2
    for _ in range(400):
        t = hi - step
        if not psi.le(best, t):
            return t
        step /= 2
    return hi - step


def _evaluate(A, psi, genP, genQ, t0, T, b=None, prof=None):
    A = _as_mat(A)
    t0, T = to_fraction(t0), to_fraction(T)
    if not t0 < T:
        raise ValueError("window needs t0 < T")
    if prof is None:
        prof = height_profile(A, genP, genQ, T, b)
    cps = _checkpoints(prof, t0, T)
    cum = prof.cumulative()
    records, fails = [], []
    j = -1
    idx = None
    for i, t in enumerate(cps):
        while j + 1 < len(prof.heights) and prof.heights[j + 1] <= t:
            j += 1
        idx = cum[j] if j >= 0 else None
        if idx is None:
            raise EmptyAdmissibleSet(f"no q in Q with |q| <= {t}")
        rec = Checkpoint(t, prof.p[idx], prof.q[idx], prof.rem[idx])
        records.append(rec)
        if i + 1 < len(cps):
            if not psi.le_left(rec.remainder, cps[i + 1]):
                fails.append(i)
        elif not psi.le(rec.remainder, t):
            fails.append(i)
    return A, prof, cps, records, fails


def check_uniform(A, psi: ApproxFunction, genP, genQ, t0, T, b=None, _prof=None):
    """Windowed psi-uniformity verdict.

    Returns a :class:`UniformityCertificate` when every gap passes, otherwise a
    :class:`FailureWitness` for the first failing gap.
    """
    A, prof, cps, records, fails = _evaluate(A, psi, genP, genQ, t0, T, b, _prof)
    m, n = A.rows, A.cols
    if not fails:
        return UniformityCertificate(m, n, psi, cps[0], cps[-1], records, prof.backend,
                                     None if b is None else tuple(to_fraction(x) for x in b))
    i = fails[0]
    rec = records[i]
    if i + 1 < len(cps):
        t_star = _left_witness(psi, rec.remainder, cps[i], cps[i + 1])
        gap = (cps[i], cps[i + 1])
    else:
        t_star, gap = cps[i], (cps[i], cps[i])
    last = fails[-1]
    onset = cps[last + 1] if last + 1 < len(cps) else None
    return FailureWitness(m, n, psi, cps[0], cps[-1], t_star, rec.remainder, rec.p, rec.q, gap,
                          onset, records, prof.backend)


def check_uniform_inhom(A, b, psi, genP, genQ, t0, T):
    """Inhomogeneous variant ``|A q - b - p| <= psi(t)`` (direct shifted enumeration)."""
    return check_uniform(A, psi, genP, genQ, t0, T, b=list(b))


def check_uniform_augmented(A, b, psi, genP, genQ, t0, T):
    """The same question through ``(A|b)`` and ``Q x {-1}``; pairs reported as ``(p, q)``."""
    from .sets import augment_for_inhomogeneous

    A = _as_mat(A)
    Ab = A.augment(list(b))
    # same dyadic precision as the direct route
    snap = make_snapshot(A, list(b), T)
    snapAb = Snapshot(tuple(row + (o,) for row, o in zip(snap.N, snap.off)),
                      (0,) * A.rows, snap.D)
    prof = height_profile(Ab, genP, augment_for_inhomogeneous(genQ), T, snap=snapAb)
    res = check_uniform(Ab, psi, genP, augment_for_inhomogeneous(genQ), t0, T, _prof=prof)
    strip = lambda q: tuple(q[:-1])
    for c in res.checkpoints:
        c.q = strip(c.q)
    if isinstance(res, FailureWitness):
        res.q = strip(res.q)
    res.n = A.cols
    return res


def is_trivially_singular(A, genQ, bound, tol=0):
    """First ``q`` (enumeration order) with ``A q`` within ``tol`` of ``Z^m``; else None."""
    A = _as_mat(A)
    genP = Lattice(A.rows)
    if A.exact or tol == 0:
        prof = height_profile(A.as_exact() if not A.exact else A, genP, genQ, bound)
    else:
        prof = height_profile(A, genP, genQ, bound)
    tol = to_fraction(tol)
    for r, p, q in zip(prof.rem, prof.p, prof.q):
        if r <= tol:
            return q, p
    return None


def dirichlet_margin(A, genP, genQ, t0, T, b=None):
    """``sup`` over gaps of ``t_{i+1}^{n/m} * best(t_i)`` (and ``T^{n/m} best(T)``).

    ``A`` is ``c t^{-n/m}``-uniform on the window (gap rule) exactly when ``c``
    is at least the returned value.
    """
    A = _as_mat(A)
    _, prof, cps, records, _ = _evaluate(A, _NeverFail(), genP, genQ, t0, T, b)
    e = A.cols / A.rows
    best, arg = -1.0, None
    for i, rec in enumerate(records):
        t_next = cps[i + 1] if i + 1 < len(cps) else cps[i]
        v = float(rec.remainder) * float(t_next) ** e
        if v > best:
            best, arg = v, t_next
    return {"margin": best, "argmax_t": arg, "checkpoints": len(cps)}


class _NeverFail(ApproxFunction):
    def le(self, x, t):
        return True

    def describe(self):
        return "none"


# ----------------------------------------------------------------------------
# fixed enumeration of rational subspaces
# ----------------------------------------------------------------------------

def enumerate_subspaces(m, n, count):
    """The first ``count`` distinct ``L_{p,q}`` with integer ``(p, q)``.

    Ordered by ``max(|p|_sup, |q|_sup)`` and then lexicographically in
    ``(q, p)``; each subspace is listed once, by its primitive representative
    with first nonzero ``q`` coordinate positive.
    """
    out, seen = [], set()
    h = 1
    while len(out) < count:
        block = []
        for q in itertools.product(range(-h, h + 1), repeat=n):
            if not any(q):
                continue
            for p in itertools.product(range(-h, h + 1), repeat=m):
                if max(max(abs(x) for x in q), max((abs(x) for x in p), default=0)) != h:
                    continue
                block.append((q, p))
        block.sort()
        for q, p in block:
            g = 0
            for x in q + p:
                g = math.gcd(g, abs(x))
            qq = tuple(x // g for x in q)
            pp = tuple(x // g for x in p)
            if next(x for x in qq if x != 0) < 0:
                qq, pp = tuple(-x for x in qq), tuple(-x for x in pp)
            if (pp, qq) in seen:
                continue
            seen.add((pp, qq))
            out.append(ResonantSubspace.from_pair(pp, qq))
            if len(out) == count:
                break
        h += 1
    return out


# ----------------------------------------------------------------------------
# nested-box witness builder
# ----------------------------------------------------------------------------

@dataclass
class Stage:
    t: Fraction
    t_next: Fraction
    p: tuple
    q: tuple
    center: Mat
    radius: Fraction
    reused: bool = False


@dataclass
class NestedBoxCertificate:
    m: int
    n: int
    psi: ApproxFunction
    t0: Fraction
    T: Fraction
    stages: list
    avoid: list
    separations: list
    seed_box: BoxRegion

    verdict = "certified"

    @property
    def final_box(self) -> BoxRegion:
        s = self.stages[-1]
        return BoxRegion.around(s.center, s.radius)

    @property
    def center(self) -> Mat:
        return self.stages[-1].center

    def boxes(self):
        return [BoxRegion.around(s.center, s.radius) for s in self.stages]

    def verify_stages(self) -> bool:
        """Exact re-check of nesting and of the per-stage psi bound."""
        prev = self.seed_box
        for s in self.stages:
            box = BoxRegion.around(s.center, s.radius)
            if not box.inside(prev):
                return False
            if any(a != b for a, b in zip(s.center.apply(s.q), s.p)):
                return False
            qs = max(abs(x) for x in s.q)
            if qs > s.t or not self.psi.le(self.n * qs * s.radius, s.t_next):
                return False
            prev = box
        return True

    def to_json(self):
        return {
            "verdict": "certified", "m": self.m, "n": self.n, "psi": self.psi.describe(),
            "window": [format_rational(self.t0), format_rational(self.T)],
            "stages": [{"t": format_rational(s.t), "t_next": format_rational(s.t_next),
                        "p": list(s.p), "q": list(s.q), "radius": float(s.radius),
                        "reused": s.reused,
                        "center": [float(x) for x in s.center.entries]} for s in self.stages],
            "avoid": [{"p": [format_rational(x) for x in a.p], "q": [format_rational(x) for x in a.q]}
                      for a in self.avoid],
            "separations": [float(x) for x in self.separations],
        }


@dataclass
class Obstruction:
    stage: int
    t: Fraction
    box: BoxRegion
    reason: str

    verdict = "obstructed"

    def to_json(self):
        return {"verdict": "obstructed", "stage": self.stage, "t": format_rational(self.t),
                "box": self.box.to_json(), "reason": self.reason}


def _psi_radius(psi, n, qsup, t_next):
    """Largest-ish rational ``r`` with ``n |q| r <= psi(t_next)``, verified exactly."""
    r = Fraction(math.floor(psi(float(t_next)) / (n * qsup) * 2 ** 60), 2 ** 60)
    while r > 0 and not psi.le(n * qsup * r, t_next):
        r = r * Fraction(1023, 1024)
    return r


def _candidates(genQ, n, s):
    Q = enumerate_bounded(genQ, s, exclude_zero=True)
    return [q for q in Q if all(isinstance(x, int) for x in q)]


def build_uniform_witness(psi, genP, genQ, t0, T, avoid=(), seed=0, seed_box: BoxRegion | None = None):
    """Greedy nested boxes whose points are psi-uniform on ``[t0, T]``.

    Stage ``k`` works at height ``s_k`` (``s_0 = t0``, doubling, capped at
    ``T``).  It chooses ``(p_k, q_k)`` with ``|q_k|_sup <= s_k`` whose subspace
    meets the current box, recentres on that subspace and sets the radius so
    that ``n |q_k| r_k <= psi(s_{k+1})``; then every matrix in the box solves the
    system on ``[s_k, s_{k+1}]`` with this pair.  New subspaces are preferred;
    the previous one always passes through the centre and is the fallback.
    Subspaces in ``avoid`` are kept at a positive, recorded distance.
    ``P`` must be an integer lattice.
    """
    m, n = genP.dim, genQ.dim
    if not is_integer_lattice(genP, m):
        raise ValueError("the witness builder needs P = Z^m")
    t0, T = to_fraction(t0), to_fraction(T)
    if not t0 < T:
        raise ValueError("window needs t0 < T")
    rng = np.random.default_rng(seed)
    if seed_box is None:
        c = [Fraction(int(x), 1 << 20) for x in rng.integers(0, 1 << 20, m * n)]
        seed_box = BoxRegion.around(Mat(m, n, tuple(c), True), Fraction(1, 2))
    avoid = list(avoid)
    heights = [t0]
    while heights[-1] < T:
        heights.append(min(heights[-1] * 2, T))
    centre = Mat(m, n, tuple(to_fraction(x) for x in seed_box.center().entries), True)
    radius = min((to_fraction(b) - to_fraction(a)) / 2 for a, b in zip(seed_box.lo, seed_box.hi))
    stages = []
    separations = []
    prev = None
    for k, s in enumerate(heights):
        s_next = heights[k + 1] if k + 1 < len(heights) else T
        choice = _pick_stage(psi, genQ, m, n, centre, radius, s, s_next, prev, avoid)
        if choice is None:
            if prev is None:
                return Obstruction(k, s, BoxRegion.around(centre, radius),
                                   "no admissible subspace meets the box")
            q, p = prev.q, prev.p
            Y, r = centre, min(radius, _psi_radius(psi, n, max(abs(x) for x in q), s_next))
            reused = True
        else:
            q, p, Y, r = choice
            reused = False
        if k == 0 and avoid:
            Y, r, separations = _separate(Y, r, p, q, avoid, m)
        st = Stage(s, s_next, tuple(p), tuple(q), Y, r, reused)
        stages.append(st)
        prev = st
        centre, radius = Y, r
    return NestedBoxCertificate(m, n, psi, t0, T, stages, avoid, separations, seed_box)


def _pick_stage(psi, genQ, m, n, C, r_prev, s, s_next, prev, avoid):
    Q = _candidates(genQ, n, s)
    if not Q:
        return None
    Qa = np.array(Q, dtype=float)
    Cf = np.array([float(x) for x in C.entries]).reshape(m, n)
    X = Qa @ Cf.T                                  # K x m
    # numerators: the nearest one first, then its row-wise neighbours
    offs = np.array(sorted(itertools.product((-1, 0, 1), repeat=m), key=lambda o: sum(map(abs, o))))
    Pn = np.floor(X + 0.5)[:, None, :] + offs[None, :, :]      # K x O x m
    res = X[:, None, :] - Pn
    qsup = np.abs(Qa).max(axis=1)
    qq = (Qa * Qa).sum(axis=1)
    d = np.abs(res).max(axis=2) * (qsup / qq)[:, None]        # sup distance to the projection
    psi_r = (psi(float(s_next)) / (n * qsup))[:, None]
    score = np.minimum(float(r_prev) - d, psi_r).ravel()
    order = np.lexsort((np.arange(score.size), -score))
    tried = 0
    for flat in order:
        if score[flat] <= 0 or tried > 50:
            break
        i, o = divmod(int(flat), len(offs))
        q = Q[i]
        p = tuple(int(v) for v in Pn[i, o])
        L = ResonantSubspace.from_pair(p, q)
        if prev is not None and L.same_as(ResonantSubspace.from_pair(prev.p, prev.q)):
            continue
        if any(L.same_as(a) for a in avoid):
            continue
        tried += 1
        qf = [Fraction(x) for x in q]
        qn2 = sum(x * x for x in qf)
        Cq = C.apply(qf)
        resx = [a - Fraction(b) for a, b in zip(Cq, p)]
        Y = Mat(m, n, tuple(C[i_, j] - resx[i_] * qf[j] / qn2 for i_ in range(m) for j in range(n)), True)
        dist = max(abs(a - b) for a, b in zip(Y.entries, C.entries))
        r = min(r_prev - dist, _psi_radius(psi, n, max(abs(x) for x in q), s_next))
        if r > 0:
            return q, p, Y, r
    return None


def _separate(Y, r, p, q, avoid, m):
    """Shrink (and if needed shift within ``L_{p,q}``) so the box misses every avoided subspace."""
    n = Y.cols
    qf = [Fraction(x) for x in q]
    qn2 = sum(x * x for x in qf)
    seps = []
    for a in avoid:
        qa, pa = list(a.q), list(a.p)
        res = [u - v for u, v in zip(Y.apply(qa), pa)]
        if all(x == 0 for x in res):
            # Y lies on L_a: move inside L_{p,q} along v w^T with w = q_a - proj_q(q_a)
            coef = sum(x * y for x, y in zip(qa, qf)) / qn2
            w = [x - coef * y for x, y in zip(qa, qf)]
            wsup = max(abs(x) for x in w)
            if wsup == 0:
                raise ValueError("avoided subspace coincides with the stage subspace")
            beta = r / (2 * wsup)
            Y = Mat(Y.rows, n, tuple(Y[i, j] + (beta * w[j] if i == 0 else 0)
                                     for i in range(Y.rows) for j in range(n)), True)
            r = r / 2
            res = [u - v for u, v in zip(Y.apply(qa), pa)]
        rsup = max(abs(x) for x in res)
        qa1 = sum(abs(x) for x in qa)
        r = min(r, rsup / (2 * m * qa1))
        seps.append(rsup)
    # separation lower bounds for the final radius, ||res||_2 >= |res|_sup
    out = []
    for a in avoid:
        qa, pa = list(a.q), list(a.p)
        res = [u - v for u, v in zip(Y.apply(qa), pa)]
        rsup = max(abs(x) for x in res)
        qa1 = sum(abs(x) for x in qa)
        qa2 = math.sqrt(sum(float(x) ** 2 for x in qa))
        lower = (float(rsup) - math.sqrt(m) * float(r) * float(qa1)) / qa2
        out.append(lower * (1 - 1e-12))
    return Y, r, out


def sample_box(box: BoxRegion, count, seed=0, T=1):
    """Exact dyadic sample matrices inside ``box``."""
    rng = np.random.default_rng(seed)
    centre = box.center()
    bits = snapshot_bits(centre.as_float(), None, T)
    out = []
    lo = np.array([float(x) for x in box.lo])
    hi = np.array([float(x) for x in box.hi])
    while len(out) < count:
        x = lo + (hi - lo) * rng.random(len(lo))
        M = Mat(box.m, box.n, tuple(float(v) for v in x), False).snapshot(bits)
        if box.contains(M):
            out.append(M)
    return out
