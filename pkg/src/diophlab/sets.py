"""Numerator and denominator sets.

A :class:`SetGenerator` is an immutable descriptor of a subset of ``R^d``
that can enumerate its members up to a sup-norm bound, test membership and
(for numerator sets) return a nearest member.  Members are tuples of ints,
Fractions or floats.  Every generator has a textual descriptor understood by
:func:`parse_generator`.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .core import format_rational, to_fraction
from .errors import DimensionMismatch, UnboundedEnumeration

FLOAT_TOL = 1e-9


def _sup(v):
    return max(map(abs, v), default=0)


def _key(v):
    return (_sup(v), tuple(v))


def _is_zero(v):
    return all(x == 0 for x in v)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return format_rational(x)


def _fmt_vec(v):
    return "[" + ",".join(_fmt(x) for x in v) + "]"


class SetGenerator:
    """Base class; subclasses implement :meth:`_members` and :meth:`contains`."""

    dim: int = 1
    exact: bool = True

    def _members(self, bound):
        """Iterable of members with sup-norm <= bound (duplicates allowed)."""
        raise UnboundedEnumeration(f"{type(self).__name__} cannot be enumerated")

    def enumerate(self, bound, exclude_zero=False) -> list:
        return enumerate_bounded(self, bound, exclude_zero=exclude_zero)

    def contains(self, v) -> bool:
        raise NotImplementedError

    def nearest(self, x):
        """Nearest member to ``x`` in sup-norm (ties to the smaller key).

        The generic version scans an enumeration wide enough to contain the
        answer; lattice-like generators override it.
        """
        x = tuple(x)
        r = 1
        while True:
            cand = self.enumerate(_sup(x) + r)
            if cand:
                best = min(cand, key=lambda v: (_sup([a - b for a, b in zip(v, x)]), _key(v)))
                dist = _sup([a - b for a, b in zip(best, x)])
                if _sup(x) + r >= _sup(x) + dist:
                    return best
                r = dist + 1
            else:
                r *= 2
            if r > 1 << 40:
                raise UnboundedEnumeration("no member found near the query point")

    def describe(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.describe()


def enumerate_bounded(gen: SetGenerator, bound, exclude_zero=False) -> list:
    """Members with sup-norm at most ``bound``, sorted by (sup-norm, lex)."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    fast = getattr(gen, "_sorted_members", None)
    if fast is not None:
        return fast(bound, exclude_zero)
    tol = 0 if gen.exact else FLOAT_TOL
    seen = set()
    out = []
    for v in gen._members(bound):
        v = tuple(v)
        if len(v) != gen.dim:
            raise DimensionMismatch("member of wrong dimension")
        if _sup(v) > bound + tol:
            continue
        if exclude_zero and _is_zero(v):
            continue
        if v in seen:
            continue
        seen.add(v)
        out.append(v)
    out.sort(key=_key)
    return out


# ----------------------------------------------------------------------------
# one-dimensional sorted sets
# ----------------------------------------------------------------------------

class _Sorted1D(SetGenerator):
    """Helper for subsets of R given by a sorted list of nonnegative values."""

    dim = 1
    symmetric = False

    def _values_upto(self, bound) -> list:
        raise NotImplementedError

    def _members(self, bound):
        for x in self._values_upto(bound):
            yield (x,)
            if self.symmetric and x != 0:
                yield (-x,)

    def contains(self, v):
        x = v[0] if isinstance(v, (tuple, list)) else v
        a = abs(x) if self.symmetric else x
        if a < 0:
            return False
        vals = self._values_upto(a)
        i = bisect.bisect_left(vals, a)
        return i < len(vals) and vals[i] == a

    def nearest(self, x):
        x = x[0] if isinstance(x, (tuple, list)) else x
        reach = abs(x) * 2 + 2
        while True:
            vals = self._values_upto(reach)
            if vals:
                if self.symmetric:
                    sgn = -1 if x < 0 else 1
                    a = abs(x)
                    i = bisect.bisect_left(vals, a)
                    cands = [sgn * vals[j] for j in (i - 1, i) if 0 <= j < len(vals)]
                    cands.append(-sgn * vals[0])
                else:
                    i = bisect.bisect_left(vals, x)
                    cands = [vals[j] for j in (i - 1, i) if 0 <= j < len(vals)]
                best = min(cands, key=lambda v: (abs(v - x), v))
                if abs(x) + abs(best - x) <= reach:
                    return (best,)
            reach *= 2
            if reach > 1 << 62:
                raise UnboundedEnumeration("no member found near the query point")


@lru_cache(maxsize=8)
def _sieve(limit: int) -> np.ndarray:
    limit = max(int(limit), 2)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags)


@lru_cache(maxsize=8)
def _sieve_list(size: int) -> list:
    return [int(p) for p in _sieve(size)]


def primes_upto(limit) -> list:
    """Primes ``<= limit`` by a sieve of Eratosthenes."""
    # round the sieve size up so repeated calls share a cache entry
    size = 1 << max(6, int(math.ceil(math.log2(max(float(limit), 2)))))
    full = _sieve_list(size)
    return full[: bisect.bisect_right(full, limit)]


@dataclass(frozen=True)
class Primes(_Sorted1D):
    sign: str = "symmetric"

    def __post_init__(self):
        if self.sign not in ("symmetric", "positive"):
            raise ValueError("sign policy is 'symmetric' or 'positive'")

    @property
    def symmetric(self):
        return self.sign == "symmetric"

    def _values_upto(self, bound):
        return primes_upto(bound)

    def describe(self):
        return "primes" if self.symmetric else "primes(positive)"


@dataclass(frozen=True)
class Powers(_Sorted1D):
    """``{a^k : k >= 0}``, both signs unless ``sign='positive'``."""

    a: int = 2
    sign: str = "symmetric"

    def __post_init__(self):
        if int(self.a) < 2:
            raise ValueError("powers need a base >= 2")

    @property
    def symmetric(self):
        return self.sign == "symmetric"

    def _values_upto(self, bound):
        out, x = [], 1
        while x <= bound:
            out.append(x)
            x *= self.a
        return out

    def describe(self):
        return f"powers({self.a})" if self.symmetric else f"powers({self.a},positive)"


@dataclass(frozen=True)
class IntRange(_Sorted1D):
    """Integers ``>= lo`` (and ``<= hi`` if given)."""

    lo: int = 0
    hi: int | None = None

    def _members(self, bound):
        lo = max(self.lo, -math.floor(bound))
        hi = math.floor(bound) if self.hi is None else min(self.hi, math.floor(bound))
        for x in range(lo, hi + 1):
            yield (x,)

    def contains(self, v):
        x = v[0] if isinstance(v, (tuple, list)) else v
        x = to_fraction(x)
        return x.denominator == 1 and x >= self.lo and (self.hi is None or x <= self.hi)

    def nearest(self, x):
        x = x[0] if isinstance(x, (tuple, list)) else x
        x = to_fraction(x)
        c = math.floor(x + Fraction(1, 2)) if x - math.floor(x) != Fraction(1, 2) else math.floor(x)
        c = max(c, self.lo)
        if self.hi is not None:
            c = min(c, self.hi)
        return (c,)

    def describe(self):
        return f"range({self.lo})" if self.hi is None else f"range({self.lo},{self.hi})"


@dataclass(frozen=True)
class PolyValues(_Sorted1D):
    """``{f(s) : s in domain}`` for an integer polynomial ``f`` (coefficients low to high)."""

    coeffs: tuple = (0, 1)
    domain: str = "z"

    def _eval(self, s):
        return sum(c * s ** i for i, c in enumerate(self.coeffs))

    def _members(self, bound):
        for s in _domain_range(self.domain, _poly_reach(self.coeffs, bound)):
            v = self._eval(s)
            if abs(v) <= bound:
                yield (v,)

    def contains(self, v):
        x = v[0] if isinstance(v, (tuple, list)) else v
        return (x,) in set(self._members(abs(x)))

    def nearest(self, x):
        return SetGenerator.nearest(self, (x[0] if isinstance(x, (tuple, list)) else x,))

    def describe(self):
        return f"poly({_fmt_vec(self.coeffs)},{self.domain})"


def _poly_reach(coeffs, bound):
    """An ``S`` with ``|f(s)| > bound`` for all ``|s| > S`` (degree >= 1)."""
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) <= 1:
        return 0
    lead = abs(coeffs[-1])
    cauchy = 1 + sum(abs(c) for c in coeffs[:-1]) / lead
    # for |s| >= cauchy, |f(s)| >= lead |s|^deg - sum |c_i| |s|^i >= |s| - ... grows; be generous
    return int(max(cauchy, (abs(bound) + sum(abs(c) for c in coeffs)) / lead)) + 1


def _domain_range(domain, S):
    if domain == "z":
        return range(-S, S + 1)
    if domain == "n":
        return range(0, S + 1)
    if domain == "n1":
        return range(1, S + 1)
    if domain == "neg":
        return range(-S, 0)
    raise ValueError(f"unknown domain {domain!r} (z, n, n1, neg)")


# ----------------------------------------------------------------------------
# lattices
# ----------------------------------------------------------------------------

def _round_half_down(x: Fraction) -> int:
    f = math.floor(x)
    return f if x - f <= Fraction(1, 2) else f + 1


@dataclass(frozen=True)
class Lattice(SetGenerator):
    """``Z^d``, optionally without the origin."""

    d: int = 1
    nonzero: bool = False

    @property
    def dim(self):
        return self.d

    def _members(self, bound):
        b = math.floor(bound)
        for v in itertools.product(range(-b, b + 1), repeat=self.d):
            if self.nonzero and not any(v):
                continue
            yield v

    def _sorted_members(self, bound, exclude_zero=False):
        b = math.floor(bound)
        if b < 0:
            return []
        axis = np.arange(-b, b + 1)
        grid = np.stack(np.meshgrid(*([axis] * self.d), indexing="ij"), -1).reshape(-1, self.d)
        if self.nonzero or exclude_zero:
            grid = grid[np.any(grid != 0, axis=1)]
        # meshgrid in ij order is lexicographic; a stable sort by height keeps lex within a height
        order = np.argsort(np.abs(grid).max(axis=1), kind="stable")
        return [tuple(v) for v in grid[order].tolist()]

    def contains(self, v):
        if len(v) != self.d:
            return False
        ok = all(to_fraction(x).denominator == 1 for x in v)
        return ok and not (self.nonzero and _is_zero(v))

    def nearest(self, x):
        return tuple(_round_half_down(to_fraction(t)) for t in x)

    def describe(self):
        if self.d == 1:
            return "int_nonzero" if self.nonzero else "int"
        return f"lattice({self.d},nonzero)" if self.nonzero else f"lattice({self.d})"


def _solve_exact(M, b):
    """Solve ``M c = b`` for a full-column-rank rational ``M``; None if inconsistent."""
    rows = [list(map(Fraction, r)) + [Fraction(y)] for r, y in zip(M, b)]
    ncol = len(M[0])
    piv_row = 0
    pivots = []
    for c in range(ncol):
        sel = next((r for r in range(piv_row, len(rows)) if rows[r][c] != 0), None)
        if sel is None:
            continue
        rows[piv_row], rows[sel] = rows[sel], rows[piv_row]
        pv = rows[piv_row][c]
        rows[piv_row] = [x / pv for x in rows[piv_row]]
        for r in range(len(rows)):
            if r != piv_row and rows[r][c] != 0:
                f = rows[r][c]
                rows[r] = [a - f * bb for a, bb in zip(rows[r], rows[piv_row])]
        pivots.append(c)
        piv_row += 1
    if any(all(x == 0 for x in r[:-1]) and r[-1] != 0 for r in rows):
        return None
    sol = [Fraction(0)] * ncol
    for i, c in enumerate(pivots):
        sol[c] = rows[i][-1]
    return sol


@dataclass(frozen=True)
class Subgroup(SetGenerator):
    """The subgroup of ``Z^d`` generated by linearly independent integer vectors."""

    basis: tuple = ((1,),)

    def __post_init__(self):
        dims = {len(b) for b in self.basis}
        if len(dims) != 1:
            raise DimensionMismatch("basis vectors of different lengths")
        if np.linalg.matrix_rank(np.array(self.basis, dtype=float)) != len(self.basis):
            raise ValueError("subgroup basis must be linearly independent")

    @property
    def dim(self):
        return len(self.basis[0])

    def _coords(self, v):
        M = [[self.basis[j][i] for j in range(len(self.basis))] for i in range(self.dim)]
        return _solve_exact(M, [to_fraction(x) for x in v])

    def contains(self, v):
        if len(v) != self.dim:
            return False
        c = self._coords(v)
        return c is not None and all(x.denominator == 1 for x in c)

    def _members(self, bound):
        b = math.floor(bound)
        for v in itertools.product(range(-b, b + 1), repeat=self.dim):
            if self.contains(v):
                yield v

    def nearest(self, x):
        x = [to_fraction(t) for t in x]
        # Babai-style candidate, then exact search in the box it certifies
        B = np.array(self.basis, dtype=float)
        c, *_ = np.linalg.lstsq(B.T, np.array([float(t) for t in x]), rcond=None)
        cand = tuple(sum(int(round(ci)) * B_j for ci, B_j in zip(c, col))
                     for col in zip(*self.basis))
        R = _sup([a - b for a, b in zip(cand, x)])
        lo = [math.ceil(t - R) for t in x]
        hi = [math.floor(t + R) for t in x]
        best = None
        for v in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            if not self.contains(v):
                continue
            key = (_sup([a - b for a, b in zip(v, x)]), _key(v))
            if best is None or key < best[0]:
                best = (key, v)
        return tuple(best[1]) if best else tuple(int(t) for t in cand)

    def describe(self):
        return "subgroup([" + ",".join(_fmt_vec(b) for b in self.basis) + "])"


@dataclass(frozen=True)
class Product(SetGenerator):
    """Cartesian product of one-dimensional generators."""

    factors: tuple = ()

    def __post_init__(self):
        if not self.factors or any(f.dim != 1 for f in self.factors):
            raise DimensionMismatch("product factors must be one-dimensional")

    @property
    def dim(self):
        return len(self.factors)

    @property
    def exact(self):
        return all(f.exact for f in self.factors)

    def _members(self, bound):
        lists = [[v[0] for v in enumerate_bounded(f, bound)] for f in self.factors]
        return itertools.product(*lists)

    def contains(self, v):
        return len(v) == self.dim and all(f.contains((x,)) for f, x in zip(self.factors, v))

    def nearest(self, x):
        return tuple(f.nearest((t,))[0] for f, t in zip(self.factors, x))

    def describe(self):
        return "product(" + ",".join(f.describe() for f in self.factors) + ")"


# ----------------------------------------------------------------------------
# curves and families
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyCurve(SetGenerator):
    """``s -> (f_1(s), ..., f_d(s))`` over an integer domain; origin excluded."""

    polys: tuple = ((0, 1),)
    domain: str = "z"

    @property
    def dim(self):
        return len(self.polys)

    def _point(self, s):
        return tuple(sum(c * s ** i for i, c in enumerate(f)) for f in self.polys)

    def _members(self, bound):
        S = max(_poly_reach(f, bound) for f in self.polys)
        for s in _domain_range(self.domain, S):
            v = self._point(s)
            if any(v) and _sup(v) <= bound:
                yield v

    def contains(self, v):
        if len(v) != self.dim or _is_zero(v):
            return False
        return tuple(v) in set(self._members(_sup(v)))

    def describe(self):
        return "polycurve([" + ",".join(_fmt_vec(f) for f in self.polys) + f"],{self.domain})"


def Curve(d: int) -> PolyCurve:
    """Moment curve ``s -> (s, s^2, ..., s^d)``, ``s`` in ``Z``, origin excluded."""
    return PolyCurve(tuple(tuple([0] * k + [1]) for k in range(1, d + 1)), "z")


@dataclass(frozen=True)
class Spiral(SetGenerator):
    """``{(a_s cos a_s, a_s sin a_s) : s = 1, 2, ...}`` with ``a_s = slope * s``.

    Float-valued; ``horizon`` caps the parameter ``s``.
    """

    slope: float = 1.0
    horizon: int = 10 ** 6
    dim = 2
    exact = False

    def _point(self, s):
        a = self.slope * s
        return (a * math.cos(a), a * math.sin(a))

    def _members(self, bound):
        smax = min(self.horizon, int(math.ceil((bound + FLOAT_TOL) * math.sqrt(2) / self.slope)) + 1)
        for s in range(1, smax + 1):
            yield self._point(s)

    def contains(self, v):
        r = math.hypot(*v)
        s = int(round(r / self.slope))
        for t in (s - 1, s, s + 1):
            if 1 <= t <= self.horizon:
                p = self._point(t)
                if _sup([a - b for a, b in zip(p, v)]) <= FLOAT_TOL:
                    return True
        return False

    def describe(self):
        return f"spiral({self.slope!r},{self.horizon})"


@dataclass(frozen=True)
class RayFamily(SetGenerator):
    """``shift + {k v_i : k in coeff set}`` for the given integer vectors.

    ``coeff`` is ``"n1"`` (k >= 1) or ``"z"`` (k != 0).
    """

    vectors: tuple = ((1,),)
    coeff: str = "n1"
    shift: tuple | None = None

    def __post_init__(self):
        if len({len(v) for v in self.vectors}) != 1:
            raise DimensionMismatch("ray vectors of different lengths")
        if self.coeff not in ("n1", "z"):
            raise ValueError("coefficient set is 'n1' or 'z'")

    @property
    def dim(self):
        return len(self.vectors[0])

    def _members(self, bound):
        sh = self.shift or (0,) * self.dim
        for v in self.vectors:
            kmax = int(math.floor((bound + _sup(sh)) / _sup(v)))
            ks = range(1, kmax + 1) if self.coeff == "n1" else itertools.chain(
                range(1, kmax + 1), range(-kmax, 0))
            for k in ks:
                yield tuple(s + k * x for s, x in zip(sh, v))

    def contains(self, v):
        if len(v) != self.dim:
            return False
        return tuple(v) in set(self._members(_sup(v)))

    def describe(self):
        vs = "[" + ",".join(_fmt_vec(v) for v in self.vectors) + "]"
        if self.shift is None:
            return f"rays({vs},{self.coeff})"
        return f"rays({vs},{self.coeff},{_fmt_vec(self.shift)})"


@dataclass(frozen=True)
class GapSet(SetGenerator):
    """Integer points avoiding the open annuli ``b_i < |v| < c_i``.

    ``b_i = B rho^i`` and ``c_i = delta b_i`` for ``i >= 1`` with
    ``rho > delta > 1``; the norm is Euclidean.  In dimension one only the
    nonnegative integers are used.
    """

    B: Fraction = Fraction(1)
    rho: Fraction = Fraction(10)
    delta: Fraction = Fraction(5)
    d: int = 1

    def __post_init__(self):
        if not (self.rho > self.delta > 1):
            raise ValueError("gap set needs rho > delta > 1")
        if self.B <= 0:
            raise ValueError("gap set needs B > 0")

    @property
    def dim(self):
        return self.d

    def annuli(self, bound):
        """List of ``(i, b_i, c_i)`` with ``b_i <= bound``."""
        out, i = [], 1
        while True:
            b = self.B * self.rho ** i
            if b > bound * math.sqrt(self.d) + 1:
                return out
            out.append((i, b, self.delta * b))
            i += 1

    def _in_gap(self, v):
        n2 = sum(to_fraction(x) ** 2 for x in v)
        for _, b, c in self.annuli(math.sqrt(float(n2)) + 1):
            if b * b < n2 < c * c:
                return True
        return False

    def _members(self, bound):
        b = math.floor(bound)
        rng = range(0, b + 1) if self.d == 1 else range(-b, b + 1)
        for v in itertools.product(rng, repeat=self.d):
            if not self._in_gap(v):
                yield v

    def contains(self, v):
        if len(v) != self.d or not all(to_fraction(x).denominator == 1 for x in v):
            return False
        if self.d == 1 and v[0] < 0:
            return False
        return not self._in_gap(v)

    def describe(self):
        return (f"gapset({format_rational(self.B)},{format_rational(self.rho)},"
                f"{format_rational(self.delta)},{self.d})")


# ----------------------------------------------------------------------------
# combinators
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Explicit(SetGenerator):
    points: tuple = ()

    def __post_init__(self):
        if not self.points:
            raise ValueError("explicit set needs at least one point")
        if len({len(p) for p in self.points}) != 1:
            raise DimensionMismatch("explicit points of different lengths")

    @property
    def dim(self):
        return len(self.points[0])

    @property
    def exact(self):
        return not any(isinstance(x, float) for p in self.points for x in p)

    def _members(self, bound):
        return iter(self.points)

    def contains(self, v):
        return tuple(v) in set(self.points)

    def nearest(self, x):
        return min(self.points, key=lambda v: (_sup([a - b for a, b in zip(v, x)]), _key(v)))

    def describe(self):
        return "explicit([" + ",".join(_fmt_vec(p) for p in self.points) + "])"


@dataclass(frozen=True)
class Translate(SetGenerator):
    gen: SetGenerator = None
    b: tuple = ()

    def __post_init__(self):
        if len(self.b) != self.gen.dim:
            raise DimensionMismatch("shift has wrong length")

    @property
    def dim(self):
        return self.gen.dim

    @property
    def exact(self):
        return self.gen.exact and not any(isinstance(x, float) for x in self.b)

    def _members(self, bound):
        for v in enumerate_bounded(self.gen, bound + _sup(self.b)):
            yield tuple(x + y for x, y in zip(v, self.b))

    def contains(self, v):
        return self.gen.contains(tuple(x - y for x, y in zip(v, self.b)))

    def nearest(self, x):
        v = self.gen.nearest(tuple(a - y for a, y in zip(x, self.b)))
        return tuple(a + y for a, y in zip(v, self.b))

    def describe(self):
        return f"translate({self.gen.describe()},{_fmt_vec(self.b)})"


@dataclass(frozen=True)
class Symmetrized(SetGenerator):
    gen: SetGenerator = None

    @property
    def dim(self):
        return self.gen.dim

    @property
    def exact(self):
        return self.gen.exact

    def _members(self, bound):
        for v in enumerate_bounded(self.gen, bound):
            yield v
            yield tuple(-x for x in v)

    def contains(self, v):
        return self.gen.contains(v) or self.gen.contains(tuple(-x for x in v))

    def nearest(self, x):
        a = self.gen.nearest(x)
        b = tuple(-t for t in self.gen.nearest(tuple(-t for t in x)))
        return min((a, b), key=lambda v: (_sup([s - t for s, t in zip(v, x)]), _key(v)))

    def describe(self):
        return f"sym({self.gen.describe()})"


@dataclass(frozen=True)
class Union(SetGenerator):
    parts: tuple = ()

    def __post_init__(self):
        if len(self.parts) < 2 or len({p.dim for p in self.parts}) != 1:
            raise DimensionMismatch("union needs at least two parts of equal dimension")

    @property
    def dim(self):
        return self.parts[0].dim

    @property
    def exact(self):
        return all(p.exact for p in self.parts)

    def _members(self, bound):
        for p in self.parts:
            yield from enumerate_bounded(p, bound)

    def contains(self, v):
        return any(p.contains(v) for p in self.parts)

    def nearest(self, x):
        return min((p.nearest(x) for p in self.parts),
                   key=lambda v: (_sup([s - t for s, t in zip(v, x)]), _key(v)))

    def describe(self):
        return "union(" + ",".join(p.describe() for p in self.parts) + ")"


@dataclass(frozen=True)
class Augmented(SetGenerator):
    """``{(v, last) : v in gen}``; with ``last = -1`` this is ``Q x {-1}``."""

    gen: SetGenerator = None
    last: Fraction = Fraction(-1)

    @property
    def dim(self):
        return self.gen.dim + 1

    @property
    def exact(self):
        return self.gen.exact

    def _members(self, bound):
        if abs(self.last) > bound:
            return
        for v in enumerate_bounded(self.gen, bound):
            yield tuple(v) + (_as_int(self.last),)

    def _sorted_members(self, bound, exclude_zero=False):
        if abs(self.last) > bound:
            return []
        inner = enumerate_bounded(self.gen, bound)
        last = _as_int(self.last)
        out = [tuple(v) + (last,) for v in inner]
        if exclude_zero and last == 0:
            out = [v for v in out if not _is_zero(v)]
        # appending a constant keeps the (height, lex) order once every inner height reaches |last|
        if inner and _sup(inner[0]) < abs(last):
            out.sort(key=_key)
        return out

    def contains(self, v):
        return len(v) == self.dim and v[-1] == self.last and self.gen.contains(tuple(v[:-1]))

    def describe(self):
        return f"augment({self.gen.describe()},{format_rational(self.last)})"


def _as_int(x):
    x = to_fraction(x)
    return x.numerator if x.denominator == 1 else x


# ----------------------------------------------------------------------------
# operations on generators
# ----------------------------------------------------------------------------

def symmetrize(gen: SetGenerator) -> SetGenerator:
    if isinstance(gen, Symmetrized):
        return gen
    if isinstance(gen, (Lattice,)):
        return gen
    if isinstance(gen, (Primes, Powers)):
        return type(gen)(**{**gen.__dict__, "sign": "symmetric"})
    return Symmetrized(gen)


def augment_for_inhomogeneous(gen: SetGenerator) -> SetGenerator:
    return Augmented(gen, Fraction(-1))


def is_integer_lattice(gen: SetGenerator, d: int | None = None) -> bool:
    """True when ``gen`` is ``Z^d`` (or ``Z^d`` minus the origin)."""
    if d is not None and gen.dim != d:
        return False
    if isinstance(gen, Lattice):
        return True
    if isinstance(gen, Product):
        return all(isinstance(f, Lattice) for f in gen.factors)
    return False


@dataclass
class ConeSlice:
    direction: tuple
    aperture: float
    members: list
    norms: list


@dataclass
class DirectionCluster:
    representative: tuple
    support: int
    norm_range: tuple


def _unit(v):
    v = np.asarray([float(x) for x in v])
    return v / np.linalg.norm(v)


def cone_slice(gen, phi, eps, bound) -> ConeSlice:
    """Members ``v`` with ``||v/||v|| - phi|| < eps`` and ``|v|_sup <= bound``."""
    phi = np.asarray([float(x) for x in phi])
    if abs(np.linalg.norm(phi) - 1) > 1e-9:
        raise ValueError("direction must be a unit vector")
    if eps <= 0:
        raise ValueError("aperture must be positive")
    members = []
    for v in enumerate_bounded(gen, bound, exclude_zero=True):
        if np.linalg.norm(_unit(v) - phi) < eps:
            members.append(v)
    norms = sorted(float(np.linalg.norm(np.asarray(v, dtype=float))) for v in members)
    members.sort(key=lambda v: np.linalg.norm(np.asarray(v, dtype=float)))
    return ConeSlice(tuple(phi), eps, members, norms)


def limit_directions(gen, C, eps, bound, max_members=200_000) -> list:
    """Greedy angular clustering of ``v/||v||`` for members with ``C <= ||v|| <= bound``.

    Float proxy for the set of limit directions.  Clusters are seeded by the
    longest members, which approximate limits best, and a cluster is kept
    only if it reaches norm ``sqrt(C * r_max)`` (the log-midpoint of the
    observed range); clusters living only near ``C`` are transients.
    """
    if not bound > C > 0:
        raise ValueError("need bound > C > 0")
    vs = []
    for v in enumerate_bounded(gen, bound, exclude_zero=True):
        a = np.asarray(v, dtype=float)
        r = float(np.linalg.norm(a))
        if C <= r <= bound:
            vs.append((r, a))
    if not vs:
        return []
    vs.sort(key=lambda t: -t[0])
    vs = vs[:max_members]
    reps, stats = [], []
    for r, a in vs:
        u = a / r
        hit = None
        if reps:
            dist = np.linalg.norm(np.asarray(reps) - u, axis=1)
            k = int(np.argmin(dist))
            if dist[k] < eps:
                hit = k
        if hit is None:
            reps.append(u)
            stats.append([1, r, r])
        else:
            s = stats[hit]
            s[0] += 1
            s[1] = min(s[1], r)
            s[2] = max(s[2], r)
    cut = math.sqrt(C * vs[0][0])
    return [DirectionCluster(tuple(float(x) for x in w), s[0], (s[1], s[2]))
            for w, s in zip(reps, stats) if s[2] >= cut]


# ----------------------------------------------------------------------------
# descriptor grammar
# ----------------------------------------------------------------------------

def _tokenize(text):
    toks, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()[],":
            toks.append(ch)
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()[],":
                j += 1
            toks.append(text[i:j])
            i = j
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect=None):
        t = self.peek()
        if t is None:
            raise ValueError("unexpected end of descriptor")
        if expect is not None and t != expect:
            raise ValueError(f"expected {expect!r}, got {t!r}")
        self.i += 1
        return t

    def value(self):
        t = self.peek()
        if t == "[":
            self.take("[")
            items = []
            while self.peek() != "]":
                items.append(self.value())
                if self.peek() == ",":
                    self.take(",")
            self.take("]")
            return tuple(items)
        t = self.take()
        if self.peek() == "(" or t in _CONSTRUCTORS:
            return self.call(t)
        return _atom(t)

    def call(self, name):
        args = []
        if self.peek() == "(":
            self.take("(")
            while self.peek() != ")":
                args.append(self.value())
                if self.peek() == ",":
                    self.take(",")
            self.take(")")
        if name not in _CONSTRUCTORS:
            raise ValueError(f"unknown set constructor {name!r}")
        return _CONSTRUCTORS[name](*args)


def _atom(t):
    try:
        f = Fraction(t)
    except ValueError:
        return t
    if "." in t or "e" in t.lower():
        return float(t)
    return f.numerator if f.denominator == 1 else f


def _ints(v):
    return tuple(int(x) for x in v)


def _mk_lattice(d=1, flag=None):
    return Lattice(int(d), flag == "nonzero")


_CONSTRUCTORS = {
    "int": lambda: Lattice(1),
    "int_nonzero": lambda: Lattice(1, True),
    "lattice": _mk_lattice,
    "subgroup": lambda basis: Subgroup(tuple(_ints(b) for b in basis)),
    "product": lambda *fs: Product(tuple(fs)),
    "primes": lambda sign="symmetric": Primes(sign),
    "powers": lambda a=2, sign="symmetric": Powers(int(a), sign),
    "range": lambda lo=0, hi=None: IntRange(int(lo), None if hi is None else int(hi)),
    "poly": lambda coeffs, dom="z": PolyValues(_ints(coeffs), dom),
    "curve": lambda d: Curve(int(d)),
    "polycurve": lambda polys, dom="z": PolyCurve(tuple(_ints(p) for p in polys), dom),
    "spiral": lambda slope=1.0, horizon=10 ** 6: Spiral(float(slope), int(horizon)),
    "rays": lambda vs, coeff="n1", shift=None: RayFamily(
        tuple(_ints(v) for v in vs), coeff, None if shift is None else tuple(shift)),
    "gapset": lambda B=1, rho=10, delta=5, d=1: GapSet(
        to_fraction(B), to_fraction(rho), to_fraction(delta), int(d)),
    "explicit": lambda pts: Explicit(tuple(tuple(p) for p in pts)),
    "translate": lambda g, b: Translate(g, tuple(b)),
    "sym": lambda g: symmetrize(g),
    "union": lambda *ps: Union(tuple(ps)),
    "augment": lambda g, last=-1: Augmented(g, to_fraction(last)),
}


def parse_generator(text: str) -> SetGenerator:
    """Parse a set descriptor such as ``product(int,primes)`` or ``curve(2)``."""
    p = _Parser(text)
    g = p.value()
    if p.peek() is not None:
        raise ValueError(f"trailing input in set descriptor: {p.peek()!r}")
    if not isinstance(g, SetGenerator):
        raise ValueError(f"descriptor {text!r} does not name a set")
    return g


def example_set(name: str) -> SetGenerator:
    """Named denominator sets used throughout the docs and tests.

    ``axes``: the two coordinate axes in ``Z^2``; ``pentagon``, ``triple``,
    ``halfplane``, ``parabolas``, ``mixed``, ``spiral``: the six cases of the
    convex-hull examples; ``subcoll``: ``{(1,k)} u {(0,1)}``.
    """
    table = {
        "axes": "rays([[1,0],[0,1]],z)",
        "pentagon": "rays([[1,0],[1,2],[-2,1],[-2,-1],[1,-2]],n1)",
        "triple": "rays([[1,0],[-1,2],[-1,-2]],n1,[0,1])",
        "halfplane": "product(int,range(11))",
        "parabolas": "union(polycurve([[0,1],[0,0,1]],z),polycurve([[0,1],[0,0,0,0,-1]],z))",
        "mixed": "union(polycurve([[0,1],[0,0,1]],z),polycurve([[0,1],[0,-1]],n1),"
                 "polycurve([[0,1],[0,1]],neg),polycurve([[0],[0,-1]],n1))",
        "spiral": "spiral(1.0,1000000)",
        "subcoll": "union(polycurve([[1],[0,1]],z),explicit([[0,1]]))",
    }
    if name not in table:
        raise KeyError(f"unknown example set {name!r}")
    return parse_generator(table[name])
