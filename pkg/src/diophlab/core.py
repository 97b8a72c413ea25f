"""Value types shared by every module: matrices, norms, approximation functions."""
from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    FlavorMismatch,
    NonMonotone,
    NonPositive,
    NonPositiveArgument,
)


# ----------------------------------------------------------------------------
# scalars
# ----------------------------------------------------------------------------

def to_fraction(x) -> Fraction:
    """Exact rational value of ``x``.

    Accepts ints, Fractions, decimal or ``a/b`` strings and floats (converted
    exactly, so ``0.1`` becomes its binary value).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def is_exact_scalar(x) -> bool:
    return isinstance(x, (int, np.integer, Fraction, Rational)) and not isinstance(x, bool)


def dyadic(x, bits: int) -> Fraction:
    """Nearest rational with denominator ``2**bits`` (ties to even)."""
    f = to_fraction(x)
    return Fraction(round(f * (1 << bits)), 1 << bits)


def format_rational(x) -> str:
    f = to_fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


# ----------------------------------------------------------------------------
# norms
# ----------------------------------------------------------------------------

class NormKind(enum.Enum):
    SUP = "sup"
    EUCLID = "euclid"


def sup_norm(v) -> float | Fraction:
    return max((abs(x) for x in v), default=0)


def euclid_norm(v) -> float:
    return math.sqrt(sum(float(x) * float(x) for x in v))


def norm(v, kind: NormKind = NormKind.SUP):
    return sup_norm(v) if kind is NormKind.SUP else euclid_norm(v)


# ----------------------------------------------------------------------------
# matrices
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Mat:
    """An ``rows x cols`` real matrix, either exact-rational or float.

    Entries are stored row-major.  Exact matrices hold :class:`Fraction`
    entries; float matrices hold Python floats.
    """

    rows: int
    cols: int
    entries: tuple
    exact: bool

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionMismatch("a matrix needs at least one row and one column")
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix")

    @classmethod
    def of(cls, data, exact: bool | None = None) -> "Mat":
        """Build from a nested sequence, a scalar, an ndarray or another Mat.

        With ``exact=None`` the flavor is inferred: exact if every entry is an
        int/Fraction/rational string, float otherwise.
        """
        if isinstance(data, Mat):
            if exact is None or exact == data.exact:
                return data
            return data.as_exact() if exact else data.as_float()
        if isinstance(data, np.ndarray):
            arr = data
            if arr.ndim == 0:
                arr = arr.reshape(1, 1)
            elif arr.ndim == 1:
                arr = arr.reshape(1, -1)
            rows = [list(r) for r in arr]
        elif isinstance(data, (int, float, Fraction, str, np.number)):
            rows = [[data]]
        else:
            rows = [list(r) if isinstance(r, (list, tuple, np.ndarray)) else [r] for r in data]
        if not rows or not rows[0]:
            raise DimensionMismatch("empty matrix")
        ncol = len(rows[0])
        if any(len(r) != ncol for r in rows):
            raise DimensionMismatch("ragged rows")
        flat = [x for r in rows for x in r]
        if exact is None:
            exact = all(is_exact_scalar(x) or isinstance(x, str) for x in flat)
        if exact:
            vals = tuple(to_fraction(x) for x in flat)
        else:
            vals = tuple(float(x) for x in flat)
        return cls(len(rows), ncol, vals, bool(exact))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def to_rows(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.entries], dtype=float).reshape(self.rows, self.cols)

    def as_exact(self) -> "Mat":
        if self.exact:
            return self
        return Mat(self.rows, self.cols, tuple(Fraction(x) for x in self.entries), True)

    def as_float(self) -> "Mat":
        if not self.exact:
            return self
        return Mat(self.rows, self.cols, tuple(float(x) for x in self.entries), False)

    def snapshot(self, bits: int) -> "Mat":
        """Exact dyadic snapshot with denominators dividing ``2**bits``."""
        return Mat(self.rows, self.cols, tuple(dyadic(x, bits) for x in self.entries), True)

    def apply(self, q: Sequence) -> list:
        """Matrix-vector product ``A q`` in the matrix's own arithmetic."""
        if len(q) != self.cols:
            raise DimensionMismatch(f"vector of length {len(q)} for {self.cols} columns")
        if self.exact:
            qq = [to_fraction(x) for x in q]
        else:
            qq = [float(x) for x in q]
        return [sum((a * b for a, b in zip(self.row(i), qq)), Fraction(0) if self.exact else 0.0)
                for i in range(self.rows)]

    def augment(self, column: Sequence) -> "Mat":
        """``(A | b)``: append ``column`` as a last column."""
        if len(column) != self.rows:
            raise DimensionMismatch("augmenting column has wrong length")
        conv = to_fraction if self.exact else float
        rows = [list(self.row(i)) + [conv(column[i])] for i in range(self.rows)]
        return Mat(self.rows, self.cols + 1, tuple(x for r in rows for x in r), self.exact)

    def _check(self, other: "Mat"):
        if not isinstance(other, Mat):
            return NotImplemented
        if other.exact != self.exact:
            raise FlavorMismatch("mixed exact/float matrix arithmetic")
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        return None

    def __add__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return r
        return Mat(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)), self.exact)

    def __sub__(self, other):
        r = self._check(other)
        if r is NotImplemented:
            return r
        return Mat(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)), self.exact)

    def __neg__(self):
        return Mat(self.rows, self.cols, tuple(-a for a in self.entries), self.exact)

    def scale(self, c) -> "Mat":
        c = to_fraction(c) if self.exact else float(c)
        return Mat(self.rows, self.cols, tuple(c * a for a in self.entries), self.exact)

    def frobenius(self) -> float:
        return math.sqrt(sum(float(a) ** 2 for a in self.entries))

    def sup(self):
        return max(abs(a) for a in self.entries)

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        body = "; ".join(", ".join(format_rational(x) if self.exact else repr(x) for x in self.row(i))
                         for i in range(self.rows))
        return f"Mat[{kind}]({body})"


# ----------------------------------------------------------------------------
# approximation functions
# ----------------------------------------------------------------------------

class ApproxFunction:
    """Positive non-increasing function on ``(0, inf)``.

    Besides float evaluation every kind supports exact comparisons
    ``x <= psi(t)`` for rational ``x`` and ``t``; the uniformity checks rely
    on those rather than on float values.
    """

    def __call__(self, t) -> float:
        return eval_psi(self, t)

    def _value(self, t: float) -> float:
        raise NotImplementedError

    def le(self, x, t) -> bool:
        """Exact test ``x <= psi(t)``."""
        raise NotImplementedError

    def le_left(self, x, t) -> bool:
        """Exact test ``x <= psi(t-)`` (left limit at ``t``)."""
        return self.le(x, t)

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(ApproxFunction):
    """``psi(t) = c * t**(-exponent)`` with rational exponent."""

    c: Fraction
    exponent: Fraction

    def _value(self, t):
        return float(self.c) * float(t) ** (-float(self.exponent))

    def le(self, x, t):
        x = to_fraction(x)
        if x <= 0:
            return True
        t = to_fraction(t)
        a, b = self.exponent.numerator, self.exponent.denominator
        # x <= c t^(-a/b)  <=>  x^b t^a <= c^b
        return x ** b * t ** a <= self.c ** b

    def describe(self):
        return f"power {format_rational(self.c)} {format_rational(self.exponent)}"


@dataclass(frozen=True)
class Tabulated(ApproxFunction):
    """Right-continuous step function.

    ``breakpoints`` are ``(t_i, v_i)`` with increasing ``t_i``; for
    ``t_i <= t < t_{i+1}`` the value is ``v_i``, and ``v_0`` applies left of
    the first breakpoint.
    """

    breakpoints: tuple

    def _index(self, t, strict=False):
        ts = [bp[0] for bp in self.breakpoints]
        i = bisect.bisect_left(ts, t) if strict else bisect.bisect_right(ts, t)
        return max(i - 1, 0)

    def _value(self, t):
        return float(self.breakpoints[self._index(to_fraction(t))][1])

    def le(self, x, t):
        return to_fraction(x) <= self.breakpoints[self._index(to_fraction(t))][1]

    def le_left(self, x, t):
        return to_fraction(x) <= self.breakpoints[self._index(to_fraction(t), strict=True)][1]

    def describe(self):
        return "tabulated " + ",".join(f"{format_rational(t)}:{format_rational(v)}"
                                       for t, v in self.breakpoints)


@dataclass(frozen=True)
class Scaled(ApproxFunction):
    """``c * inner(t)``."""

    inner: ApproxFunction
    c: Fraction

    def _value(self, t):
        return float(self.c) * self.inner._value(t)

    def le(self, x, t):
        return self.inner.le(to_fraction(x) / self.c, t)

    def le_left(self, x, t):
        return self.inner.le_left(to_fraction(x) / self.c, t)

    def describe(self):
        return f"scaled {format_rational(self.c)} {self.inner.describe()}"


def make_approx_function(kind: str, params) -> ApproxFunction:
    """Validated constructor.

    ``kind`` is ``"power"`` (params ``(c, exponent)``), ``"tabulated"``
    (params: iterable of ``(t, value)``) or ``"scaled"`` (params
    ``(inner, c)``).
    """
    kind = kind.lower()
    if kind in ("power", "powerlaw"):
        c, e = (to_fraction(p) for p in params)
        if c <= 0:
            raise NonPositive(f"power-law constant must be positive, got {c}")
        if e <= 0:
            raise NonPositive(f"power-law exponent must be positive, got {e}")
        return PowerLaw(c, e)
    if kind == "tabulated":
        pts = [(to_fraction(t), to_fraction(v)) for t, v in params]
        if not pts:
            raise NonPositive("tabulated function needs at least one breakpoint")
        pts.sort(key=lambda tv: tv[0])
        for t, v in pts:
            if t <= 0 or v <= 0:
                raise NonPositive("tabulated breakpoints and values must be positive")
        for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
            if t0 == t1:
                raise NonMonotone(f"duplicate breakpoint {t0}")
            if v1 > v0:
                raise NonMonotone(f"value increases from {v0} to {v1} at t={t1}")
        return Tabulated(tuple(pts))
    if kind == "scaled":
        inner, c = params
        if not isinstance(inner, ApproxFunction):
            raise TypeError("scaled needs an ApproxFunction")
        c = to_fraction(c)
        if c <= 0:
            raise NonPositive("scale factor must be positive")
        return Scaled(inner, c)
    raise ValueError(f"unknown approximation function kind {kind!r}")


def eval_psi(f: ApproxFunction, t) -> float:
    if t <= 0:
        raise NonPositiveArgument(f"psi is defined on t > 0, got {t}")
    return f._value(t)


def dirichlet_psi(m: int, n: int, c=1) -> PowerLaw:
    """``c * t**(-n/m)``, the exponent of Dirichlet's theorem."""
    return make_approx_function("power", (c, Fraction(n, m)))


def parse_psi(text: str) -> ApproxFunction:
    """Inverse of :meth:`ApproxFunction.describe`."""
    toks = text.split()
    if not toks:
        raise ValueError("empty psi descriptor")
    head = toks[0].lower()
    if head == "power":
        if len(toks) != 3:
            raise ValueError("power needs: power <c> <exponent>")
        return make_approx_function("power", (toks[1], toks[2]))
    if head == "tabulated":
        body = "".join(toks[1:])
        pts = [tuple(item.split(":")) for item in body.split(",") if item]
        return make_approx_function("tabulated", pts)
    if head == "scaled":
        if len(toks) < 3:
            raise ValueError("scaled needs: scaled <c> <inner descriptor>")
        return make_approx_function("scaled", (parse_psi(" ".join(toks[2:])), toks[1]))
    raise ValueError(f"unknown psi kind {head!r}")


def as_vector(v, exact=False) -> tuple:
    if isinstance(v, (int, float, Fraction, np.number)):
        v = [v]
    return tuple(to_fraction(x) for x in v) if exact else tuple(float(x) for x in v)


def lcm_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for x in values:
        d = d * x.denominator // math.gcd(d, x.denominator)
    return d
