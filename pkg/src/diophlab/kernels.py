"""Hot loops: height-minima enumeration and cell-coverage scans.

Every kernel exists twice, a numba version (``*_jit``) and a numpy twin
(``*_np``).  The public names dispatch on :data:`diophlab._jit.NUMBA_ENABLED`;
the benchmark and the tests call both twins directly.

Integer kernels work on an exact snapshot of the matrix: ``A = N / D`` with
``N`` an int64 array and ``D`` a positive integer, and an integer offset
vector ``off`` (the inhomogeneous shift, also over ``D``).  For a denominator
vector ``q`` the row remainders are ``dist(N_i q - off_i, D Z)``, i.e. ``D``
times the true remainder.  Callers must guarantee that ``|N q| + |off|`` fits
in int64 (see :func:`int64_safe`).
"""
import numpy as np

from ._jit import NUMBA_ENABLED, njit

INT64_BUDGET = 1 << 62


def int64_safe(N, off, T):
    """True if every ``N q - off`` with ``|q|_sup <= T`` fits comfortably in int64."""
    N = np.asarray(N, dtype=object)
    rowsum = max((sum(abs(int(x)) for x in row) for row in N), default=0)
    offmax = max((abs(int(x)) for x in off), default=0)
    return rowsum * int(T) + offmax < INT64_BUDGET


# ----------------------------------------------------------------------------
# row remainders
# ----------------------------------------------------------------------------

@njit(cache=True)
def _round_lower(x, D):
    # nearest multiple of D to x, ties to the lower one; returns (k, |x - kD|)
    r = x % D
    if 2 * r <= D:
        return (x - r) // D, r
    return (x - r) // D + 1, D - r


@njit(cache=True)
def height_minima_lattice_jit(N, off, D, T):
    """Per-height minimum remainder over ``q in [-T, T]^n \\ {0}``.

    Returns ``(best, argq)`` indexed by height ``h = 0..T``; ``best[h]`` is the
    minimal scaled sup-remainder among ``q`` with ``|q|_sup == h`` (``-1`` if
    none), ``argq[h]`` the lexicographically first minimiser.
    """
    m, n = N.shape
    best = np.full(T + 1, -1, dtype=np.int64)
    argq = np.zeros((T + 1, n), dtype=np.int64)
    q = np.full(n, -T, dtype=np.int64)
    # current values N q, updated incrementally by the odometer
    acc = np.zeros(m, dtype=np.int64)
    for i in range(m):
        s = 0
        for j in range(n):
            s += N[i, j] * q[j]
        acc[i] = s
    while True:
        h = 0
        for j in range(n):
            a = q[j] if q[j] >= 0 else -q[j]
            if a > h:
                h = a
        if h > 0:
            worst = 0
            for i in range(m):
                r = (acc[i] - off[i]) % D
                if 2 * r > D:
                    r = D - r
                if r > worst:
                    worst = r
                if best[h] >= 0 and worst >= best[h]:
                    break
            if best[h] < 0 or worst < best[h]:
                best[h] = worst
                for j in range(n):
                    argq[h, j] = q[j]
        # odometer, last coordinate fastest so the visiting order is lexicographic
        j = n - 1
        while j >= 0:
            if q[j] < T:
                q[j] += 1
                for i in range(m):
                    acc[i] += N[i, j]
                break
            for i in range(m):
                acc[i] -= 2 * T * N[i, j]
            q[j] = -T
            j -= 1
        if j < 0:
            break
    return best, argq


def height_minima_lattice_np(N, off, D, T):
    N = np.asarray(N, dtype=np.int64)
    off = np.asarray(off, dtype=np.int64)
    m, n = N.shape
    best = np.full(T + 1, -1, dtype=np.int64)
    argq = np.zeros((T + 1, n), dtype=np.int64)
    side = np.arange(-T, T + 1, dtype=np.int64)
    # chunk over the leading coordinate to bound memory
    if n == 1:
        lead_chunks = [side]
        rest = np.zeros((1, 0), dtype=np.int64)
    else:
        lead_chunks = np.array_split(side, max(1, (2 * T + 1) ** n // 2_000_000 + 1))
        grids = np.meshgrid(*([side] * (n - 1)), indexing="ij")
        rest = np.stack([g.ravel() for g in grids], axis=1)
    for lead in lead_chunks:
        if lead.size == 0:
            continue
        Q = np.empty((lead.size * rest.shape[0], n), dtype=np.int64)
        Q[:, 0] = np.repeat(lead, rest.shape[0])
        if n > 1:
            Q[:, 1:] = np.tile(rest, (lead.size, 1))
        h = np.abs(Q).max(axis=1)
        keep = h > 0
        Q, h = Q[keep], h[keep]
        X = Q @ N.T - off
        R = X % D
        R = np.minimum(R, D - R).max(axis=1)
        # first index (lexicographic, Q is in lex order) attaining the minimum per height
        lowR = np.full(T + 1, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(lowR, h, R)
        cand = np.nonzero(R == lowR[h])[0]
        _, first = np.unique(h[cand], return_index=True)
        for idx in cand[first]:
            hh = h[idx]
            if best[hh] < 0 or R[idx] < best[hh]:
                best[hh] = R[idx]
                argq[hh] = Q[idx]
    return best, argq


@njit(cache=True)
def remainders_array_jit(N, off, D, Q):
    """Scaled sup-remainders and nearest numerators for an explicit list ``Q``."""
    m = N.shape[0]
    K, n = Q.shape
    out = np.empty(K, dtype=np.int64)
    P = np.empty((K, m), dtype=np.int64)
    for k in range(K):
        worst = 0
        for i in range(m):
            s = 0
            for j in range(n):
                s += N[i, j] * Q[k, j]
            p, r = _round_lower(s - off[i], D)
            P[k, i] = p
            if r > worst:
                worst = r
        out[k] = worst
    return out, P


def remainders_array_np(N, off, D, Q):
    N = np.asarray(N, dtype=np.int64)
    Q = np.asarray(Q, dtype=np.int64)
    X = Q @ N.T - np.asarray(off, dtype=np.int64)
    R = X % D
    low = 2 * R <= D
    P = np.where(low, (X - R) // D, (X - R) // D + 1)
    dist = np.where(low, R, D - R)
    return dist.max(axis=1), P


# ----------------------------------------------------------------------------
# coverage
# ----------------------------------------------------------------------------

@njit(cache=True)
def coverage_lattice_jit(cells, Q, m, halfh):
    """Min distance from each cell centre to the lattice subspaces ``L_{p,q}``.

    ``cells`` is ``(C, m*n)`` row-major matrices, ``Q`` is ``(K, n)`` float.
    For ``P = Z^m`` the nearest ``p`` is row-wise rounding.  Scanning stops for
    a cell as soon as a distance ``<= halfh`` is seen.
    """
    C = cells.shape[0]
    K, n = Q.shape
    out = np.empty(C)
    for c in range(C):
        best = np.inf
        for k in range(K):
            qq = 0.0
            for j in range(n):
                qq += Q[k, j] * Q[k, j]
            s = 0.0
            for i in range(m):
                x = 0.0
                for j in range(n):
                    x += cells[c, i * n + j] * Q[k, j]
                d = x - np.floor(x + 0.5)
                s += d * d
            d = np.sqrt(s / qq)
            if d < best:
                best = d
                if best <= halfh:
                    break
        out[c] = best
    return out


def coverage_lattice_np(cells, Q, m, halfh):
    cells = np.asarray(cells, dtype=float)
    Q = np.asarray(Q, dtype=float)
    C = cells.shape[0]
    n = Q.shape[1]
    A = cells.reshape(C, m, n)
    qn = np.sqrt((Q * Q).sum(axis=1))
    out = np.full(C, np.inf)
    for start in range(0, Q.shape[0], 4096):
        Qb = Q[start:start + 4096]
        X = np.einsum("cij,kj->cki", A, Qb)
        d = X - np.floor(X + 0.5)
        dist = np.sqrt((d * d).sum(axis=2)) / qn[start:start + 4096]
        out = np.minimum(out, dist.min(axis=1))
    return out


@njit(cache=True)
def coverage_pairs_jit(cells, P, Q, halfh):
    """Like :func:`coverage_lattice_jit` for an explicit list of pairs ``(p, q)``."""
    C = cells.shape[0]
    K, n = Q.shape
    m = P.shape[1]
    out = np.empty(C)
    for c in range(C):
        best = np.inf
        for k in range(K):
            qq = 0.0
            for j in range(n):
                qq += Q[k, j] * Q[k, j]
            s = 0.0
            for i in range(m):
                x = -P[k, i]
                for j in range(n):
                    x += cells[c, i * n + j] * Q[k, j]
                s += x * x
            d = np.sqrt(s / qq)
            if d < best:
                best = d
                if best <= halfh:
                    break
        out[c] = best
    return out


def coverage_pairs_np(cells, P, Q, halfh):
    cells = np.asarray(cells, dtype=float)
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    C = cells.shape[0]
    m, n = P.shape[1], Q.shape[1]
    A = cells.reshape(C, m, n)
    qn = np.sqrt((Q * Q).sum(axis=1))
    out = np.full(C, np.inf)
    for start in range(0, Q.shape[0], 4096):
        sl = slice(start, start + 4096)
        X = np.einsum("cij,kj->cki", A, Q[sl]) - P[sl][None, :, :]
        dist = np.sqrt((X * X).sum(axis=2)) / qn[sl]
        out = np.minimum(out, dist.min(axis=1))
    return out


if NUMBA_ENABLED:
    height_minima_lattice = height_minima_lattice_jit
    remainders_array = remainders_array_jit
    coverage_lattice = coverage_lattice_jit
    coverage_pairs = coverage_pairs_jit
else:
    height_minima_lattice = height_minima_lattice_np
    remainders_array = remainders_array_np
    coverage_lattice = coverage_lattice_np
    coverage_pairs = coverage_pairs_np
