"""Hot loops over machine integers modulo a prime.

Each kernel exists twice: a numba ``@njit`` version and a plain numpy
version. The numba path is used when numba imports and the environment
variable ``QUADWALK_NO_NUMBA`` is unset (or ``0``). Both paths return
identical results; ``benchmarks/bench_kernels.py`` compares their speed.

Primes are below 2**31 so that a product of two residues fits in int64.
"""
from __future__ import annotations

import os

import numpy as np

PRIME_BITS = 31
# lazy reduction for unit weights: five additions per layer stay below 2**63
# for twelve layers when residues are below 2**31
LAZY_EVERY = 12


def _numba_wanted() -> bool:
    return os.environ.get("QUADWALK_NO_NUMBA", "0") in ("", "0")


try:  # pragma: no branch
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy implementations


def _box(dx, dy, N):
    fx = max(0, int(max(dx)))
    fy = max(0, int(max(dy)))
    bx = max(0, -int(min(dx)))
    by = max(0, -int(min(dy)))
    return fx, fy, bx, by


def excursions_mod_np(dx, dy, w, N: int, p: int) -> np.ndarray:
    """q_{0,0,n} mod p for n = 0..N (quadrant walks returning to the origin)."""
    dx = np.asarray(dx, dtype=np.int64)
    dy = np.asarray(dy, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64) % p
    fx, fy, bx, by = _box(dx, dy, N)
    W = min(fx * N, bx * N) + 2
    H = min(fy * N, by * N) + 2
    cur = np.zeros((W, H), dtype=np.int64)
    cur[0, 0] = 1
    out = np.zeros(N + 1, dtype=np.int64)
    out[0] = 1 % p
    for n in range(N):
        imax = min(fx * n, bx * (N - n))
        jmax = min(fy * n, by * (N - n))
        inew = min(fx * (n + 1), bx * (N - n - 1))
        jnew = min(fy * (n + 1), by * (N - n - 1))
        nxt = np.zeros_like(cur)
        for k in range(len(dx)):
            a, b = int(dx[k]), int(dy[k])
            i0, i1 = max(0, -a), min(imax, inew - a)
            j0, j1 = max(0, -b), min(jmax, jnew - b)
            if i1 < i0 or j1 < j0:
                continue
            nxt[i0 + a:i1 + a + 1, j0 + b:j1 + b + 1] += (cur[i0:i1 + 1, j0:j1 + 1] * w[k]) % p
        nxt %= p
        cur = nxt
        out[n + 1] = cur[0, 0]
    return out


def series_mul_mod_np(a: np.ndarray, b: np.ndarray, M: int, p: int) -> np.ndarray:
    out = np.zeros(M, dtype=np.int64)
    for i in range(min(M, len(a))):
        ai = int(a[i])
        if ai:
            k = min(M - i, len(b))
            out[i:i + k] = (out[i:i + k] + ai * b[:k]) % p
    return out


def nullspace_vec_mod_np(A: np.ndarray, p: int):
    """(v, rank, f): kernel vector of A mod p with first free column f set to 1 (f = -1 if none)."""
    A = np.array(A, dtype=np.int64) % p
    m, n = A.shape
    pivcols = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(A[r:, c])[0]
        if len(nz) == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        inv = pow(int(A[r, c]), p - 2, p)
        A[r] = (A[r] * inv) % p
        col = A[:, c].copy()
        col[r] = 0
        rows = np.nonzero(col)[0]
        if len(rows):
            A[rows, c:] = (A[rows, c:] - (col[rows, None] * A[r, c:]) % p) % p
        pivcols.append(c)
        r += 1
    v = np.zeros(n, dtype=np.int64)
    isp = np.zeros(n, dtype=bool)
    isp[pivcols] = True
    free = np.nonzero(~isp)[0]
    if len(free) == 0:
        return v, r, -1
    f = int(free[0])
    v[f] = 1
    for i, c in enumerate(pivcols):
        v[c] = (p - A[i, f]) % p
    return v, r, f


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def _addrow(dst, src, off, j0, j1):
        for j in range(j0, j1 + 1):
            dst[j + off] += src[j]

    @njit(cache=True)
    def _addrow_w(dst, src, off, j0, j1, w, p):
        for j in range(j0, j1 + 1):
            dst[j + off] = (dst[j + off] + w * src[j]) % p

    @njit(cache=True)
    def _excursions_nb(dx, dy, w, N, p, unit, every):
        fx = 0
        fy = 0
        bx = 0
        by = 0
        for k in range(len(dx)):
            fx = max(fx, dx[k])
            fy = max(fy, dy[k])
            bx = max(bx, -dx[k])
            by = max(by, -dy[k])
        W = min(fx * N, bx * N) + 2
        H = min(fy * N, by * N) + 2
        A = np.zeros((2, W, H), dtype=np.int64)
        A[0, 0, 0] = 1
        out = np.zeros(N + 1, dtype=np.int64)
        out[0] = 1 % p
        c = 0
        for n in range(N):
            cur = A[c]
            nxt = A[1 - c]
            imax = min(fx * n, bx * (N - n))
            jmax = min(fy * n, by * (N - n))
            inew = min(fx * (n + 1), bx * (N - n - 1))
            jnew = min(fy * (n + 1), by * (N - n - 1))
            for a in range(inew + 1):
                nxt[a, :jnew + 1] = 0
            for k in range(len(dx)):
                ddx = dx[k]
                ddy = dy[k]
                i0 = max(0, -ddx)
                i1 = min(imax, inew - ddx)
                j0 = max(0, -ddy)
                j1 = min(jmax, jnew - ddy)
                for i in range(i0, i1 + 1):
                    if unit:
                        _addrow(nxt[i + ddx], cur[i], ddy, j0, j1)
                    else:
                        _addrow_w(nxt[i + ddx], cur[i], ddy, j0, j1, w[k], p)
            if unit and ((n + 1) % every == 0 or n + 1 == N):
                for a in range(inew + 1):
                    row = nxt[a]
                    for b in range(jnew + 1):
                        row[b] %= p
            c = 1 - c
            out[n + 1] = A[c, 0, 0] % p
        return out

    @njit(cache=True)
    def _series_mul_nb(a, b, M, p):
        out = np.zeros(M, dtype=np.int64)
        for i in range(min(M, len(a))):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(min(M - i, len(b))):
                out[i + j] = (out[i + j] + ai * b[j]) % p
        return out

    @njit(cache=True)
    def _nullspace_nb(A, p):
        A = A.copy()
        m, n = A.shape
        for i in range(m):
            for k in range(n):
                A[i, k] %= p
        pivcol = np.full(m, -1, dtype=np.int64)
        r = 0
        for c in range(n):
            if r == m:
                break
            piv = -1
            for i in range(r, m):
                if A[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for k in range(n):
                    tmp = A[r, k]
                    A[r, k] = A[piv, k]
                    A[piv, k] = tmp
            inv = 1
            b = A[r, c]
            e = p - 2
            while e:
                if e & 1:
                    inv = inv * b % p
                b = b * b % p
                e >>= 1
            for k in range(c, n):
                A[r, k] = A[r, k] * inv % p
            for i in range(m):
                if i != r and A[i, c] != 0:
                    f = A[i, c]
                    for k in range(c, n):
                        A[i, k] = (A[i, k] - f * A[r, k]) % p
            pivcol[r] = c
            r += 1
        isp = np.zeros(n, dtype=np.bool_)
        for i in range(r):
            isp[pivcol[i]] = True
        v = np.zeros(n, dtype=np.int64)
        free = -1
        for c in range(n):
            if not isp[c]:
                free = c
                break
        if free < 0:
            return v, r, free
        v[free] = 1
        for i in range(r):
            v[pivcol[i]] = (p - A[i, free]) % p
        return v, r, free


# ---------------------------------------------------------------------------
# dispatch


def use_numba() -> bool:
    return HAVE_NUMBA and _numba_wanted()


def excursions_mod(dx, dy, w, N: int, p: int) -> np.ndarray:
    dx = np.asarray(dx, dtype=np.int64)
    dy = np.asarray(dy, dtype=np.int64)
    w = np.asarray(w, dtype=np.int64) % p
    if not use_numba():
        return excursions_mod_np(dx, dy, w, N, p)
    unit = bool(np.all(w == 1))
    return _excursions_nb(dx, dy, w, N, p, unit, LAZY_EVERY)


def series_mul_mod(a, b, M: int, p: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if not use_numba():
        return series_mul_mod_np(a, b, M, p)
    return _series_mul_nb(a, b, M, p)


def nullspace_vec_mod(A, p: int):
    A = np.ascontiguousarray(A, dtype=np.int64)
    if not use_numba():
        return nullspace_vec_mod_np(A, p)
    v, r, f = _nullspace_nb(A, p)
    return v, int(r), int(f)


def primes_below(bound: int, count: int) -> list[int]:
    """The ``count`` largest primes below ``bound`` (descending)."""
    from sympy import prevprime

    out = []
    p = bound
    while len(out) < count:
        p = prevprime(p)
        out.append(int(p))
    return out
