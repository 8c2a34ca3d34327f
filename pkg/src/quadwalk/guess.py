"""Guessing polynomial annihilators of a truncated series.

We look for P(T, t) = sum c_ij t^j T^i with deg_T <= degT, deg_t <= degt and
P(s(t), t) = 0 mod t^(N+1). The linear system is solved modulo word-size
primes (compiled elimination), lifted by Chinese remaindering and rational
reconstruction, and the candidate is then verified over the integers with
big-integer (Kronecker) series products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from . import _kernels
from .exactalg import TruncSeries, fmt_rational

EXACT_LIMIT = 150  # unknowns up to which the system is solved over Q directly


class NotFound(Exception):
    """No annihilator with the requested degrees."""


@dataclass(frozen=True)
class Annihilator:
    degT: int
    degt: int
    N: int
    coeffs: dict            # (i, j) -> int, content removed, primitive
    primes: int = 0         # number of primes used (0 for the exact path)

    def as_json(self) -> dict:
        return {"vars": ["T", "t"], "degT": self.degT, "degt": self.degt, "checked_to": self.N,
                "terms": {f"{i},{j}": str(c) for (i, j), c in sorted(self.coeffs.items())}}

    @property
    def actual_degT(self) -> int:
        return max(i for i, _ in self.coeffs)

    @property
    def actual_degt(self) -> int:
        return max(j for _, j in self.coeffs)


def _as_rationals(s) -> list:
    if isinstance(s, TruncSeries):
        if s.val < 0:
            raise ValueError("the series must be a power series")
        vals = [Fraction(0)] * s.val + [_to_fraction(c) for c in s.coeffs]
        return vals
    return [_to_fraction(c) for c in s]


def _to_fraction(c) -> Fraction:
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if hasattr(c, "numer") and hasattr(c, "denom") and not hasattr(c, "ring"):
        n, d = c.numer, c.denom
        if not n.is_ground or not d.is_ground:
            raise ValueError("series coefficients must be rational numbers")
        q = QQ.convert(n.LC) / QQ.convert(d.LC) if n else QQ.zero
        return Fraction(int(q.numerator), int(q.denominator))
    if hasattr(c, "numerator"):
        return Fraction(int(c.numerator), int(c.denominator))
    return Fraction(c)


def required_terms(degT: int, degt: int, margin: int = 10) -> int:
    """Highest exponent N needed: the series must be known up to t^N."""
    return (degT + 1) * (degt + 1) + margin - 1


# ---------------------------------------------------------------------------
# linear algebra


def _column(i: int, j: int, degt: int) -> int:
    return i * (degt + 1) + j


def _system_mod(s_mod: np.ndarray, degT: int, degt: int, N: int, p: int) -> np.ndarray:
    ncols = (degT + 1) * (degt + 1)
    A = np.zeros((N + 1, ncols), dtype=np.int64)
    power = np.zeros(N + 1, dtype=np.int64)
    power[0] = 1
    for i in range(degT + 1):
        if i:
            power = _kernels.series_mul_mod(power, s_mod, N + 1, p)
        for j in range(degt + 1):
            A[j:, _column(i, j, degt)] = power[: N + 1 - j]
    return A


def _reduce(vals: list, p: int) -> np.ndarray:
    out = np.empty(len(vals), dtype=np.int64)
    for k, q in enumerate(vals):
        den = q.denominator % p
        if den == 0:
            raise ZeroDivisionError
        out[k] = q.numerator % p * pow(den, -1, p) % p
    return out


def ratrecon(a: int, m: int):
    """Rational reconstruction: n/d = a mod m with |n|, d <= sqrt(m/2), or None."""
    a %= m
    bound = math.isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or math.gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1)


def _primitive(vec: dict) -> dict:
    den = 1
    for q in vec.values():
        den = den * q.denominator // math.gcd(den, q.denominator)
    ints = {k: int(q * den) for k, q in vec.items() if q}
    g = 0
    for v in ints.values():
        g = math.gcd(g, v)
    lead = ints[max(ints)]
    sign = -1 if lead < 0 else 1
    return {k: sign * v // g for k, v in ints.items()}


def _exact_kernel_vector(vals, degT, degt, N):
    """Canonical kernel vector (first free column set to 1) over Q, or None."""
    ncols = (degT + 1) * (degt + 1)
    powers = [[Fraction(1)] + [Fraction(0)] * N]
    for _ in range(degT):
        prev = powers[-1]
        powers.append([sum((prev[k] * vals[n - k] for k in range(n + 1)), Fraction(0)) for n in range(N + 1)])
    rows = []
    for n in range(N + 1):
        row = []
        for i in range(degT + 1):
            for j in range(degt + 1):
                c = powers[i][n - j] if n >= j else Fraction(0)
                row.append(QQ(c.numerator, c.denominator))
        rows.append(row)
    M = DomainMatrix(rows, (N + 1, ncols), QQ)
    R, pivots = M.rref()
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return None
    f = free[0]
    Rl = R.to_Matrix()
    v = {f: Fraction(1)}
    for r, c in enumerate(pivots):
        x = -Rl[r, f]
        if x:
            v[c] = Fraction(int(x.p), int(x.q))
    return {(c // (degt + 1), c % (degt + 1)): q for c, q in v.items()}


def _modular_candidates(vals, degT, degt, N, max_primes=64):
    """Yield (coefficients, primes used) whenever the reconstruction is stable.

    A trivial kernel modulo one prime proves a trivial kernel over Q, so
    NotFound is raised at once. Primes where the rank drops are skipped.
    """
    ncols = (degT + 1) * (degt + 1)
    pattern = None
    residues = None
    M = 1
    last = None
    used = 0
    for p in _kernels.primes_below(2 ** _kernels.PRIME_BITS - 1, max_primes):
        try:
            s_mod = _reduce(vals, p)
        except ZeroDivisionError:
            continue
        v, rank, free = _kernels.nullspace_vec_mod(_system_mod(s_mod, degT, degt, N, p), p)
        if rank == ncols:
            raise NotFound(f"no annihilator with degT={degT}, degt={degt} modulo t^{N + 1}")
        if pattern is not None and (rank, free) != pattern:
            if rank <= pattern[0]:
                continue
            residues, M = None, 1
        pattern = (rank, free)
        used += 1
        vv = np.array([int(x) for x in v], dtype=object)
        if residues is None:
            residues, M = vv, p
        else:
            inv = pow(M % p, -1, p)
            residues = residues + M * (((vv - residues) % p) * inv % p)
            M *= p
        rec = {}
        for c, r in enumerate(residues):
            if not r:
                continue
            q = ratrecon(int(r), M)
            if q is None:
                rec = None
                break
            rec[(c // (degt + 1), c % (degt + 1))] = q
        if rec is not None and rec == last:
            yield rec, used
        last = rec


# ---------------------------------------------------------------------------
# exact verification


def _pack(vals: list, nbytes: int) -> gmpy2.mpz:
    """Kronecker substitution of nonnegative integers at 2^(8*nbytes)."""
    return gmpy2.mpz(int.from_bytes(b"".join(v.to_bytes(nbytes, "little") for v in vals), "little"))


def _unpack(x, nbytes: int, count: int) -> list:
    x = int(x)
    raw = x.to_bytes(max(nbytes * count, (x.bit_length() + 7) // 8), "little")
    return [int.from_bytes(raw[k * nbytes:(k + 1) * nbytes], "little") for k in range(count)]


def _mul_trunc(a: list, b: list, n: int) -> list:
    """Exact product of integer series truncated to n terms.

    Signed inputs are split into nonnegative parts so every slot of the
    four big products is a nonnegative number below the slot size.
    """
    a, b = a[:n], b[:n]
    ma = max((abs(v) for v in a), default=0)
    mb = max((abs(v) for v in b), default=0)
    if not ma or not mb:
        return [0] * n
    bits = ma.bit_length() + mb.bit_length() + min(len(a), len(b)).bit_length() + 1
    nb = (bits + 7) // 8
    ap = _pack([v if v > 0 else 0 for v in a], nb)
    an = _pack([-v if v < 0 else 0 for v in a], nb)
    bp = _pack([v if v > 0 else 0 for v in b], nb)
    bn = _pack([-v if v < 0 else 0 for v in b], nb)
    pos = _unpack(ap * bp + an * bn, nb, n) if (ap and bp) or (an and bn) else [0] * n
    neg = _unpack(ap * bn + an * bp, nb, n) if (ap and bn) or (an and bp) else [0] * n
    return [u - w for u, w in zip(pos, neg)]


def evaluate_annihilator(coeffs: dict, vals: list, N: int) -> list:
    """Coefficients of P(s(t), t) up to t^N (integer inputs, Horner scheme)."""
    den = 1
    for q in vals[: N + 1]:
        den = den * q.denominator // math.gcd(den, q.denominator)
    # s = s_int / den; scale P(T) -> sum c_ij t^j den^(degT - i) s_int^i
    s_int = [int(q * den) for q in vals[: N + 1]]
    s_int += [0] * (N + 1 - len(s_int))
    degT = max(i for i, _ in coeffs)
    acc = [0] * (N + 1)
    for i in range(degT, -1, -1):
        if i < degT:
            acc = _mul_trunc(acc, s_int, N + 1)
        scale = den ** (degT - i)
        for (ii, j), c in coeffs.items():
            if ii == i and j <= N:
                acc[j] += c * scale
    return acc


def annihilates(coeffs: dict, vals: list, N: int) -> bool:
    return not any(evaluate_annihilator(coeffs, vals, N))


# ---------------------------------------------------------------------------


def guess_minpoly(s, degT: int, degt: int, N: int | None = None, max_primes: int = 64) -> Annihilator:
    """A nonzero P(T, t) with the given degree bounds annihilating s mod t^(N+1).

    ``s`` is a TruncSeries with rational coefficients or a sequence of
    integers / Fractions (coefficient of t^n at index n).
    """
    vals = _as_rationals(s)
    if N is None:
        N = len(vals) - 1
    if N > len(vals) - 1:
        raise ValueError(f"need the series up to t^{N}, got {len(vals) - 1}")
    ncols = (degT + 1) * (degt + 1)
    if N + 1 < ncols + 1:
        raise ValueError(f"{N + 1} equations cannot determine {ncols} unknowns")
    if ncols <= EXACT_LIMIT:
        vec = _exact_kernel_vector(vals, degT, degt, N)
        if vec is None:
            raise NotFound(f"no annihilator with degT={degT}, degt={degt} modulo t^{N + 1}")
        coeffs = _primitive(vec)
        if not annihilates(coeffs, vals, N):  # pragma: no cover - exact kernel
            raise RuntimeError("exact kernel vector failed verification")
        return Annihilator(degT, degt, N, coeffs, 0)
    for rec, used in _modular_candidates(vals, degT, degt, N, max_primes):
        coeffs = _primitive(rec)
        if annihilates(coeffs, vals, N):
            return Annihilator(degT, degt, N, coeffs, used)
    raise NotFound(f"no verified annihilator after {max_primes} primes")


def annihilator_to_text(a: Annihilator) -> str:
    terms = []
    for (i, j), c in sorted(a.coeffs.items(), reverse=True):
        terms.append(f"{fmt_rational(c)}*T^{i}*t^{j}")
    return " + ".join(terms)
