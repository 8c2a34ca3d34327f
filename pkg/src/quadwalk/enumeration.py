"""Exact enumeration of weighted quadrant walks.

``count_walks`` is the reference dynamic programme over Q[lam] (or Q(lam)
when a weight has a denominator). ``excursion_series`` computes the long
series q_{0,0,n} needed for guessing, modulo many primes in compiled code
followed by Chinese remaindering against a proven size bound.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy.polys.domains import QQ
from sympy.polys.fields import FracField
from sympy.polys.rings import PolyRing

from . import _kernels
from .exactalg import FORMAL, TruncSeries
from .model import FunctionalEquation, StepModel, kernel

LAM_RING = PolyRing(("lam",), QQ)
LAM_FIELD = FracField(("lam",), QQ)


def _lam_coerce(w):
    """A step weight (FORMAL element in lam only) as an element of Q[lam] or Q(lam)."""
    num = {(m[3],): c for m, c in w.numer.iterterms()}
    den = {(m[3],): c for m, c in w.denom.iterterms()}
    n, d = LAM_RING.from_dict(num), LAM_RING.from_dict(den)
    if d.is_ground:
        return n * (QQ.one / d.LC)
    return LAM_FIELD(n) / LAM_FIELD(d)


_FORMAL_LAM = FORMAL.gens[3]


def lam_to_formal(c):
    """Convert a Q[lam] / Q(lam) / rational value to a FORMAL constant."""
    if isinstance(c, (int, Fraction)):
        return FORMAL(QQ(c.numerator, c.denominator)) if isinstance(c, Fraction) else FORMAL(c)
    if hasattr(c, "numer") and hasattr(c, "denom") and not hasattr(c, "ring"):
        return lam_to_formal(c.numer) / lam_to_formal(c.denom)
    ring = FORMAL.ring
    return FORMAL(ring.from_dict({(0, 0, 0, m[0]): v for m, v in c.iterterms()}))


@dataclass(frozen=True)
class WalkTable:
    """q[(i, j)][n]: total weight of quadrant walks of length n from ``start`` to (i, j)."""

    model: StepModel
    N: int
    start: tuple
    layers: tuple  # layers[n] = {(i, j): coefficient}

    def q(self, i: int, j: int, n: int):
        return self.layers[n].get((i, j), self._zero)

    @property
    def _zero(self):
        return LAM_RING.zero

    def cells(self, n: int):
        return self.layers[n].items()


def count_walks(m: StepModel, N: int, start=(0, 0), quadrant: bool = True) -> WalkTable:
    if N < 0:
        raise ValueError("N must be nonnegative")
    steps = [(s.dx, s.dy, _lam_coerce(s.weight)) for s in m.steps]
    one = LAM_RING.one
    if any(not hasattr(w, "ring") for _, _, w in steps):
        one = LAM_FIELD.one
    layers = [{tuple(start): one}]
    for _ in range(N):
        nxt: dict = defaultdict(lambda: one - one)
        for (i, j), c in layers[-1].items():
            for dx, dy, w in steps:
                a, b = i + dx, j + dy
                if quadrant and (a < 0 or b < 0):
                    continue
                nxt[(a, b)] += w * c
        layers.append({k: v for k, v in nxt.items() if v})
    return WalkTable(m, N, tuple(start), tuple(layers))


@dataclass(frozen=True)
class SectionSeries:
    QX0: TruncSeries
    Q0Y: TruncSeries
    Q00: TruncSeries
    dQ00: TruncSeries  # sum_n q_{0,1,n} t^n
    N: int


def section_series(tab: WalkTable) -> SectionSeries:
    X, Y = FORMAL.gens[0], FORMAL.gens[1]
    qx0, q0y, q00, dq = [], [], [], []
    for n in range(tab.N + 1):
        a = FORMAL.zero
        b = FORMAL.zero
        for (i, j), c in tab.cells(n):
            if j == 0:
                a += lam_to_formal(c) * X ** i
            if i == 0:
                b += lam_to_formal(c) * Y ** j
        qx0.append(a)
        q0y.append(b)
        q00.append(lam_to_formal(tab.q(0, 0, n)))
        dq.append(lam_to_formal(tab.q(0, 1, n)))
    mk = lambda cs: TruncSeries(cs, 0, check=False)
    return SectionSeries(mk(qx0), mk(q0y), mk(q00), mk(dq), tab.N)


def full_series(tab: WalkTable) -> TruncSeries:
    X, Y = FORMAL.gens[0], FORMAL.gens[1]
    coeffs = []
    for n in range(tab.N + 1):
        acc = FORMAL.zero
        for (i, j), c in tab.cells(n):
            acc += lam_to_formal(c) * X ** i * Y ** j
        coeffs.append(acc)
    return TruncSeries(coeffs, 0, check=False)


def poly_in_t(p, N: int) -> TruncSeries:
    """A FORMAL polynomial in t (lam-denominators allowed) as an exact truncated series."""
    it = 2
    buckets: dict = {}
    for mon, c in p.numer.iterterms():
        buckets.setdefault(mon[it], {})[mon[:it] + (0,) + mon[it + 1:]] = c
    den = FORMAL(p.denom)
    if p.denom.degree(it) > 0:
        raise ValueError("not a polynomial in t")
    ring = FORMAL.ring
    coeffs = [FORMAL(ring.from_dict(buckets[k])) / den if k in buckets else FORMAL.zero for k in range(N + 1)]
    return TruncSeries(coeffs, 0, check=False)


def verify_functional_equation(m: StepModel, fe: FunctionalEquation, N: int,
                               tab: WalkTable | None = None) -> TruncSeries:
    """Residual of K̃·Q − (free − cX·Q(X,0) − cY·Q(0,Y) − c0·Q(0,0)) mod t^(N+1)."""
    if tab is None or tab.N < N:
        tab = count_walks(m, N)
    k = kernel(m, check=False)
    Q = full_series(tab).truncate(N)
    sec = section_series(tab)
    lhs = poly_in_t(k.Ktilde, N) * Q
    rhs = (poly_in_t(fe.free, N)
           - poly_in_t(fe.cX, N) * sec.QX0.truncate(N)
           - poly_in_t(fe.cY, N) * sec.Q0Y.truncate(N)
           - poly_in_t(fe.c0, N) * sec.Q00.truncate(N))
    return lhs - rhs


# ---------------------------------------------------------------------------
# long excursion series via modular arithmetic


def _integer_weights(m: StepModel) -> list[int]:
    out = []
    for s in m.steps:
        w = s.weight
        if not w.denom.is_ground or not w.numer.is_ground:
            raise ValueError("fast enumeration needs numeric weights; specialise lam first")
        q = QQ.convert(w.numer.LC) / QQ.convert(w.denom.LC) if w.numer else QQ.zero
        if q.denominator != 1:
            raise ValueError("fast enumeration needs integer weights")
        out.append(int(q.numerator))
    return out


def excursion_bound_bits(dx, dy, w, N: int) -> int:
    """Bits of a proven bound on |q_{0,0,n}|, n <= N.

    For positive reals a, b every excursion has X^dx Y^dy-weight 1, so
    |q_{0,0,n}| <= S_abs(a, b)^n where S_abs uses |w|. The point (a, b) is
    chosen near the minimiser and then made rational.
    """
    aw = [abs(v) for v in w]

    def S(la, lb):
        return sum(c * math.exp(i * la + j * lb) for i, j, c in zip(dx, dy, aw))

    best = (0.0, 0.0)
    step = 1.0
    while step > 1e-6:
        moved = False
        for da, db in ((step, 0), (-step, 0), (0, step), (0, -step)):
            cand = (best[0] + da, best[1] + db)
            if S(*cand) < S(*best):
                best, moved = cand, True
        if not moved:
            step /= 2
    a = Fraction(math.exp(best[0])).limit_denominator(10 ** 6)
    b = Fraction(math.exp(best[1])).limit_denominator(10 ** 6)
    val = sum(Fraction(c) * a ** i * b ** j for i, j, c in zip(dx, dy, aw))
    n_max = max(N, 1)
    num = val.numerator ** n_max
    den = val.denominator ** n_max
    return max((num // den).bit_length() + 1, 1)


def excursion_series(m: StepModel, N: int, prime_bound: int = 2 ** _kernels.PRIME_BITS) -> list[int]:
    """Exact q_{0,0,n} for n = 0..N of an integer-weighted model."""
    dx = [s.dx for s in m.steps]
    dy = [s.dy for s in m.steps]
    w = _integer_weights(m)
    bits = excursion_bound_bits(dx, dy, w, N) + 1  # sign bit
    residues = None
    M = 1
    p = prime_bound
    from sympy import prevprime

    while M.bit_length() <= bits:
        p = int(prevprime(p))
        v = _kernels.excursions_mod(dx, dy, w, N, p)
        if residues is None:
            residues = np.array([int(x) for x in v], dtype=object)
            M = p
            continue
        inv = pow(M % p, -1, p)
        vv = np.array([int(x) for x in v], dtype=object)
        residues = residues + M * (((vv - residues) % p) * inv % p)
        M *= p
    half = M // 2
    return [int(r) - M if r > half else int(r) for r in residues]
