"""Towers of algebraic extensions over Q(x, y, lam).

A tower is a sequence of layers z_1, ..., z_m where z_k has a monic
irreducible minimal polynomial over the field generated by the previous
layers. Elements are stored as nested tuples: a level-k element is the
tuple of its coefficients in 1, z_k, ..., z_k^(d_k - 1), each a level-(k-1)
element; level 0 elements are ``BASE`` fractions. Representatives are
always reduced, so equality of raw values is equality in the field.

Root finding is exact. Quadratics are solved with a tower square root,
polynomials over the base field are factored with sympy (Gauss' lemma turns
factorisation over Q[x, y, lam] into factorisation over Q(x, y, lam)), and
higher layers use norm-based (Trager) factorisation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

from .exactalg import BASE, to_field, univariate_coeffs


class NotInBase(ValueError):
    """The element has a nonzero component along some tower generator."""


class ReducibleMinimalPolynomial(ValueError):
    def __init__(self, witness, message="minimal polynomial is reducible"):
        super().__init__(message)
        self.witness = witness


class DegreeBudgetExceeded(RuntimeError):
    def __init__(self, residual, degree, budget):
        super().__init__(f"extension would reach total degree {degree} > budget {budget}")
        self.residual = residual


# ---------------------------------------------------------------------------
# levels: arithmetic on raw representations


_PROBE_POINTS = [(3, 5, 7), (11, 2, 13), (-4, 9, 17), (6, -7, 5)]


def _is_rational_square(q) -> bool:
    q = QQ.convert(q)
    n, d = int(q.numerator), int(q.denominator)
    return n >= 0 and gmpy2.is_square(n) and gmpy2.is_square(d)


def _poly_square_root(p: PolyElement):
    """Return (c, A) with p = c * A**2 and A primitive, or None."""
    c, facs = p.sqf_list()
    root = p.ring.one
    for f, k in facs:
        if k % 2:
            return None
        root *= f ** (k // 2)
    return c, root


def base_sqrt(f: FracElement):
    """Square root of a base fraction, or None when it is not a square."""
    if not f:
        return f
    num, den = f.numer, f.denom
    for pt in _PROBE_POINTS:
        dv = den(*pt[: den.ring.ngens])
        if not dv:
            continue
        if not _is_rational_square(QQ.convert(num(*pt[: num.ring.ngens])) / dv):
            return None
    a = _poly_square_root(num)
    if a is None:
        return None
    b = _poly_square_root(den)
    if b is None:
        return None
    c = QQ.convert(a[0]) / QQ.convert(b[0])
    if not _is_rational_square(c):
        return None
    rc = QQ(int(gmpy2.isqrt(int(c.numerator))), int(gmpy2.isqrt(int(c.denominator))))
    fld = f.field
    return fld(a[1]) * rc / fld(b[1])


class BaseLevel:
    depth = 0
    degree = 1

    def __init__(self, fld=BASE):
        self.field = fld
        self.zero = fld.zero
        self.one = fld.one

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def smul(self, a, n):
        return a * n

    def inv(self, a):
        if not a:
            raise ZeroDivisionError("inverse of zero")
        return self.one / a

    def is_zero(self, a) -> bool:
        return not a

    def from_base(self, c):
        return c

    def sqrt(self, a):
        return base_sqrt(a)

    def to_str(self, a) -> str:
        return str(a)


class ExtLevel:
    """Simple extension of ``below`` by a root of ``minpoly`` (monic, low to high)."""

    def __init__(self, below, minpoly: Sequence):
        self.below = below
        self.minpoly = tuple(minpoly)
        d = len(minpoly) - 1
        self.d = d
        self.depth = below.depth + 1
        self.degree = below.degree * d
        B = below
        self.zero = (B.zero,) * d
        self.one = (B.one,) + (B.zero,) * (d - 1)
        # reductions of z^d .. z^(2d-2)
        red = []
        cur = [B.neg(c) for c in self.minpoly[:d]]
        for _ in range(d - 1):
            red.append(tuple(cur))
            top = cur[-1]
            nxt = [B.zero] + cur[:-1]
            if not B.is_zero(top):
                nxt = [B.add(nxt[i], B.mul(top, red[0][i])) for i in range(d)]
            cur = nxt
        red.append(tuple(cur))
        self._red = red[: max(d - 1, 1)]
        if d == 2:
            b, c = self.minpoly[1], self.minpoly[0]
            self._half_b = _half(B, b)
            self._disc = B.sub(B.mul(self._half_b, self._half_b), c)

    def add(self, a, b):
        B = self.below
        return tuple(B.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        B = self.below
        return tuple(B.sub(x, y) for x, y in zip(a, b))

    def neg(self, a):
        B = self.below
        return tuple(B.neg(x) for x in a)

    def smul(self, a, n):
        B = self.below
        return tuple(B.smul(x, n) for x in a)

    def mul(self, a, b):
        B = self.below
        d = self.d
        prod = [B.zero] * (2 * d - 1)
        for i, ai in enumerate(a):
            if B.is_zero(ai):
                continue
            for j, bj in enumerate(b):
                if B.is_zero(bj):
                    continue
                prod[i + j] = B.add(prod[i + j], B.mul(ai, bj))
        res = prod[:d]
        for k in range(d, 2 * d - 1):
            c = prod[k]
            if B.is_zero(c):
                continue
            vec = self._red[k - d]
            for i in range(d):
                if not B.is_zero(vec[i]):
                    res[i] = B.add(res[i], B.mul(c, vec[i]))
        return tuple(res)

    def inv(self, a):
        B = self.below
        if self.is_zero(a):
            raise ZeroDivisionError("inverse of zero")
        if self.d == 2:
            a0, a1 = a
            c, b = self.minpoly[0], self.minpoly[1]
            conj0 = B.sub(a0, B.mul(a1, b))
            norm = B.add(B.mul(a0, conj0), B.mul(B.mul(a1, a1), c))
            ninv = B.inv(norm)
            return (B.mul(conj0, ninv), B.neg(B.mul(a1, ninv)))
        if self.d <= 4:
            return self._inv_cofactor(a)
        g, s, _ = pxgcd(B, ptrim(B, list(a)), list(self.minpoly))
        if pdeg(B, g) != 0:
            raise ZeroDivisionError("element is not invertible (minimal polynomial reducible)")
        s = pscale(B, s, B.inv(g[0]))
        return tuple(s + [B.zero] * (self.d - len(s)))

    def _inv_cofactor(self, a):
        # a * s = 1 as a linear system over the level below; Cramer's rule
        # avoids the coefficient growth of the Euclidean algorithm
        B = self.below
        d = self.d
        cols, zj = [], self.one
        for _ in range(d):
            cols.append(self.mul(a, zj))
            zj = self.mul(zj, self.gen())
        M = [[cols[j][i] for j in range(d)] for i in range(d)]
        cof = [_minor_det(B, M, 0, j) for j in range(d)]
        cof = [c if j % 2 == 0 else B.neg(c) for j, c in enumerate(cof)]
        det = B.zero
        for j in range(d):
            det = B.add(det, B.mul(M[0][j], cof[j]))
        if B.is_zero(det):
            raise ZeroDivisionError("element is not invertible (minimal polynomial reducible)")
        dinv = B.inv(det)
        return tuple(B.mul(c, dinv) for c in cof)

    def is_zero(self, a) -> bool:
        B = self.below
        return all(B.is_zero(x) for x in a)

    def from_base(self, c):
        return (self.below.from_base(c),) + self.zero[1:]

    def from_below(self, c):
        return (c,) + self.zero[1:]

    def gen(self):
        if self.d == 1:
            return (self.below.neg(self.minpoly[0]),)
        return (self.below.zero, self.below.one) + self.zero[2:]

    def sqrt(self, a):
        B = self.below
        if self.is_zero(a):
            return a
        if self.d != 2:
            for f in factor_poly(self, [self.neg(a), self.zero, self.one]):
                if len(f) == 2:
                    return self.neg(f[0])
            return None
        # write a = e + f*w with w = z + b/2, w^2 = D
        a0, a1 = a
        hb, D = self._half_b, self._disc
        f = a1
        e = B.sub(a0, B.mul(a1, hb))
        if B.is_zero(f):
            g = B.sqrt(e)
            if g is not None:
                return (g, B.zero)
            h = B.sqrt(B.mul(e, B.inv(D)))
            if h is None:
                return None
            return (B.mul(h, hb), h)
        r = B.sqrt(B.sub(B.mul(e, e), B.mul(B.mul(f, f), D)))
        if r is None:
            return None
        for rr in (r, B.neg(r)):
            g = B.sqrt(_half(B, B.add(e, rr)))
            if g is None or B.is_zero(g):
                continue
            h = B.mul(f, B.inv(B.smul(g, 2)))
            # back to the z basis, w = z + b/2
            return (B.add(g, B.mul(h, hb)), h)
        return None

    def to_str(self, a) -> str:
        name = f"z{self.depth}"
        parts = []
        for i, c in enumerate(a):
            if self.below.is_zero(c):
                continue
            cs = self.below.to_str(c)
            if i == 0:
                parts.append(f"({cs})")
            else:
                mon = name if i == 1 else f"{name}^{i}"
                parts.append(mon if cs == "1" else f"({cs})*{mon}")
        return " + ".join(parts) if parts else "0"


def _minor_det(B, M, r, c):
    """Determinant of M without row r and column c (Laplace expansion)."""
    rows = [row[:c] + row[c + 1:] for i, row in enumerate(M) if i != r]
    n = len(rows)
    if n == 0:
        return B.one
    if n == 1:
        return rows[0][0]
    acc = B.zero
    for j in range(n):
        if B.is_zero(rows[0][j]):
            continue
        term = B.mul(rows[0][j], _minor_det(B, rows, 0, j))
        acc = B.add(acc, term) if j % 2 == 0 else B.sub(acc, term)
    return acc


def _half(L, a):
    return L.mul(a, L.inv(L.smul(L.one, 2))) if L.depth else a * QQ(1, 2)


# ---------------------------------------------------------------------------
# univariate polynomials over a level (lists, low degree first)


def ptrim(L, p: list) -> list:
    p = list(p)
    while len(p) > 1 and L.is_zero(p[-1]):
        p.pop()
    return p if p else [L.zero]


def pdeg(L, p) -> int:
    p = ptrim(L, p)
    if len(p) == 1 and L.is_zero(p[0]):
        return -1
    return len(p) - 1


def padd(L, a, b):
    n = max(len(a), len(b))
    a = list(a) + [L.zero] * (n - len(a))
    b = list(b) + [L.zero] * (n - len(b))
    return ptrim(L, [L.add(x, y) for x, y in zip(a, b)])


def psub(L, a, b):
    return padd(L, a, [L.neg(c) for c in b])


def pscale(L, p, c):
    return ptrim(L, [L.mul(x, c) for x in p])


def pmul(L, a, b):
    if pdeg(L, a) < 0 or pdeg(L, b) < 0:
        return [L.zero]
    out = [L.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if L.is_zero(x):
            continue
        for j, y in enumerate(b):
            if L.is_zero(y):
                continue
            out[i + j] = L.add(out[i + j], L.mul(x, y))
    return ptrim(L, out)


def pdivmod(L, a, b):
    b = ptrim(L, b)
    db = pdeg(L, b)
    if db < 0:
        raise ZeroDivisionError("polynomial division by zero")
    r = ptrim(L, a)
    if pdeg(L, r) < db:
        return [L.zero], r
    inv_lead = L.inv(b[-1])
    q = [L.zero] * (len(r) - db)
    r = list(r)
    for k in range(len(r) - 1 - db, -1, -1):
        c = L.mul(r[k + db], inv_lead)
        q[k] = c
        if L.is_zero(c):
            continue
        for j in range(db + 1):
            r[k + j] = L.sub(r[k + j], L.mul(c, b[j]))
    return ptrim(L, q), ptrim(L, r[:db] if db else [L.zero])


def pmonic(L, p):
    p = ptrim(L, p)
    if pdeg(L, p) < 0:
        return p
    return pscale(L, p, L.inv(p[-1]))


def pgcd(L, a, b):
    a, b = ptrim(L, a), ptrim(L, b)
    while pdeg(L, b) >= 0:
        a, b = b, pdivmod(L, a, b)[1]
    return pmonic(L, a)


def pxgcd(L, a, b):
    """(g, s, t) with s*a + t*b = g (g not normalised)."""
    r0, r1 = ptrim(L, a), ptrim(L, b)
    s0, s1 = [L.one], [L.zero]
    t0, t1 = [L.zero], [L.one]
    while pdeg(L, r1) >= 0:
        q, r = pdivmod(L, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, psub(L, s0, pmul(L, q, s1))
        t0, t1 = t1, psub(L, t0, pmul(L, q, t1))
    return r0, s0, t0


def pderiv(L, p):
    if len(p) <= 1:
        return [L.zero]
    return ptrim(L, [L.smul(c, i) for i, c in enumerate(p) if i > 0])


def peval(L, p, x):
    acc = L.zero
    for c in reversed(p):
        acc = L.add(L.mul(acc, x), c)
    return acc


def pcompose(L, p, q):
    """p(q(U))."""
    acc = [L.zero]
    for c in reversed(p):
        acc = padd(L, pmul(L, acc, q), [c])
    return acc


def is_squarefree(L, p) -> bool:
    return pdeg(L, pgcd(L, p, pderiv(L, p))) <= 0


# ---------------------------------------------------------------------------
# factorisation over a level


_FACTOR_RINGS: dict = {}


def _factor_ring(base_ring: PolyRing) -> PolyRing:
    key = tuple(str(s) for s in base_ring.symbols)
    if key not in _FACTOR_RINGS:
        _FACTOR_RINGS[key] = PolyRing(key + ("_U",), QQ, grlex)
    return _FACTOR_RINGS[key]


def _factor_base(L: BaseLevel, p: list) -> list:
    fld = L.field
    ring = fld.ring
    den = ring.one
    for c in p:
        den = den.lcm(c.denom)
    R4 = _factor_ring(ring)
    terms = {}
    for k, c in enumerate(p):
        num = (c * fld(den)).numer
        assert (c * fld(den)).denom == ring.one or (c * fld(den)).denom.is_ground
        scale = QQ.one / QQ.convert((c * fld(den)).denom.LC) if not (c * fld(den)).denom == ring.one else QQ.one
        for m, v in num.iterterms():
            terms[m + (k,)] = terms.get(m + (k,), QQ.zero) + v * scale
    P = R4.from_dict(terms)
    _, facs = P.factor_list()
    out = []
    for f, mult in facs:
        if f.degree(R4.ngens - 1) <= 0:
            continue
        coeffs = univariate_coeffs(f, "_U")
        lifted = [fld(ring.from_dict({m[:-1]: v for m, v in c.numer.iterterms()})) /
                  fld(ring.from_dict({m[:-1]: v for m, v in c.denom.iterterms()})) for c in coeffs]
        for _ in range(mult):
            out.append(pmonic(L, lifted))
    return out


def _norm(L: ExtLevel, q: list) -> list:
    """Norm from L[U] down to K[U] as the determinant of multiplication by q."""
    K = L.below
    d = L.d
    zpow = [L.one]
    g = L.gen()
    for _ in range(d - 1):
        zpow.append(L.mul(zpow[-1], g))
    # M[i][j] = coefficient of z^i in q * z^j, a polynomial in U over K
    cols = []
    for j in range(d):
        prod = [L.mul(c, zpow[j]) for c in q]
        cols.append([ptrim(K, [c[i] for c in prod]) for i in range(d)])
    M = [[cols[j][i] for j in range(d)] for i in range(d)]
    return _bareiss_det(K, M)


def _bareiss_det(K, M) -> list:
    n = len(M)
    M = [row[:] for row in M]
    sign = 1
    prev = [K.one]
    for k in range(n - 1):
        if pdeg(K, M[k][k]) < 0:
            for r in range(k + 1, n):
                if pdeg(K, M[r][k]) >= 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return [K.zero]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = psub(K, pmul(K, M[i][j], M[k][k]), pmul(K, M[i][k], M[k][j]))
                q, r = pdivmod(K, num, prev)
                assert pdeg(K, r) < 0
                M[i][j] = q
        prev = M[k][k]
    det = M[n - 1][n - 1]
    return det if sign == 1 else [K.neg(c) for c in det]


def _trager(L: ExtLevel, p: list) -> list:
    K = L.below
    z = L.gen()
    for s in itertools.chain([0], *([k, -k] for k in range(1, 50))):
        sz = L.smul(z, s)
        q = pcompose(L, p, [L.neg(sz), L.one])  # p(U - s z)
        N = _norm(L, q)
        if is_squarefree(K, N):
            break
    else:  # pragma: no cover - a squarefree shift always exists in characteristic 0
        raise RuntimeError("no squarefree norm found")
    out = []
    for g in factor_poly(K, pmonic(K, N)):
        lifted = [L.from_below(c) for c in g]
        h = pgcd(L, q, lifted)
        if pdeg(L, h) >= 1:
            out.append(pmonic(L, pcompose(L, h, [sz, L.one])))
    return out


def factor_poly(L, p: list) -> list:
    """Monic irreducible factors of a squarefree polynomial over level L."""
    p = pmonic(L, p)
    d = pdeg(L, p)
    if d <= 0:
        return []
    if d == 1:
        return [p]
    if d == 2 and (L.depth == 0 or L.d == 2):
        c, b = p[0], p[1]
        disc = L.sub(L.mul(b, b), L.smul(c, 4))
        r = L.sqrt(disc)
        if r is None:
            return [p]
        two_inv = L.inv(L.smul(L.one, 2))
        r1 = L.mul(L.sub(r, b), two_inv)
        r2 = L.mul(L.sub(L.neg(r), b), two_inv)
        return [[L.neg(r1), L.one], [L.neg(r2), L.one]]
    if L.depth == 0:
        return _factor_base(L, p)
    return _trager(L, p)


# ---------------------------------------------------------------------------
# public tower objects


@dataclass(frozen=True, eq=False)
class Layer:
    minpoly: tuple  # raw coefficients over the level below, monic
    degree: int


class Tower:
    """Immutable tower; ``extend`` returns a new tower sharing the old layers."""

    def __init__(self, layers: Iterable[Layer] = (), base_level: BaseLevel | None = None):
        self.layers = tuple(layers)
        lev = base_level or _BASE_LEVEL
        self.levels = [lev]
        for lay in self.layers:
            lev = ExtLevel(lev, lay.minpoly)
            self.levels.append(lev)

    @property
    def top(self):
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def degree(self) -> int:
        return self.top.degree

    def is_prefix_of(self, other: "Tower") -> bool:
        n = len(self.layers)
        return n <= len(other.layers) and all(a is b for a, b in zip(self.layers, other.layers[:n]))

    def elem(self, raw) -> "TowerElem":
        return TowerElem(self, raw)

    def from_base(self, c) -> "TowerElem":
        return TowerElem(self, self.top.from_base(to_field(c, BASE)))

    def zero(self) -> "TowerElem":
        return TowerElem(self, self.top.zero)

    def one(self) -> "TowerElem":
        return TowerElem(self, self.top.one)

    def gen(self, i: int | None = None) -> "TowerElem":
        """Generator z_i (1-based; default the newest) as an element of this tower."""
        i = self.depth if i is None else i
        if not 1 <= i <= self.depth:
            raise IndexError("no such generator")
        sub = Tower(self.layers[:i])
        return TowerElem(sub, sub.top.gen()).lift(self)

    def coerce_poly(self, p: Sequence) -> list:
        """Raw top-level coefficient list from TowerElems or base values."""
        out = []
        for c in p:
            if isinstance(c, TowerElem):
                out.append(c.lift(self).raw)
            else:
                out.append(self.top.from_base(to_field(c, BASE)))
        return out

    def extend(self, p: Sequence) -> "Tower":
        """Adjoin a root of the monic polynomial ``p`` (checked irreducible)."""
        raw = ptrim(self.top, self.coerce_poly(p))
        d = pdeg(self.top, raw)
        if d < 2:
            raise ValueError("minimal polynomial must have degree >= 2")
        if raw[-1] != self.top.one:
            raise ValueError("minimal polynomial must be monic")
        if not is_squarefree(self.top, raw):
            g = pgcd(self.top, raw, pderiv(self.top, raw))
            raise ReducibleMinimalPolynomial([TowerElem(self, c) for c in g])
        facs = factor_poly(self.top, raw)
        if len(facs) != 1:
            facs.sort(key=len)
            raise ReducibleMinimalPolynomial([TowerElem(self, c) for c in facs[0]])
        return self._extend_unchecked(raw)

    def _extend_unchecked(self, raw) -> "Tower":
        raw = tuple(raw)
        return Tower(self.layers + (Layer(raw, len(raw) - 1),), self.levels[0])

    def minpoly_strings(self) -> list[str]:
        out = []
        for k, lay in enumerate(self.layers):
            lev = self.levels[k]
            terms = []
            for i, c in enumerate(lay.minpoly):
                if lev.is_zero(c):
                    continue
                mon = "" if i == 0 else (f"z{k + 1}" if i == 1 else f"z{k + 1}^{i}")
                cs = lev.to_str(c)
                if not mon:
                    terms.append(f"({cs})")
                else:
                    terms.append(mon if cs == "1" else f"({cs})*{mon}")
            out.append(" + ".join(reversed(terms)))
        return out

    def __repr__(self):
        return f"Tower(degree={self.degree}, layers={self.minpoly_strings()})"


_BASE_LEVEL = BaseLevel()


def _lift_raw(raw, src: Tower, dst: Tower):
    for lev in dst.levels[src.depth + 1:]:
        raw = lev.from_below(raw)
    return raw


class TowerElem:
    __slots__ = ("tower", "raw")

    def __init__(self, tower: Tower, raw):
        self.tower = tower
        self.raw = raw

    # coercion -----------------------------------------------------------
    def lift(self, tower: Tower) -> "TowerElem":
        if tower is self.tower:
            return self
        if not self.tower.is_prefix_of(tower):
            raise ValueError("target tower does not extend this element's tower")
        return TowerElem(tower, _lift_raw(self.raw, self.tower, tower))

    def _pair(self, other):
        if isinstance(other, TowerElem):
            if other.tower is self.tower:
                return self.tower, self.raw, other.raw
            if self.tower.is_prefix_of(other.tower):
                return other.tower, self.lift(other.tower).raw, other.raw
            if other.tower.is_prefix_of(self.tower):
                return self.tower, self.raw, other.lift(self.tower).raw
            raise ValueError("elements live in unrelated towers")
        if isinstance(other, (int, Fraction, FracElement, PolyElement)):
            return self.tower, self.raw, self.tower.top.from_base(to_field(other, BASE))
        return None

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        pr = self._pair(other)
        if pr is None:
            return NotImplemented
        tw, a, b = pr
        return TowerElem(tw, tw.top.add(a, b))

    __radd__ = __add__

    def __sub__(self, other):
        pr = self._pair(other)
        if pr is None:
            return NotImplemented
        tw, a, b = pr
        return TowerElem(tw, tw.top.sub(a, b))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return TowerElem(self.tower, self.tower.top.neg(self.raw))

    def __mul__(self, other):
        pr = self._pair(other)
        if pr is None:
            return NotImplemented
        tw, a, b = pr
        return TowerElem(tw, tw.top.mul(a, b))

    __rmul__ = __mul__

    def inv(self) -> "TowerElem":
        return TowerElem(self.tower, self.tower.top.inv(self.raw))

    def __truediv__(self, other):
        pr = self._pair(other)
        if pr is None:
            return NotImplemented
        tw, a, b = pr
        return TowerElem(tw, tw.top.mul(a, tw.top.inv(b)))

    def __rtruediv__(self, other):
        return self.inv() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        result = self.tower.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __bool__(self):
        return not self.tower.top.is_zero(self.raw)

    def __eq__(self, other):
        pr = self._pair(other)
        if pr is None:
            return NotImplemented
        tw, a, b = pr
        return a == b

    def __hash__(self):
        return hash(self.raw)

    # structure ----------------------------------------------------------
    def descend(self):
        """Return the base fraction this element equals, or raise NotInBase."""
        raw = self.raw
        for lev in reversed(self.tower.levels[1:]):
            if not all(lev.below.is_zero(c) for c in raw[1:]):
                raise NotInBase("element involves a tower generator")
            raw = raw[0]
        return raw

    def in_base(self) -> bool:
        try:
            self.descend()
        except NotInBase:
            return False
        return True

    def sqrt(self):
        r = self.tower.top.sqrt(self.raw)
        return None if r is None else TowerElem(self.tower, r)

    def __str__(self):
        return self.tower.top.to_str(self.raw)

    def __repr__(self):
        return f"TowerElem({self})"


def _sum_fracs(fs: list):
    # numerators over a shared denominator are added as polynomials, so
    # the gcd work happens once per distinct denominator
    buckets: dict = {}
    fld = None
    for f in fs:
        if not f:
            continue
        fld = f.field
        buckets[f.denom] = buckets.get(f.denom, 0) + f.numer
    if fld is None:
        return fs[0] * 0 if fs else BASE.zero
    acc = fld.zero
    for den, num in buckets.items():
        if num:
            acc += fld(num) / fld(den)
    return acc


def _sum_raw(level, raws: list):
    if level.depth == 0:
        return _sum_fracs(raws)
    return tuple(_sum_raw(level.below, [r[i] for r in raws]) for i in range(level.d))


def sum_elems(elems: Sequence, tower: Tower | None = None) -> TowerElem:
    """Sum of many tower elements with batched cancellation."""
    elems = list(elems)
    if tower is None:
        tower = elems[0].tower
        for e in elems[1:]:
            if tower.is_prefix_of(e.tower):
                tower = e.tower
    if not elems:
        return tower.zero()
    raws = [e.lift(tower).raw for e in elems]
    return TowerElem(tower, _sum_raw(tower.top, raws))


def descend_to_base(a: TowerElem):
    return a.descend()


def elem_arith(a: TowerElem, b: TowerElem | None, op: str) -> TowerElem:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inv()
    raise ValueError(f"unknown op {op!r}")


@dataclass
class RootResult:
    roots: list
    residual: list | None
    tower: Tower  # tower holding the roots (the input tower if nothing was adjoined)
    extended: bool = False
    log: list = field(default_factory=list)


def roots_in_tower(tower: Tower, p: Sequence, allow_extend: bool = False,
                   degree_budget: int = 8, candidates: Sequence = ()) -> RootResult:
    """Roots of a squarefree polynomial (coefficients low to high) in the tower.

    Roots already in the tower are returned directly. When ``allow_extend``
    is set, the remaining irreducible factors are adjoined one at a time (the
    smallest first) as long as the total degree stays within the budget.
    Every returned root is checked by exact evaluation.
    """
    L = tower.top
    raw = pmonic(L, tower.coerce_poly(p))
    if pdeg(L, raw) < 1:
        return RootResult([], None, tower)
    if not is_squarefree(L, raw):
        raise ValueError("roots_in_tower expects a squarefree polynomial")
    roots: list = []
    rest = raw
    for c in candidates:
        if pdeg(L, rest) < 1:
            break
        cr = c.lift(tower).raw if isinstance(c, TowerElem) else L.from_base(to_field(c, BASE))
        if L.is_zero(peval(L, rest, cr)):
            roots.append(cr)
            rest, r = pdivmod(L, rest, [L.neg(cr), L.one])
    nonlin = []
    for f in factor_poly(L, rest):
        if len(f) == 2:
            roots.append(L.neg(f[0]))
        else:
            nonlin.append(f)
    for r in roots:
        assert L.is_zero(peval(L, raw, r)), "root verification failed"
    found = [TowerElem(tower, r) for r in roots]
    if not nonlin:
        return RootResult(found, None, tower)
    residual = [L.one]
    for f in nonlin:
        residual = pmul(L, residual, f)
    residual_elems = [TowerElem(tower, c) for c in residual]
    if not allow_extend:
        return RootResult(found, residual_elems, tower)
    nonlin.sort(key=len)
    g = nonlin[0]
    new_deg = tower.degree * (len(g) - 1)
    if new_deg > degree_budget:
        raise DegreeBudgetExceeded(residual_elems, new_deg, degree_budget)
    new = tower._extend_unchecked(g)
    sub = roots_in_tower(new, [c.lift(new) for c in residual_elems], True, degree_budget)
    out = [r.lift(sub.tower) for r in found] + sub.roots
    return RootResult(out, sub.residual, sub.tower, True)
