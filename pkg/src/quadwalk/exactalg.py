"""Exact arithmetic foundation.

Multivariate polynomials and rational functions are sympy sparse ring/field
elements over QQ with graded-lex order. Two fixed fields are used throughout:

``FORMAL`` = Q(X, Y, t, lam)
    fractions H(X, Y, t) built from a walk model, and the coefficients of
    truncated t-series;
``BASE`` = Q(x, y, lam)
    the field over which orbit coordinates are built (x, y generic).

The weight parameter ``lam`` is an ordinary variable of both fields, so a
weight is either a rational number or a rational function of ``lam``; a
specialised run simply never introduces ``lam``.
"""
from __future__ import annotations

import ast
import operator
from fractions import Fraction
from typing import Any, Iterable, Sequence

from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

FORMAL = FracField(("X", "Y", "t", "lam"), QQ, grlex)
BASE = FracField(("x", "y", "lam"), QQ, grlex)


class NotTExpandable(ValueError):
    """The denominator vanishes identically at t = 0 after removing t-powers."""


class NotMulSplit(ValueError):
    """A series coefficient has a denominator that is not of the form B(X)*C(Y)."""


class NonMonic(ValueError):
    pass


# ---------------------------------------------------------------------------
# small helpers


def zero_like(c):
    return c - c


def one_like(c):
    if isinstance(c, (FracElement, PolyElement)):
        return c.ring.one if isinstance(c, PolyElement) else c.field.one
    return c ** 0 if not isinstance(c, (int, Fraction)) else 1


def _ring_of(p):
    if isinstance(p, PolyElement):
        return p.ring
    if isinstance(p, FracElement):
        return p.field.ring
    raise TypeError(f"not a polynomial or fraction: {p!r}")


def gen_index(obj, var) -> int:
    """Index of generator ``var`` (an element or its name) in the ring of ``obj``."""
    ring = _ring_of(obj)
    name = str(var)
    names = [str(s) for s in ring.symbols]
    try:
        return names.index(name)
    except ValueError:
        raise ValueError(f"{name} is not a variable of {ring}") from None


def _min_exp(p: PolyElement, i: int) -> int:
    return min(m[i] for m in p.itermonoms())


def _max_exp(p: PolyElement, i: int) -> int:
    return max(m[i] for m in p.itermonoms())


def degree_in(p, var) -> int:
    """Degree of a polynomial (or of a fraction's numerator) in ``var``; -1 for zero."""
    if isinstance(p, FracElement):
        if p.denom.degree(gen_index(p, var)) > 0:
            raise ValueError("denominator depends on the variable")
        p = p.numer
    if not p:
        return -1
    return _max_exp(p, gen_index(p, var))


def univariate_coeffs(p, var) -> list:
    """Coefficient list (low to high) of ``p`` viewed as a polynomial in ``var``.

    Coefficients are field elements free of ``var``. ``p`` may be a fraction
    whose denominator does not involve ``var``.
    """
    if isinstance(p, FracElement):
        field = p.field
        i = gen_index(p, var)
        if p.denom.degree(i) > 0:
            raise ValueError("denominator depends on the variable")
        num, den = p.numer, p.denom
    else:
        field = p.ring.to_field()
        i = gen_index(p, var)
        num, den = p, p.ring.one
    ring = field.ring
    if not num:
        return [field.zero]
    buckets: dict[int, dict] = {}
    for m, c in num.iterterms():
        k = m[i]
        mm = m[:i] + (0,) + m[i + 1:]
        buckets.setdefault(k, {})[mm] = c
    deg = max(buckets)
    out = []
    dfrac = field(den)
    for k in range(deg + 1):
        terms = buckets.get(k)
        out.append(field(ring.from_dict(terms)) / dfrac if terms else field.zero)
    return out


def from_univariate_coeffs(coeffs: Sequence, var):
    """Inverse of :func:`univariate_coeffs`."""
    acc = zero_like(coeffs[0])
    g = _gen_of(coeffs[0], var)
    for c in reversed(coeffs):
        acc = acc * g + c
    return acc


def _gen_of(obj, var):
    i = gen_index(obj, var)
    if isinstance(obj, FracElement):
        return obj.field.gens[i]
    return obj.ring.gens[i]


# ---------------------------------------------------------------------------
# polynomial operations


def poly_arith(a, b, op: str, var=None):
    """Exact ring operation on polynomials or fractions.

    ``op`` is one of ``add``, ``mul``, ``divrem`` or ``gcd``. ``divrem`` views
    both operands as univariate in ``var`` over the fraction field of the
    remaining variables and returns ``(q, r)`` with ``a = q*b + r``.
    """
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "gcd":
        if not (isinstance(a, PolyElement) and isinstance(b, PolyElement)):
            raise TypeError("gcd is defined for polynomials only")
        g = a.gcd(b)
        return g.monic() if g else g
    if op == "divrem":
        if var is None:
            var = _ring_of(a).symbols[0]
        return divrem(a, b, var)
    raise ValueError(f"unknown op {op!r}")


def divrem(a, b, var):
    bc = univariate_coeffs(b, var)
    while len(bc) > 1 and not bc[-1]:
        bc.pop()
    if len(bc) == 1 and not bc[0]:
        raise ZeroDivisionError("division by the zero polynomial")
    ac = univariate_coeffs(a, var)
    db = len(bc) - 1
    lead = bc[-1]
    q = [zero_like(lead)] * max(len(ac) - db, 1)
    r = list(ac)
    for k in range(len(ac) - 1 - db, -1, -1):
        c = r[k + db] / lead
        q[k] = c
        if c:
            for j in range(db + 1):
                r[k + j] = r[k + j] - c * bc[j]
    r = r[:db] if db > 0 else [zero_like(lead)]
    return from_univariate_coeffs(q, var), from_univariate_coeffs(r or [zero_like(lead)], var)


def _permuted_ring(ring: PolyRing, i: int) -> tuple[PolyRing, list[int]]:
    order = [i] + [j for j in range(ring.ngens) if j != i]
    syms = [ring.symbols[j] for j in order]
    return PolyRing(syms, ring.domain, ring.order), order


def _permute(p: PolyElement, target: PolyRing, order: list[int]) -> PolyElement:
    return target.from_dict({tuple(m[j] for j in order): c for m, c in p.iterterms()})


def _drop_first(p: PolyElement, target: PolyRing, order: list[int]) -> PolyElement:
    # sympy returns the resultant in the ring without its first generator
    out = {}
    for m, c in p.iterterms():
        e = [0] * target.ngens
        for k, j in enumerate(order[1:]):
            e[j] = m[k]
        out[tuple(e)] = c
    return target.from_dict(out) if out else target.zero


def resultant(a: PolyElement, b: PolyElement, var) -> PolyElement:
    """Resultant of ``a`` and ``b`` with respect to ``var`` (subresultant PRS)."""
    ring = a.ring
    if b.ring != ring:
        raise ValueError("operands live in different rings")
    i = gen_index(a, var)
    if a.degree(i) <= 0 or b.degree(i) <= 0:
        raise ValueError("both operands need positive degree in the variable")
    pring, order = _permuted_ring(ring, i)
    r = _permute(a, pring, order).resultant(_permute(b, pring, order))
    if not isinstance(r, PolyElement):
        return ring(r)
    return _drop_first(r, ring, order)


# ---------------------------------------------------------------------------
# Newton's identities


def _coeff_list(p, var):
    if isinstance(p, (PolyElement, FracElement)):
        if var is None:
            var = _ring_of(p).symbols[0]
        return univariate_coeffs(p, var)
    return list(p)


def newton_power_sums(p, k: int, var=None) -> list:
    """Power sums p_1..p_k of the roots of a monic polynomial.

    ``p`` is either a sequence of coefficients (low to high degree; any ring
    elements, e.g. tower elements) or a polynomial together with ``var``.
    No root is ever extracted.
    """
    a = _coeff_list(p, var)
    d = len(a) - 1
    if d < 1 or a[-1] != 1:
        raise NonMonic("newton_power_sums expects a monic polynomial of degree >= 1")
    ps: list = []
    for m in range(1, k + 1):
        if m <= d:
            acc = a[d - m] * (-m)
        else:
            acc = zero_like(a[0])
        for i in range(1, min(m - 1, d) + 1):
            acc = acc - a[d - i] * ps[m - i - 1]
        ps.append(acc)
    return ps


def elementary_from_power_sums(ps: Sequence, d: int) -> list:
    """Elementary symmetric functions e_0..e_d from power sums p_1..p_d."""
    if len(ps) < d:
        raise ValueError("need at least d power sums")
    e = [one_like(ps[0]) if ps else 1]
    for m in range(1, d + 1):
        acc = zero_like(ps[0])
        for i in range(1, m + 1):
            term = e[m - i] * ps[i - 1]
            acc = acc + term if i % 2 == 1 else acc - term
        e.append(acc / m)
    return e


def monic_from_power_sums(ps: Sequence, d: int) -> list:
    """Coefficients (low to high) of the monic degree-d polynomial with these power sums."""
    e = elementary_from_power_sums(ps, d)
    return [e[d - j] if (d - j) % 2 == 0 else -e[d - j] for j in range(d + 1)]


# ---------------------------------------------------------------------------
# valuations and the C_mul shape


def valuation_at_zero(f, var) -> int:
    """Order of vanishing at ``var`` = 0 (negative for a pole)."""
    if not f:
        raise ValueError("valuation of zero is undefined")
    i = gen_index(f, var)
    if isinstance(f, FracElement):
        return _min_exp(f.numer, i) - _min_exp(f.denom, i)
    return _min_exp(f, i)


_SPLIT_POINTS = [(2, 3), (3, 5), (-2, 7), (5, -3), (7, 11), (-13, 4)]


def is_mul_split(den: PolyElement, xvar="X", yvar="Y") -> bool:
    """True when ``den`` factors as B(X)*C(Y) (other variables act as constants).

    Uses the identity D(X,Y)*D(a,b) = D(X,b)*D(a,Y), which characterises
    product-separable polynomials whenever D(a,b) != 0.
    """
    ring = den.ring
    ix, iy = gen_index(den, xvar), gen_index(den, yvar)
    gx, gy = ring.gens[ix], ring.gens[iy]
    for a, b in _SPLIT_POINTS:
        dxb = den.subs(gy, b)
        dab = dxb.subs(gx, a)
        if not dab:
            continue
        day = den.subs(gx, a)
        return den * dab == dxb * day
    raise ValueError("could not find a point where the denominator is nonzero")


# ---------------------------------------------------------------------------
# truncated power series in t


class TruncSeries:
    """Truncated Laurent series sum_{n=val}^{order} c_n t^n.

    Coefficients are field elements (usually of ``FORMAL``, free of t) or
    plain rationals. On construction the denominators of fraction
    coefficients are checked to split as B(X)*C(Y).
    """

    __slots__ = ("coeffs", "val")

    def __init__(self, coeffs: Iterable, val: int = 0, check: bool = True):
        self.coeffs = tuple(coeffs)
        self.val = val
        if not self.coeffs:
            raise ValueError("a truncated series needs at least one known coefficient")
        if check:
            for n, c in enumerate(self.coeffs):
                if isinstance(c, FracElement) and not c.denom.is_ground:
                    if _has_xy(c.denom) and not is_mul_split(c.denom):
                        raise NotMulSplit(f"coefficient of t^{n + val} has denominator {c.denom.as_expr()}")

    @property
    def order(self) -> int:
        return self.val + len(self.coeffs) - 1

    @property
    def prec(self) -> int:
        return self.val + len(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n: int):
        if n > self.order:
            raise IndexError(f"t^{n} is beyond the truncation order {self.order}")
        if n < self.val:
            return zero_like(self.coeffs[0])
        return self.coeffs[n - self.val]

    def __iter__(self):
        return iter(self.coeffs)

    def items(self):
        return ((self.val + k, c) for k, c in enumerate(self.coeffs))

    def _zero(self):
        return zero_like(self.coeffs[0])

    def truncate(self, order: int) -> "TruncSeries":
        if order >= self.order:
            return self
        if order < self.val:
            return TruncSeries([self._zero()], order, check=False)
        return TruncSeries(self.coeffs[: order - self.val + 1], self.val, check=False)

    def shift(self, k: int) -> "TruncSeries":
        """Multiply by t^k."""
        return TruncSeries(self.coeffs, self.val + k, check=False)

    def map(self, f) -> "TruncSeries":
        return TruncSeries([f(c) for c in self.coeffs], self.val, check=False)

    def normalized(self) -> "TruncSeries":
        """Drop leading zero coefficients (keeps at least one)."""
        k = 0
        while k < len(self.coeffs) - 1 and not self.coeffs[k]:
            k += 1
        return TruncSeries(self.coeffs[k:], self.val + k, check=False)

    def is_zero(self) -> bool:
        return all(not c for c in self.coeffs)

    def _coerce(self, other):
        if isinstance(other, TruncSeries):
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return self + TruncSeries([self._zero() + other], 0, check=False).extend_to(self.order)
        lo = min(self.val, o.val)
        hi = min(self.order, o.order)
        if hi < lo:
            return TruncSeries([self._zero()], hi, check=False)
        return TruncSeries([self[n] + o[n] for n in range(lo, hi + 1)], lo, check=False)

    __radd__ = __add__

    def __neg__(self):
        return self.map(operator.neg)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def extend_to(self, order: int) -> "TruncSeries":
        """Treat the series as exact (a polynomial) and pad zeros up to ``order``."""
        if order <= self.order:
            return self
        z = self._zero()
        return TruncSeries(self.coeffs + (z,) * (order - self.order), self.val, check=False)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return self.map(lambda c: c * other)
        n = min(len(self.coeffs), len(o.coeffs))
        a, b = self.coeffs, o.coeffs
        out = []
        for k in range(n):
            acc = None
            for i in range(k + 1):
                ai = a[i]
                if not ai:
                    continue
                bj = b[k - i]
                if not bj:
                    continue
                acc = ai * bj if acc is None else acc + ai * bj
            out.append(acc if acc is not None else zero_like(a[0]))
        return TruncSeries(out, self.val + o.val, check=False)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = TruncSeries([one_like(self.coeffs[0])], 0, check=False).extend_to(self.order - self.val)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if self.order != other.order:
            return False
        lo = min(self.val, other.val)
        return all(self[n] == other[n] for n in range(lo, self.order + 1))

    def __hash__(self):
        return hash((self.val, self.coeffs))

    def __repr__(self):
        terms = ", ".join(f"t^{n}: {c}" for n, c in self.items() if c)
        return f"TruncSeries({{{terms}}}, order={self.order})"


def _has_xy(p: PolyElement) -> bool:
    names = [str(s) for s in p.ring.symbols]
    idx = [names.index(v) for v in ("X", "Y") if v in names]
    return any(m[i] for m in p.itermonoms() for i in idx)


def _t_slices(p: PolyElement, it: int) -> dict[int, PolyElement]:
    ring = p.ring
    buckets: dict[int, dict] = {}
    for m, c in p.iterterms():
        k = m[it]
        buckets.setdefault(k, {})[m[:it] + (0,) + m[it + 1:]] = c
    return {k: ring.from_dict(v) for k, v in buckets.items()}


def series_expand(h, N: int, var="t", check: bool = True) -> TruncSeries:
    """t-adic expansion of a fraction up to and including t^N.

    Powers of t in the denominator are allowed and give a negative
    valuation. Raises :class:`NotTExpandable` when nothing of the
    denominator survives at t = 0 and :class:`NotMulSplit` when the
    constant-term denominator is not of the form B(X)*C(Y).
    """
    if isinstance(h, PolyElement):
        h = h.ring.to_field()(h)
    field = h.field
    it = gen_index(h, var)
    if not h:
        return TruncSeries([field.zero], 0, check=False).extend_to(N)
    num = _t_slices(h.numer, it)
    den = _t_slices(h.denom, it)
    v = min(den)
    u = min(num)
    d0 = den[v]
    if not d0:
        raise NotTExpandable("denominator vanishes at t = 0")
    if check and _has_xy(d0) and not is_mul_split(d0):
        raise NotMulSplit(f"denominator {d0.as_expr()} does not split as B(X)*C(Y)")
    val = u - v
    length = N - val + 1
    if length <= 0:
        return TruncSeries([field.zero], N, check=False)
    d0f = field(d0)
    inv0 = 1 / d0f
    dk = {k - v: field(p) for k, p in den.items() if k > v}
    # inverse of the denominator series
    inv = [inv0]
    for n in range(1, length):
        acc = field.zero
        for k, dkf in dk.items():
            if k <= n:
                acc += dkf * inv[n - k]
        inv.append(-acc * inv0)
    nk = {k - u: field(p) for k, p in num.items()}
    out = []
    for n in range(length):
        acc = field.zero
        for k, nkf in nk.items():
            if k <= n:
                acc += nkf * inv[n - k]
        out.append(acc)
    return TruncSeries(out, val, check=False)


# ---------------------------------------------------------------------------
# rationals, expression parsing, serialisation


def fmt_rational(q) -> str:
    q = Fraction(int(q.numerator), int(q.denominator)) if not isinstance(q, int) else Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(s: str) -> Fraction:
    return Fraction(s.strip())


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}


def parse_expr(text: str, names: dict[str, Any]):
    """Evaluate a rational expression over the given names.

    Accepts integers, the operators ``+ - * /``, integer powers (``**`` or
    ``^``) and parentheses. Anything else is rejected.
    """
    src = text.replace("^", "**").strip()
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text!r}: {exc.msg} (column {exc.offset})") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown name {node.id!r} in {text!r}")
            return names[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                e = ev(node.right)
                if not isinstance(e, int):
                    raise ValueError("exponents must be integer literals")
                b = ev(node.left)
                if e < 0:
                    return (1 / b) ** (-e) if not isinstance(b, int) else Fraction(1, b) ** (-e)
                return b ** e
            fn = _BINOPS.get(type(node.op))
            if fn is None:
                raise ValueError(f"operator not allowed in {text!r}")
            left, right = ev(node.left), ev(node.right)
            if fn is operator.truediv and isinstance(left, int) and isinstance(right, int):
                return Fraction(left, right)
            return fn(left, right)
        raise ValueError(f"unsupported syntax in {text!r}")

    return ev(tree)


def to_field(value, field: FracField):
    """Coerce ints, Fractions and compatible elements into ``field``."""
    if isinstance(value, FracElement) and value.field == field:
        return value
    if isinstance(value, Fraction):
        return field(QQ(value.numerator, value.denominator))
    if isinstance(value, (FracElement, PolyElement)):
        return field.from_expr(value.as_expr())
    return field(value)


def poly_to_json(p: PolyElement) -> dict:
    return {
        "vars": [str(s) for s in p.ring.symbols],
        "terms": {",".join(map(str, m)): fmt_rational(c) for m, c in sorted(p.iterterms())},
    }


def poly_from_json(d: dict, ring: PolyRing) -> PolyElement:
    names = [str(s) for s in ring.symbols]
    if d["vars"] != names:
        raise ValueError(f"variable mismatch: {d['vars']} vs {names}")
    terms = {}
    for k, v in d["terms"].items():
        m = tuple(int(e) for e in k.split(",")) if k else ()
        q = Fraction(v)
        terms[m] = QQ(q.numerator, q.denominator)
    return ring.from_dict(terms) if terms else ring.zero


def frac_to_json(f) -> dict:
    if isinstance(f, PolyElement):
        return {"num": poly_to_json(f), "den": poly_to_json(f.ring.one)}
    return {"num": poly_to_json(f.numer), "den": poly_to_json(f.denom)}


def frac_from_json(d: dict, field: FracField):
    return field(poly_from_json(d["num"], field.ring)) / field(poly_from_json(d["den"], field.ring))


def series_to_json(s: TruncSeries) -> dict:
    out = []
    for c in s.coeffs:
        if isinstance(c, (FracElement, PolyElement)):
            out.append(frac_to_json(c))
        else:
            out.append(fmt_rational(c))
    return {"val": s.val, "order": s.order, "coeffs": out}


def series_from_json(d: dict, field: FracField | None = None) -> TruncSeries:
    coeffs = []
    for c in d["coeffs"]:
        if isinstance(c, dict):
            coeffs.append(frac_from_json(c, field or FORMAL))
        else:
            coeffs.append(Fraction(c))
    return TruncSeries(coeffs, d.get("val", 0), check=False)
