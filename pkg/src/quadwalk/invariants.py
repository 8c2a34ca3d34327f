"""Evaluation on the orbit, invariants and t-equivalence checks.

A fraction H(X, Y, t) is evaluated at a vertex (u, v) by substituting
t = 1/S(x, y). Orbit polynomials are assembled from power sums of each
colour class, descended to Q(x, y, lam) and turned back into coefficients,
so no orbit coordinate is ever expanded symbolically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from sympy.polys.domains import QQ
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

from .exactalg import (BASE, FORMAL, NotTExpandable, TruncSeries, elementary_from_power_sums,
                       newton_power_sums, resultant, series_expand, to_field, univariate_coeffs,
                       valuation_at_zero)
from .model import Kernel, kernel
from .orbit import OrbitGraph, OrbitVertex, adjacency_classes
from .towers import NotInBase, TowerElem, _sum_fracs, sum_elems


class NotRegular(ValueError):
    pass


class PoleAtVertex(ZeroDivisionError):
    pass


class CoefficientNotInBase(RuntimeError):
    pass


class NotInSubfield(ValueError):
    pass


class NoNonconstantCoefficient(RuntimeError):
    pass


class Lemma26Failure(Exception):
    reason = "failure"


class PoleAtZero(Lemma26Failure):
    reason = "pole"

    def __init__(self, var: str, order: int, t_power: int):
        super().__init__(f"pole of order {order} at {var}=0 in the coefficient of t^{t_power}")
        self.var = var
        self.order = order
        self.t_power = t_power


class NonConstantConclusion(Lemma26Failure):
    reason = "nonconstant"

    def __init__(self, side: str, t_power: int):
        super().__init__(f"{side}-side coefficient of t^{t_power} still depends on its variable")
        self.side = side
        self.t_power = t_power


X, Y, T_, LAM = FORMAL.gens


# ---------------------------------------------------------------------------
# evaluation


def _lam_value(g: OrbitGraph | None):
    if g is not None and g.specialization:
        return BASE(g.specialization["lam"])
    return BASE.gens[2]


def _eval_poly(p: PolyElement, u, v, T, lamv, S=None, D: int = 0):
    """p(u, v, T, lam) for p in the FORMAL ring; u, v tower elements or base values.

    With ``S`` given the result is multiplied by S^D and T^c is replaced by
    S^(D - c), which keeps denominators small when T = 1/S.
    """
    groups: dict = {}
    for (a, b, c, l), coef in p.iterterms():
        groups.setdefault(a, {}).setdefault(b, []).append((c, l, coef))
    tpow: dict = {}
    vpow: dict = {}
    upow: dict = {}

    def pw(cache, base, e):
        if e not in cache:
            cache[e] = base ** e
        return cache[e]

    def total(xs):
        if not xs:
            return None
        if isinstance(xs[0], TowerElem) or any(isinstance(z, TowerElem) for z in xs):
            return sum_elems([z for z in xs if isinstance(z, TowerElem)]) + \
                _sum_fracs([z for z in xs if not isinstance(z, TowerElem)])
        return _sum_fracs(xs)

    terms = []
    for a, inner in groups.items():
        for b, tl in inner.items():
            if S is None:
                c_ab = _sum_fracs([BASE(QQ.convert(coef)) * pw(tpow, T, c) * lamv ** l for c, l, coef in tl])
            else:
                c_ab = _sum_fracs([BASE(QQ.convert(coef)) * pw(tpow, S, D - c) * lamv ** l for c, l, coef in tl])
            if c_ab:
                terms.append(pw(upow, u, a) * pw(vpow, v, b) * c_ab)
    acc = total(terms)
    if acc is None:
        return u * 0
    return acc


def is_regular(H, k: Kernel) -> bool:
    H = to_field(H, FORMAL)
    return not k.divides(H.denom)


def evaluate_regular(H, target, g: OrbitGraph, k: Kernel | None = None):
    """H(u, v, 1/S(x, y)) at a vertex, or the linear extension to a chain.

    ``target`` is an :class:`OrbitVertex`, a vertex index, or a chain
    (mapping vertex index -> rational coefficient).
    """
    k = k or kernel(g.model, check=False)
    H = to_field(H, FORMAL)
    if k.divides(H.denom):
        raise NotRegular("denominator is divisible by the kernel")
    T = 1 / g.s_value
    lamv = _lam_value(g)
    if isinstance(target, dict):
        acc = g.tower.zero()
        for i, coef in target.items():
            if coef:
                acc = acc + _eval_vertex(H, g.vertices[i], T, lamv) * to_field(Fraction(coef), BASE)
        return acc
    if isinstance(target, int):
        target = g.vertices[target]
    return _eval_vertex(H, target, T, lamv)


def _eval_vertex(H: FracElement, v: OrbitVertex, T, lamv):
    D = max(H.numer.degree(2), H.denom.degree(2), 0)
    S = 1 / T
    num = _eval_poly(H.numer, v.left, v.right, T, lamv, S, D)
    den = _eval_poly(H.denom, v.left, v.right, T, lamv, S, D)
    if not den:
        raise PoleAtVertex("denominator vanishes at the vertex")
    return num / den


# ---------------------------------------------------------------------------
# orbit polynomials


def _fiber_coeffs(g: OrbitGraph, fixed: TowerElem, color: str) -> list:
    from .orbit import _Builder

    b = _Builder(g.model, g.specialization, 0)
    b.tower = g.tower
    return b.fiber(fixed, color)


def orbit_polynomial(g: OrbitGraph, side: str = "left") -> list:
    """Coefficients (low to high, in Q(x, y, lam)) of the product of (U - u) over all vertices.

    For side ``left`` the vertices are grouped in y-classes, whose left
    coordinates are exactly the roots of one U-fiber; power sums of each
    fiber come from Newton's identities, are summed over classes, descended
    to the base field and converted back to coefficients.
    """
    color = "y" if side == "left" else "x"
    classes = adjacency_classes(g, color)
    n = len(g.vertices)
    total = None
    for cls in classes:
        v = g.vertices[cls[0]]
        fixed = v.right if side == "left" else v.left
        coeffs = _fiber_coeffs(g, fixed, color)
        while not coeffs[-1]:
            coeffs.pop()
        if len(coeffs) - 1 != len(cls):
            raise CoefficientNotInBase("colour class is not a full fiber")
        lead = coeffs[-1]
        monic = [c / lead for c in coeffs]
        ps = newton_power_sums(monic, n)
        total = ps if total is None else [a + b for a, b in zip(total, ps)]
    try:
        base_ps = [p.descend() for p in total]
    except NotInBase as exc:
        raise CoefficientNotInBase(str(exc)) from None
    return [c for c in _monic_from_ps(base_ps, n)]


def _monic_from_ps(ps: list, d: int) -> list:
    e = elementary_from_power_sums(ps, d)
    return [e[d - j] if (d - j) % 2 == 0 else -e[d - j] for j in range(d + 1)]


# ---------------------------------------------------------------------------
# subfield reconstruction

_RES_RING = PolyRing(("x", "y", "lam", "T", "Z"), QQ, grlex)
_RES_FIELD = FracField(("x", "y", "lam", "T", "Z"), QQ, grlex)


def _to_res(p: PolyElement) -> PolyElement:
    return _RES_RING.from_dict({m + (0, 0): c for m, c in p.iterterms()})


def _kernel_relation(model, spec=None) -> PolyElement:
    """Numerator of x^mx y^my (T - S(x, y)) in Q[x, y, lam, T]."""
    x, y, lam = BASE.gens
    S = BASE.zero
    for s in model.steps:
        w = to_field(s.weight, BASE)
        S += w * x ** s.dx * y ** s.dy
    mx, my = model.mx, model.my
    rel = x ** mx * y ** my * S
    num = rel.numer
    den = rel.denom
    Tg = _RES_RING.gens[3]
    mono = (x ** mx * y ** my).numer
    return Tg * _to_res(mono) * _to_res(den) - _to_res(num)


def subfield_reconstruct(c, side: str, model, check: bool = True):
    """A fraction R(X, t) (side x) or R(Y, t) (side y) with R(x, 1/S) = c.

    Eliminates the other coordinate between A - Z*B (c = A/B) and the
    kernel relation by a resultant, reads R off the Z-coefficients of the
    (R - Z)^d shape, and verifies the result by substitution.
    """
    c = to_field(c, BASE)
    A = _to_res(c.numer)
    B = _to_res(c.denom)
    Z = _RES_RING.gens[4]
    elim = "y" if side == "x" else "x"
    rel = _kernel_relation(model)
    P = A - Z * B
    if P.degree(0 if elim == "x" else 1) <= 0:
        R = _RES_FIELD(A) / _RES_FIELD(B)
    else:
        res = resultant(P, rel, elim)
        coeffs = univariate_coeffs(res, "Z")
        while len(coeffs) > 1 and not coeffs[-1]:
            coeffs.pop()
        d = len(coeffs) - 1
        if d < 1:
            raise NotInSubfield("resultant does not involve Z")
        R = -coeffs[d - 1] / (coeffs[d] * d)
    out = _res_to_formal(R, side)
    if check:
        back = _formal_at_base(out, model)
        if back != c:
            raise NotInSubfield("reconstructed fraction does not verify")
    return out


def _res_to_formal(R, side: str):
    """Map (x or y, lam, T) -> (X or Y, lam, 1/t)."""
    idx = 0 if side == "x" else 1
    other = 1 - idx

    def conv(p: PolyElement):
        acc = FORMAL.zero
        for (a, b, l, tt, z), coef in p.iterterms():
            if z or (a if side == "y" else b):
                raise NotInSubfield(f"reconstruction still involves {'x' if side == 'y' else 'y'} or Z")
            e = a if side == "x" else b
            mon = (X if side == "x" else Y) ** e * LAM ** l * T_ ** (-tt)
            acc += FORMAL(QQ.convert(coef)) * mon
        return acc

    return conv(R.numer) / conv(R.denom)


def _formal_at_base(R, model, var_side: str | None = None):
    """Evaluate a FORMAL fraction in X or Y (and t, lam) at x or y with t = 1/S(x, y)."""
    x, y, lam = BASE.gens
    S = BASE.zero
    for s in model.steps:
        S += to_field(s.weight, BASE) * x ** s.dx * y ** s.dy
    T = 1 / S
    return _eval_poly(R.numer, x, y, T, lam) / _eval_poly(R.denom, x, y, T, lam)


# ---------------------------------------------------------------------------
# invariant pairs


@dataclass
class InvariantPair:
    I: object
    J: object
    tag: str = ""

    def as_dict(self) -> dict:
        def s(v):
            return str(v.as_expr()) if hasattr(v, "as_expr") else repr(v)

        return {"I": s(self.I), "J": s(self.J), "tag": self.tag}


def is_galois_invariant(I, J, g: OrbitGraph, k: Kernel | None = None, all_vertices: bool = True) -> bool:
    """I(u, 1/S) = J(v, 1/S) at the base vertex (and at every vertex by default)."""
    k = k or kernel(g.model, check=False)
    idx = range(len(g.vertices)) if all_vertices else [g.base]
    for i in idx:
        if evaluate_regular(I, i, g, k) != evaluate_regular(J, i, g, k):
            return False
    return True


def _involves(f, var) -> bool:
    i = [str(s) for s in FORMAL.symbols].index(var)
    return f.numer.degree(i) > 0 or f.denom.degree(i) > 0


def galois_invariant_pair(g: OrbitGraph) -> InvariantPair:
    """First orbit-polynomial coefficient that reconstructs to a nonconstant pair."""
    for side in ("left", "right"):
        P = orbit_polynomial(g, side)
        for k in range(len(P) - 2, -1, -1):
            c = P[k]
            if not c:
                continue
            try:
                I = subfield_reconstruct(c, "x", g.model)
                J = subfield_reconstruct(c, "y", g.model)
            except NotInSubfield:
                continue
            if _involves(I, "X") and _involves(J, "Y"):
                var = "U" if side == "left" else "V"
                return InvariantPair(I, J, f"{side} orbit polynomial, coefficient of {var}^{k}")
    raise NoNonconstantCoefficient("no orbit-polynomial coefficient gives a nonconstant pair")


# ---------------------------------------------------------------------------
# t-equivalence


@dataclass
class PoleProfile:
    N: int
    x_orders: list
    y_orders: list
    bound: int
    shortcut: bool = False
    valuation: int = 0

    def as_dict(self) -> dict:
        return {"N": self.N, "x_orders": self.x_orders, "y_orders": self.y_orders,
                "bound": self.bound, "exact_divisibility": self.shortcut, "t_valuation": self.valuation}


def _pole(c, var: str) -> int:
    if not c:
        return 0
    return max(0, -valuation_at_zero(c, var))


def _as_series(F, N: int) -> TruncSeries:
    if isinstance(F, TruncSeries):
        return F
    return series_expand(to_field(F, FORMAL), N, check=False)


def quotient_series(F, G, k: Kernel, N: int) -> TruncSeries:
    """(F - G)/K̃ expanded to t^N."""
    if not isinstance(F, TruncSeries) and not isinstance(G, TruncSeries):
        D = to_field(F, FORMAL) - to_field(G, FORMAL)
        return series_expand(D / k.Ktilde, N, check=False)
    Fs, Gs = _as_series(F, N), _as_series(G, N)
    kinv = series_expand(1 / k.Ktilde, N, check=False)
    diff = Fs - Gs
    if diff.val < 0:
        kinv = series_expand(1 / k.Ktilde, N - diff.val, check=False)
    return (diff * kinv).truncate(N)


def _bounded_denominator(den: PolyElement) -> bool:
    """Whether 1/den expands in t with poles at X=0, Y=0 of bounded order."""
    ix, iy, it = 0, 1, 2
    # strip monomial factors
    mon = [min(m[i] for m in den.itermonoms()) for i in range(4)]
    rest = den.ring.from_dict({tuple(e - s for e, s in zip(m, mon)): c for m, c in den.iterterms()})
    if rest.degree(it) <= 0:
        return True
    at0 = rest.subs(rest.ring.gens[it], 0)
    if not at0:
        return False
    return bool(at0.subs(at0.ring.gens[ix], 0)) and bool(at0.subs(at0.ring.gens[iy], 0))


def t_equiv_check(F, G, k: Kernel, N: int = 20, bound: int | None = None,
                  window: int = 5) -> tuple[bool, PoleProfile]:
    """Check that (F - G)/K̃ has poles at X=0 and Y=0 of bounded order up to t^N.

    The bound defaults to the largest pole order seen among coefficients of
    orders up to ``window``. When both inputs are fractions and K̃ divides
    the numerator of F - G with a denominator whose expansion cannot create
    growing poles, boundedness holds at every order; the profile is still
    computed and reported.
    """
    shortcut = False
    if not isinstance(F, TruncSeries) and not isinstance(G, TruncSeries):
        D = to_field(F, FORMAL) - to_field(G, FORMAL)
        if k.divides(D.numer) and _bounded_denominator(D.denom):
            shortcut = True
    Q = quotient_series(F, G, k, N)
    xs, ys = [], []
    for n in range(Q.val, N + 1):
        c = Q[n]
        xs.append(_pole(c, "X"))
        ys.append(_pole(c, "Y"))
    if bound is None:
        upto = min(len(xs), window + 1 - min(Q.val, 0))
        bound = max(xs[:upto] + ys[:upto] + [0])
    ok = shortcut or (max(xs + ys + [0]) <= bound)
    return ok, PoleProfile(N, xs, ys, bound, shortcut, Q.val)


def lemma26_check(F, G, k: Kernel, N: int):
    """Return A(t) when (F - G)/K̃ has no pole at X=0 nor Y=0 up to t^N.

    Raises :class:`PoleAtZero` on the first offending coefficient (X is
    checked before Y at each order) and :class:`NonConstantConclusion` if
    F still depends on X or G on Y at some order.
    """
    Q = quotient_series(F, G, k, N)
    for n in range(Q.val, N + 1):
        c = Q[n]
        px = _pole(c, "X")
        if px:
            raise PoleAtZero("X", px, n)
        py = _pole(c, "Y")
        if py:
            raise PoleAtZero("Y", py, n)
    Fs, Gs = _as_series(F, N).truncate(N), _as_series(G, N).truncate(N)
    for n in range(min(Fs.val, 0), N + 1):
        if n >= Fs.val and _involves(to_field(Fs[n], FORMAL), "X"):
            raise NonConstantConclusion("F", n)
        if n >= Gs.val and _involves(to_field(Gs[n], FORMAL), "Y"):
            raise NonConstantConclusion("G", n)
    return Fs
