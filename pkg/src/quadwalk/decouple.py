"""Decoupling of (x, y) in a finite orbit and of concrete fractions.

The level-line ansatz looks for

    (x, y) = sum_i a_i X_i + sum_j b_j Y_j + alpha

where X_i (resp. Y_j) is the sum of the vertices at distance i from the
base x-class (resp. y-class) and alpha has zero sum on every adjacency
class of either colour. A fraction H decouples iff H vanishes on alpha, and
then H = H(gamma_x) + H(gamma_y) with both parts reconstructible from k(x)
and k(y).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from .exactalg import FORMAL, QQ, fmt_rational, series_expand, to_field
from .invariants import (PoleProfile, evaluate_regular, is_regular, subfield_reconstruct,
                         t_equiv_check, NotRegular)
from .model import Kernel, kernel
from .orbit import Chain0, OrbitGraph, adjacency_classes, level_lines


class Infeasible(ValueError):
    """The level-line system has no solution for this orbit."""


class NotDecoupled(ValueError):
    def __init__(self, msg: str, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class DecouplingTriple:
    a: tuple          # coefficients of X_0, X_1, ...
    b: tuple          # coefficients of Y_0, Y_1, ...
    gamma_x: Chain0
    gamma_y: Chain0
    alpha: Chain0
    free_directions: int = 0

    def as_dict(self) -> dict:
        def ch(c):
            return {str(i): fmt_rational(v) for i, v in sorted(c.items()) if v}

        return {"a": [fmt_rational(v) for v in self.a], "b": [fmt_rational(v) for v in self.b],
                "gamma_x": ch(self.gamma_x), "gamma_y": ch(self.gamma_y), "alpha": ch(self.alpha),
                "free_directions": self.free_directions}


def _chains(g: OrbitGraph, a, b):
    LX, LY = level_lines(g, "x"), level_lines(g, "y")
    a = list(a) + [Fraction(0)] * (len(LX) - len(a))
    b = list(b) + [Fraction(0)] * (len(LY) - len(b))
    if len(a) > len(LX) or len(b) > len(LY):
        raise ValueError("more coefficients than level lines")
    gx: Chain0 = {}
    gy: Chain0 = {}
    for c, layer in zip(a, LX):
        for i in layer:
            gx[i] = gx.get(i, Fraction(0)) + Fraction(c)
    for c, layer in zip(b, LY):
        for i in layer:
            gy[i] = gy.get(i, Fraction(0)) + Fraction(c)
    alpha = {i: Fraction(int(i == g.base)) - gx.get(i, 0) - gy.get(i, 0) for i in range(len(g.vertices))}
    return tuple(Fraction(v) for v in a), tuple(Fraction(v) for v in b), gx, gy, alpha


def class_sums(g: OrbitGraph, chain: Chain0) -> dict:
    """Sum of the chain over every x-class and every y-class."""
    return {col: [sum((Fraction(chain.get(i, 0)) for i in C), Fraction(0)) for C in adjacency_classes(g, col)]
            for col in ("x", "y")}


def check_alpha(g: OrbitGraph, alpha: Chain0) -> bool:
    sums = class_sums(g, alpha)
    return not any(sums["x"]) and not any(sums["y"])


def constraint_residual(g: OrbitGraph, a, b) -> dict:
    """Class sums of alpha for given layer coefficients (missing ones are zero)."""
    *_, alpha = _chains(g, [Fraction(v) for v in a], [Fraction(v) for v in b])
    return class_sums(g, alpha)


def decoupling_triple(g: OrbitGraph) -> DecouplingTriple:
    """Solve the layer coefficients exactly; free parameters are set to zero."""
    LX, LY = level_lines(g, "x"), level_lines(g, "y")
    layers = LX + LY
    rows, rhs = [], []
    for col in ("x", "y"):
        for C in adjacency_classes(g, col):
            rows.append([sum(1 for i in C if i in layer) for layer in layers])
            rhs.append(int(g.base in C))
    M = sp.Matrix(rows)
    try:
        sol, params = M.gauss_jordan_solve(sp.Matrix(rhs))
    except ValueError:
        raise Infeasible(f"no level-line decoupling for an orbit of size {len(g.vertices)}") from None
    sol = sol.subs({p: 0 for p in params})
    vals = [Fraction(int(sp.numer(v)), int(sp.denom(v))) for v in sol]
    a, b, gx, gy, alpha = _chains(g, vals[:len(LX)], vals[len(LX):])
    if not check_alpha(g, alpha):  # pragma: no cover - guarded by the solve
        raise Infeasible("solution does not cancel class sums")
    return DecouplingTriple(a, b, gx, gy, alpha, len(params))


# ---------------------------------------------------------------------------
# fractions


@dataclass
class FractionDecoupling:
    H: object
    F: object
    G: object
    shift: object               # a(t) removed from G during normalisation
    galois: bool                # K̃ divides the numerator of H - F - G
    t_equiv: bool
    profile: PoleProfile
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        s = lambda v: str(v.as_expr())
        return {"H": s(self.H), "F": s(self.F), "G": s(self.G), "shift": s(self.shift),
                "galois_decoupling": self.galois, "t_decoupling": self.t_equiv,
                "profile": self.profile.as_dict()}


def _t_free_part(f) -> object:
    """Coefficient of t^0 in the Laurent expansion of a fraction in t (and lam)."""
    if not f:
        return FORMAL.zero
    s = series_expand(f, 0, check=False)
    return s[0] if s.val <= 0 else FORMAL.zero


def normalize_shift(F, G):
    """Move a constant from G to F so that G(1, t) has no t-free part."""
    g1 = _eval_Y1(G)
    c = _t_free_part(g1)
    return F + c, G - c, c


def _eval_Y1(G):
    num = G.numer.subs(G.numer.ring.gens[1], 1)
    den = G.denom.subs(G.denom.ring.gens[1], 1)
    return FORMAL(num) / FORMAL(den)


def decouple_fraction(H, triple: DecouplingTriple, g: OrbitGraph, k: Kernel | None = None,
                      N: int = 20) -> FractionDecoupling:
    k = k or kernel(g.model, check=False)
    H = to_field(H, FORMAL)
    if not is_regular(H, k):
        raise NotRegular("denominator is divisible by the kernel")
    on_alpha = evaluate_regular(H, triple.alpha, g, k)
    if on_alpha:
        raise NotDecoupled("H does not vanish on alpha", on_alpha)
    cx = evaluate_regular(H, triple.gamma_x, g, k).descend()
    cy = evaluate_regular(H, triple.gamma_y, g, k).descend()
    F = subfield_reconstruct(cx, "x", g.model)
    G = subfield_reconstruct(cy, "y", g.model)
    F, G, shift = normalize_shift(F, G)
    galois = k.divides((H - F - G).numer)
    ok, prof = t_equiv_check(H, F + G, k, N)
    return FractionDecoupling(H, F, G, shift, galois, ok, prof)


def shift_between(F, G, F_ref, G_ref):
    """a(t) with F = F_ref + a and G = G_ref - a, or None when no such a exists."""
    F, G = to_field(F, FORMAL), to_field(G, FORMAL)
    F_ref, G_ref = to_field(F_ref, FORMAL), to_field(G_ref, FORMAL)
    a = F - F_ref
    if G - G_ref != -a:
        return None
    for i in (0, 1):
        if a.numer.degree(i) > 0 or a.denom.degree(i) > 0:
            return None
    return a
