"""Bounded search for a pole-free combination of two invariant pairs.

Looks for R = sum_m c_m(t) P1^i P2^j over monomials of total degree <= 3,
with unknown coefficient series c_m(t), such that every t-coefficient of
R_I - R_J vanishes up to the truncation order (then R_I and R_J are both
functions of t alone, which is the conclusion of the invariant lemma).
One monomial of top degree is normalised to coefficient 1. The unknown
coefficients are solved exactly over Q, so lam must be absent or
specialised.
"""
from __future__ import annotations

from fractions import Fraction

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from .exactalg import FORMAL, TruncSeries, to_field

X, Y, T, LAM = FORMAL.gens


def _monomials(deg: int) -> list[tuple[int, int]]:
    return [(i, d - i) for d in range(1, deg + 1) for i in range(d, -1, -1)]


def _as_series(v, length: int) -> TruncSeries:
    from .pipeline import exact_series

    return v if isinstance(v, TruncSeries) else exact_series(v, length)


def _powers(s: TruncSeries, k: int) -> list:
    out = [None, s]
    for _ in range(2, k + 1):
        out.append(out[-1] * s)
    return out


def _monomial_series(P1, P2, deg: int, length: int):
    """(I, J) series of P1^i P2^j for each monomial."""
    sides = []
    for side in ("I", "J"):
        a = _as_series(getattr(P1, side), length)
        b = _as_series(getattr(P2, side), length)
        pa, pb = _powers(a, deg), _powers(b, deg)
        vals = {}
        for i, j in _monomials(deg):
            if i and j:
                vals[(i, j)] = pa[i] * pb[j]
            else:
                vals[(i, j)] = pa[i] if i else pb[j]
        sides.append(vals)
    return sides


def _has_lambda(f) -> bool:
    return f.numer.degree(3) > 0 or f.denom.degree(3) > 0


def _coeff_rows(fs: list, nunk: int):
    """Rows over QQ stating sum_u c_u * fs[u] = 0 for fractions in X, Y."""
    fs = [(u, to_field(f, FORMAL)) for u, f in fs if f]
    if not fs:
        return []
    den = FORMAL.ring.one
    for _, f in fs:
        den = den.lcm(f.denom)
    rows: dict = {}
    for u, f in fs:
        if _has_lambda(f):
            raise ValueError("recipe search needs lam to be absent or specialised")
        num = (f * FORMAL(den))
        num = num.numer * (QQ.one / QQ.convert(num.denom.LC))
        for mon, c in num.iterterms():
            rows.setdefault(mon, {})[u] = c
    return list(rows.values())


def search_recipe(P1, P2, k, N: int, scalars: dict | None = None, max_degree: int = 3,
                  min_valuation: int = 0):
    """Return (recipe, P3) for the first degree that admits a solution, else None.

    ``recipe`` is a readable string whose coefficient names C0, C1, ... are
    attached to ``P3.tag`` as truncated series; P3 is the combined pair.
    Coefficient series start at t^min_valuation.
    """
    from .pipeline import SeriesPair, combine_invariants

    length = N + 8
    for deg in range(2, max_degree + 1):
        I_m, J_m = _monomial_series(P1, P2, deg, length)
        mons = _monomials(deg)
        vmin = min(min(s.val for s in I_m.values()), min(s.val for s in J_m.values()))
        top = min(min(s.order for s in I_m.values()), min(s.order for s in J_m.values()), N)
        kmin = min_valuation
        kmax = top - vmin
        for lead in [m for m in mons if sum(m) == deg]:
            unknowns = [(m, kk) for m in mons for kk in range(kmin, kmax + 1) if m != lead or kk != 0]
            index = {u: c for c, u in enumerate(unknowns)}
            rows, rhs = [], []
            for n in range(vmin, top + 1):
                fs = []
                for m in mons:
                    for kk in range(kmin, kmax + 1):
                        e = n - kk
                        if e < I_m[m].val and e < J_m[m].val:
                            continue
                        f = I_m[m][e] - J_m[m][e]
                        if not f:
                            continue
                        col = -1 if (m == lead and kk == 0) else index[(m, kk)]
                        fs.append((col, f))
                for row in _coeff_rows(fs, len(unknowns)):
                    rhs.append(-row.pop(-1, QQ.zero))
                    rows.append(row)
            sol = _solve(rows, rhs, len(unknowns))
            if sol is None:
                continue
            coeffs = {m: [Fraction(0)] * (kmax - kmin + 1) for m in mons}
            coeffs[lead][-kmin] = Fraction(1)
            for (m, kk), v in zip(unknowns, sol):
                coeffs[m][kk - kmin] = v
            names, terms, scal = {}, [], dict(scalars or {})
            for idx, m in enumerate(mons):
                cs = coeffs[m]
                if not any(cs):
                    continue
                name = f"C{idx}"
                scal[name] = TruncSeries([FORMAL(QQ(c.numerator, c.denominator)) for c in cs], kmin, check=False)
                names[name] = _series_text(cs, kmin)
                terms.append(f"{name}*" + "*".join(([f"P1^{m[0]}"] if m[0] else []) + ([f"P2^{m[1]}"] if m[1] else [])))
            recipe = " + ".join(terms)
            P3 = combine_invariants(P1, P2, recipe, scal, tag="searched: " + "; ".join(f"{a} = {b}" for a, b in names.items()))
            return recipe, P3
    return None


def _series_text(cs, v: int = 0) -> str:
    parts = [f"({c})*t^{i + v}" for i, c in enumerate(cs) if c]
    return " + ".join(parts) + f" + O(t^{len(cs) + v})" if parts else "0"


def _solve(rows: list, rhs: list, n: int):
    """Particular solution (free unknowns set to 0) of a sparse system over Q."""
    if not rows:
        return [Fraction(0)] * n
    dense = []
    for row, b in zip(rows, rhs):
        r = [QQ.zero] * (n + 1)
        for c, v in row.items():
            r[c] = v
        r[n] = b
        dense.append(r)
    M = DomainMatrix(dense, (len(dense), n + 1), QQ)
    R, piv = M.rref()
    if n in piv:
        return None
    Rl = R.to_Matrix()
    sol = [Fraction(0)] * n
    for r, c in enumerate(piv):
        v = Rl[r, n]
        sol[c] = Fraction(int(v.p), int(v.q))
    return sol
