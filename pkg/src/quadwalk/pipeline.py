"""End-to-end algebraicity certification.

Stages: kernel, functional equation, enumeration, orbit, Galois invariant
pair (P2), decoupling of (x, y), decoupling of the free term, first pair
P1 from the functional equation, a recipe combining P1 and P2 into P3,
and the pole test on (I3 - J3)/K̃ that yields A(t).

Everything in the report is exact; series are truncated at the stated
orders and the unknown scalars Q(0,0,t), dQ/dy(0,0,t) come from the
enumeration.
"""
from __future__ import annotations

import json
import operator
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .decouple import decouple_fraction, decoupling_triple, shift_between
from .enumeration import count_walks, poly_in_t, section_series, verify_functional_equation
from .exactalg import (FORMAL, QQ, TruncSeries, frac_to_json, parse_expr, series_expand,
                       series_to_json, to_field)
from .invariants import (InvariantPair, Lemma26Failure, NonConstantConclusion, PoleAtZero,
                         galois_invariant_pair, is_galois_invariant, lemma26_check, t_equiv_check)
from .model import StepModel, derive_functional_equation, kernel

SCHEMA = "quadwalk/cert-report@1"

X, Y, T, LAM = FORMAL.gens


class MissingBoundary(ValueError):
    """The functional equation has no section terms, so P1 is meaningless."""


class RecipeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# flagship reference data


def _f(text: str):
    return to_field(parse_expr(text, {"X": X, "Y": Y, "t": T, "lam": LAM}), FORMAL)


@dataclass(frozen=True)
class Reference:
    decoupling: tuple          # (F, G) as expression strings
    pair: tuple                # (I, J) as expression strings
    recipe: str | None = None
    p1_sign: int = 1           # orientation of P1 the recipe is written for

    def fractions(self):
        return tuple(_f(s) for s in self.decoupling), tuple(_f(s) for s in self.pair)


G_LAMBDA_RECIPE = ("P2*(P1 - lam/4) - P1^3 + (2*t*Q00 - lam/4)*P1^2"
                   " + (2*t*dQ00 - t^2*Q00^2 + 5*lam^2/16)*P1")

REFERENCES = {
    "G_lambda": Reference(
        ("-(3*lam*X^2*t - lam*t - 4*X)/(4*t*(X^2 + 1))", "(-lam*Y - 4)/(4*Y)"),
        ("((-lam^2*X^3 - X^4 - X^6 + X^2 + 1)*t^2 - X^2*lam*(X^2 - 1)*t + X^3)/(t^2*X*(X^2 + 1)^2)",
         "(-t*Y^4 + lam*t*Y + Y^3 + t)/(Y^2*t)"),
        G_LAMBDA_RECIPE, p1_sign=-1),
    "kreweras": Reference(
        ("1/t - 1/X", "-1/Y"),
        ("X + 1/(t*X) - 1/X^2", "Y + 1/(t*Y) - 1/Y^2")),
}


# ---------------------------------------------------------------------------
# recipe values


def _t_valuation(f) -> int:
    def low(p):
        return min(m[2] for m in p.itermonoms())
    return low(f.numer) - low(f.denom)


def exact_series(f, length: int) -> TruncSeries:
    """Expansion of an exact fraction with ``length`` known coefficients."""
    f = to_field(f, FORMAL)
    if not f:
        return TruncSeries([FORMAL.zero] * length, 0, check=False)
    v = _t_valuation(f)
    return series_expand(f, v + length - 1, check=False)


def _atom_op(a, b, op):
    """Combine two atoms (exact fractions or TruncSeries)."""
    sa, sb = isinstance(a, TruncSeries), isinstance(b, TruncSeries)
    if not sa and not sb:
        return op(a, b)
    if not sa:
        a = _expand_like(a, b)
    if not sb:
        b = _expand_like(b, a)
    return op(a, b)


def _expand_like(e, s: TruncSeries) -> TruncSeries:
    # long enough for a sum (reaches s.order) and a product (relative length)
    if not e:
        return TruncSeries([FORMAL.zero], s.val, check=False).extend_to(s.order)
    return exact_series(e, max(len(s), s.order - _t_valuation(e) + 1))


class _Val:
    """A recipe operand: a scalar atom or a pair of atoms."""

    __slots__ = ("left", "right", "is_pair")

    def __init__(self, left, right=None):
        self.is_pair = right is not None
        self.left = left
        self.right = right if right is not None else left

    @staticmethod
    def lift(v) -> "_Val":
        if isinstance(v, _Val):
            return v
        if isinstance(v, (int, Fraction)):
            return _Val(to_field(v, FORMAL))
        raise RecipeError(f"unsupported operand {v!r}")

    def _op(self, other, op, swap=False):
        o = _Val.lift(other)
        a, b = (o, self) if swap else (self, o)
        left = _atom_op(a.left, b.left, op)
        if not (a.is_pair or b.is_pair):
            return _Val(left)
        return _Val(left, _atom_op(a.right, b.right, op))

    def __add__(self, o):
        return self._op(o, operator.add)

    def __radd__(self, o):
        return self._op(o, operator.add, swap=True)

    def __sub__(self, o):
        return self._op(o, operator.sub)

    def __rsub__(self, o):
        return self._op(o, operator.sub, swap=True)

    def __mul__(self, o):
        return self._op(o, operator.mul)

    def __rmul__(self, o):
        return self._op(o, operator.mul, swap=True)

    def __neg__(self):
        return self._op(-1, operator.mul)

    def __truediv__(self, o):
        o = _Val.lift(o)
        if o.is_pair or isinstance(o.left, TruncSeries):
            raise RecipeError("division is only allowed by exact scalars")
        return self._op(_Val(1 / o.left), operator.mul)

    def __rtruediv__(self, o):
        return _Val.lift(o) / self

    def __pow__(self, e):
        if not isinstance(e, int) or e < 0:
            raise RecipeError("exponents must be nonnegative integer literals")
        out = _Val(FORMAL.one)
        for _ in range(e):
            out = out * self
        return out


@dataclass
class SeriesPair:
    """A pair of t-invariants whose sides are TruncSeries or exact fractions."""

    I: object
    J: object
    tag: str = ""

    def truncate(self, N: int) -> "SeriesPair":
        cut = lambda v: v.truncate(N) if isinstance(v, TruncSeries) else v
        return SeriesPair(cut(self.I), cut(self.J), self.tag)


def combine_invariants(P1, P2, recipe: str, scalars: dict | None = None, tag: str = "P3") -> SeriesPair:
    """Evaluate a polynomial recipe in P1, P2 componentwise.

    ``P1`` and ``P2`` are :class:`SeriesPair` or :class:`InvariantPair`
    (fraction components are kept exact until they meet a series);
    ``scalars`` maps extra names such as Q00, dQ00 to series in t.
    """
    def atom(c):
        return c if isinstance(c, TruncSeries) else to_field(c, FORMAL)

    names = {"lam": _Val(LAM), "t": _Val(T), "P1": _Val(atom(P1.I), atom(P1.J))}
    if P2 is not None:
        names["P2"] = _Val(atom(P2.I), atom(P2.J))
    for k, v in (scalars or {}).items():
        names[k] = _Val(atom(v))
    try:
        out = _Val.lift(parse_expr(recipe, names))
    except (ValueError, TypeError) as exc:
        raise RecipeError(str(exc)) from None
    if not out.is_pair:
        raise RecipeError("recipe does not involve P1 or P2")
    return SeriesPair(out.left, out.right, tag)


# ---------------------------------------------------------------------------
# the first pair


def build_P1(fe, sec, dec: tuple, N: int | None = None) -> SeriesPair:
    """P1 from the functional equation and a decoupling (F, G) of its free term.

    The kernel side K̃·Q is t-equivalent to 0, hence
    free ≡ cX·Q(X,0) + cY·Q(0,Y) + c0·Q(0,0), and with free ≡ F + G:
    I1 = cX·Q(X,0) + c0·Q(0,0) − F,  J1 = G − cY·Q(0,Y).
    """
    if not fe.cX and not fe.cY and not fe.c0:
        raise MissingBoundary("the functional equation has no section terms")
    if dec is None:
        raise MissingBoundary("no decoupling of the free term")
    F, G = (to_field(v, FORMAL) for v in dec)
    QX0, Q0Y, Q00 = sec.QX0, sec.Q0Y, sec.Q00
    if N is not None:
        QX0, Q0Y, Q00 = QX0.truncate(N), Q0Y.truncate(N), Q00.truncate(N)
    mul, add = operator.mul, operator.add
    I1 = _atom_op(_atom_op(fe.cX, QX0, mul), _atom_op(fe.c0, Q00, mul), add)
    I1 = _atom_op(I1, F, operator.sub)
    J1 = _atom_op(G, _atom_op(fe.cY, Q0Y, mul), operator.sub)
    return SeriesPair(I1, J1, "P1")


def orient(P: SeriesPair, sign: int) -> SeriesPair:
    if sign == 1:
        return P
    return SeriesPair(-P.I, -P.J, P.tag)


def affine_relation(gen: InvariantPair, ref: InvariantPair):
    """(u, v) in Q(lam, t) with ref = u*gen + v on both sides, or None."""
    Ig, Jg, Ir, Jr = (to_field(v, FORMAL) for v in (gen.I, gen.J, ref.I, ref.J))
    dJg = Jg.diff(Y)
    if not dJg:
        return None
    u = Jr.diff(Y) / dJg
    v = Jr - u * Jg
    for f in (u, v):
        if f.numer.degree(0) > 0 or f.numer.degree(1) > 0 or f.denom.degree(0) > 0 or f.denom.degree(1) > 0:
            return None
    if Ir != u * Ig + v:
        return None
    return u, v


# ---------------------------------------------------------------------------
# certification


@dataclass
class CertConfig:
    N: int = 15
    recipe: str | None = None
    lam: Fraction | None = None
    p1_sign: int | None = None
    max_vertices: int = 200
    search: bool = False
    extra_terms: int = 4


@dataclass
class CertReport:
    model: str
    config: dict
    stages: list = field(default_factory=list)
    ok: bool = False
    failed_stage: str | None = None
    reason: str | None = None
    schema: str = SCHEMA

    def to_json(self, **kw) -> str:
        return json.dumps(self.__dict__, sort_keys=True, **kw)

    @classmethod
    def from_json(cls, text: str) -> "CertReport":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unknown report schema {d.get('schema')!r}")
        return cls(**d)

    def stage(self, name: str) -> dict | None:
        for st in self.stages:
            if st["name"] == name:
                return st
        return None


def _expr(f) -> str:
    return str(to_field(f, FORMAL).as_expr())


def _series_str(s, upto: int | None = None) -> dict:
    """Coefficients of a t-series as strings keyed by exponent."""
    if not isinstance(s, TruncSeries):
        return {"exact": _expr(s)}
    hi = s.order if upto is None else min(upto, s.order)
    return {str(n): str(to_field(s[n], FORMAL).as_expr()) for n in range(s.val, hi + 1)}


def _subs_lam(f, q):
    """Substitute a rational for lam in a FORMAL fraction."""
    f = to_field(f, FORMAL)
    if q is None:
        return f
    q = Fraction(q)
    v = QQ(q.numerator, q.denominator)
    return FORMAL(f.numer.subs(LAM.numer, v)) / FORMAL(f.denom.subs(LAM.numer, v))


class _Stop(Exception):
    pass


def certify_algebraicity(m: StepModel, config: CertConfig | None = None) -> CertReport:
    """Run every stage in order; the first failure ends the report."""
    from .orbit import ExceededBound, compute_orbit

    cfg = config or CertConfig()
    if cfg.lam is not None:
        m = m.specialize(cfg.lam)
    ref = REFERENCES.get(m.name.split("[")[0])
    report = CertReport(m.name, {"N": cfg.N, "recipe": cfg.recipe, "lam": None if cfg.lam is None else str(cfg.lam),
                                 "p1_sign": cfg.p1_sign, "max_vertices": cfg.max_vertices, "search": cfg.search})
    N = cfg.N
    Ne = N + cfg.extra_terms
    ctx: dict = {}

    def run(name, fn):
        t0 = time.perf_counter()
        try:
            data = fn()
        except Exception as exc:  # any stage error ends the report
            report.stages.append({"name": name, "ok": False, "seconds": round(time.perf_counter() - t0, 3),
                                  "error": type(exc).__name__, "message": str(exc)})
            report.failed_stage, report.reason = name, f"{type(exc).__name__}: {exc}"
            raise _Stop() from exc
        ok = data.pop("_ok", True)
        report.stages.append({"name": name, "ok": ok, "seconds": round(time.perf_counter() - t0, 3), "data": data})
        if not ok:
            report.failed_stage, report.reason = name, data.get("reason", "stage check failed")
            raise _Stop()

    def st_kernel():
        k = kernel(m)
        ctx["k"] = k
        return {"Ktilde": _expr(k.Ktilde), "d_x": k.d_x, "d_y": k.d_y, "mx": k.mx, "my": k.my}

    def st_fe():
        fe = derive_functional_equation(m)
        ctx["fe"] = fe
        tab = count_walks(m, Ne)
        ctx["tab"] = tab
        res = verify_functional_equation(m, fe, Ne, tab)
        return {"equation": fe.as_dict(), "residual_zero_to": Ne, "_ok": res.is_zero()}

    def st_enum():
        sec = section_series(ctx["tab"])
        ctx["sec"] = sec
        return {"N": Ne, "Q00": _series_str(sec.Q00), "dQ00": _series_str(sec.dQ00)}

    def st_orbit():
        try:
            compute_orbit(m, max_vertices=cfg.max_vertices, max_depth=10 ** 4, specialize=True)
        except ExceededBound as exc:
            raise ExceededBound(f"orbit probe at a random point: {exc}", exc.partial) from None
        g = compute_orbit(m, max_vertices=cfg.max_vertices)
        ctx["g"] = g
        return g.summary()

    def st_pair():
        g, k = ctx["g"], ctx["k"]
        gen = galois_invariant_pair(g)
        out = {"generated": gen.as_dict(), "generated_galois": is_galois_invariant(gen.I, gen.J, g, k)}
        ok_t, prof = t_equiv_check(gen.I, gen.J, k, 20)
        out["generated_t_equiv"] = ok_t
        out["generated_profile"] = prof.as_dict()
        P2 = gen
        if ref is not None:
            _, (I, J) = ref.fractions()
            I, J = _subs_lam(I, cfg.lam), _subs_lam(J, cfg.lam)
            refp = InvariantPair(I, J, "reference")
            out["reference"] = refp.as_dict()
            out["reference_galois"] = is_galois_invariant(I, J, g, k)
            ok_r, prof_r = t_equiv_check(I, J, k, 20)
            out["reference_t_equiv"] = ok_r
            rel = affine_relation(gen, refp)
            out["affine_relation"] = None if rel is None else {"u": _expr(rel[0]), "v": _expr(rel[1])}
            if out["reference_galois"] and ok_r:
                P2 = refp
        out["_ok"] = out["generated_galois"] and ok_t
        ctx["P2"] = P2
        return out

    def st_triple():
        tr = decoupling_triple(ctx["g"])
        ctx["triple"] = tr
        return tr.as_dict()

    def st_decouple():
        fe, g, k = ctx["fe"], ctx["g"], ctx["k"]
        d = decouple_fraction(fe.free, ctx["triple"], g, k, N=20)
        out = d.as_dict()
        F, G = d.F, d.G
        if ref is not None:
            (Fr, Gr), _ = ref.fractions()
            Fr, Gr = _subs_lam(Fr, cfg.lam), _subs_lam(Gr, cfg.lam)
            a = shift_between(F, G, Fr, Gr)
            out["reference_shift"] = None if a is None else _expr(a)
            if a is not None:
                F, G = Fr, Gr
        ctx["dec"] = (F, G)
        out["used"] = {"F": _expr(F), "G": _expr(G)}
        out["_ok"] = d.galois and d.t_equiv
        return out

    def lemma_verdict(P):
        try:
            A = lemma26_check(P.I, P.J, ctx["k"], N)
        except PoleAtZero as exc:
            return {"pass": False, "failure": "PoleAtZero", "variable": exc.var, "order": exc.order,
                    "t_power": exc.t_power}, None
        except NonConstantConclusion as exc:
            return {"pass": False, "failure": "NonConstantConclusion", "side": exc.side, "t_power": exc.t_power}, None
        return {"pass": True}, A

    def st_p1():
        P1 = build_P1(ctx["fe"], ctx["sec"], ctx["dec"])
        ctx["P1"] = P1
        verdict, _ = lemma_verdict(P1)
        return {"I1": _series_str(P1.I, 2), "J1": _series_str(P1.J, 2), "lemma": verdict}

    def st_p3():
        recipe = cfg.recipe or (ref.recipe if ref is not None else None)
        sign = cfg.p1_sign if cfg.p1_sign is not None else (ref.p1_sign if ref is not None and not cfg.recipe else 1)
        scal = {"Q00": ctx["sec"].Q00, "dQ00": ctx["sec"].dQ00}
        if cfg.lam is not None:
            scal["lam"] = Fraction(cfg.lam)
        if recipe is None and cfg.search:
            from .recipes import search_recipe
            found = search_recipe(orient(ctx["P1"], sign), ctx["P2"], ctx["k"], N, scal, min_valuation=-2)
            if found is None:
                return {"_ok": False, "reason": "no recipe found by the bounded search"}
            recipe, P3 = found
            ctx["searched"] = P3.tag
        elif recipe is None:
            cands = {"P1": lemma_verdict(ctx["P1"])[0], "P2": lemma_verdict(SeriesPair(ctx["P2"].I, ctx["P2"].J))[0]}
            return {"_ok": False, "reason": "no recipe configured", "candidates": cands}
        else:
            P3 = combine_invariants(orient(ctx["P1"], sign), ctx["P2"], recipe, scal)
        ok_t, prof = t_equiv_check(P3.I, P3.J, ctx["k"], N)
        verdict, A = lemma_verdict(P3)
        ctx["A"] = A
        out = {"recipe": recipe, "p1_sign": sign, "t_equiv": ok_t, "profile": prof.as_dict(), "lemma": verdict,
               "_ok": ok_t and verdict["pass"]}
        if "searched" in ctx:
            out["coefficients"] = ctx["searched"]
        if A is not None:
            out["A"] = {str(n): _expr(A[n]) for n in range(A.val, N + 1)}
        return out

    try:
        for name, fn in (("kernel", st_kernel), ("functional_equation", st_fe), ("enumeration", st_enum),
                         ("orbit", st_orbit), ("invariant_pair", st_pair), ("decoupling_triple", st_triple),
                         ("decouple_free_term", st_decouple), ("P1", st_p1), ("P3", st_p3)):
            run(name, fn)
        report.ok = True
    except _Stop:
        pass
    return report
