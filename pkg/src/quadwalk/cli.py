"""Command line interface: ``quadwalk <command> ...``.

Every command prints a short text summary, or with ``--json [PATH]`` a
versioned JSON document (``-`` or no path means stdout). Rationals are
strings "p/q"; polynomials are sparse maps from comma-joined exponent
vectors to coefficients.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .exactalg import FORMAL, frac_to_json, parse_expr, poly_to_json, to_field

SCHEMA_VERSION = 1


def _doc(kind: str, body: dict) -> dict:
    return {"schema": f"quadwalk/{kind}@{SCHEMA_VERSION}", **body}


def _emit(doc: dict, target: str | None, text_lines: list[str]) -> None:
    if target is None:
        print("\n".join(text_lines))
        return
    data = json.dumps(doc, indent=2, sort_keys=True)
    if target == "-":
        print(data)
    else:
        Path(target).write_text(data + "\n", encoding="utf-8")
        print(f"wrote {target}")


def _frac(f) -> dict:
    return frac_to_json(to_field(f, FORMAL))


def _lam_poly(c) -> dict:
    # enumeration coefficients live in Q[lam] (or Q(lam))
    if hasattr(c, "ring"):
        return poly_to_json(c)
    return {"num": poly_to_json(c.numer), "den": poly_to_json(c.denom)}


# ---------------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    from .enumeration import count_walks
    from .model import load_model

    m = load_model(args.model)
    start = tuple(int(v) for v in args.start.split(","))
    tab = count_walks(m, args.order, start)
    layers = []
    for n in range(tab.N + 1):
        layers.append({f"{i},{j}": _lam_poly(c) for (i, j), c in sorted(tab.cells(n))})
    exc = [_lam_poly(tab.q(*start, n)) for n in range(tab.N + 1)]
    doc = _doc("enumerate", {"model": m.name, "order": args.order, "start": list(start),
                             "excursions": exc, "layers": layers})
    lines = [f"{m.name}: walks from {start} up to length {args.order}"]
    for n in range(tab.N + 1):
        total = sum((c for _, c in tab.cells(n)), tab._zero)
        lines.append(f"  n={n}: total {total.as_expr()}, back to start {tab.q(*start, n).as_expr()}")
    _emit(doc, args.json, lines)
    return 0


def cmd_orbit(args) -> int:
    from .model import load_model
    from .orbit import ExceededBound, compute_orbit, graph_automorphisms, level_lines

    m = load_model(args.model)
    try:
        g = compute_orbit(m, max_vertices=args.max_vertices, seed=args.seed, specialize=args.specialize,
                          max_depth=args.max_depth)
    except ExceededBound as exc:
        doc = _doc("orbit", {"model": m.name, "finite": None, "error": "ExceededBound", "message": str(exc),
                             "explored": len(exc.partial.vertices)})
        _emit(doc, args.json, [f"{m.name}: {exc}"])
        return 2
    order, gens = graph_automorphisms(g)
    summ = g.summary()
    doc = _doc("orbit", {
        "model": m.name, "finite": True, **summ,
        "tower": g.tower.minpoly_strings(),
        "vertices": [[str(v.left), str(v.right)] for v in g.vertices],
        "x_edges": sorted(list(e) for e in g.x_edges),
        "y_edges": sorted(list(e) for e in g.y_edges),
        "automorphism_group_order": order,
        "automorphism_generators": [list(p) for p in gens],
        "level_lines": {"x": [sorted(c) for c in level_lines(g, "x")], "y": [sorted(c) for c in level_lines(g, "y")]},
    })
    lines = [f"{m.name}: orbit of size {summ['vertices']}",
             f"  x-classes {summ['x_classes']}, y-classes {summ['y_classes']}",
             f"  tower degree {summ['tower_degree']}: {g.tower.minpoly_strings()}",
             f"  colour-preserving automorphisms: {order}"]
    _emit(doc, args.json, lines)
    return 0


def cmd_invariants(args) -> int:
    from .invariants import galois_invariant_pair, is_galois_invariant, t_equiv_check
    from .model import kernel, load_model
    from .orbit import compute_orbit
    from .pipeline import REFERENCES, affine_relation
    from .invariants import InvariantPair

    m = load_model(args.model)
    k = kernel(m)
    g = compute_orbit(m)
    gen = galois_invariant_pair(g)
    ok, prof = t_equiv_check(gen.I, gen.J, k, args.order)
    body = {"model": m.name, "order": args.order,
            "generated": {"I": _frac(gen.I), "J": _frac(gen.J), "text": gen.as_dict(),
                          "galois": is_galois_invariant(gen.I, gen.J, g, k), "t_equiv": ok,
                          "profile": prof.as_dict()}}
    lines = [f"{m.name}: generated pair ({gen.tag})", f"  I = {gen.I.as_expr()}", f"  J = {gen.J.as_expr()}",
             f"  Galois invariant: {body['generated']['galois']}, t-equivalent up to t^{args.order}: {ok}"]
    ref = REFERENCES.get(m.name)
    if ref is not None:
        _, (I, J) = ref.fractions()
        ok_r, prof_r = t_equiv_check(I, J, k, args.order)
        rel = affine_relation(gen, InvariantPair(I, J))
        body["reference"] = {"I": _frac(I), "J": _frac(J), "galois": is_galois_invariant(I, J, g, k),
                             "t_equiv": ok_r, "profile": prof_r.as_dict(),
                             "affine_relation": None if rel is None else {"u": _frac(rel[0]), "v": _frac(rel[1])}}
        lines.append(f"  reference pair: Galois {body['reference']['galois']}, t-equivalent {ok_r}")
        if rel is not None:
            lines.append(f"  reference = ({rel[0].as_expr()}) * generated + ({rel[1].as_expr()})")
    _emit(_doc("invariants", body), args.json, lines)
    return 0


def cmd_decouple(args) -> int:
    from .decouple import NotDecoupled, decouple_fraction, decoupling_triple
    from .model import kernel, load_model
    from .orbit import compute_orbit

    m = load_model(args.model)
    X, Y, t, lam = FORMAL.gens
    H = to_field(parse_expr(args.fraction, {"X": X, "Y": Y, "t": t, "lam": lam}), FORMAL)
    k = kernel(m)
    g = compute_orbit(m)
    tr = decoupling_triple(g)
    body = {"model": m.name, "fraction": _frac(H), "triple": tr.as_dict()}
    try:
        d = decouple_fraction(H, tr, g, k, N=args.order)
    except NotDecoupled as exc:
        body["verdict"] = "not_decoupled"
        body["witness"] = str(exc.witness)
        _emit(_doc("decouple", body), args.json, [f"{H.as_expr()} has no Galois decoupling: {exc}"])
        return 1
    body.update({"verdict": "decoupled" if d.galois and d.t_equiv else "failed",
                 "F": _frac(d.F), "G": _frac(d.G), "shift": _frac(d.shift),
                 "galois_decoupling": d.galois, "t_decoupling": d.t_equiv, "profile": d.profile.as_dict()})
    lines = [f"{m.name}: {H.as_expr()} = F(X,t) + G(Y,t)",
             f"  F = {d.F.as_expr()}", f"  G = {d.G.as_expr()}",
             f"  K divides H - F - G: {d.galois}; t-decoupling up to t^{args.order}: {d.t_equiv}"]
    _emit(_doc("decouple", body), args.json, lines)
    return 0 if d.galois and d.t_equiv else 1


def cmd_certify(args) -> int:
    from .model import load_model
    from .pipeline import CertConfig, certify_algebraicity

    m = load_model(args.model)
    cfg = CertConfig(N=args.order, recipe=args.recipe, lam=None if args.lam is None else Fraction(args.lam),
                     search=args.search)
    rep = certify_algebraicity(m, cfg)
    lines = [f"{rep.model}: {'certified' if rep.ok else 'stopped at ' + str(rep.failed_stage)}"]
    for st in rep.stages:
        lines.append(f"  {st['name']:<20} {'ok' if st['ok'] else 'FAIL'}  {st['seconds']:.2f}s")
    if rep.reason:
        lines.append(f"  reason: {rep.reason}")
    doc = json.loads(rep.to_json())
    if args.json is None:
        print("\n".join(lines))
    elif args.json == "-":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        Path(args.json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print("\n".join(lines))
        print(f"wrote {args.json}")
    return 0 if rep.ok else 1


def _load_series(spec: str) -> list:
    path = Path(spec)
    text = path.read_text(encoding="utf-8") if path.exists() else spec
    data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("coeffs", data.get("series"))
    if not isinstance(data, list):
        raise ValueError("series JSON must be a list of rationals or an object with 'coeffs'")
    return [Fraction(str(v)) for v in data]


def cmd_guess(args) -> int:
    from .guess import NotFound, annihilator_to_text, guess_minpoly

    s = _load_series(args.series)
    t0 = time.perf_counter()
    try:
        a = guess_minpoly(s, args.degT, args.degt, args.order)
    except NotFound as exc:
        doc = _doc("guess", {"found": False, "degT": args.degT, "degt": args.degt, "message": str(exc)})
        _emit(doc, args.json, [f"not found: {exc}"])
        return 1
    doc = _doc("guess", {"found": True, "annihilator": a.as_json(), "primes": a.primes,
                         "seconds": round(time.perf_counter() - t0, 3)})
    _emit(doc, args.json, [f"annihilator (checked to t^{a.N}, degT {a.actual_degT}, degt {a.actual_degt}):",
                           "  " + annihilator_to_text(a)])
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadwalk", description="Exact tools for weighted quadrant walks.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_json(sp):
        sp.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH",
                        help="emit JSON (to stdout, or to PATH)")

    e = sub.add_parser("enumerate", help="count weighted walks in the quadrant")
    e.add_argument("--model", required=True)
    e.add_argument("--order", type=int, required=True)
    e.add_argument("--start", default="0,0")
    add_json(e)
    e.set_defaults(func=cmd_enumerate)

    o = sub.add_parser("orbit", help="compute the orbit graph")
    o.add_argument("--model", required=True)
    o.add_argument("--max-vertices", type=int, default=200)
    o.add_argument("--max-depth", type=int, default=30)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--specialize", action="store_true", help="work at a random rational point")
    add_json(o)
    o.set_defaults(func=cmd_orbit)

    i = sub.add_parser("invariants", help="Galois invariant pair and t-equivalence profile")
    i.add_argument("--model", required=True)
    i.add_argument("--order", type=int, default=20)
    add_json(i)
    i.set_defaults(func=cmd_invariants)

    d = sub.add_parser("decouple", help="decouple a fraction in X, Y, t, lam")
    d.add_argument("--model", required=True)
    d.add_argument("--fraction", required=True)
    d.add_argument("--order", type=int, default=20)
    add_json(d)
    d.set_defaults(func=cmd_decouple)

    c = sub.add_parser("certify", help="run the algebraicity certification")
    c.add_argument("--model", required=True)
    c.add_argument("--order", type=int, default=15)
    c.add_argument("--recipe", default=None)
    c.add_argument("--lambda", dest="lam", default=None)
    c.add_argument("--search", action="store_true", help="search for a recipe when none is configured")
    add_json(c)
    c.set_defaults(func=cmd_certify)

    g = sub.add_parser("guess", help="guess a polynomial annihilator of a series")
    g.add_argument("--series", required=True, help="JSON list of rationals, or a file holding one")
    g.add_argument("--degT", type=int, required=True)
    g.add_argument("--degt", type=int, required=True)
    g.add_argument("--order", type=int, default=None, help="check up to t^ORDER (default: all terms)")
    add_json(g)
    g.set_defaults(func=cmd_guess)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"quadwalk {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
