import json
from fractions import Fraction

import pytest

from quadwalk.enumeration import count_walks, section_series
from quadwalk.exactalg import FORMAL, TruncSeries
from quadwalk.invariants import InvariantPair, PoleAtZero, lemma26_check
from quadwalk.model import FunctionalEquation, derive_functional_equation, load_model, parse_model
from quadwalk.pipeline import (
    REFERENCES, CertConfig, CertReport, MissingBoundary, RecipeError, SeriesPair, affine_relation,
    build_P1, certify_algebraicity, combine_invariants, exact_series, orient,
)

X, Y, t, lam = FORMAL.gens


@pytest.fixture(scope="module")
def report_g():
    return certify_algebraicity(load_model("G_lambda"), CertConfig(N=15))


@pytest.fixture(scope="module")
def p1_k(kreweras):
    fe = derive_functional_equation(kreweras)
    sec = section_series(count_walks(kreweras, 12))
    (F, G), (I, J) = REFERENCES["kreweras"].fractions()
    return build_P1(fe, sec, (F, G)), InvariantPair(I, J), sec


def test_g_lambda_certifies(report_g):
    assert report_g.ok, report_g.reason
    names = [s["name"] for s in report_g.stages]
    assert names == ["kernel", "functional_equation", "enumeration", "orbit", "invariant_pair",
                     "decoupling_triple", "decouple_free_term", "P1", "P3"]
    p1 = report_g.stage("P1")["data"]["lemma"]
    assert not p1["pass"] and p1["failure"] == "PoleAtZero" and p1["variable"] == "Y"
    p3 = report_g.stage("P3")["data"]
    assert p3["lemma"]["pass"] and p3["t_equiv"] and p3["p1_sign"] == -1
    assert p3["A"]["-1"] == "1"


def test_report_json_roundtrip(report_g):
    text = report_g.to_json()
    back = CertReport.from_json(text)
    assert back == report_g
    d = json.loads(text)
    d["schema"] = "other@9"
    with pytest.raises(ValueError):
        CertReport.from_json(json.dumps(d))


def test_generated_pair_is_twice_the_reference(report_g):
    data = report_g.stage("invariant_pair")["data"]
    assert data["generated_galois"] and data["reference_galois"]
    assert data["affine_relation"] is not None


def test_combine_invariants(p1_k):
    P1, P2, sec = p1_k
    same = combine_invariants(P1, P2, "P1")
    assert same.I == P1.I and same.J == P1.J
    prod = combine_invariants(P1, P2, "P2*P1 + 3")
    assert isinstance(prod.I, TruncSeries)
    expected = P1.I * exact_series(P2.I, 40) + 3
    for n in range(prod.I.val, prod.I.order + 1):
        assert prod.I[n] == expected[n]
    with pytest.raises(RecipeError):
        combine_invariants(P1, P2, "P3 + 1")
    with pytest.raises(RecipeError):
        combine_invariants(P1, P2, "t^2 + lam")
    with pytest.raises(RecipeError):
        combine_invariants(P1, P2, "P1 +* 2")


def test_combine_exact_pairs():
    P = InvariantPair(X, Y)
    out = combine_invariants(P, InvariantPair(1 / X, 1 / Y), "P1^2 - t*P2")
    assert out.I == X ** 2 - t / X and out.J == Y ** 2 - t / Y


def test_kreweras_recipe(p1_k, kernel_k):
    P1, P2, sec = p1_k
    with pytest.raises(PoleAtZero):
        lemma26_check(P1.I, P1.J, kernel_k, 9)
    P3 = combine_invariants(P1, P2, "P1^2 + P2 + P1/t")
    A = lemma26_check(P3.I, P3.J, kernel_k, 9)
    # A(t) = 2t Q(0,0;t)
    for n in range(0, 10):
        assert A[n] == (2 * sec.Q00[n - 1] if n >= 1 else 0)


def test_kreweras_without_recipe_stops_at_p3(kreweras):
    rep = certify_algebraicity(kreweras, CertConfig(N=9))
    assert not rep.ok and rep.failed_stage == "P3"
    assert rep.reason == "no recipe configured"
    assert set(rep.stage("P3")["data"]["candidates"]) == {"P1", "P2"}


def test_kreweras_user_recipe(kreweras):
    rep = certify_algebraicity(kreweras, CertConfig(N=9, recipe="P1^2 + P2 + P1/t"))
    assert rep.ok, rep.reason


def test_kreweras_search(kreweras):
    rep = certify_algebraicity(kreweras, CertConfig(N=9, search=True))
    assert rep.ok, rep.reason
    assert "coefficients" in rep.stage("P3")["data"]


def test_specialized_g_lambda():
    rep = certify_algebraicity(load_model("G_lambda"), CertConfig(N=10, lam=Fraction(1)))
    assert rep.ok, rep.reason
    assert rep.model == "G_lambda[lam=1]"


def test_infinite_orbit_fails_at_orbit_stage():
    m = parse_model("name: inf\nsteps: [(0,1,1), (1,0,1), (-1,-1,1), (-1,0,1)]")
    rep = certify_algebraicity(m, CertConfig(N=6, max_vertices=40))
    assert not rep.ok and rep.failed_stage == "orbit"
    assert "ExceededBound" in rep.reason


def test_missing_boundary(kreweras):
    fe = FunctionalEquation(X * Y, FORMAL.zero, FORMAL.zero, FORMAL.zero)
    sec = section_series(count_walks(kreweras, 3))
    with pytest.raises(MissingBoundary):
        build_P1(fe, sec, (X, Y))
    with pytest.raises(MissingBoundary):
        build_P1(derive_functional_equation(kreweras), sec, None)


def test_orient_and_affine_relation():
    P = SeriesPair(X, Y)
    assert orient(P, -1).I == -X and orient(P, 1) is P
    gen = InvariantPair(X + 1 / X, Y + 1 / Y)
    ref = InvariantPair(2 * X + 2 / X + t, 2 * Y + 2 / Y + t)
    assert affine_relation(gen, ref) == (2, t)
    assert affine_relation(gen, InvariantPair(X, Y)) is None
