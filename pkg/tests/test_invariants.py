import pytest

from quadwalk.exactalg import BASE, FORMAL
from quadwalk.invariants import (
    NonConstantConclusion, NotInSubfield, NotRegular, PoleAtZero, evaluate_regular,
    galois_invariant_pair, is_galois_invariant, is_regular, lemma26_check, orbit_polynomial,
    quotient_series, subfield_reconstruct, t_equiv_check,
)

X, Y, t, lam = FORMAL.gens
x, y, l = BASE.gens

KREW_I = X + 1 / (t * X) - 1 / X ** 2
KREW_J = Y + 1 / (t * Y) - 1 / Y ** 2


def test_evaluate_regular(orbit_k, kernel_k):
    S = 1 / x + 1 / y + x * y
    assert evaluate_regular(X, 0, orbit_k) == x
    assert evaluate_regular(t, 0, orbit_k) == 1 / S
    chain = {i: 1 for i in range(len(orbit_k))}
    total = evaluate_regular(X, chain, orbit_k)
    assert total.in_base()
    assert not is_regular(1 / kernel_k.Ktilde, kernel_k)
    with pytest.raises(NotRegular):
        evaluate_regular(1 / kernel_k.Ktilde, 0, orbit_k)


@pytest.mark.parametrize("which", ["orbit_k", "orbit_g"])
def test_orbit_polynomial_vanishes_on_orbit(which, request):
    g = request.getfixturevalue(which)
    P = orbit_polynomial(g, "left")
    assert len(P) == len(g) + 1 and P[-1] == 1
    for v in g.vertices:
        acc = g.tower.zero()
        for c in reversed(P):
            acc = acc * v.left + c
        assert not acc


def test_kreweras_orbit_polynomial(orbit_k):
    P = orbit_polynomial(orbit_k, "left")
    w = 1 / (x * y)
    # each left coordinate appears twice; P[5] is minus the first power sum
    assert P[5] == -2 * (x + y + w)
    assert P[0] == (x * y * w) ** 2


def test_subfield_reconstruct(kreweras):
    S = 1 / x + 1 / y + x * y
    c = x + S / x - 1 / x ** 2
    assert subfield_reconstruct(c, "x", kreweras) == KREW_I
    assert subfield_reconstruct(x ** 2, "x", kreweras) == X ** 2
    with pytest.raises(NotInSubfield):
        subfield_reconstruct(x + y, "x", kreweras)


def test_kreweras_pair(orbit_k, kernel_k):
    assert is_galois_invariant(KREW_I, KREW_J, orbit_k, kernel_k)
    assert not is_galois_invariant(X, Y, orbit_k, kernel_k)
    ok, prof = t_equiv_check(KREW_I, KREW_J, kernel_k, 20)
    assert ok and max(prof.x_orders + prof.y_orders) <= prof.bound


def test_generated_pairs(orbit_k, orbit_g, kernel_k, kernel_g):
    for g, k in ((orbit_k, kernel_k), (orbit_g, kernel_g)):
        pair = galois_invariant_pair(g)
        assert is_galois_invariant(pair.I, pair.J, g, k)
        assert pair.I.numer.degree(0) > 0 or pair.I.denom.degree(0) > 0
        assert t_equiv_check(pair.I, pair.J, k, 20)[0]


def test_t_equiv_rejects_growing_poles(kernel_k):
    ok, prof = t_equiv_check(X, Y, kernel_k, 12)
    assert not ok
    assert prof.x_orders[-1] > prof.x_orders[0]


@pytest.mark.parametrize("which", ["kernel_k", "kernel_g"])
def test_xy_is_not_t_equivalent_to_zero(which, request):
    ok, prof = t_equiv_check(X * Y, FORMAL.zero, request.getfixturevalue(which), 15)
    assert not ok


def test_t_equiv_exact_divisibility(kernel_k):
    ok, prof = t_equiv_check(X * Y, 1 / t - 1 / X - 1 / Y, kernel_k, 20)
    assert ok and prof.shortcut


def test_lemma26(kernel_k):
    with pytest.raises(PoleAtZero) as exc:
        lemma26_check(X, Y, kernel_k, 5)
    assert exc.value.var == "X"
    with pytest.raises(NonConstantConclusion):
        lemma26_check(X, X - kernel_k.Ktilde, kernel_k, 5)
    A = lemma26_check(1 / t + 2, 1 / t + 2, kernel_k, 5)
    assert A[-1] == 1 and A[0] == 2


def test_quotient_series_matches_division(kernel_k):
    Q = quotient_series(X * Y * kernel_k.Ktilde + 1, 1, kernel_k, 6)
    assert Q.val >= 0 and Q[0] == X * Y and all(not Q[n] for n in range(1, 7))
