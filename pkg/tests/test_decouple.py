import random
from fractions import Fraction

import pytest

from quadwalk.decouple import (
    Infeasible, NotDecoupled, check_alpha, class_sums, constraint_residual, decouple_fraction,
    decoupling_triple, shift_between,
)
from quadwalk.exactalg import FORMAL
from quadwalk.invariants import NotRegular, evaluate_regular, is_galois_invariant
from quadwalk.model import parse_model
from quadwalk.orbit import compute_orbit

X, Y, t, lam = FORMAL.gens
PAPER_A = (Fraction(1, 2), Fraction(-1, 8), Fraction(1, 8))
PAPER_B = (Fraction(1, 4), Fraction(-1, 4))


@pytest.fixture(scope="module")
def triple_g(orbit_g):
    return decoupling_triple(orbit_g)


@pytest.fixture(scope="module")
def triple_k(orbit_k):
    return decoupling_triple(orbit_k)


def test_reference_tuple_solves_the_system(orbit_g):
    res = constraint_residual(orbit_g, PAPER_A, PAPER_B)
    assert not any(res["x"]) and not any(res["y"])
    bad = constraint_residual(orbit_g, (Fraction(1, 2), Fraction(1, 8)), PAPER_B)
    assert any(bad["x"]) or any(bad["y"])


def test_solver_returns_exact_solution(orbit_g, triple_g):
    assert check_alpha(orbit_g, triple_g.alpha)
    assert triple_g.a == PAPER_A + (0,) and triple_g.b == PAPER_B + (0,)
    assert triple_g.free_directions == 1
    assert all(isinstance(v, Fraction) for v in triple_g.a + triple_g.b)


def test_kreweras_triple(orbit_k, triple_k):
    assert triple_k.a == (Fraction(1, 2), Fraction(-1, 6), Fraction(1, 6))
    assert triple_k.b == (Fraction(1, 3), Fraction(-1, 3), 0)
    assert check_alpha(orbit_k, triple_k.alpha)
    assert set(triple_k.as_dict()) >= {"a", "b", "alpha"}


def test_infeasible_triple():
    # three vertices in a single coloured triangle: the base class covers
    # everything and the class sums cannot be cancelled
    g = compute_orbit(parse_model("steps: [(1,0,1), (0,1,1), (-1,-1,1)]"))
    sizes = class_sums(g, {i: 1 for i in range(len(g))})
    if len(g) > 2 and len(sizes["x"]) == 1:
        with pytest.raises(Infeasible):
            decoupling_triple(g)
    else:
        decoupling_triple(g)


def test_xy_on_g_lambda(orbit_g, triple_g, kernel_g):
    res = decouple_fraction(X * Y, triple_g, orbit_g, kernel_g, N=20)
    assert res.galois and res.t_equiv
    assert kernel_g.divides((X * Y - res.F - res.G).numer)
    assert not res.G.numer.degree(0) and not res.F.numer.degree(1)


def test_xy_on_kreweras(orbit_k, triple_k, kernel_k):
    res = decouple_fraction(X * Y, triple_k, orbit_k, kernel_k, N=20)
    assert res.galois and res.t_equiv
    a = shift_between(res.F, res.G, 1 / t - 1 / X, -1 / Y)
    assert a is not None and a == (-3 * t - 1) / (3 * t)
    assert kernel_k.divides((X * Y - (1 / t - 1 / X - 1 / Y)).numer)


def test_x_alone(orbit_g, triple_g, kernel_g):
    res = decouple_fraction(X, triple_g, orbit_g, kernel_g)
    assert shift_between(res.F, res.G, X, 0) is not None


def test_not_decoupled(orbit_k, triple_k, kernel_k):
    with pytest.raises(NotDecoupled) as exc:
        decouple_fraction(X ** 2 * Y, triple_k, orbit_k, kernel_k)
    assert exc.value.witness
    with pytest.raises(NotRegular):
        decouple_fraction(1 / kernel_k.Ktilde, triple_k, orbit_k, kernel_k)


def _random_laurent(rng, var):
    f = FORMAL.zero
    for _ in range(rng.randint(1, 3)):
        c = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        f += FORMAL(c.numerator) / c.denominator * var ** rng.randint(-2, 2) * t ** rng.randint(-1, 1)
    return f


def test_alpha_vanishes_on_random_decoupled_fractions(orbit_g, triple_g, kernel_g):
    rng = random.Random(7)
    for _ in range(20):
        F = _random_laurent(rng, X)
        G = _random_laurent(rng, Y)
        R = _random_laurent(rng, X) * _random_laurent(rng, Y)
        H = F + G + kernel_g.Ktilde * R
        assert not evaluate_regular(H, triple_g.alpha, orbit_g, kernel_g)

    # F + G is only determined modulo Galois-invariant pairs
    F, G = _random_laurent(rng, X), _random_laurent(rng, Y)
    H = F + G + kernel_g.Ktilde * X / Y
    res = decouple_fraction(H, triple_g, orbit_g, kernel_g, N=8)
    assert res.galois
    assert is_galois_invariant(F - res.F, res.G - G, orbit_g, kernel_g)
