import time

import pytest

from quadwalk.model import load_model, parse_model
from quadwalk.orbit import (
    ExceededBound, GraphTooLarge, adjacency_classes, adjacent_vertices, compute_orbit,
    find_isomorphism, graph_automorphisms, level_lines,
)

INFINITE = "steps: [(0,1,1), (1,0,1), (-1,-1,1), (-1,0,1)]"


def test_kreweras_orbit(orbit_k):
    s = orbit_k.summary()
    assert s["vertices"] == 6
    assert s["x_classes"] == [2, 2, 2] and s["y_classes"] == [2, 2, 2]
    assert orbit_k.is_connected() and orbit_k.check_vertices()
    # the orbit graph is a single 6-cycle with alternating colours
    ax, ay = orbit_k.adjacency()
    assert all(len(ax[i]) == 1 and len(ay[i]) == 1 for i in range(6))
    assert graph_automorphisms(orbit_k)[0] == 6


def test_g_lambda_orbit(orbit_g):
    s = orbit_g.summary()
    assert s["vertices"] == 12
    assert set(s["y_classes"]) == {3} and set(s["x_classes"]) == {2}
    assert s["tower_degree"] == 2
    assert orbit_g.is_connected() and orbit_g.check_vertices()


def test_g_lambda_automorphisms(orbit_g):
    order, gens = graph_automorphisms(orbit_g)
    assert order == 24
    ax, ay = orbit_g.adjacency()
    for perm in gens:
        for i in range(len(perm)):
            assert {perm[j] for j in ax[i]} == ax[perm[i]]
            assert {perm[j] for j in ay[i]} == ay[perm[i]]


@pytest.mark.parametrize("which", ["orbit_g", "orbit_k"])
def test_class_size_bounds(which, request):
    g = request.getfixturevalue(which)
    # a fixed left coordinate has at most d_y partners, a fixed right one d_x
    assert max(len(c) for c in adjacency_classes(g, "x")) <= g.d_y
    assert max(len(c) for c in adjacency_classes(g, "y")) <= g.d_x
    for color in "xy":
        classes = adjacency_classes(g, color)
        assert sorted(i for c in classes for i in c) == list(range(len(g)))


def test_class_counts(orbit_g, orbit_k):
    assert sorted(len(c) for c in adjacency_classes(orbit_g, "y")) == [3] * 4
    assert sorted(len(c) for c in adjacency_classes(orbit_g, "x")) == [2] * 6
    for color in "xy":
        assert sorted(len(c) for c in adjacency_classes(orbit_k, color)) == [2] * 3


def test_kreweras_neighbours(orbit_k):
    v = orbit_k.vertices[orbit_k.base]
    new, _ = adjacent_vertices(orbit_k.model, v, "y", orbit_k.tower)
    assert len(new) == 1
    x, y = v.left, v.right
    assert new[0].left == (x * y).inv() and new[0].right == y


def test_adjacent_vertices_are_in_orbit(orbit_g):
    v = orbit_g.vertices[orbit_g.base]
    for color in "xy":
        new, tower = adjacent_vertices(orbit_g.model, v, color, orbit_g.tower)
        assert tower is orbit_g.tower  # the orbit tower already splits every fiber
        assert len(new) == (orbit_g.d_y if color == "x" else orbit_g.d_x) - 1
        keys = {u.key() for u in orbit_g.vertices}
        assert all(w.key() in keys for w in new)


def test_level_lines(orbit_g, orbit_k):
    assert [len(l) for l in level_lines(orbit_g, "x")] == [2, 4, 4, 2]
    assert [len(l) for l in level_lines(orbit_g, "y")] == [3, 3, 6]
    assert [len(l) for l in level_lines(orbit_k, "x")] == [2, 2, 2]


def test_specialized_orbit_is_isomorphic(g_lambda, orbit_g):
    spec = compute_orbit(g_lambda, specialize=True, seed=3)
    assert len(spec) == 12
    assert find_isomorphism(orbit_g, spec) is not None
    assert find_isomorphism(orbit_g, compute_orbit(load_model("kreweras"))) is None


@pytest.mark.parametrize("seed", [1, 2])
def test_infinite_orbit_exceeds_bound(seed):
    m = parse_model(INFINITE)
    t0 = time.time()
    with pytest.raises(ExceededBound) as exc:
        compute_orbit(m, max_vertices=200, max_depth=10 ** 4, specialize=True, seed=seed)
    assert len(exc.value.partial) == 200
    assert time.time() - t0 < 120


def test_automorphism_limit(orbit_g):
    with pytest.raises(GraphTooLarge):
        graph_automorphisms(orbit_g, limit=10)
