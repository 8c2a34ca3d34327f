"""The orbit of a walk model as a two-coloured graph.

Vertices are pairs (u, v) of tower elements with S(u, v) = S(x, y). Two
vertices are x-adjacent when they share the left coordinate and y-adjacent
when they share the right one; each colour class is a clique. The search is
a breadth-first closure from (x, y), with vertex equality decided exactly in
the tower.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from sympy.polys.domains import QQ

from .exactalg import BASE, to_field
from .model import StepModel, kernel
from .towers import Tower, TowerElem, roots_in_tower

Chain0 = dict  # vertex index -> Fraction


class ExceededBound(RuntimeError):
    def __init__(self, message: str, partial: "OrbitGraph"):
        super().__init__(message)
        self.partial = partial


class GraphTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OrbitVertex:
    left: TowerElem
    right: TowerElem

    def key(self):
        return (self.left.raw, self.right.raw)

    def lift(self, tower: Tower) -> "OrbitVertex":
        return OrbitVertex(self.left.lift(tower), self.right.lift(tower))


@dataclass
class OrbitGraph:
    model: StepModel
    tower: Tower
    vertices: list
    x_edges: set
    y_edges: set
    s_value: object  # S(x0, y0) in BASE
    base: int = 0
    specialization: dict | None = None
    d_x: int = 0
    d_y: int = 0

    def __len__(self):
        return len(self.vertices)

    def neighbours(self, i: int, color: str | None = None) -> set:
        out = set()
        edges = [self.x_edges, self.y_edges] if color is None else [self.x_edges if color == "x" else self.y_edges]
        for es in edges:
            for a, b in es:
                if a == i:
                    out.add(b)
                elif b == i:
                    out.add(a)
        return out

    def adjacency(self) -> tuple[list[set], list[set]]:
        n = len(self.vertices)
        ax = [set() for _ in range(n)]
        ay = [set() for _ in range(n)]
        for a, b in self.x_edges:
            ax[a].add(b)
            ax[b].add(a)
        for a, b in self.y_edges:
            ay[a].add(b)
            ay[b].add(a)
        return ax, ay

    def is_connected(self) -> bool:
        ax, ay = self.adjacency()
        seen = {self.base}
        todo = [self.base]
        while todo:
            i = todo.pop()
            for j in ax[i] | ay[i]:
                if j not in seen:
                    seen.add(j)
                    todo.append(j)
        return len(seen) == len(self.vertices)

    def check_vertices(self) -> bool:
        """Every vertex satisfies S(u, v) = S(x, y) exactly."""
        for v in self.vertices:
            if step_value(self.model, v.left, v.right, self.specialization) != self.s_value:
                return False
        return True

    def summary(self) -> dict:
        xc = adjacency_classes(self, "x")
        yc = adjacency_classes(self, "y")
        return {
            "vertices": len(self.vertices),
            "x_classes": sorted(len(c) for c in xc),
            "y_classes": sorted(len(c) for c in yc),
            "tower_degree": self.tower.degree,
            "d_x": self.d_x,
            "d_y": self.d_y,
        }


def _weights(model: StepModel, spec: dict | None):
    out = []
    for s in model.steps:
        w = to_field(s.weight, BASE)
        if spec and "lam" in spec:
            w = w.subs(BASE.gens[2], spec["lam"]) if hasattr(w, "subs") else w
        out.append((s.dx, s.dy, w))
    return out


def step_value(model: StepModel, u, v, spec=None):
    acc = None
    for dx, dy, w in _weights(model, spec):
        term = (u ** dx) * (v ** dy) * w
        acc = term if acc is None else acc + term
    return acc.descend() if isinstance(acc, TowerElem) else acc


class _Builder:
    def __init__(self, model: StepModel, spec: dict | None, seed: int):
        self.model = model
        self.spec = spec
        self.rng = random.Random(seed)
        k = kernel(model, check=False)
        self.mx, self.my = k.mx, k.my
        self.d_x, self.d_y = k.d_x, k.d_y
        self.weights = _weights(model, spec)
        self.tower = Tower()
        x, y = BASE.gens[0], BASE.gens[1]
        if spec:
            x, y = BASE(spec["x"]), BASE(spec["y"])
        self.x0, self.y0 = x, y
        self.s0 = step_value(model, x, y, spec)

    def fiber(self, fixed: TowerElem, color: str) -> list:
        """Coefficients (low to high) of the polynomial whose roots complete a colour class.

        color "x": fixed = u, polynomial in V; color "y": fixed = v, polynomial in U.
        """
        mx, my = self.mx, self.my
        deg = self.d_y if color == "x" else self.d_x
        coeffs = [self.tower.zero() for _ in range(deg + 1)]
        fixed = fixed.lift(self.tower)
        pw: dict = {}

        def power(e):
            if e not in pw:
                pw[e] = fixed ** e
            return pw[e]

        if color == "x":
            coeffs[my] = coeffs[my] + power(mx) * self.s0
            for dx, dy, w in self.weights:
                coeffs[my + dy] = coeffs[my + dy] - power(mx + dx) * w
        else:
            coeffs[mx] = coeffs[mx] + power(my) * self.s0
            for dx, dy, w in self.weights:
                coeffs[mx + dx] = coeffs[mx + dx] - power(my + dy) * w
        return coeffs

    def other_roots(self, vert: OrbitVertex, color: str, known=()) -> list:
        fixed = vert.left if color == "x" else vert.right
        moving = vert.right if color == "x" else vert.left
        p = self.fiber(fixed, color)
        for r in [moving, *known]:
            p = _divide_linear(p, r.lift(self.tower))
        if len(p) <= 1:
            return []
        res = roots_in_tower(self.tower, p, allow_extend=True)
        if res.residual is not None:  # pragma: no cover - allow_extend adjoins everything
            raise RuntimeError("fiber polynomial not split")
        self.tower = res.tower
        roots = list(res.roots)
        self.rng.shuffle(roots)
        return roots


def _divide_linear(p: list, r: TowerElem) -> list:
    """p / (Z - r), checking that the remainder vanishes."""
    n = len(p) - 1
    while n > 0 and not p[n]:
        n -= 1
    q = [None] * n
    acc = p[n]
    for k in range(n - 1, -1, -1):
        q[k] = acc
        acc = p[k] + acc * r
    if acc:
        raise ValueError("expected root does not annihilate the fiber polynomial")
    return q


def adjacent_vertices(model: StepModel, v: OrbitVertex, color: str, tower: Tower | None = None):
    """New vertices adjacent to ``v`` in the given colour, with the (possibly extended) tower."""
    b = _Builder(model, None, 0)
    if tower is not None:
        b.tower = tower
    roots = b.other_roots(v, color)
    if color == "x":
        out = [OrbitVertex(v.left.lift(b.tower), r) for r in roots]
    else:
        out = [OrbitVertex(r, v.right.lift(b.tower)) for r in roots]
    return out, b.tower


def compute_orbit(model: StepModel, max_vertices: int = 200, max_depth: int = 30,
                  seed: int = 0, specialize: bool = False) -> OrbitGraph:
    """Breadth-first closure of (x, y) under both adjacencies.

    With ``specialize`` the generic point is replaced by random rationals
    (x, y and lam drawn from ``seed``); this mode is meant for detecting
    large or infinite orbits cheaply.
    """
    spec = None
    if specialize:
        rng = random.Random(seed)
        spec = {"x": Fraction(rng.randint(2, 97), rng.randint(2, 89)),
                "y": Fraction(rng.randint(2, 97), rng.randint(2, 89)),
                "lam": Fraction(rng.randint(2, 97), rng.randint(2, 89))}
        spec = {k: QQ(v.numerator, v.denominator) for k, v in spec.items()}
    b = _Builder(model, spec, seed)
    start = OrbitVertex(b.tower.from_base(b.x0), b.tower.from_base(b.y0))
    verts = [start]
    depth = [0]
    index = {start.key(): 0}
    x_edges: set = set()
    y_edges: set = set()
    queue = deque([0])

    def graph():
        return OrbitGraph(model, b.tower, list(verts), set(x_edges), set(y_edges), b.s0, 0, spec, b.d_x, b.d_y)

    def relift():
        nonlocal verts, index
        verts = [v.lift(b.tower) for v in verts]
        index = {v.key(): i for i, v in enumerate(verts)}

    while queue:
        i = queue.popleft()
        for color in ("x", "y"):
            v = verts[i]
            same = [j for j, w in enumerate(verts) if j != i and
                    ((w.left == v.left) if color == "x" else (w.right == v.right))]
            known = [verts[j].right if color == "x" else verts[j].left for j in same]
            before = b.tower
            roots = b.other_roots(v, color, known)
            if b.tower is not before:
                relift()
                v = verts[i]
            members = [i] + same
            for r in roots:
                nv = OrbitVertex(v.left, r) if color == "x" else OrbitVertex(r, v.right)
                j = index.get(nv.key())
                if j is None:
                    if depth[i] + 1 > max_depth:
                        raise ExceededBound(f"orbit deeper than {max_depth}", graph())
                    if len(verts) >= max_vertices:
                        raise ExceededBound(f"orbit larger than {max_vertices} vertices", graph())
                    j = len(verts)
                    verts.append(nv)
                    depth.append(depth[i] + 1)
                    index[nv.key()] = j
                    queue.append(j)
                members.append(j)
            es = x_edges if color == "x" else y_edges
            for a in members:
                for c in members:
                    if a < c:
                        es.add((a, c))
    return graph()


def adjacency_classes(g: OrbitGraph, color: str) -> list[list[int]]:
    """Partition of the vertex indices by shared left (x) or right (y) coordinate."""
    groups: dict = {}
    for i, v in enumerate(g.vertices):
        key = v.left.raw if color == "x" else v.right.raw
        groups.setdefault(key, []).append(i)
    return list(groups.values())


# ---------------------------------------------------------------------------
# automorphisms


def _search(g1: OrbitGraph, g2: OrbitGraph, fixed: dict, order: list, ax1, ay1, ax2, ay2, want_all=False):
    """Backtracking extension of a partial colour-preserving map g1 -> g2."""
    n = len(order)
    mapping = dict(fixed)
    used = set(mapping.values())
    results = []

    def ok(a, b):
        if len(ax1[a]) != len(ax2[b]) or len(ay1[a]) != len(ay2[b]):
            return False
        for c, d in mapping.items():
            if (c in ax1[a]) != (d in ax2[b]) or (c in ay1[a]) != (d in ay2[b]):
                return False
        return True

    def rec(k):
        if k == n:
            results.append(dict(mapping))
            return not want_all
        a = order[k]
        if a in mapping:
            return rec(k + 1)
        for b in range(len(g2.vertices)):
            if b in used or not ok(a, b):
                continue
            mapping[a] = b
            used.add(b)
            if rec(k + 1):
                return True
            del mapping[a]
            used.discard(b)
        return False

    rec(0)
    return results


def _bfs_order(g: OrbitGraph, ax, ay) -> list[int]:
    seen = [g.base]
    todo = deque([g.base])
    while todo:
        i = todo.popleft()
        for j in sorted(ax[i] | ay[i]):
            if j not in seen:
                seen.append(j)
                todo.append(j)
    seen += [i for i in range(len(g.vertices)) if i not in seen]
    return seen


def graph_automorphisms(g: OrbitGraph, limit: int = 64) -> tuple[int, list[tuple[int, ...]]]:
    """Order and generators of the group of colour-preserving automorphisms.

    Uses a base and stabiliser chain: at each level the orbit of the next
    base point under the pointwise stabiliser of the previous ones is found
    by backtracking, and the group order is the product of orbit lengths.
    """
    n = len(g.vertices)
    if n > limit:
        raise GraphTooLarge(f"{n} vertices exceeds the automorphism search limit {limit}")
    ax, ay = g.adjacency()
    order = _bfs_order(g, ax, ay)
    total = 1
    gens: list = []
    fixed: dict = {}
    for b in order:
        orbit_len = 0
        for c in range(n):
            if c in fixed.values():
                continue
            trial = dict(fixed)
            trial[b] = c
            found = _search(g, g, trial, order, ax, ay, ax, ay)
            if found:
                orbit_len += 1
                perm = tuple(found[0][i] for i in range(n))
                if c != b and perm not in gens:
                    gens.append(perm)
        total *= orbit_len
        fixed[b] = b
        if orbit_len == 1 and len(fixed) == n:
            break
    return total, gens


def find_isomorphism(g1: OrbitGraph, g2: OrbitGraph) -> dict | None:
    """A colour-preserving isomorphism g1 -> g2 (as an index map), or None."""
    if len(g1.vertices) != len(g2.vertices):
        return None
    ax1, ay1 = g1.adjacency()
    ax2, ay2 = g2.adjacency()
    order = _bfs_order(g1, ax1, ay1)
    for c in range(len(g2.vertices)):
        found = _search(g1, g2, {order[0]: c}, order, ax1, ay1, ax2, ay2)
        if found:
            return found[0]
    return None


# ---------------------------------------------------------------------------
# level lines


def level_lines(g: OrbitGraph, color: str) -> list[Chain0]:
    """Vertices grouped by graph distance from the base vertex's colour class.

    For colour x the base class is the set of vertices sharing the left
    coordinate of the base vertex; distances ignore edge colours. Each layer
    is returned as a chain with coefficient 1 on its vertices.
    """
    ax, ay = g.adjacency()
    base = g.vertices[g.base]
    start = [i for i, v in enumerate(g.vertices)
             if (v.left == base.left if color == "x" else v.right == base.right)]
    dist = {i: 0 for i in start}
    todo = deque(start)
    while todo:
        i = todo.popleft()
        for j in ax[i] | ay[i]:
            if j not in dist:
                dist[j] = dist[i] + 1
                todo.append(j)
    layers: list[Chain0] = []
    for i, d in sorted(dist.items(), key=lambda kv: (kv[1], kv[0])):
        while len(layers) <= d:
            layers.append({})
        layers[d][i] = Fraction(1)
    return layers
