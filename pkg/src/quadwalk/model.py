"""Walk models, the kernel polynomial and the functional equation.

Model files are small UTF-8 texts::

    # comment
    name: G_lambda
    steps: [(-1,-1,1), (0,1,1), (1,0,lam), (1,-1,1), (2,1,1)]

A weight is a rational literal or a rational expression in ``lam``.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from sympy.polys.domains import QQ

from .exactalg import BASE, FORMAL, parse_expr, to_field


class ModelError(ValueError):
    pass


class ModelSyntaxError(ModelError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


class UnsupportedBackwardAmplitude(ModelError):
    pass


class ReducibleKernel(ModelError):
    pass


@dataclass(frozen=True)
class Step:
    dx: int
    dy: int
    weight: object  # FORMAL element, constant in X, Y, t
    source: str = "1"


@dataclass(frozen=True)
class StepModel:
    name: str
    steps: tuple

    @property
    def mx(self) -> int:
        return max(0, -min(s.dx for s in self.steps))

    @property
    def my(self) -> int:
        return max(0, -min(s.dy for s in self.steps))

    @property
    def forward_x(self) -> int:
        return max(0, max(s.dx for s in self.steps))

    @property
    def forward_y(self) -> int:
        return max(0, max(s.dy for s in self.steps))

    @property
    def has_lambda(self) -> bool:
        return any("lam" in str(s.weight) for s in self.steps)

    def step_polynomial(self, fld=None):
        """S as an element of ``fld`` (FORMAL in X, Y by default; BASE uses x, y)."""
        fld = fld or FORMAL
        X, Y = fld.gens[0], fld.gens[1]
        S = fld.zero
        for s in self.steps:
            S += to_field(s.weight, fld) * X ** s.dx * Y ** s.dy
        return S

    def specialize(self, lam_value) -> "StepModel":
        """Substitute a rational value for ``lam`` in every weight."""
        lam = FORMAL.gens[3]
        q = Fraction(str(lam_value)) if not isinstance(lam_value, Fraction) else lam_value
        v = QQ(q.numerator, q.denominator)
        steps = []
        for s in self.steps:
            w = s.weight
            num = w.numer.subs(lam.numer, v)
            den = w.denom.subs(lam.numer, v)
            steps.append(Step(s.dx, s.dy, FORMAL(num) / FORMAL(den), str(FORMAL(num) / FORMAL(den)).replace(" ", "")))
        return StepModel(f"{self.name}[lam={q}]", tuple(steps))

    def to_text(self) -> str:
        body = ", ".join(f"({s.dx},{s.dy},{s.source})" for s in self.steps)
        return f"name: {self.name}\nsteps: [{body}]\n"


_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-\[\]=/.]*$")


def _int_literal(node, line0: int, col0: int) -> int:
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _int_literal(node.operand, line0, col0)
        return -v if isinstance(node.op, ast.USub) else v
    raise ModelSyntaxError("step offsets must be integers", *_node_pos(node, line0, col0))


def _node_pos(node, line0: int, col0: int) -> tuple[int, int]:
    # col0 is the 1-based column of the list's first character
    if node.lineno == 1:
        return line0, col0 + node.col_offset
    return line0 + node.lineno - 1, node.col_offset + 1


def parse_model(text: str) -> StepModel:
    name = None
    steps_src = None
    steps_pos = (0, 0)
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        raw = lines[i]
        line = raw.split("#", 1)[0]
        if not line.strip():
            i += 1
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep:
            raise ModelSyntaxError("expected 'key: value'", i + 1, 1)
        if key == "name":
            name = rest.strip()
            if not _NAME_RE.match(name):
                raise ModelSyntaxError(f"invalid model name {name!r}", i + 1, raw.index(":") + 2)
            i += 1
        elif key == "steps":
            col = raw.index(":") + 1
            chunk = [rest]
            start = i
            # a step list may continue over several lines until brackets balance
            while chunk and "".join(chunk).count("[") > "".join(chunk).count("]") and i + 1 < len(lines):
                i += 1
                chunk.append(lines[i].split("#", 1)[0])
            steps_src = "\n".join(chunk)
            steps_pos = (start + 1, col + 1)
            i += 1
        else:
            raise ModelSyntaxError(f"unknown key {key!r}", i + 1, 1)
    if steps_src is None:
        raise ModelSyntaxError("missing 'steps:' entry", len(lines) or 1, 1)
    return _build_model(name or "model", steps_src, steps_pos)


def _build_model(name: str, src: str, pos: tuple[int, int]) -> StepModel:
    line0, col0 = pos
    col0 += len(src) - len(src.lstrip())
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ModelSyntaxError(exc.msg, line0 + (exc.lineno or 1) - 1, (exc.offset or 0) + col0) from None
    node = tree.body
    if not isinstance(node, ast.List):
        raise ModelSyntaxError("steps must be a list of (dx, dy, weight) tuples", line0, col0)
    lam = FORMAL.gens[3]
    seen = {}
    steps = []
    for elt in node.elts:
        ln, cn = _node_pos(elt, line0, col0)
        if not isinstance(elt, ast.Tuple) or len(elt.elts) != 3:
            raise ModelSyntaxError("each step must be a tuple (dx, dy, weight)", ln, cn)
        dx = _int_literal(elt.elts[0], line0, col0)
        dy = _int_literal(elt.elts[1], line0, col0)
        wsrc = ast.get_source_segment(src.strip(), elt.elts[2]) or ast.unparse(elt.elts[2])
        try:
            w = to_field(parse_expr(wsrc, {"lam": lam}), FORMAL)
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelSyntaxError(f"bad weight {wsrc!r}: {exc}", *_node_pos(elt.elts[2], line0, col0)) from None
        if any(str(g) in str(w) for g in ("X", "Y", "t")):
            raise ModelSyntaxError(f"weight {wsrc!r} may only involve lam", *_node_pos(elt.elts[2], line0, col0))
        if not w:
            raise ModelError(f"zero weight for step ({dx},{dy}) at line {ln}")
        if (dx, dy) in seen:
            raise ModelError(f"duplicate step ({dx},{dy}) at line {ln}")
        if (dx, dy) == (0, 0):
            raise ModelError("the null step (0,0) is not allowed")
        seen[(dx, dy)] = True
        steps.append(Step(dx, dy, w, wsrc.strip()))
    if not steps:
        raise ModelError("model has no steps")
    if all(s.dx == 0 for s in steps) or all(s.dy == 0 for s in steps):
        raise ModelError("step polynomial is univariate")
    return StepModel(name, tuple(steps))


def load_model(spec: str) -> StepModel:
    """Load a model from a file path or a built-in name."""
    if spec in BUILTIN_MODELS:
        return parse_model(BUILTIN_MODELS[spec])
    return parse_model(Path(spec).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Kernel:
    model: StepModel
    mx: int
    my: int
    Ktilde: object  # FORMAL element, polynomial in X, Y, t
    d_x: int
    d_y: int

    @property
    def poly(self):
        """K̃ as a polynomial of the FORMAL ring (lam-denominators cleared)."""
        return self.Ktilde.numer

    def divides(self, p) -> bool:
        """Exact divisibility of a polynomial (or a fraction's numerator) by K̃."""
        if hasattr(p, "numer") and not hasattr(p, "ring"):
            p = p.numer
        if not p:
            return True
        q, r = p.div([self.poly])
        return not r


def kernel(m: StepModel, check: bool = True) -> Kernel:
    X, Y, t, _ = FORMAL.gens
    mx, my = m.mx, m.my
    K = X ** mx * Y ** my * (1 - t * m.step_polynomial())
    num = K.numer
    d_x = num.degree(0)
    d_y = num.degree(1)
    ker = Kernel(m, mx, my, K, d_x, d_y)
    if check:
        check_kernel(ker)
    return ker


def check_kernel(k: Kernel) -> None:
    """Abort when K̃ has a nontrivial factor over Q(lam)."""
    _, facs = k.poly.factor_list()
    nontriv = [f for f, e in facs if f.degree(0) > 0 or f.degree(1) > 0 or f.degree(2) > 0]
    if len(nontriv) > 1 or any(e > 1 for f, e in facs if f in nontriv):
        raise ReducibleKernel(f"kernel of {k.model.name} factors: {[str(f.as_expr()) for f in nontriv]}")


@dataclass(frozen=True)
class FunctionalEquation:
    """K̃·Q(X,Y) = free − cX·Q(X,0) − cY·Q(0,Y) − c0·Q(0,0)."""

    free: object
    cX: object
    cY: object
    c0: object

    def as_dict(self) -> dict:
        return {k: str(getattr(self, k).as_expr()) for k in ("free", "cX", "cY", "c0")}


def derive_functional_equation(m: StepModel) -> FunctionalEquation:
    mx, my = m.mx, m.my
    if mx > 1 or my > 1:
        raise UnsupportedBackwardAmplitude(
            f"backward amplitudes ({mx},{my}) exceed 1; only small backward steps are handled")
    X, Y, t, _ = FORMAL.gens
    free = X ** mx * Y ** my
    cX = FORMAL.zero
    cY = FORMAL.zero
    c0 = FORMAL.zero
    for s in m.steps:
        w = s.weight
        if s.dy == -1:
            cX += t * w * X ** (mx + s.dx)
        if s.dx == -1:
            cY += t * w * Y ** (my + s.dy)
        if s.dx == -1 and s.dy == -1:
            c0 -= t * w
    return FunctionalEquation(free, cX, cY, c0)


G_LAMBDA_TEXT = """\
# large forward steps, weighted east step
name: G_lambda
steps: [(-1,-1,1), (0,1,1), (1,0,lam), (1,-1,1), (2,1,1)]
"""

KREWERAS_TEXT = """\
name: kreweras
steps: [(-1,0,1), (0,-1,1), (1,1,1)]
"""

BUILTIN_MODELS = {
    "G_lambda": G_LAMBDA_TEXT,
    "kreweras": KREWERAS_TEXT,
}
