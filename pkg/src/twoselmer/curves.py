"""Curves y^2 = x^3 + A x^2 + B x, their 2-isogenies, and the five-case split."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

from .arith import SquareClass, factor, squarefree_kernel


class CurveError(ValueError):
    """Input does not describe a usable curve."""


def _isqrt_exact(n: int) -> Optional[int]:
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def is_square(n: int) -> bool:
    return _isqrt_exact(n) is not None


@dataclass(frozen=True)
class CurveModel:
    """y^2 = x^3 + A x^2 + B x; ``roots`` is (0, r, s) when x^2 + A x + B splits."""

    A: int
    B: int
    roots: Optional[Tuple[int, int, int]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.B == 0 or self.A * self.A - 4 * self.B == 0:
            raise CurveError(f"singular model A={self.A}, B={self.B}")
        if self.roots is None:
            D = _isqrt_exact(self.A * self.A - 4 * self.B)
            if D is not None:
                # A and D have the same parity, so both roots are integers
                object.__setattr__(self, "roots", (0, (-self.A + D) // 2, (-self.A - D) // 2))
        else:
            _, r, s = self.roots
            if r * s != self.B or r + s != -self.A or self.roots[0] != 0:
                raise CurveError("roots do not match the model")

    @classmethod
    def from_roots(cls, r: int, s: int) -> "CurveModel":
        return cls(-(r + s), r * s, (0, r, s))

    @property
    def discriminant(self) -> int:
        return 16 * self.B * self.B * (self.A * self.A - 4 * self.B)

    @property
    def full_two_torsion(self) -> bool:
        return self.roots is not None

    def torsion_x(self) -> List[int]:
        """x-coordinates of the rational 2-torsion points."""
        return list(self.roots) if self.roots else [0]

    def translate(self, e: int) -> "CurveModel":
        """Move the 2-torsion point with x = e to the origin."""
        if e not in self.torsion_x():
            raise CurveError(f"x={e} is not a rational 2-torsion point")
        A2 = 3 * e + self.A
        B2 = 3 * e * e + 2 * self.A * e + self.B
        roots = None
        if self.roots:
            others = sorted((x - e for x in self.roots if x != e), reverse=True)
            roots = (0, others[0], others[1])
        return CurveModel(A2, B2, roots)

    def reduced(self) -> "CurveModel":
        """Divide out the largest u with u^2 | A and u^4 | B (an isomorphism over Q)."""
        u = 1
        fb = factor(self.B)
        for p, e in fb.factors.items():
            k = e // 4
            while k and self.A % (p ** (2 * k)):
                k -= 1
            u *= p**k
        roots = tuple(r // (u * u) for r in self.roots) if self.roots else None
        return CurveModel(self.A // (u * u), self.B // u**4, roots)  # type: ignore[arg-type]

    def to_json(self) -> Dict[str, int]:
        return {"A": self.A, "B": self.B}

    def __str__(self) -> str:
        return f"y^2 = x^3 + {self.A}x^2 + {self.B}x"


def twist(E: CurveModel, d: SquareClass | int) -> CurveModel:
    dv = d.value if isinstance(d, SquareClass) else d
    if dv == 0:
        raise CurveError("cannot twist by zero")
    roots = tuple(dv * r for r in E.roots) if E.roots else None
    return CurveModel(dv * E.A, dv * dv * E.B, roots)  # type: ignore[arg-type]


def two_torsion_field(E: CurveModel) -> SquareClass:
    """Q(E[2]) = Q(sqrt(A^2 - 4B)), recorded by its square class."""
    return squarefree_kernel(E.A * E.A - 4 * E.B)


@dataclass(frozen=True)
class TwoIsogeny:
    source: CurveModel
    target: CurveModel
    kernel_x: int
    balanced: bool

    @property
    def kernel_model(self) -> CurveModel:
        """Source translated so the kernel point is (0, 0)."""
        return self.source.translate(self.kernel_x)

    def dual(self) -> "TwoIsogeny":
        return isogeny_from(self.target, 0)

    def to_json(self) -> Dict[str, object]:
        return {"kernel_x": self.kernel_x, "target": self.target.to_json(), "balanced": self.balanced}


def isogeny_from(E: CurveModel, e: int) -> TwoIsogeny:
    K = E.translate(e)
    target = CurveModel(-2 * K.A, K.A * K.A - 4 * K.B)
    balanced = squarefree_kernel(K.A * K.A - 4 * K.B) == squarefree_kernel(K.B)
    return TwoIsogeny(E, target, e, balanced)


def enumerate_two_isogenies(E: CurveModel) -> List[TwoIsogeny]:
    return [isogeny_from(E, e) for e in E.torsion_x()]


@dataclass(frozen=True)
class CaseLabel:
    case: str
    balanced: Tuple[TwoIsogeny, ...] = ()
    metadata: Tuple[Tuple[str, object], ...] = ()

    @property
    def meta(self) -> Dict[str, object]:
        return dict(self.metadata)


def classify_case(E: CurveModel) -> CaseLabel:
    isos = enumerate_two_isogenies(E.reduced())
    bal = tuple(i for i in isos if i.balanced)
    if len(bal) == 2:
        return CaseLabel("V", bal)
    if len(bal) == 1:
        meta = () if E.full_two_torsion else (("z2_balanced", True),)
        return CaseLabel("IV", bal, meta)
    if E.full_two_torsion:
        return CaseLabel("I")
    # one rational 2-torsion point; its isogenous curve has full 2-torsion iff B is a square
    return CaseLabel("III" if is_square(E.B) else "II")


# --- general cubics ----------------------------------------------------------


def _integer_roots(c2: int, c1: int, c0: int) -> List[int]:
    if c0 == 0:
        rest = []
        disc = c2 * c2 - 4 * c1
        D = _isqrt_exact(disc)
        if D is not None and (c2 + D) % 2 == 0:
            rest = [(-c2 + D) // 2, (-c2 - D) // 2]
        return sorted({0, *rest})
    f = factor(c0)
    divisors = [1]
    for p, e in f.factors.items():
        divisors = [q * p**k for q in divisors for k in range(e + 1)]
    return sorted(x for q in divisors for x in (q, -q) if x**3 + c2 * x * x + c1 * x + c0 == 0)


def from_cubic(c2: int, c1: int, c0: int) -> Optional[CurveModel]:
    """y^2 = x^3 + c2 x^2 + c1 x + c0 moved to the normal form, or None without rational 2-torsion."""
    rts = _integer_roots(c2, c1, c0)
    if not rts:
        return None
    e = min(rts, key=lambda x: (abs(x), x < 0))  # keep the origin when it is a root
    return CurveModel(3 * e + c2, 3 * e * e + 2 * c2 * e + c1)


# --- isogeny graphs ----------------------------------------------------------


def vertex_key(E: CurveModel) -> FrozenSet[Tuple[int, int]]:
    """Isomorphism invariant: reduced normal forms at every rational 2-torsion point."""
    out = set()
    for e in E.torsion_x():
        R = E.translate(e).reduced()
        out.add((R.A, R.B))
    return frozenset(out)


SHAPES = {
    (1,): "single",
    (1, 1): "path2",
    (1, 1, 1, 3): "star4",
    (1, 1, 1, 1, 3, 3): "double_star6",
    (1, 1, 1, 1, 1, 3, 3, 3): "tree8",
}


@dataclass
class IsogenyGraph:
    vertices: List[CurveModel]
    edges: List[Tuple[int, int]]
    root: int = 0

    def degrees(self) -> List[int]:
        deg = [0] * len(self.vertices)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    @property
    def shape(self) -> str:
        key = tuple(sorted(self.degrees())) if self.edges else (1,)
        if key not in SHAPES:
            raise CurveError(f"unexpected isogeny graph with degrees {key}")
        return SHAPES[key]

    def is_central(self, i: int) -> bool:
        """Degree 3 with every neighbour of degree 3 or with two such neighbours in tree8."""
        deg = self.degrees()
        nbrs = [j for a, b in self.edges for j in ((b,) if a == i else (a,) if b == i else ())]
        return deg[i] == 3 and sum(deg[j] == 3 for j in nbrs) == 2


MAX_VERTICES = 8


def build_isogeny_graph(E: CurveModel) -> IsogenyGraph:
    start = E.reduced()
    keys: Dict[FrozenSet[Tuple[int, int]], int] = {vertex_key(start): 0}
    vertices = [start]
    edges = set()
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for phi in enumerate_two_isogenies(vertices[i]):
            tgt = phi.target.reduced()
            k = vertex_key(tgt)
            if k not in keys:
                keys[k] = len(vertices)
                vertices.append(tgt)
                queue.append(keys[k])
                if len(vertices) > MAX_VERTICES:
                    raise CurveError("isogeny graph exceeds 8 vertices")
            j = keys[k]
            edges.add((min(i, j), max(i, j)))
    return IsogenyGraph(vertices, sorted(edges))


# --- text input --------------------------------------------------------------


@dataclass
class Classification:
    text: str
    model: Optional[CurveModel]
    label: CaseLabel
    shape: str

    def to_json(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "input": self.text,
            "model": self.model.to_json() if self.model else None,
            "case": self.label.case,
            "balanced_isogenies": [i.to_json() for i in self.label.balanced],
            "graph_shape": self.shape,
        }
        if self.label.metadata:
            out["metadata"] = self.label.meta
        return out


def parse_curve(text: str) -> Tuple[Optional[CurveModel], Tuple[int, int, int] | None]:
    """Parse ``A B``, ``roots: r s`` or ``cubic: c2 c1 c0``.

    Returns the normal-form model, or ``(None, cubic)`` for a cubic without a
    rational root.
    """
    s = text.strip().replace("−", "-")
    try:
        if s.startswith("roots:"):
            r, t = (int(x) for x in s[len("roots:"):].split())
            return CurveModel.from_roots(r, t), None
        if s.startswith("cubic:"):
            c2, c1, c0 = (int(x) for x in s[len("cubic:"):].split())
            E = from_cubic(c2, c1, c0)
            if E is None:
                if 4 * c2**3 * c0 - c2**2 * c1**2 - 18 * c2 * c1 * c0 + 4 * c1**3 + 27 * c0**2 == 0:
                    raise CurveError("singular cubic")
                return None, (c2, c1, c0)
            return E, None
        A, B = (int(x) for x in s.split())
    except ValueError as exc:
        if isinstance(exc, CurveError):
            raise
        raise CurveError(f"cannot parse curve {text!r}") from exc
    return CurveModel(A, B), None


def classify_text(text: str) -> Classification:
    E, cubic = parse_curve(text)
    if E is None:
        return Classification(text, None, CaseLabel("I", (), (("no_rational_two_torsion", True),)), "single")
    return Classification(text, E, classify_case(E), build_isogeny_graph(E).shape)


def case_V_frame(E: CurveModel) -> Tuple[CurveModel, TwoIsogeny, TwoIsogeny]:
    """Model with the first balanced kernel at 0 and roots (0, e2, e3), where
    e2 is the kernel of the second balanced isogeny; returns (model, phi1, phi2)."""
    label = classify_case(E)
    if label.case != "V":
        raise CurveError("not a Case V curve")
    R = E.reduced()
    bal = [i for i in enumerate_two_isogenies(R) if i.balanced]
    M = R.translate(bal[0].kernel_x)
    e2 = bal[1].kernel_x - bal[0].kernel_x
    e3 = [x for x in M.roots if x not in (0, e2)][0]  # type: ignore[union-attr]
    M = CurveModel(M.A, M.B, (0, e2, e3))
    return M, isogeny_from(M, 0), isogeny_from(M, e2)


def classify_batch(lines: List[str]) -> List[Dict[str, object]]:
    out = []
    for line in lines:
        if line.strip() and not line.lstrip().startswith("#"):
            out.append(classify_text(line).to_json())
    return out


def dumps(obj: object) -> str:
    return json.dumps(obj, sort_keys=True)
