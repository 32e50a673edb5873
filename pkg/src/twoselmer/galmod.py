"""Finite module checks for the mod-2 images of Case IV and Case V curves.

A 2x2 matrix over GF(2) is a tuple ``(m00, m01, m10, m11)`` acting on
column vectors ``(x, y)``.  The point generating the kernel of the balanced
isogeny sits at ``(1, 0)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from . import gf2
from .gf2 import Subspace

Mat2 = Tuple[int, int, int, int]

ZERO: Mat2 = (0, 0, 0, 0)
IDENTITY: Mat2 = (1, 0, 0, 1)
ALPHA: Mat2 = (0, 1, 0, 0)
BETA: Mat2 = (1, 0, 0, 0)

MAX_AMBIENT = 6


def mat_add(x: Mat2, y: Mat2) -> Mat2:
    return tuple(a ^ b for a, b in zip(x, y))  # type: ignore[return-value]


def mat_mul(x: Mat2, y: Mat2) -> Mat2:
    a, b, c, d = x
    e, f, g, h = y
    return ((a & e) ^ (b & g), (a & f) ^ (b & h), (c & e) ^ (d & g), (c & f) ^ (d & h))


def mat_apply(m: Mat2, x: int, y: int) -> Tuple[int, int]:
    return (m[0] & x) ^ (m[1] & y), (m[2] & x) ^ (m[3] & y)


@dataclass(frozen=True)
class MatRingF2:
    elements: FrozenSet[Mat2]

    def __post_init__(self) -> None:
        if IDENTITY not in self.elements:
            raise ValueError("ring must contain the identity")
        for x in self.elements:
            for y in self.elements:
                if mat_add(x, y) not in self.elements or mat_mul(x, y) not in self.elements:
                    raise ValueError("not closed under ring operations")

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, m: object) -> bool:
        return m in self.elements


def ring_generated(gens: Iterable[Mat2]) -> MatRingF2:
    """Smallest subring with identity containing ``gens``."""
    gens = list(gens)
    if len(gens) > 16:
        raise ValueError("at most 16 generators")
    elems = {ZERO, IDENTITY, *map(tuple, gens)}
    while True:
        new = set(elems)
        for x in elems:
            for y in elems:
                new.add(mat_add(x, y))
                new.add(mat_mul(x, y))
        if new == elems:
            return MatRingF2(frozenset(elems))
        elems = new


R_IV = ring_generated([ALPHA, BETA])
R_V = ring_generated([BETA])


# --- modules built from one- and two-dimensional factors ------------------

# How a ring element acts on a factor, as images of the factor's basis vectors.
FactorAction = Callable[[Mat2], List[Tuple[int, ...]]]


def _act_full(m: Mat2) -> List[Tuple[int, ...]]:
    return [mat_apply(m, 1, 0), mat_apply(m, 0, 1)]


def _act_first_line(m: Mat2) -> List[Tuple[int, ...]]:
    # the invariant line spanned by (1, 0)
    return [(m[0],)]


def _act_second_line(m: Mat2) -> List[Tuple[int, ...]]:
    # the invariant line spanned by (0, 1) (diagonal rings only)
    return [(m[3],)]


@dataclass
class RModule:
    """A direct sum of factors with a ring acting diagonally.

    Coordinates are packed into one int; ``offsets[i]`` is where factor i starts.
    """

    ring: MatRingF2
    kinds: List[str]
    offsets: List[int] = field(init=False)
    dim: int = field(init=False)

    ACTIONS = {"E2": (2, _act_full), "phi": (1, _act_first_line), "phi1": (1, _act_first_line), "phi2": (1, _act_second_line)}

    def __post_init__(self) -> None:
        self.offsets = []
        pos = 0
        for k in self.kinds:
            self.offsets.append(pos)
            pos += self.ACTIONS[k][0]
        self.dim = pos
        if self.dim > MAX_AMBIENT:
            raise ValueError(f"ambient dimension {self.dim} exceeds cap {MAX_AMBIENT}")
        self._check_invariant_lines()
        self._ops = {m: self._operator(m) for m in self.ring.elements}

    def _check_invariant_lines(self) -> None:
        for m in self.ring.elements:
            for k in self.kinds:
                if k in ("phi", "phi1") and m[2]:
                    raise ValueError("line (1,0) is not invariant under the ring")
                if k == "phi2" and m[1]:
                    raise ValueError("line (0,1) is not invariant under the ring")

    def _operator(self, m: Mat2) -> List[int]:
        """Images of the standard basis vectors under m."""
        images = []
        for k, off in zip(self.kinds, self.offsets):
            for col in self.ACTIONS[k][1](m):
                images.append(sum(bit << (off + i) for i, bit in enumerate(col)))
        return images

    def act(self, m: Mat2, v: int) -> int:
        out = 0
        ops = self._ops[m]
        i = 0
        while v:
            if v & 1:
                out ^= ops[i]
            v >>= 1
            i += 1
        return out

    def closure(self, vectors: Iterable[int]) -> Tuple[int, ...]:
        basis = gf2.rref_rows(vectors)
        while True:
            extra = [self.act(m, b) for m in self.ring.elements for b in basis]
            nxt = gf2.rref_rows(basis + extra)
            if nxt == basis:
                return tuple(basis)
            basis = nxt

    def submodules(self) -> List[Subspace]:
        """Every ring-stable subspace, each once."""
        start = self.closure([])
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for basis in frontier:
                sub = Subspace.span(self.dim, basis)
                for v in range(1, 1 << self.dim):
                    if sub.contains(v):
                        continue
                    key = self.closure(list(basis) + [v])
                    if key not in seen:
                        seen.add(key)
                        nxt.append(key)
            frontier = nxt
        return [Subspace.span(self.dim, b) for b in sorted(seen, key=lambda b: (len(b), b))]

    def coordinate(self, factor: int, which: int) -> int:
        """Bit mask of coordinate ``which`` (0 = x, 1 = y) of a factor."""
        size = self.ACTIONS[self.kinds[factor]][0]
        if which >= size:
            raise ValueError("coordinate out of range")
        return 1 << (self.offsets[factor] + which)


def _projection_rank(sub: Subspace, masks: Sequence[int]) -> int:
    rows = []
    for v in sub.basis.bits:
        rows.append(sum(((v & m) != 0) << i for i, m in enumerate(masks)))
    return gf2.rank_rows(rows)


@dataclass
class VerificationReport:
    proposition: str
    parameters: Dict[str, int]
    verified: bool
    counterexample: Optional[List[int]] = None
    checked: int = 0

    def to_json(self) -> str:
        data = {"proposition": self.proposition, "parameters": self.parameters, "verified": self.verified}
        if self.counterexample is not None:
            data["counterexample"] = self.counterexample
        return json.dumps(data)


def _verify(module: RModule, masks_list: List[List[int]], name: str, params: Dict[str, int]) -> VerificationReport:
    checked = 0
    for T in module.submodules():
        if all(_projection_rank(T, masks) == len(masks) for masks in masks_list):
            checked += 1
            if T.dim != module.dim:
                return VerificationReport(name, params, False, list(T.basis.bits), checked)
    return VerificationReport(name, params, True, None, checked)


def prop_IV_report(a: int, b: int, ring: MatRingF2 = R_IV) -> VerificationReport:
    """Check that a submodule of phi^a + E2^b surjecting onto the phi
    coordinates and onto the y-coordinates of the E2 factors is everything."""
    if a < 0 or b < 0 or a + 2 * b > MAX_AMBIENT:
        raise ValueError("dimension cap exceeded")
    M = RModule(ring, ["phi"] * a + ["E2"] * b)
    phi_masks = [M.coordinate(i, 0) for i in range(a)]
    # the isogeny on E[2] has kernel (1,0), so it reads off the y-coordinate
    image_masks = [M.coordinate(a + i, 1) for i in range(b)]
    return _verify(M, [phi_masks, image_masks], "IV", {"a": a, "b": b})


def verify_prop_IV_cofavored(a: int, b: int) -> bool:
    return prop_IV_report(a, b).verified


def prop_V_report(a: int, b: int, c: int, ring: MatRingF2 = R_V) -> VerificationReport:
    """Same check for phi1^a + phi2^b + E2^c with both balanced kernels marked."""
    if min(a, b, c) < 0 or a + b + 2 * c > MAX_AMBIENT:
        raise ValueError("dimension cap exceeded")
    M = RModule(ring, ["phi1"] * a + ["phi2"] * b + ["E2"] * c)
    # phi2 kills (0,1), so it reads off x; phi1 kills (1,0), so it reads off y
    first = [M.coordinate(i, 0) for i in range(a)] + [M.coordinate(a + b + i, 0) for i in range(c)]
    second = [M.coordinate(a + i, 0) for i in range(b)] + [M.coordinate(a + b + i, 1) for i in range(c)]
    return _verify(M, [first, second], "V", {"a": a, "b": b, "c": c})


def verify_prop_V_cofavored(a: int, b: int, c: int) -> bool:
    return prop_V_report(a, b, c).verified


def _equivariant_count(src: str, dst: str, ring: MatRingF2) -> int:
    """Nonzero linear maps src -> dst commuting with the ring action.

    Spaces: "E2" (full), "phi" (line (1,0), action m00) and "quot"
    (E2 modulo that line, action m11).
    """
    dims = {"E2": 2, "phi": 1, "quot": 1}

    def action(kind: str, m: Mat2) -> List[List[int]]:
        if kind == "E2":
            return [[m[0], m[1]], [m[2], m[3]]]
        return [[m[0]]] if kind == "phi" else [[m[3]]]

    def mul(x: List[List[int]], y: List[List[int]]) -> List[List[int]]:
        return [[sum(x[i][k] & y[k][j] for k in range(len(y))) & 1 for j in range(len(y[0]))] for i in range(len(x))]

    n_src, n_dst = dims[src], dims[dst]
    count = 0
    for bits in range(1, 1 << (n_src * n_dst)):
        G = [[(bits >> (i * n_src + j)) & 1 for j in range(n_src)] for i in range(n_dst)]
        if all(mul(G, action(src, m)) == mul(action(dst, m), G) for m in ring.elements):
            count += 1
    return count


def classify_equivariant_homs(ring: MatRingF2 = R_IV) -> Tuple[int, int, int, int]:
    """Counts for E2->E2, E2->E2/phi, phi->E2, phi->E2/phi."""
    return (
        _equivariant_count("E2", "E2", ring),
        _equivariant_count("E2", "quot", ring),
        _equivariant_count("phi", "E2", ring),
        _equivariant_count("phi", "quot", ring),
    )


@lru_cache(maxsize=1)
def run_all() -> Tuple[VerificationReport, ...]:
    """Every in-cap instance of both propositions plus the hom count (computed once per process)."""
    reports = []
    for a in range(MAX_AMBIENT + 1):
        for b in range((MAX_AMBIENT - a) // 2 + 1):
            reports.append(prop_IV_report(a, b))
    for c in range(MAX_AMBIENT // 2 + 1):
        for a in range(MAX_AMBIENT - 2 * c + 1):
            for b in range(MAX_AMBIENT - 2 * c - a + 1):
                reports.append(prop_V_report(a, b, c))
    homs = classify_equivariant_homs()
    reports.append(VerificationReport("homs", {}, homs == (1, 1, 1, 0), None if homs == (1, 1, 1, 0) else list(homs)))
    return tuple(reports)
