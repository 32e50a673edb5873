"""Isogeny and 2-Selmer groups of quadratic twists by local conditions.

Square classes are handled in bit coordinates: at a place v a class is the
integer ``local_class_bits(x, v)``, and a global class supported on S is a
coefficient vector over the basis ``-1, p1, ..., pk`` of Q(S, 2).

For phi: E -> E0 with kernel (0, 0), the local group W_v(phi, d) is the image
of E0^d(Q_v) under x, i.e. the classes c for which
N^2 = c M^4 + A0 d M^2 e^2 + (B0 d^2 / c) e^4 has a Q_v-point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import gf2
from .arith import (
    INFINITY,
    Place,
    SquareClass,
    local_class_bits,
    local_class_reps,
    primes_of,
    quadric_pair_locally_solvable,
    quartic_locally_solvable,
    squarefree_kernel,
)
from .curves import CurveModel, TwoIsogeny, case_V_frame, classify_case, is_square, isogeny_from, twist
from .gf2 import BitMatrix, Subspace


class DescentError(RuntimeError):
    """A local computation produced something that is not a group of the right size."""


def _d_value(d: Union[SquareClass, int]) -> int:
    dv = d.value if isinstance(d, SquareClass) else int(d)
    if dv == 0:
        raise ValueError("twist parameter must be nonzero")
    return dv


def _span_checked(members: List[int], width: int) -> Subspace:
    sub = Subspace.span(width, members)
    if 2**sub.dim != len(members):
        raise DescentError("local solvable classes do not form a subgroup")
    return sub


def _annihilator(sub: Subspace) -> List[int]:
    """Functionals (as bit masks) vanishing on ``sub``."""
    if sub.dim == 0:
        return [1 << i for i in range(sub.ambient_dim)]
    return list(gf2.kernel_basis(sub.basis).basis.bits)


def _parity(x: int) -> int:
    return x.bit_count() & 1


# --- local conditions ---------------------------------------------------------


@dataclass(frozen=True)
class LocalConditionGroup:
    place: Place
    space: Subspace

    @property
    def order(self) -> int:
        return 2**self.space.dim

    @property
    def dim(self) -> int:
        return self.space.dim

    def contains(self, x: Union[SquareClass, int]) -> bool:
        xv = x.value if isinstance(x, SquareClass) else x
        return self.space.contains(local_class_bits(xv, self.place))

    def representatives(self) -> List[int]:
        reps = local_class_reps(self.place)
        return [reps[b] for b in self.space.vectors()]


_QUARTIC_CACHE: Dict[Tuple[int, int, int, int], Subspace] = {}
_PAIR_CACHE: Dict[Tuple[Tuple[int, int, int], int, int], Subspace] = {}


def quartic_image(A0: int, B0: int, d: int, v: Place) -> Subspace:
    """Classes c at v with N^2 = c M^4 + d A0 M^2 e^2 + (d^2 B0 / c) e^4 locally solvable.

    Depends on d only through its class at v, which is the cache key.
    """
    key = (A0, B0, v.p, local_class_bits(d, v))
    hit = _QUARTIC_CACHE.get(key)
    if hit is not None:
        return hit
    a, b = d * A0, d * d * B0
    reps = local_class_reps(v)
    members = [bits for bits, r in enumerate(reps) if quartic_locally_solvable(r, a, b, v)]
    sub = _span_checked(members, v.class_rank)
    _QUARTIC_CACHE[key] = sub
    return sub


def local_condition(phi: TwoIsogeny, d: Union[SquareClass, int], v: Place) -> LocalConditionGroup:
    dv = _d_value(d)
    T = phi.target
    return LocalConditionGroup(v, quartic_image(T.A, T.B, dv, v))


def support(phi_or_model: Union[TwoIsogeny, CurveModel], d: int) -> List[Place]:
    """{inf, 2} with the primes of d and of the bad fibres."""
    if isinstance(phi_or_model, TwoIsogeny):
        K = phi_or_model.kernel_model
    else:
        K = phi_or_model
    ps = {2} | set(primes_of(d)) | set(primes_of(K.B)) | set(primes_of(K.A * K.A - 4 * K.B))
    return [INFINITY] + [Place(p) for p in sorted(ps)]


# --- global Selmer groups -----------------------------------------------------


@dataclass
class SelmerGroup:
    kind: str  # "phi" or "two"
    basis: List[Union[SquareClass, Tuple[SquareClass, SquareClass]]]
    support: List[Place]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def elements(self) -> List[Union[SquareClass, Tuple[SquareClass, SquareClass]]]:
        one = SquareClass(1)
        out = []
        for mask in range(1 << self.dim):
            acc: Union[SquareClass, Tuple[SquareClass, SquareClass]] = one if self.kind == "phi" else (one, one)
            for i, b in enumerate(self.basis):
                if (mask >> i) & 1:
                    acc = acc * b if self.kind == "phi" else (acc[0] * b[0], acc[1] * b[1])  # type: ignore[index,operator]
            out.append(acc)
        return out

    def coordinates(self) -> "ClassCoordinates":
        return ClassCoordinates(self.support)

    def vectors(self) -> List[int]:
        """Basis as coefficient vectors over Q(S, 2) (pairs concatenated)."""
        cc = self.coordinates()
        if self.kind == "phi":
            return [cc.encode(b) for b in self.basis]  # type: ignore[arg-type]
        n = cc.size
        return [cc.encode(b[0]) | (cc.encode(b[1]) << n) for b in self.basis]  # type: ignore[index]

    def contains(self, x: Union[SquareClass, Tuple[SquareClass, SquareClass]]) -> bool:
        cc = self.coordinates()
        try:
            if self.kind == "phi":
                vec = cc.encode(x)  # type: ignore[arg-type]
            else:
                vec = cc.encode(x[0]) | (cc.encode(x[1]) << cc.size)  # type: ignore[index]
        except KeyError:
            return False
        return Subspace.span(2 * cc.size if self.kind == "two" else cc.size, self.vectors()).contains(vec)


@dataclass(frozen=True)
class ClassCoordinates:
    """Coordinates on Q(S, 2) with basis -1, p1, ..., pk."""

    places: Sequence[Place]

    @property
    def primes(self) -> List[int]:
        return [v.p for v in self.places if v.p]

    @property
    def size(self) -> int:
        return 1 + len(self.primes)

    def generators(self) -> List[int]:
        return [-1] + self.primes

    def encode(self, c: SquareClass) -> int:
        idx = {p: i + 1 for i, p in enumerate(self.primes)}
        out = 1 if c.sign < 0 else 0
        for p in c.primes:
            out |= 1 << idx[p]
        return out

    def decode(self, vec: int) -> SquareClass:
        sign = -1 if vec & 1 else 1
        ps = frozenset(p for i, p in enumerate(self.primes) if (vec >> (i + 1)) & 1)
        return SquareClass(sign, ps)


def _selmer_kernel(n_vars: int, rows: List[int]) -> List[int]:
    M = BitMatrix(len(rows), n_vars, tuple(rows))
    return list(gf2.kernel_basis(M).basis.bits)


def phi_selmer(phi: TwoIsogeny, d: Union[SquareClass, int]) -> SelmerGroup:
    dv = _d_value(d)
    S = support(phi, dv)
    cc = ClassCoordinates(S)
    gens = cc.generators()
    T = phi.target
    rows = []
    for v in S:
        W = quartic_image(T.A, T.B, dv, v)
        cols = [local_class_bits(g, v) for g in gens]
        for f in _annihilator(W):
            rows.append(sum(_parity(f & c) << j for j, c in enumerate(cols)))
    basis = [cc.decode(x) for x in _selmer_kernel(cc.size, rows)]
    return SelmerGroup("phi", basis, S)


def pair_image(roots: Tuple[int, int, int], d: int, v: Place) -> Subspace:
    """Local image of E^d(Q_v) under (x - e1, x - e2) in bit coordinates (low = first)."""
    key = (roots, v.p, local_class_bits(d, v))
    hit = _PAIR_CACHE.get(key)
    if hit is not None:
        return hit
    droots = tuple(d * e for e in roots)
    reps = local_class_reps(v)
    k = v.class_rank
    members = []
    for b1, r1 in enumerate(reps):
        for b2, r2 in enumerate(reps):
            if quadric_pair_locally_solvable(r1, r2, droots, v):  # type: ignore[arg-type]
                members.append(b1 | (b2 << k))
    sub = _span_checked(members, 2 * k)
    expected = {0: 1, 2: 3}.get(v.p, 2)
    if sub.dim != expected:
        raise DescentError(f"2-descent image at {v} has dimension {sub.dim}, expected {expected}")
    _PAIR_CACHE[key] = sub
    return sub


def two_selmer(E: CurveModel, d: Union[SquareClass, int]) -> SelmerGroup:
    """Sel^2 of E^d as pairs (x - e1, x - e2) with e1 = 0."""
    if not E.full_two_torsion:
        raise ValueError("complete 2-descent needs full rational 2-torsion")
    dv = _d_value(d)
    S = support(E, dv)
    cc = ClassCoordinates(S)
    gens = cc.generators()
    n = cc.size
    rows = []
    for v in S:
        W = pair_image(E.roots, dv, v)  # type: ignore[arg-type]
        k = v.class_rank
        cols = [local_class_bits(g, v) for g in gens]
        for f in _annihilator(W):
            f1, f2 = f & ((1 << k) - 1), f >> k
            row = sum(_parity(f1 & c) << j for j, c in enumerate(cols))
            row |= sum(_parity(f2 & c) << j for j, c in enumerate(cols)) << n
            rows.append(row)
    basis = []
    for x in _selmer_kernel(2 * n, rows):
        basis.append((cc.decode(x & ((1 << n) - 1)), cc.decode(x >> n)))
    return SelmerGroup("two", basis, S)


def torsion_images(E: CurveModel, d: Union[SquareClass, int]) -> List[Tuple[SquareClass, SquareClass]]:
    """Images of the three 2-torsion points of E^d under (x - e1, x - e2)."""
    dv = _d_value(d)
    e1, e2, e3 = (dv * e for e in E.roots)  # type: ignore[union-attr]
    sk = squarefree_kernel
    return [
        (sk((e1 - e2) * (e1 - e3)), sk(e1 - e2)),
        (sk(e2 - e1), sk((e2 - e1) * (e2 - e3))),
        (sk(e3 - e1), sk(e3 - e2)),
    ]


def phi_to_two(c: SquareClass) -> Tuple[SquareClass, SquareClass]:
    """The map on H^1 induced by E[phi] -> E[2] when the kernel point is at x = 0."""
    return (SquareClass(1), c)


# --- Tamagawa ratios ---------------------------------------------------------


@dataclass
class TamagawaData:
    isogeny: TwoIsogeny
    d: int
    local_dims: Dict[Place, int]
    u: int


def tamagawa_u(phi: TwoIsogeny, d: Union[SquareClass, int]) -> TamagawaData:
    dv = _d_value(d)
    T = phi.target
    dims = {v: quartic_image(T.A, T.B, dv, v).dim for v in support(phi, dv)}
    return TamagawaData(phi, dv, dims, sum(k - 1 for k in dims.values()))


def halves_origin(A: int, B: int) -> bool:
    """Is (0, 0) in 2E(Q) on y^2 = x^3 + A x^2 + B x?"""
    if not is_square(B):
        return False
    s = math.isqrt(B)
    return is_square(A + 2 * s) or is_square(A - 2 * s)


def has_halvable_torsion(E: CurveModel) -> bool:
    """Some rational 2-torsion point is twice a rational point."""
    for e in E.torsion_x():
        K = E.translate(e)
        if halves_origin(K.A, K.B):
            return True
    return False


def r_phi(phi: TwoIsogeny, d: Union[SquareClass, int]) -> Tuple[int, bool]:
    """(dim Sel^phi - 1, flag); the flag marks twists where source or target has
    a rational 2-torsion point divisible by 2."""
    dv = _d_value(d)
    sel = phi_selmer(phi, dv)
    flag = has_halvable_torsion(twist(phi.source, dv)) or has_halvable_torsion(twist(phi.target, dv))
    return sel.dim - 1, flag


# --- Case V: localization and the rank identity --------------------------------


@dataclass
class LocalizationImage:
    ambient_dim: int
    image: Subspace
    per_place_quotients: List[Tuple[Place, int]]
    kernel_dim: int


class CaseVData:
    """The fixed frame for a Case V curve: E with roots (0, e2, e3), phi1 with
    kernel 0, phi2 with kernel e2, their duals."""

    def __init__(self, E: CurveModel) -> None:
        self.model, self.phi1, self.phi2 = case_V_frame(E)
        self.phi1_dual = self.phi1.dual()
        self.phi2_dual = self.phi2.dual()
        self.E1 = self.phi1.target
        self.E2 = self.phi2.target
        M = self.model
        self.bad_primes = sorted({2} | set(primes_of(M.discriminant)))

    @property
    def places(self) -> List[Place]:
        return [INFINITY] + [Place(p) for p in self.bad_primes]


def _check_case_V(E: Union[CurveModel, CaseVData]) -> CaseVData:
    if isinstance(E, CaseVData):
        return E
    if classify_case(E).case != "V":
        raise ValueError("localization needs a Case V curve")
    return CaseVData(E)


def localization_image(E: Union[CurveModel, CaseVData], d: Union[SquareClass, int], d0: Union[SquareClass, int, None] = None) -> LocalizationImage:
    """Image of Sel^{phi1'}(E1^d) in the sum over bad places of W_v(phi1', d)/W_v(phi2, d).

    The quotient only depends on the local classes of d at the bad places, so
    for d in the twist class of d0 it is the same space as for d0.
    """
    data = _check_case_V(E)
    dv = _d_value(d)
    if d0 is not None:
        d0v = _d_value(d0)
        for v in data.places:
            if local_class_bits(dv, v) != local_class_bits(d0v, v):
                raise ValueError("d is not in the twist class of d0")
    M = data.model
    A2 = data.phi2.target
    sel = phi_selmer(data.phi1_dual, dv)
    gens = sel.basis
    coords: List[List[int]] = [[] for _ in gens]
    quotients = []
    total = 0
    for v in data.places:
        # W_v(phi1') is the image of E^d(Q_v) under x; W_v(phi2) that of E2^d(Q_v)
        big = quartic_image(M.A, M.B, dv, v)
        small = quartic_image(A2.A, A2.B, dv, v)
        for w in small.basis.bits:
            if not big.contains(w):
                raise DescentError(f"W_v(phi2) is not inside W_v(phi1') at {v}")
        funcs = _annihilator(small)
        # keep an independent set of functionals restricted to big
        restricted = [sum(_parity(f & b) << i for i, b in enumerate(big.basis.bits)) for f in funcs]
        chosen: List[int] = []
        span: List[int] = []
        for f, r in zip(funcs, restricted):
            if gf2.rank_rows(span + [r]) > len(span):
                span.append(r)
                chosen.append(f)
        q = big.dim - small.dim
        if len(chosen) != q:
            raise DescentError("quotient coordinates are inconsistent")
        quotients.append((v, q))
        total += q
        for gi, g in enumerate(gens):
            bits = local_class_bits(g.value, v)  # type: ignore[union-attr]
            if not big.contains(bits):
                raise DescentError(f"Selmer element {g} fails the local condition at {v}")
            coords[gi].extend(_parity(f & bits) for f in chosen)
    vecs = [sum(bit << i for i, bit in enumerate(c)) for c in coords]
    image = Subspace.span(total, vecs)
    return LocalizationImage(total, image, quotients, len(gens) - image.dim)


@dataclass
class RankIdentityRecord:
    d: int
    dim_sel_phi1: int
    dim_sel_phi1_dual: int
    dim_sel_phi2: int
    dim_sel_phi2_dual: int
    dim_sel2: int
    u1: int
    u2: int
    u0: int
    dim_L: int
    loc_image_dim: int
    defect: int
    flagged: bool
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def r_phi1(self) -> int:
        return self.dim_sel_phi1 - 1

    @property
    def r_phi1_dual(self) -> int:
        return self.dim_sel_phi1_dual - 1

    @property
    def r2(self) -> int:
        return self.dim_sel2 - 2

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def case_V_flagged(data: CaseVData, d: int) -> bool:
    return any(has_halvable_torsion(twist(C, d)) for C in (data.model, data.E1, data.E2))


def case_V_rank_identity_check(E: Union[CurveModel, CaseVData], d: Union[SquareClass, int]) -> RankIdentityRecord:
    data = _check_case_V(E)
    dv = _d_value(d)
    s1 = phi_selmer(data.phi1, dv)
    s1d = phi_selmer(data.phi1_dual, dv)
    s2 = phi_selmer(data.phi2, dv)
    s2d = phi_selmer(data.phi2_dual, dv)
    sel2 = two_selmer(data.model, dv)
    t1 = tamagawa_u(data.phi1, dv).u
    t2 = tamagawa_u(data.phi2, dv).u
    t1d = tamagawa_u(data.phi1_dual, dv).u
    t2d = tamagawa_u(data.phi2_dual, dv).u
    loc = localization_image(data, dv)
    u0 = -t1 - t2
    defect = s1.dim + s1d.dim - sel2.dim
    checks = {
        "greenberg_wiles": t1 == s1.dim - s1d.dim and t2 == s2.dim - s2d.dim,
        "dual_antisymmetry": t1 == -t1d and t2 == -t2d,
        "u0_even_nonnegative": u0 >= 0 and u0 % 2 == 0,
        "dim_L_equals_u0": loc.ambient_dim == u0,
        "defect_parity_bound": defect % 2 == 0 and 0 <= defect <= u0,
        "localization_injective": all(s1d.contains(c) for c in s2.basis)
        and loc.image.dim == s1d.dim - s2.dim,
        "phi_into_two": all(sel2.contains(phi_to_two(c)) for c in s1.basis),
        "torsion_in_two": all(sel2.contains(t) for t in torsion_images(data.model, dv)),
    }
    return RankIdentityRecord(
        d=dv,
        dim_sel_phi1=s1.dim,
        dim_sel_phi1_dual=s1d.dim,
        dim_sel_phi2=s2.dim,
        dim_sel_phi2_dual=s2d.dim,
        dim_sel2=sel2.dim,
        u1=t1,
        u2=t2,
        u0=u0,
        dim_L=loc.ambient_dim,
        loc_image_dim=loc.image.dim,
        defect=defect,
        flagged=case_V_flagged(data, dv),
        checks=checks,
    )


def clear_caches() -> None:
    _QUARTIC_CACHE.clear()
    _PAIR_CACHE.clear()
