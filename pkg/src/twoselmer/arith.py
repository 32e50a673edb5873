"""Integer and local-field arithmetic for descent computations.

Square classes in Q^x/(Q^x)^2 are carried as squarefree integers.  Local
square classes at a place v are encoded as small bit vectors:

* infinity: one bit, set for negative numbers;
* odd p:    bit 0 = valuation parity, bit 1 = unit part is a non-residue;
* p = 2:    bit 0 = valuation parity, bits 1-2 encode the unit mod 8 in the
            basis (-1, 5), so 7 -> 0b01, 5 -> 0b10, 3 -> 0b11.

Local solvability of the descent torsors is decided by a p-adic search that
refines residue discs until the square class of every relevant polynomial is
constant on the disc, or a Hensel root is certified inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple, Union

from . import _fpoly as fp

Rational = Union[int, Fraction]

_MAX_INPUT = 1 << 63
_TRIAL_BOUND = 10**6
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


# --- primality and factorization --------------------------------------------


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int) -> int:
    """Return a nontrivial factor of the odd composite n."""
    for c in range(1, 200):
        y, r, q, g = 2, 1, 1, 1
        x = ys = 2
        m = 128
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise ArithmeticError(f"Pollard rho failed on {n}")


@dataclass(frozen=True)
class Factored:
    """A nonzero integer with its prime factorization of |value|."""

    value: int
    factors: Mapping[int, int] = field(default_factory=dict)

    @property
    def sign(self) -> int:
        return -1 if self.value < 0 else 1

    def primes(self) -> Tuple[int, ...]:
        return tuple(sorted(self.factors))


def factor(n: int) -> Factored:
    """Trial division up to 10**6, then Pollard rho (Brent) on the cofactor."""
    if n == 0:
        raise ValueError("cannot factor zero")
    if abs(n) > _MAX_INPUT:
        raise ValueError("factor() is limited to 63-bit inputs")
    m = abs(n)
    out: Dict[int, int] = {}
    while m % 2 == 0:
        out[2] = out.get(2, 0) + 1
        m //= 2
    p = 3
    while p * p <= m and p <= _TRIAL_BOUND:
        while m % p == 0:
            out[p] = out.get(p, 0) + 1
            m //= p
        p += 2
    stack = [m] if m > 1 else []
    while stack:
        k = stack.pop()
        if is_prime(k):
            out[k] = out.get(k, 0) + 1
            continue
        root = math.isqrt(k)
        if root * root == k:
            stack.extend((root, root))
            continue
        f = _pollard_brent(k)
        stack.extend((f, k // f))
    return Factored(n, dict(sorted(out.items())))


def valuation(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _rational_valuation(x: Rational, p: int) -> int:
    x = Fraction(x)
    return valuation(x.numerator, p) - valuation(x.denominator, p)


# --- global square classes --------------------------------------------------


@dataclass(frozen=True, order=True)
class SquareClass:
    """Element of Q^x/(Q^x)^2, stored as a sign and a set of primes."""

    sign: int
    primes: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def value(self) -> int:
        out = self.sign
        for p in self.primes:
            out *= p
        return out

    def __mul__(self, other: "SquareClass") -> "SquareClass":
        return SquareClass(self.sign * other.sign, self.primes ^ other.primes)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"SquareClass({self.value})"

    @classmethod
    def of(cls, x: Union[int, Fraction, "SquareClass"]) -> "SquareClass":
        if isinstance(x, SquareClass):
            return x
        x = Fraction(x)
        return squarefree_kernel(x.numerator * x.denominator)


def squarefree_kernel(n: int) -> SquareClass:
    """The squarefree integer congruent to n modulo squares."""
    if n == 0:
        raise ValueError("zero has no square class")
    f = factor(n)
    return SquareClass(f.sign, frozenset(p for p, e in f.factors.items() if e % 2))


def squarefree_part(n: int) -> int:
    return squarefree_kernel(n).value


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(e == 1 for e in factor(n).factors.values())


# --- places and local square classes ---------------------------------------


@dataclass(frozen=True, order=True)
class Place:
    """A place of Q: ``p == 0`` encodes the real place."""

    p: int

    def __post_init__(self) -> None:
        if self.p != 0 and not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @classmethod
    def infinity(cls) -> "Place":
        return cls(0)

    @property
    def tag(self) -> str:
        if self.p == 0:
            return "infinity"
        return "two" if self.p == 2 else "odd"

    @property
    def is_infinite(self) -> bool:
        return self.p == 0

    @property
    def class_rank(self) -> int:
        """dim over F_2 of Q_v^x/(Q_v^x)^2."""
        return {0: 1, 2: 3}.get(self.p, 2)

    def __str__(self) -> str:
        return "inf" if self.p == 0 else str(self.p)


INFINITY = Place(0)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p."""
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


@lru_cache(maxsize=None)
def least_nonresidue(p: int) -> int:
    n = 2
    while legendre(n, p) != -1:
        n += 1
    return n


def local_class_bits(x: Rational, v: Place) -> int:
    """Bit encoding of the class of x in Q_v^x/(Q_v^x)^2."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("zero has no square class")
    if v.p == 0:
        return 1 if x < 0 else 0
    p = v.p
    k = _rational_valuation(x, p)
    unit = x / Fraction(p) ** k
    if p == 2:
        u = unit.numerator * unit.denominator % 8  # denominator odd, d^2 = 1 mod 8
        minus = 1 if u % 4 == 3 else 0
        five = 1 if u in (3, 5) else 0
        return (k & 1) | (minus << 1) | (five << 2)
    u = unit.numerator * unit.denominator % p
    return (k & 1) | ((1 if legendre(u, p) == -1 else 0) << 1)


def local_class_reps(v: Place) -> List[int]:
    """Integer representatives indexed by their bit encoding."""
    if v.p == 0:
        return [1, -1]
    if v.p == 2:
        reps = [0] * 8
        for r in (1, 3, 5, 7, 2, 6, 10, 14):
            reps[local_class_bits(r, v)] = r
        return reps
    n = least_nonresidue(v.p)
    return [1, v.p, n, n * v.p]


@dataclass(frozen=True)
class LocalSquareClass:
    place: Place
    bits: int

    @classmethod
    def of(cls, x: Rational, v: Place) -> "LocalSquareClass":
        return cls(v, local_class_bits(x, v))

    @property
    def representative(self) -> int:
        return local_class_reps(self.place)[self.bits]

    @property
    def is_square(self) -> bool:
        return self.bits == 0

    def __mul__(self, other: "LocalSquareClass") -> "LocalSquareClass":
        if self.place != other.place:
            raise ValueError("classes live at different places")
        return LocalSquareClass(self.place, self.bits ^ other.bits)


def is_local_square(c: Union[SquareClass, Rational], v: Place) -> bool:
    if isinstance(c, SquareClass):
        c = c.value
    return local_class_bits(c, v) == 0


# --- Hilbert symbol --------------------------------------------------------


def _split_unit(x: int, p: int) -> Tuple[int, int]:
    k = valuation(x, p)
    return k, x // p**k


def hilbert_symbol(a: Rational, b: Rational, v: Place) -> int:
    """Hilbert symbol (a, b)_v for nonzero rationals."""
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    a = SquareClass.of(a).value
    b = SquareClass.of(b).value
    if v.p == 0:
        return -1 if a < 0 and b < 0 else 1
    p = v.p
    al, u = _split_unit(a, p)
    be, w = _split_unit(b, p)
    if p != 2:
        sign = -1 if (al * be * ((p - 1) // 2)) % 2 else 1
        return sign * legendre(u, p) ** be * legendre(w, p) ** al
    eps = lambda t: ((t - 1) // 2) % 2
    omega = lambda t: ((t * t - 1) // 8) % 2
    e = (eps(u) * eps(w) + al * omega(w) + be * omega(u)) % 2
    return -1 if e else 1


# --- p-adic solvability engine ---------------------------------------------


class PrecisionError(RuntimeError):
    """The residue-disc refinement exceeded its depth bound."""


def _content_valuation(g: Sequence[int], p: int) -> int:
    return min(valuation(c, p) for c in g if c)


def _odd_residue_exists(hbar: List[fp.Poly], p: int, excluded: set) -> bool:
    """Is there t in F_p, outside ``excluded``, with every hbar[i](t) a nonzero square?"""
    if p < fp.SCAN_LIMIT:
        for t in range(p):
            if t in excluded:
                continue
            if all(legendre(fp.evaluate(h, t), p) == 1 for h in hbar):
                return True
        return False
    # Large p: a product of a subset that is a constant times a square forces
    # the character of that product; otherwise Weil's bound guarantees a hit.
    if len(hbar) > 2 or any(len(h) > 5 for h in hbar):
        raise ValueError("character-sum shortcut needs at most two quartics")
    for k in range(1, len(hbar) + 1):
        for sub in combinations(hbar, k):
            prod: fp.Poly = [1]
            for h in sub:
                prod = fp.mul(prod, h, p)
            sq = fp.square_root(prod, p)
            if sq is not None and legendre(sq[0], p) == -1:
                return False
    return True


def _odd_search(polys: List[fp.Poly], p: int, depth: int, cap: int) -> bool:
    """Does some t in Z_p make every polynomial a square (zero allowed) in Q_p?"""
    parity = []
    live = []
    for g in polys:
        m = _content_valuation(g, p)
        g = [c // p ** (2 * (m // 2)) for c in g]
        hbar = fp.mod(g, p) if m % 2 == 0 else fp.mod([c // p for c in g], p)
        if len(hbar) == 1:
            # constant class on the whole disc
            if m % 2 or legendre(hbar[0], p) != 1:
                return False
            continue
        parity.append(m % 2)
        live.append((g, hbar))
    if not live:
        return True
    if len(live) == 1:
        hbar = live[0][1]
        deriv = fp.mod([i * c for i, c in enumerate(hbar)][1:], p)
        if any(fp.evaluate(deriv, r) % p for r in fp.roots(hbar, p)):
            return True  # a simple root lifts to a zero of the polynomial
    root_set: set = set()
    for _, h in live:
        root_set.update(fp.roots(h, p))
    if not any(parity) and _odd_residue_exists([h for _, h in live], p, root_set):
        return True
    if not root_set:
        return False
    if depth >= cap:
        raise PrecisionError(f"refinement depth {cap} exceeded at p={p}")
    for r in sorted(root_set):
        sub = [fp.shift_scale(g, r, p) for g, _ in live]
        if _odd_search(sub, p, depth + 1, cap):
            return True
    return False


def _two_class_constant(g: Sequence[int]) -> Union[None, bool]:
    """On t in Z_2: True/False if g(t) has constant square/non-square class."""
    g0 = g[0]
    if g0 == 0:
        return None
    v0 = valuation(g0, 2)
    for c in g[1:]:
        if c and valuation(c, 2) < v0 + 3:
            return None
    return local_class_bits(g0, Place(2)) == 0


def _two_has_root(g: Sequence[int]) -> bool:
    """Hensel: a root of g in Z_2 when v(g(0)) > 2 v(g'(0)), or when the linear
    coefficient strictly dominates the higher ones and divides g(0)."""
    if g[0] == 0:
        return True
    if len(g) < 2 or g[1] == 0:
        return False
    v0, v1 = valuation(g[0], 2), valuation(g[1], 2)
    if v0 >= v1 and all(c == 0 or valuation(c, 2) > v1 for c in g[2:]):
        return True  # g / 2^v1 has a unit derivative everywhere and a root mod 2
    return v0 > 2 * v1


def _two_search(polys: List[fp.Poly], depth: int, cap: int) -> bool:
    polys = [fp.trim(g) for g in polys]
    status = [_two_class_constant(g) for g in polys]
    if any(s is False for s in status):
        return False
    if all(s is True for s in status):
        return True
    open_idx = [i for i, s in enumerate(status) if s is None]
    if len(open_idx) == 1 and _two_has_root(polys[open_idx[0]]):
        return True
    if depth >= cap:
        raise PrecisionError(f"refinement depth {cap} exceeded at p=2")
    for r in (0, 1):
        if _two_search([fp.shift_scale(g, r, 2) for g in polys], depth + 1, cap):
            return True
    return False


def _padic_point(polys: List[fp.Poly], deg: int, p: int, disc: int) -> bool:
    """Search P^1(Q_p) for a point where all even-degree ``polys`` are squares."""
    cap = 2 * valuation(disc, p) + 12
    search = (lambda fs: _two_search(fs, 0, cap)) if p == 2 else (lambda fs: _odd_search(fs, p, 0, cap))
    if search([list(g) for g in polys]):
        return True
    # the chart at infinity: t = 1/x with t in pZ_p
    flipped = [fp.scale_var(fp.reverse(g, deg), p) for g in polys]
    return search(flipped)


def _check_nonzero_class(c: Union[SquareClass, Rational]) -> int:
    if isinstance(c, SquareClass):
        return c.value
    c = Fraction(c)
    if c == 0:
        raise ValueError("zero is not a square class")
    return SquareClass.of(c).value


def quartic_locally_solvable(d1: Union[SquareClass, Rational], a: int, b: int, v: Place) -> bool:
    """Does N^2 = d1 M^4 + a M^2 e^2 + (b/d1) e^4 have a Q_v point with (M, e) != 0?"""
    if b == 0 or a * a - 4 * b == 0:
        raise ValueError("degenerate quartic: b(a^2 - 4b) = 0")
    c = _check_nonzero_class(d1)
    # scale by c^2 so all coefficients are integral
    c0, c2, c4 = c**3, a * c * c, b * c
    if v.p == 0:
        if c0 > 0 or c4 > 0:
            return True
        return c2 > 0 and c2 * c2 >= 4 * c0 * c4
    disc = 16 * c0 * c4 * (c2 * c2 - 4 * c0 * c4) ** 2
    return _padic_point([[c4, 0, c2, 0, c0]], 4, v.p, disc)


def quadric_pair_locally_solvable(
    d1: Union[SquareClass, Rational],
    d2: Union[SquareClass, Rational],
    roots: Tuple[int, int, int],
    v: Place,
) -> bool:
    """Local point on d1 z1^2 - d2 z2^2 = e2 - e1, d1 z1^2 - d1 d2 z3^2 = e3 - e1."""
    e1, e2, e3 = roots
    if len({e1, e2, e3}) < 3:
        raise ValueError("roots must be distinct")
    c1 = _check_nonzero_class(d1)
    c2 = _check_nonzero_class(d2)
    if local_class_bits(c1, v) == 0 and local_class_bits(c2, v) == 0:
        return True  # points at infinity of the torsor
    # x = e1 + c1 s^2; need c2 (x - e2) and c1 c2 (x - e3) to be squares
    g2 = [c2 * (e1 - e2), 0, c2 * c1]
    g3 = [c1 * c2 * (e1 - e3), 0, c1 * c1 * c2]
    if v.p == 0:
        lo, hi = Fraction(0), None
        for g in (g2, g3):
            slope, const = g[2], g[0]
            if slope > 0:
                lo = max(lo, Fraction(-const, slope))
            elif const < 0:
                return False
            elif slope < 0:
                bound = Fraction(-const, slope)
                hi = bound if hi is None else min(hi, bound)
        return hi is None or lo <= hi
    disc = c1 * c2 * (e1 - e2) * (e1 - e3) * (e2 - e3)
    return _padic_point([g2, g3], 2, v.p, disc)


def primes_of(n: int) -> Tuple[int, ...]:
    return factor(n).primes() if n else ()


def bad_places(*ns: int) -> List[Place]:
    """{inf, 2} together with the primes dividing the product of ns."""
    ps = {2}
    for n in ns:
        ps.update(primes_of(n))
    return [INFINITY] + [Place(p) for p in sorted(ps)]


def class_basis(places: Iterable[Place]) -> List[int]:
    """Basis of Q(S, 2): -1 and the finite primes of S."""
    return [-1] + sorted(v.p for v in places if v.p)
