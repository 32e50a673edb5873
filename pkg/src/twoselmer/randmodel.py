"""Random-matrix laws over GF(2) and the moment identities built on them.

Finite laws are exact ``Fraction`` values.  Limits in the matrix size are
evaluated at a finite size large enough that the relative error is below
``2**-LIMIT_MARGIN``; each distribution carries an explicit tail bound.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from . import gf2
from .gf2 import BitMatrix, Subspace

Number = Union[Fraction, float]

LIMIT_MARGIN = 64
EULER_PRODUCT = 0.28878809508660242  # prod_{i>=1} (1 - 2^-i)


@dataclass
class RankDistribution:
    """Law of a nonnegative integer rank with a bound on unlisted mass."""

    probs: Dict[int, Number]
    tail_bound: float = 0.0
    eps: float = 1e-9

    def total(self) -> Number:
        return sum(self.probs.values(), Fraction(0) if self._exact() else 0.0)

    def _exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.probs.values())

    def check(self) -> None:
        if any(v < 0 for v in self.probs.values()):
            raise ValueError("negative probability")
        tot = float(self.total())
        if not (1 - self.eps <= tot + self.tail_bound and tot <= 1 + self.eps):
            raise ValueError(f"mass {tot} with tail {self.tail_bound} is not a probability law")

    def __getitem__(self, r: int) -> Number:
        return self.probs.get(r, 0)

    def support(self) -> List[int]:
        return sorted(r for r, p in self.probs.items() if p > 0)

    def mean(self) -> float:
        return float(sum(r * p for r, p in self.probs.items()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "probability", "error_bound"])
        for r in sorted(self.probs):
            w.writerow([r, _fmt(self.probs[r]), repr(self.tail_bound)])
        return buf.getvalue()


def _fmt(x: Number) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator < 10**12 else repr(float(x))
    return repr(float(x))


# --- counting helpers -------------------------------------------------------


@lru_cache(maxsize=None)
def gaussian_binomial(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= 2 ** (n - i) - 1
        den *= 2 ** (i + 1) - 1
    return num // den


@lru_cache(maxsize=None)
def count_inj(k: int, n: int) -> int:
    """Number of linear injections GF(2)^k -> GF(2)^n."""
    if k > n:
        return 0
    out = 1
    for i in range(k):
        out *= 2**n - 2**i
    return out


def count_surj(k: int, r: int) -> int:
    """Number of linear surjections GF(2)^k -> GF(2)^r."""
    return count_inj(r, k)


# --- P^Mat ------------------------------------------------------------------


@lru_cache(maxsize=None)
def p_mat_exact(j: int, m: int, n: int) -> Fraction:
    """P(kernel of a uniform m x n matrix has dimension j)."""
    if j < 0 or j > n:
        raise ValueError("need 0 <= j <= n")
    if m < 0:
        raise ValueError("negative row count")
    prod = 1
    for i in range(n - j):
        prod *= 2**m - 2**i
    return Fraction(gaussian_binomial(n, j) * prod, 2 ** (m * n))


def p_mat_enumerate(m: int, n: int) -> Dict[int, Fraction]:
    """Kernel-dimension law by listing every m x n matrix."""
    counts: Dict[int, int] = {}
    for M in gf2.all_matrices(m, n):
        j = n - gf2.rank(M)
        counts[j] = counts.get(j, 0) + 1
    total = 2 ** (m * n)
    return {j: Fraction(c, total) for j, c in sorted(counts.items())}


def p_mat_limit(j: int, u: int, tol: float = 1e-12) -> float:
    """Limit of P(kernel dim j) for (n-u) x n matrices as n grows, to absolute error tol."""
    if j < max(u, 0):
        return 0.0
    n = max(j, u, 0) + 1
    prev = float(p_mat_exact(j, n - u, n))
    while True:
        n += 1
        cur = float(p_mat_exact(j, n - u, n))
        if abs(cur - prev) < tol / 2:
            return cur
        prev = cur


def p_mat_limit_closed_form(j: int, u: int) -> float:
    """Cohen-Lenstra style product formula for the same limit."""
    if j < max(u, 0):
        return 0.0
    k = j - max(u, 0)
    w = abs(u)
    log2p = -k * (k + w)
    for i in range(k + 1, 200):
        log2p += math.log2(1 - 2.0**-i)
    for i in range(k + w + 1, 200):
        log2p += math.log2(1 - 2.0**-i)
    return 2.0**log2p / EULER_PRODUCT


@lru_cache(maxsize=None)
def p_mat_limit_exact(j: int, u: int) -> Fraction:
    """Finite-size surrogate for the limit, relative error below 2^(2-LIMIT_MARGIN)."""
    if j < max(u, 0):
        return Fraction(0)
    n = j + abs(u) + LIMIT_MARGIN
    return p_mat_exact(j, n - u, n)


def p_mat_tail_bound(k_max: int, u: int) -> float:
    """Upper bound on the limiting mass with kernel dimension beyond max(u,0)+k_max."""
    w = abs(u)
    return sum(2.0 ** (-k * (k + w)) for k in range(k_max + 1, k_max + 60)) / EULER_PRODUCT


def p_mat_limit_distribution(u: int, max_rank: int = 30) -> RankDistribution:
    lo = max(u, 0)
    probs = {r: p_mat_limit_exact(r, u) for r in range(lo, max_rank + 1)}
    rel = 2.0 ** (2 - LIMIT_MARGIN)
    return RankDistribution(probs, p_mat_tail_bound(max_rank - lo, u) + rel)


# --- P^Alt ------------------------------------------------------------------


@lru_cache(maxsize=None)
def count_alternating_of_rank(n: int, r: int) -> int:
    """Number of alternating n x n matrices over GF(2) of rank r."""
    if r % 2 or r < 0 or r > n:
        return 0
    k = r // 2
    num = den = 1
    for i in range(k):
        num *= 2 ** (2 * i) * (2 ** (n - 2 * i) - 1) * (2 ** (n - 2 * i - 1) - 1)
        den *= 2 ** (2 * i + 2) - 1
    return num // den


@lru_cache(maxsize=None)
def p_alt_exact(j: int, n: int) -> Fraction:
    """P(kernel of a uniform alternating n x n matrix has dimension j)."""
    if j < 0 or j > n:
        raise ValueError("need 0 <= j <= n")
    return Fraction(count_alternating_of_rank(n, n - j), 2 ** (n * (n - 1) // 2))


def p_alt_enumerate(n: int) -> Dict[int, Fraction]:
    counts: Dict[int, int] = {}
    for M in gf2.all_alternating(n):
        j = n - gf2.rank(M)
        counts[j] = counts.get(j, 0) + 1
    total = 2 ** (n * (n - 1) // 2)
    return {j: Fraction(c, total) for j, c in sorted(counts.items())}


# --- P^V --------------------------------------------------------------------


def symplectic_swap(x: Union[int, np.ndarray]) -> Union[int, np.ndarray]:
    """Swap bits 2i and 2i+1, so that J(x, y) = parity(x & swap(y))."""
    even = 0x5555555555555555
    odd = even << 1
    if isinstance(x, np.ndarray):
        return ((x & np.uint64(even)) << np.uint64(1)) | ((x & np.uint64(odd)) >> np.uint64(1))
    return ((x & even) << 1) | ((x & odd) >> 1)


def symplectic_pairing(x: int, y: int) -> int:
    return gf2.popcount(x & symplectic_swap(y)) & 1


def _check_even(m: int) -> None:
    if m % 2 or m < 0:
        raise ValueError("the target dimension m must be even and nonnegative")


@lru_cache(maxsize=None)
def _p_v_law(n: int, m: int) -> Tuple[Tuple[int, Fraction], ...]:
    """Kernel law of v,w -> J(Tv, Tw) via the span/radical Markov chain.

    Adding a uniform column x to a span W of dim s with radical of dim t:
    x in W with prob 2^(s-m); x pairs nontrivially with the radical with
    prob 1 - 2^-t (radical drops by one); otherwise it extends the radical.
    """
    _check_even(m)
    state: Dict[Tuple[int, int], Fraction] = {(0, 0): Fraction(1)}
    for _ in range(n):
        nxt: Dict[Tuple[int, int], Fraction] = {}
        for (s, t), pr in state.items():
            stay = Fraction(2**s, 2**m)
            drop = 1 - Fraction(1, 2**t)
            grow = Fraction(1, 2**t) - stay
            for key, w in (((s, t), stay), ((s + 1, t - 1), drop), ((s + 1, t + 1), grow)):
                if w:
                    nxt[key] = nxt.get(key, Fraction(0)) + pr * w
        state = nxt
    law: Dict[int, Fraction] = {}
    for (s, t), pr in state.items():
        j = n - s + t
        law[j] = law.get(j, Fraction(0)) + pr
    return tuple(sorted(law.items()))


def p_v_exact(j: int, n: int, m: int) -> Fraction:
    """P(kernel of the pulled-back symplectic pairing has dimension j)."""
    _check_even(m)
    if j < 0 or j > n:
        raise ValueError("need 0 <= j <= n")
    return dict(_p_v_law(n, m)).get(j, Fraction(0))


def _batch_rank(rows: np.ndarray, n: int) -> np.ndarray:
    """Ranks of a batch of n-row GF(2) matrices given as (N, n) row integers."""
    rows = rows.copy()
    N = rows.shape[0]
    rank = np.zeros(N, dtype=np.int64)
    used = np.zeros((N, n), dtype=bool)
    idx = np.arange(N)
    for col in range(n):
        bit = np.uint64(1 << col)
        has = ((rows & bit) != 0) & ~used
        any_pivot = has.any(axis=1)
        piv = np.argmax(has, axis=1)
        prow = rows[idx, piv]
        elim = ((rows & bit) != 0) & any_pivot[:, None]
        elim[idx, piv] = False
        rows = np.where(elim, rows ^ prow[:, None], rows)
        used[idx[any_pivot], piv[any_pivot]] = True
        rank += any_pivot
    return rank


def _pairing_kernel_dims(cols: np.ndarray, m: int) -> np.ndarray:
    """Kernel dims of J(t_i, t_j) for a batch of column tuples, shape (N, n)."""
    N, n = cols.shape
    if n == 0:
        return np.zeros(N, dtype=np.int64)
    swapped = symplectic_swap(cols)
    rows = np.zeros((N, n), dtype=np.uint64)
    for i in range(n):
        for k in range(n):
            bit = (np.bitwise_count(cols[:, i] & swapped[:, k]) & 1).astype(np.uint64)
            rows[:, i] |= bit << np.uint64(k)
    return n - _batch_rank(rows, n)


def p_v_enumerate(n: int, m: int, chunk: int = 1 << 18) -> Dict[int, Fraction]:
    """Kernel law by listing all 2^(mn) maps T: GF(2)^n -> GF(2)^m."""
    _check_even(m)
    total = 1 << (m * n)
    counts = np.zeros(n + 1, dtype=np.int64)
    mask = np.uint64((1 << m) - 1) if m < 64 else np.uint64(-1)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        cols = np.stack([(codes >> np.uint64(m * i)) & mask for i in range(n)], axis=1) if n else np.zeros((len(codes), 0), dtype=np.uint64)
        dims = _pairing_kernel_dims(cols, m)
        counts += np.bincount(dims, minlength=n + 1)
    return {j: Fraction(int(c), total) for j, c in enumerate(counts) if c}


def p_v_monte_carlo(n: int, m: int, samples: int, rng: np.random.Generator) -> Dict[int, float]:
    _check_even(m)
    counts = np.zeros(n + 1, dtype=np.int64)
    chunk = 1 << 16
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        cols = rng.integers(0, 1 << m, size=(k, n), dtype=np.uint64) if m else np.zeros((k, n), dtype=np.uint64)
        counts += np.bincount(_pairing_kernel_dims(cols, m), minlength=n + 1)
        done += k
    return {j: c / samples for j, c in enumerate(counts) if c}


# --- the category C ---------------------------------------------------------


@dataclass(frozen=True, order=True)
class ObjC:
    """A pair V0 <= V with a = dim V0 and b = dim V/V0."""

    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 0 or self.b < 0:
            raise ValueError("dimensions must be nonnegative")


def count_inj_C(O: ObjC, A: ObjC) -> int:
    return count_inj(O.a, A.a) * count_inj(O.b, A.b) * 2 ** (O.b * A.a)


def count_inj_C_bruteforce(O: ObjC, A: ObjC) -> int:
    """Count monomorphisms by listing linear maps column by column.

    V = GF(2)^(a+b) with V0 the first a coordinates; likewise for W.
    """
    n_src, n_dst = O.a + O.b, A.a + A.b
    low = range(1 << A.a)  # images of V0 basis vectors must lie in W0
    full = range(1 << n_dst)
    quotient_mask = ((1 << n_dst) - 1) ^ ((1 << A.a) - 1)
    count = 0
    for cols in product(*([low] * O.a + [full] * O.b)):
        if gf2.rank_rows(cols) != n_src:
            continue
        if gf2.rank_rows(c & quotient_mask for c in cols[O.a:]) != O.b:
            continue
        count += 1
    return count


@dataclass
class Measure:
    """A truncated measure with a bound on the omitted mass."""

    masses: Dict[object, Number]
    tail_bound: float

    def total(self) -> float:
        return float(sum(self.masses.values()))


def measure_mu_IV(u: int, cutoff: int = 40) -> Measure:
    """mu((F^a, F^(a+b))) = P^Mat(a | (inf-u) x inf) * P^Alt(b | a-u)."""
    masses: Dict[object, Number] = {}
    for a in range(max(u, 0), cutoff + 1):
        pa = p_mat_limit_exact(a, u)
        for b in range(0, a - u + 1):
            pb = p_alt_exact(b, a - u)
            if pb:
                masses[ObjC(a, b)] = pa * pb
    tail = p_mat_tail_bound(cutoff - max(u, 0), u) + 2.0 ** (2 - LIMIT_MARGIN)
    return Measure(masses, tail)


@lru_cache(maxsize=None)
def _moment_IV_exact(a: int, b: int, u: int, cutoff: int) -> Fraction:
    O = ObjC(a, b)
    total = Fraction(0)
    for A, w in measure_mu_IV(u, cutoff).masses.items():
        k = count_inj_C(O, A)
        if k:
            total += w * k
    return total


def moment_mu_IV(a: int, b: int, u: int, cutoff: int = 40) -> float:
    """Integral of #Inj((F^a, F^(a+b)), -) against mu_IV(u)."""
    return float(_moment_IV_exact(a, b, u, cutoff))


def moment_mu_IV_target(a: int, b: int, u: int) -> float:
    return 2.0 ** (a * u + a * b + b * (b + 1) / 2)


# --- the category D ---------------------------------------------------------


@dataclass(frozen=True)
class ObjD:
    """A map GF(2)^dim -> L, recorded through its image subspace of L."""

    dim: int
    image: Subspace

    def __post_init__(self) -> None:
        if self.image.dim > self.dim:
            raise ValueError("image dimension exceeds source dimension")

    @property
    def L_dim(self) -> int:
        return self.image.ambient_dim


def count_inj_D(d: int, rho: int, c: int, v: int) -> int:
    """Monomorphisms from (F^d -> L, image rank rho) into (F^c -> L, image dim v).

    Assumes the source image lies in the target image.  Lifts of the rho
    independent directions are free in a coset of the kernel (dim c - v); the
    d - rho kernel directions must embed injectively into that kernel.
    """
    kappa = c - v
    return 2 ** (rho * kappa) * count_inj(d - rho, kappa)


def count_inj_D_bruteforce(src: List[int], dst: List[int], L_dim: int) -> int:
    """Monomorphisms between two explicit maps given by basis images in L."""
    d, c = len(src), len(dst)
    count = 0
    for cols in product(range(1 << c), repeat=d):
        if gf2.rank_rows(cols) != d:
            continue
        ok = True
        for i, col in enumerate(cols):
            img = 0
            for k in range(c):
                if (col >> k) & 1:
                    img ^= dst[k]
            if img != src[i]:
                ok = False
                break
        if ok:
            count += 1
    return count


def p_loc(c: int, v: int, L_dim: int) -> Fraction:
    """P(a uniform map GF(2)^c -> L has a given image of dimension v)."""
    return Fraction(count_surj(c, v), 2 ** (c * L_dim))


@lru_cache(maxsize=None)
def _moment_V_exact(d: int, rho: int, u: int, L_dim: int, cutoff: int) -> Fraction:
    total = Fraction(0)
    for c in range(max(u, 0), cutoff + 1):
        pc = p_mat_limit_exact(c, u)
        inner = Fraction(0)
        for v in range(rho, min(c, L_dim) + 1):
            n_sub = gaussian_binomial(L_dim - rho, v - rho)  # images containing the source image
            inner += n_sub * p_loc(c, v, L_dim) * count_inj_D(d, rho, c, v)
        total += pc * inner
    return total


def moment_mu_V(O: ObjD, u: int, L_dim: int, cutoff: int = 40) -> float:
    """Integral of #Inj(O, -) against P^Mat(d(A)) * P_loc(F^d(A), image(A))."""
    if O.L_dim != L_dim:
        raise ValueError("object lives over a different L")
    return float(_moment_V_exact(O.dim, O.image.dim, u, L_dim, cutoff))


def moment_mu_V_target(d: int, u: int, L_dim: int) -> float:
    return 2.0 ** (-L_dim * d + u * d)


# --- composed models ------------------------------------------------------


@dataclass
class JointDistribution:
    """Joint law of (r_phi, r2) with the marginals precomputed."""

    probs: Dict[Tuple[int, int], Fraction]
    tail_bound: float

    def marginal_first(self) -> RankDistribution:
        out: Dict[int, Fraction] = {}
        for (x, _), p in self.probs.items():
            out[x] = out.get(x, Fraction(0)) + p
        return RankDistribution(out, self.tail_bound)

    def marginal_second(self) -> RankDistribution:
        out: Dict[int, Fraction] = {}
        for (_, y), p in self.probs.items():
            out[y] = out.get(y, Fraction(0)) + p
        return RankDistribution(out, self.tail_bound)


def case_IV_r2_model(u: int, max_phi_rank: int = 40) -> JointDistribution:
    """r_phi ~ P^Mat(. | (inf-u) x inf); r2 - r_phi ~ P^Alt(. | r_phi - u)."""
    probs: Dict[Tuple[int, int], Fraction] = {}
    for x in range(max(u, 0), max_phi_rank + 1):
        px = p_mat_limit_exact(x, u)
        for k in range(0, x - u + 1):
            pk = p_alt_exact(k, x - u)
            if pk:
                probs[(x, x + k)] = px * pk
    tail = p_mat_tail_bound(max_phi_rank - max(u, 0), u) + 2.0 ** (2 - LIMIT_MARGIN)
    return JointDistribution(probs, tail)


def case_V_r2_model(u1: int, u0: int, max_phi_rank: int = 40) -> JointDistribution:
    """r_phi1 ~ P^Mat(. | (inf-u1) x inf); r2 - r_phi1 ~ P^V(. | (r_phi1-u1) -> u0)."""
    if u0 % 2 or u0 < 0:
        raise ValueError("u0 must be a nonnegative even integer")
    probs: Dict[Tuple[int, int], Fraction] = {}
    for x in range(max(u1, 0), max_phi_rank + 1):
        px = p_mat_limit_exact(x, u1)
        for k, pk in _p_v_law(x - u1, u0):
            if pk:
                probs[(x, x + k)] = px * pk
    tail = p_mat_tail_bound(max_phi_rank - max(u1, 0), u1) + 2.0 ** (2 - LIMIT_MARGIN)
    return JointDistribution(probs, tail)


def _log2(p: Number) -> float:
    if isinstance(p, Fraction):
        return math.log2(p.numerator) - math.log2(p.denominator)
    return math.log2(p)


def tail_exponent(dist: RankDistribution, r_lo: int, r_hi: int) -> float:
    """Least-squares slope of -log2 P(rank = r) against r^2 on [r_lo, r_hi].

    Ranks with probability exactly zero (parity constraints) are skipped.
    """
    if not (r_hi > r_lo >= 5):
        raise ValueError("need r_hi > r_lo >= 5")
    listed = [r for r in dist.probs if r_lo <= r <= r_hi]
    if not listed or max(dist.probs) < r_hi:
        raise ValueError("distribution is not certified up to r_hi")
    xs, ys = [], []
    for r in range(r_lo, r_hi + 1):
        p = dist.probs.get(r, 0)
        if p > 0:
            xs.append(float(r * r))
            ys.append(-_log2(p))
    if len(xs) < 3:
        raise ValueError("too few ranks with positive probability")
    slope, _ = np.polyfit(np.array(xs), np.array(ys), 1)
    return float(slope)


def table(dist_name: str, params: Mapping[str, int]) -> RankDistribution:
    """Distribution tables behind the command-line ``model`` subcommand."""
    if dist_name == "mat":
        if "m" in params:
            n = params["n"]
            return RankDistribution({j: p_mat_exact(j, params["m"], n) for j in range(n + 1)})
        return p_mat_limit_distribution(params.get("u", 0), params.get("max_rank", 30))
    if dist_name == "alt":
        n = params["n"]
        return RankDistribution({j: p_alt_exact(j, n) for j in range(n + 1) if p_alt_exact(j, n)})
    if dist_name == "v":
        n, m = params["n"], params["m"]
        return RankDistribution({j: p for j, p in _p_v_law(n, m)})
    if dist_name == "case4":
        return case_IV_r2_model(params.get("u", 0), params.get("max_rank", 30)).marginal_second()
    if dist_name == "case5":
        return case_V_r2_model(params.get("u1", 0), params.get("u0", 2), params.get("max_rank", 30)).marginal_second()
    raise ValueError(f"unknown distribution {dist_name!r}")
