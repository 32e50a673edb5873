"""Dense linear algebra over GF(2) with rows packed into Python ints.

Bit ``j`` of a row integer is the entry in column ``j``.  Random sampling
takes an explicit ``numpy.random.Generator``; use :func:`make_rng` and
:func:`spawn` (PCG64 seeded through ``SeedSequence``) for reproducible,
independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

MAX_ENUM_DIM = 5


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator seeded through SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn(seed: int, n: int) -> List[np.random.Generator]:
    """n statistically independent child streams of one seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def random_bits(rng: np.random.Generator, width: int) -> int:
    if width <= 0:
        return 0
    nbytes = (width + 7) // 8
    return int.from_bytes(rng.bytes(nbytes), "little") & ((1 << width) - 1)


@dataclass(frozen=True)
class BitMatrix:
    rows: int
    cols: int
    bits: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) != self.rows:
            raise ValueError("row count does not match storage")
        limit = 1 << self.cols
        if any(r < 0 or r >= limit for r in self.bits):
            raise ValueError("row has bits beyond the column count")

    @classmethod
    def from_lists(cls, entries: Sequence[Sequence[int]], cols: int | None = None) -> "BitMatrix":
        if cols is None:
            cols = len(entries[0]) if entries else 0
        packed = tuple(sum((int(x) & 1) << j for j, x in enumerate(row)) for row in entries)
        return cls(len(entries), cols, packed)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    def to_lists(self) -> List[List[int]]:
        return [[(r >> j) & 1 for j in range(self.cols)] for r in self.bits]

    def to_numpy(self) -> np.ndarray:
        return np.array(self.to_lists(), dtype=np.uint8).reshape(self.rows, self.cols)

    def entry(self, i: int, j: int) -> int:
        return (self.bits[i] >> j) & 1

    def transpose(self) -> "BitMatrix":
        out = []
        for j in range(self.cols):
            out.append(sum(((r >> j) & 1) << i for i, r in enumerate(self.bits)))
        return BitMatrix(self.cols, self.rows, tuple(out))

    def apply(self, vec: int) -> int:
        """Matrix-vector product M v with v packed like a row."""
        out = 0
        for i, r in enumerate(self.bits):
            out |= (bin(r & vec).count("1") & 1) << i
        return out

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for r in self.bits:
            acc = 0
            j = 0
            while r:
                if r & 1:
                    acc ^= other.bits[j]
                r >>= 1
                j += 1
            out.append(acc)
        return BitMatrix(self.rows, other.cols, tuple(out))


def rref_rows(rows: Iterable[int]) -> List[int]:
    """Reduced echelon basis of the span of ``rows`` (pivot = lowest set bit)."""
    basis: List[int] = []
    for r in rows:
        for b in basis:
            if r & (b & -b):
                r ^= b
        if r:
            low = r & -r
            basis = [b ^ r if b & low else b for b in basis]
            basis.append(r)
    basis.sort(key=lambda b: b & -b)
    return basis


def rank_rows(rows: Iterable[int]) -> int:
    return len(rref_rows(rows))


def rank(M: BitMatrix) -> int:
    return rank_rows(M.bits)


@dataclass(frozen=True)
class Subspace:
    ambient_dim: int
    basis: BitMatrix

    @classmethod
    def span(cls, ambient_dim: int, vectors: Iterable[int]) -> "Subspace":
        rows = rref_rows(vectors)
        return cls(ambient_dim, BitMatrix(len(rows), ambient_dim, tuple(rows)))

    @property
    def dim(self) -> int:
        return self.basis.rows

    def vectors(self) -> Iterator[int]:
        for coeffs in product((0, 1), repeat=self.dim):
            v = 0
            for c, b in zip(coeffs, self.basis.bits):
                if c:
                    v ^= b
            yield v

    def contains(self, v: int) -> bool:
        for b in self.basis.bits:
            if v & (b & -b):
                v ^= b
        return v == 0

    def __contains__(self, v: int) -> bool:
        return self.contains(v)

    def key(self) -> Tuple[int, ...]:
        return self.basis.bits


def kernel_basis(M: BitMatrix) -> Subspace:
    """Right kernel {x : M x = 0}, vectors packed as ints of width ``M.cols``."""
    n = M.cols
    # Eliminate on the augmented rows [M^T | I] so that zero left halves
    # expose kernel vectors.
    cols = M.transpose().bits
    aug = [(c, 1 << j) for j, c in enumerate(cols)]
    pivots: List[Tuple[int, int]] = []
    kernel: List[int] = []
    for left, right in aug:
        for pl, pr in pivots:
            if left & (pl & -pl):
                left ^= pl
                right ^= pr
        if left:
            pivots.append((left, right))
        else:
            kernel.append(right)
    return Subspace.span(n, kernel)


def image_basis(M: BitMatrix) -> Subspace:
    """Column space of M as a subspace of GF(2)^rows."""
    return Subspace.span(M.rows, M.transpose().bits)


def sample_matrix(m: int, n: int, rng: np.random.Generator) -> BitMatrix:
    return BitMatrix(m, n, tuple(random_bits(rng, n) for _ in range(m)))


def sample_alternating(n: int, rng: np.random.Generator) -> BitMatrix:
    rows = [0] * n
    for i in range(n):
        upper = random_bits(rng, n - i - 1)
        for k in range(n - i - 1):
            if (upper >> k) & 1:
                j = i + 1 + k
                rows[i] |= 1 << j
                rows[j] |= 1 << i
    return BitMatrix(n, n, tuple(rows))


def all_matrices(m: int, n: int) -> Iterator[BitMatrix]:
    """Every m x n matrix (2^(mn) of them)."""
    for rows in product(range(1 << n), repeat=m):
        yield BitMatrix(m, n, tuple(rows))


def all_alternating(n: int) -> Iterator[BitMatrix]:
    slots = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for mask in range(1 << len(slots)):
        rows = [0] * n
        for k, (i, j) in enumerate(slots):
            if (mask >> k) & 1:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
        yield BitMatrix(n, n, tuple(rows))


def _subspaces(n: int) -> Iterator[Tuple[int, ...]]:
    """Each subspace of GF(2)^n once, as its canonical reduced basis."""
    seen = {()}
    frontier = [()]
    yield ()
    while frontier:
        nxt = []
        for basis in frontier:
            sub = Subspace(n, BitMatrix(len(basis), n, basis))
            for v in range(1, 1 << n):
                if sub.contains(v):
                    continue
                key = tuple(rref_rows(list(basis) + [v]))
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
                    yield key
        frontier = nxt


def enumerate_subspaces(ambient_dim: int) -> List[Subspace]:
    if ambient_dim > MAX_ENUM_DIM:
        raise ValueError(f"subspace enumeration is capped at dimension {MAX_ENUM_DIM}")
    if ambient_dim < 0:
        raise ValueError("negative dimension")
    return [Subspace(ambient_dim, BitMatrix(len(b), ambient_dim, b)) for b in _subspaces(ambient_dim)]


def popcount(x: int) -> int:
    return x.bit_count()
