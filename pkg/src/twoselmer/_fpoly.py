"""Small dense polynomial helpers over Z and F_p.

Polynomials are lists of coefficients, lowest degree first.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

Poly = List[int]


def trim(f: Sequence[int]) -> Poly:
    out = list(f)
    while out and out[-1] == 0:
        out.pop()
    return out


def degree(f: Sequence[int]) -> int:
    return len(trim(f)) - 1


def evaluate(f: Sequence[int], x: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = acc * x + c
    return acc


def shift_scale(f: Sequence[int], a: int, s: int) -> Poly:
    """Coefficients of f(a + s*t) as a polynomial in t."""
    # Horner in the ring Z[t] with the linear polynomial a + s*t.
    out: Poly = []
    for c in reversed(f):
        nxt = [0] * (len(out) + 1)
        for i, coef in enumerate(out):
            nxt[i] += coef * a
            nxt[i + 1] += coef * s
        nxt[0] += c
        out = nxt
    return out


def scale_var(f: Sequence[int], s: int) -> Poly:
    """Coefficients of f(s*t)."""
    return [c * s**i for i, c in enumerate(f)]


def reverse(f: Sequence[int], deg: int) -> Poly:
    """t^deg * f(1/t) for a polynomial of formal degree ``deg``."""
    padded = list(f) + [0] * (deg + 1 - len(f))
    return padded[::-1]


# --- arithmetic mod p -------------------------------------------------------


def mod(f: Sequence[int], p: int) -> Poly:
    return trim([c % p for c in f])


def mul(f: Sequence[int], g: Sequence[int], p: int) -> Poly:
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return mod(out, p)


def divmod_poly(f: Sequence[int], g: Sequence[int], p: int) -> Tuple[Poly, Poly]:
    f = mod(f, p)
    g = mod(g, p)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    inv = pow(g[-1], -1, p)
    q = [0] * max(len(f) - len(g) + 1, 0)
    r = list(f)
    while len(r) >= len(g) and r:
        shift = len(r) - len(g)
        c = r[-1] * inv % p
        q[shift] = c
        for i, b in enumerate(g):
            r[shift + i] = (r[shift + i] - c * b) % p
        r = trim(r)
    return trim(q), r


def gcd(f: Sequence[int], g: Sequence[int], p: int) -> Poly:
    a, b = mod(f, p), mod(g, p)
    while b:
        a, b = b, divmod_poly(a, b, p)[1]
    if not a:
        return a
    inv = pow(a[-1], -1, p)
    return [c * inv % p for c in a]


def powmod(base: Sequence[int], e: int, f: Sequence[int], p: int) -> Poly:
    result: Poly = [1]
    b = divmod_poly(base, f, p)[1]
    while e:
        if e & 1:
            result = divmod_poly(mul(result, b, p), f, p)[1]
        b = divmod_poly(mul(b, b, p), f, p)[1]
        e >>= 1
    return result


def _split(f: Poly, p: int, out: List[int]) -> None:
    """Collect the roots of a monic squarefree f that splits into linear factors."""
    d = len(f) - 1
    if d <= 0:
        return
    if d == 1:
        out.append((-f[0]) % p)
        return
    a = 1
    while True:
        h = powmod([a, 1], (p - 1) // 2, f, p) or [0]
        h[0] = (h[0] - 1) % p
        g = gcd(f, trim(h), p)
        if 0 < len(g) - 1 < d:
            _split(g, p, out)
            _split(divmod_poly(f, g, p)[0], p, out)
            return
        a += 1


SCAN_LIMIT = 1000


def roots(f: Sequence[int], p: int) -> List[int]:
    """Distinct roots in F_p of a nonzero polynomial."""
    f = mod(f, p)
    if not f:
        raise ValueError("zero polynomial has every residue as a root")
    if len(f) == 1:
        return []
    if p < SCAN_LIMIT:
        return [x for x in range(p) if evaluate(f, x) % p == 0]
    monic = [c * pow(f[-1], -1, p) % p for c in f]
    xp = powmod([0, 1], p, monic, p)
    xp = list(xp) + [0] * max(0, 2 - len(xp))
    xp[1] = (xp[1] - 1) % p
    g = gcd(monic, trim(xp), p)
    found: List[int] = []
    if len(g) > 1 and g[0] == 0:
        found.append(0)
        g = divmod_poly(g, [0, 1], p)[0]
    _split(g, p, found)
    return sorted(set(found))


def square_root(f: Sequence[int], p: int) -> Optional[Tuple[int, Poly]]:
    """Write f = c * g^2 over F_p with c a constant, if possible.

    Returns ``(c, g)`` or None. The constant c is the leading coefficient.
    """
    f = mod(f, p)
    if not f:
        raise ValueError("zero polynomial")
    deg = len(f) - 1
    if deg % 2:
        return None
    c = f[-1]
    inv = pow(c, -1, p)
    m = [x * inv % p for x in f]
    half = deg // 2
    g = [0] * (half + 1)
    g[half] = 1
    inv2 = pow(2, -1, p)
    # Match coefficients from the top down.
    for k in range(half - 1, -1, -1):
        idx = half + k
        acc = 0
        for i in range(k + 1, half + 1):
            j = idx - i
            if k < j <= half:
                acc += g[i] * g[j]
        g[k] = (m[idx] - acc) * inv2 % p
    if mul(g, g, p) != m:
        return None
    return c, g
