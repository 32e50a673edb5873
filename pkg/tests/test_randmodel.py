from __future__ import annotations

import csv
import io
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoselmer import gf2
from twoselmer import randmodel as R
from twoselmer.gf2 import Subspace

# --- P^Mat ---------------------------------------------------------------------


@pytest.mark.parametrize("j, m, n, expected", [(3, 0, 3, 1), (0, 1, 1, Fraction(1, 2)), (0, 2, 2, Fraction(3, 8)), (2, 2, 2, Fraction(1, 16))])
def test_p_mat_exact_examples(j: int, m: int, n: int, expected: Fraction) -> None:
    assert R.p_mat_exact(j, m, n) == expected


@pytest.mark.parametrize("m, n", [(m, n) for m in range(4) for n in range(4)])
def test_p_mat_exact_matches_enumeration(m: int, n: int) -> None:
    law = R.p_mat_enumerate(m, n)
    for j in range(n + 1):
        assert R.p_mat_exact(j, m, n) == law.get(j, 0)


@given(st.integers(min_value=0, max_value=12), st.integers(min_value=0, max_value=12))
def test_p_mat_exact_sums_to_one(m: int, n: int) -> None:
    assert sum(R.p_mat_exact(j, m, n) for j in range(n + 1)) == 1


def test_p_mat_limit_examples() -> None:
    euler = math.prod(1 - 2.0**-i for i in range(1, 200))
    assert abs(R.p_mat_limit(0, 0, 1e-9) - euler) < 1e-9
    assert abs(euler - 0.288788) < 1e-6
    assert R.p_mat_limit(1, 2) == 0.0


@pytest.mark.parametrize("a, u", [(a, u) for a in range(0, 6) for u in range(-3, 4) if a >= max(u, 0)])
def test_p_mat_limit_reflection(a: int, u: int) -> None:
    assert R.p_mat_limit(a, u) == pytest.approx(R.p_mat_limit(a - u, -u), rel=0, abs=1e-12)
    assert R.p_mat_limit_exact(a, u) == R.p_mat_limit_exact(a - u, -u)


@pytest.mark.parametrize("j, u", [(j, u) for j in range(0, 8) for u in range(-3, 4)])
def test_p_mat_limit_matches_closed_form(j: int, u: int) -> None:
    closed = R.p_mat_limit_closed_form(j, u)
    assert R.p_mat_limit(j, u, tol=1e-12) == pytest.approx(closed, rel=0, abs=1e-12)
    assert float(R.p_mat_limit_exact(j, u)) == pytest.approx(closed, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("u", [-2, 0, 1, 3])
def test_p_mat_limit_distribution_is_certified(u: int) -> None:
    dist = R.p_mat_limit_distribution(u, 25)
    dist.check()
    assert min(dist.support()) == max(u, 0)


def test_p_mat_tail_slope_matches_product_formula() -> None:
    # the product formula gives -log2 P(max(u,0)+k) = k(k+|u|) + O(1), i.e. slope 1 in r^2
    dist = R.p_mat_limit_distribution(0, 40)
    assert R.tail_exponent(dist, 10, 30) == pytest.approx(1.0, abs=0.01)


# --- P^Alt ---------------------------------------------------------------------


@pytest.mark.parametrize("j, n, expected", [(1, 1, 1), (0, 2, Fraction(1, 2)), (2, 2, Fraction(1, 2)), (1, 2, 0), (0, 3, 0), (0, 0, 1)])
def test_p_alt_exact_examples(j: int, n: int, expected: Fraction) -> None:
    assert R.p_alt_exact(j, n) == expected


@pytest.mark.parametrize("n", range(0, 6))
def test_p_alt_exact_matches_enumeration(n: int) -> None:
    law = R.p_alt_enumerate(n)
    for j in range(n + 1):
        assert R.p_alt_exact(j, n) == law.get(j, 0)


@pytest.mark.parametrize("n", range(0, 15))
def test_p_alt_sums_to_one(n: int) -> None:
    assert sum(R.p_alt_exact(j, n) for j in range(n + 1)) == 1


# --- P^V -----------------------------------------------------------------------


def test_p_v_examples() -> None:
    assert R.p_v_exact(3, 3, 0) == 1
    assert R.p_v_exact(0, 2, 2) == Fraction(3, 8)
    assert R.p_v_exact(0, 4, 2) == 0  # j < n - m
    with pytest.raises(ValueError):
        R.p_v_exact(0, 2, 3)


def test_symplectic_pairing_is_alternating_and_nondegenerate() -> None:
    m = 4
    for x in range(1 << m):
        assert R.symplectic_pairing(x, x) == 0
        if x:
            assert any(R.symplectic_pairing(x, y) for y in range(1 << m))


@pytest.mark.parametrize("n, m", [(n, m) for n in range(0, 5) for m in (0, 2) if n * m <= 12] + [(3, 4), (2, 4), (1, 6)])
def test_p_v_exact_matches_enumeration(n: int, m: int) -> None:
    law = R.p_v_enumerate(n, m)
    for j in range(n + 1):
        assert R.p_v_exact(j, n, m) == law.get(j, 0)


@pytest.mark.parametrize("n, m, seed", [(5, 6, 1), (4, 6, 2), (3, 8, 3)])
def test_p_v_monte_carlo_within_three_standard_errors(n: int, m: int, seed: int) -> None:
    samples = 10**6
    freqs = R.p_v_monte_carlo(n, m, samples, gf2.make_rng(seed))
    for j in range(n + 1):
        p = float(R.p_v_exact(j, n, m))
        se = math.sqrt(max(p * (1 - p), 1e-12) / samples)
        assert abs(float(freqs.get(j, 0.0)) - p) <= 3 * se + 1e-12, j


def test_p_v_monte_carlo_reproducible() -> None:
    a = R.p_v_monte_carlo(3, 4, 1000, gf2.make_rng(9))
    b = R.p_v_monte_carlo(3, 4, 1000, gf2.make_rng(9))
    assert a == b


def test_p_v_parity() -> None:
    for n in range(7):
        for m in (0, 2, 4, 6):
            for j in range(n + 1):
                if (n - j) % 2:
                    assert R.p_v_exact(j, n, m) == 0


# --- category C ----------------------------------------------------------------


@pytest.mark.parametrize("O, A, expected", [((0, 0), (3, 2), 1), ((1, 0), (1, 0), 1), ((0, 1), (1, 1), 2), ((1, 0), (0, 1), 0)])
def test_count_inj_C_examples(O: tuple, A: tuple, expected: int) -> None:
    assert R.count_inj_C(R.ObjC(*O), R.ObjC(*A)) == expected


@pytest.mark.parametrize("O, A", [((a, b), (c, d)) for a in range(3) for b in range(3) for c in range(3) for d in range(3)])
def test_count_inj_C_matches_bruteforce(O: tuple, A: tuple) -> None:
    assert R.count_inj_C(R.ObjC(*O), R.ObjC(*A)) == R.count_inj_C_bruteforce(R.ObjC(*O), R.ObjC(*A))


def test_measure_mu_IV_examples() -> None:
    for u in (-1, 0, 2):
        mu = R.measure_mu_IV(u)
        assert abs(mu.total() - 1) < 1e-6
        for A in mu.masses:
            assert A.a >= max(u, 0)
    mu = R.measure_mu_IV(2)
    assert float(mu.masses[R.ObjC(2, 0)]) == pytest.approx(R.p_mat_limit(2, 2), rel=1e-12)


@pytest.mark.parametrize("a, b, u, expected", [(1, 0, 0, 1), (1, 1, 1, 8), (0, 0, -2, 1), (0, 0, 2, 1), (2, 1, -1, 2)])
def test_moment_mu_IV_examples(a: int, b: int, u: int, expected: float) -> None:
    assert R.moment_mu_IV(a, b, u) == pytest.approx(expected, rel=1e-6)
    assert R.moment_mu_IV_target(a, b, u) == expected


# --- category D ----------------------------------------------------------------


def test_moment_mu_V_examples() -> None:
    zero2 = Subspace.span(2, [])
    assert R.moment_mu_V(R.ObjD(0, zero2), 0, 2) == pytest.approx(1)
    assert R.moment_mu_V(R.ObjD(1, zero2), 0, 2) == pytest.approx(0.25, rel=1e-6)
    assert R.moment_mu_V(R.ObjD(2, zero2), 2, 2) == pytest.approx(1, rel=1e-6)
    with pytest.raises(ValueError):
        R.moment_mu_V(R.ObjD(1, zero2), 0, 3)


def _random_map(rng: random.Random, dim: int, L: int, inside: Subspace | None = None) -> list:
    pool = list(inside.vectors()) if inside is not None else list(range(1 << L))
    return [rng.choice(pool) for _ in range(dim)]


def test_count_inj_D_matches_bruteforce() -> None:
    rng = random.Random(17)
    for _ in range(400):
        L = rng.randint(0, 2)
        c = rng.randint(0, 3)
        dst = _random_map(rng, c, L)
        img = Subspace.span(L, dst)
        d = rng.randint(0, 3)
        src = _random_map(rng, d, L, img)
        rho = gf2.rank_rows(src)
        assert R.count_inj_D(d, rho, c, img.dim) == R.count_inj_D_bruteforce(src, dst, L), (src, dst, L)


def test_p_loc_sums_over_images() -> None:
    for L in range(4):
        for c in range(5):
            total = sum(R.p_loc(c, s.dim, L) for s in gf2.enumerate_subspaces(L) if s.dim <= c)
            assert total == 1


# --- composed models -----------------------------------------------------------


@pytest.mark.parametrize("u", [-1, 0, 1, 2])
def test_case_IV_model_support(u: int) -> None:
    J = R.case_IV_r2_model(u, 20)
    for (x, y), p in J.probs.items():
        assert y >= x
        assert (y - x - (x - u)) % 2 == 0
    first = J.marginal_first()
    for r in range(max(u, 0), 8):
        assert float(first[r]) == pytest.approx(R.p_mat_limit(r, u), rel=1e-12)


@pytest.mark.parametrize("u1, u0", [(0, 0), (0, 2), (1, 2), (-1, 4)])
def test_case_V_model_support(u1: int, u0: int) -> None:
    J = R.case_V_r2_model(u1, u0, 20)
    for (x, y), p in J.probs.items():
        assert y - x >= x - u1 - u0
        if u0 == 0:
            assert y - x == x - u1
    first = J.marginal_first()
    for r in range(max(u1, 0), 8):
        assert float(first[r]) == pytest.approx(R.p_mat_limit(r, u1), rel=1e-12)


def test_case_V_model_rejects_odd_u0() -> None:
    with pytest.raises(ValueError):
        R.case_V_r2_model(0, 3)
    with pytest.raises(ValueError):
        R.case_V_r2_model(0, -2)


def test_tail_exponents_of_composed_models() -> None:
    iv = R.case_IV_r2_model(0).marginal_second()
    assert R.tail_exponent(iv, 10, 30) == pytest.approx(0.375, abs=0.05)
    v = R.case_V_r2_model(0, 2).marginal_second()
    assert R.tail_exponent(v, 10, 30) == pytest.approx(0.25, abs=0.05)


def test_tail_exponent_input_checks() -> None:
    dist = R.p_mat_limit_distribution(0, 12)
    with pytest.raises(ValueError):
        R.tail_exponent(dist, 3, 10)
    with pytest.raises(ValueError):
        R.tail_exponent(dist, 10, 30)


# --- tables --------------------------------------------------------------------


def test_distribution_csv_columns() -> None:
    text = R.table("alt", {"n": 2}).to_csv()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["rank", "probability", "error_bound"]
    assert [(r["rank"], r["probability"]) for r in rows] == [("0", "1/2"), ("2", "1/2")]


@pytest.mark.parametrize(
    "name, params",
    [("mat", {"m": 3, "n": 3}), ("mat", {"u": 1}), ("alt", {"n": 5}), ("v", {"n": 4, "m": 4}), ("case4", {"u": 0}), ("case5", {"u1": 0, "u0": 2})],
)
def test_tables_are_probability_laws(name: str, params: dict) -> None:
    R.table(name, params).check()


def test_table_rejects_unknown() -> None:
    with pytest.raises(ValueError):
        R.table("poisson", {})


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=8), st.integers(min_value=0, max_value=8))
def test_count_inj_and_surj_consistent(k: int, n: int) -> None:
    # injections k -> n correspond to ordered bases of k-dim subspaces
    expected = R.gaussian_binomial(n, k) * R.count_inj(k, k) if k <= n else 0
    assert R.count_inj(k, n) == expected
    assert R.count_surj(n, k) == R.count_inj(k, n)
