"""End-to-end acceptance checks; each test records one PASS/FAIL line shown in the terminal summary."""

from __future__ import annotations

import json
import time
from itertools import combinations
from pathlib import Path

from conftest import ACCEPTANCE_LINES, CASE_IV_HEIGHTS
from twoselmer import galmod, gf2, harness
from twoselmer import randmodel as R
from twoselmer.arith import squarefree_kernel
from twoselmer.curves import CurveModel, classify_text, enumerate_two_isogenies

GOLDEN = json.loads((Path(__file__).parent / "data" / "curves_golden.json").read_text())


def _record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def test_criterion_1_random_matrix_oracles() -> None:
    t0 = time.perf_counter()
    bad = []
    for m in range(5):
        for n in range(5):
            law = R.p_mat_enumerate(m, n)
            bad += [("mat", m, n, j) for j in range(n + 1) if R.p_mat_exact(j, m, n) != law.get(j, 0)]
    for n in range(7):
        law = R.p_alt_enumerate(n)
        bad += [("alt", n, j) for j in range(n + 1) if R.p_alt_exact(j, n) != law.get(j, 0)]
    cases = 0
    for m in range(0, 21, 2):
        for n in range(0, 21):
            if n * m > 20:
                break
            law = R.p_v_enumerate(n, m)
            cases += 1
            bad += [("v", n, m, j) for j in range(n + 1) if R.p_v_exact(j, n, m) != law.get(j, 0)]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 60
    _record(1, "exact laws equal exhaustive enumeration", ok, f"{cases} P^V shapes, mismatches={bad[:3]}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_moment_identities() -> None:
    t0 = time.perf_counter()
    worst = 0.0
    for a in range(4):
        for b in range(4):
            for u in range(-2, 3):
                worst = max(worst, abs(R.moment_mu_IV(a, b, u) / R.moment_mu_IV_target(a, b, u) - 1))
    count_v = 0
    for L in range(5):
        for sub in gf2.enumerate_subspaces(L):
            for d in range(sub.dim, 4):
                for u in range(-2, 3):
                    got = R.moment_mu_V(R.ObjD(d, sub), u, L)
                    worst = max(worst, abs(got / R.moment_mu_V_target(d, u, L) - 1))
                    count_v += 1
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 300
    _record(2, "Case IV and Case V moments match their targets", ok, f"max relative error {worst:.2e}, {count_v} Case V objects, {elapsed:.1f}s")
    assert ok


def test_criterion_3_tail_exponents() -> None:
    t0 = time.perf_counter()
    iv = R.tail_exponent(R.case_IV_r2_model(0).marginal_second(), 10, 30)
    v = R.tail_exponent(R.case_V_r2_model(0, 2).marginal_second(), 10, 30)
    mat = R.tail_exponent(R.p_mat_limit_distribution(0, 40), 10, 30)
    elapsed = time.perf_counter() - t0
    parts = {"Case IV 3/8": abs(iv - 0.375) <= 0.05, "Case V 1/4": abs(v - 0.25) <= 0.05, "P^Mat 1/2": abs(mat - 0.5) <= 0.05}
    ok = all(parts.values()) and elapsed < 600
    detail = f"slopes IV={iv:.4f} V={v:.4f} P^Mat={mat:.4f}; failing parts={[k for k, p in parts.items() if not p]}, {elapsed:.1f}s"
    _record(3, "tail exponents of the rank laws", ok, detail)
    assert ok


def test_criterion_4_module_lemmas() -> None:
    t0 = time.perf_counter()
    iv = [galmod.verify_prop_IV_cofavored(a, b) for a in range(7) for b in range(4) if a + 2 * b <= 6]
    v = [galmod.verify_prop_V_cofavored(a, b, c) for c in range(4) for a in range(7) for b in range(7) if a + b + 2 * c <= 6]
    homs = galmod.classify_equivariant_homs()
    elapsed = time.perf_counter() - t0
    ok = all(iv) and all(v) and homs == (1, 1, 1, 0) and elapsed < 60
    _record(4, "cofavored submodules are everything; equivariant homs", ok, f"{len(iv)} IV and {len(v)} V instances, homs={homs}, {elapsed:.1f}s")
    assert ok


def test_criterion_5_injection_counts() -> None:
    pairs = [(R.ObjC(a, b), R.ObjC(c, d)) for a in range(3) for b in range(3) for c in range(3) for d in range(3)]
    bad = [(O, A) for O, A in pairs if R.count_inj_C(O, A) != R.count_inj_C_bruteforce(O, A)]
    ok = not bad
    _record(5, "closed-form monomorphism counts equal enumeration", ok, f"{len(pairs)} pairs, mismatches={bad[:3]}")
    assert ok


def test_criterion_6_case_V_cross_checks() -> None:
    E = CurveModel(-34, 225)
    res = harness.sweep(E, None, 10**4)
    violations = res.invariant_violations()
    bad = {k: n for k, n in violations.items() if n}
    ok = not bad and res.case == "V" and res.runtime < 1800
    detail = f"{len(res.records)} twists, {res.flagged_count()} flagged, violations={bad or 0}, {res.runtime:.0f}s on one process"
    _record(6, "Case V sweep invariants at H=10^4", ok, detail)
    assert ok


def test_criterion_7_distribution_trend(case_iv_sweeps) -> None:
    tvs = {}
    below = 0
    for H in CASE_IV_HEIGHTS:
        res = case_iv_sweeps[H]
        tvs[H] = harness.compare(res.distribution("r_phi"), harness.model_for(res))["tv_distance"]
        below += res.invariant_violations()["rank_below_u"]
    finite = all(tv == tv and tv < float("inf") for tv in tvs.values())
    steps = [tvs[hi] <= tvs[lo] for lo, hi in combinations(CASE_IV_HEIGHTS, 2)]
    ok = finite and sum(steps) >= 2 and below == 0
    detail = "TV " + ", ".join(f"H={H}: {tv:.4f}" for H, tv in tvs.items()) + f"; non-increasing in {sum(steps)}/3; rank_below_u={below}"
    _record(7, "Case IV TV distance trend for x^3+5x^2+5x, d0=1", ok, detail)
    assert ok


def test_criterion_8_classification_corpus() -> None:
    wrong = []
    for row in GOLDEN:
        got = classify_text(row["input"]).to_json()
        if (got["case"], got["graph_shape"], len(got["balanced_isogenies"])) != (row["case"], row["graph_shape"], row["balanced"]):
            wrong.append(row["input"])
    cases = {row["case"] for row in GOLDEN}
    shapes = {row["graph_shape"] for row in GOLDEN}
    kernels = sorted(phi.kernel_model.B for phi in enumerate_two_isogenies(CurveModel(-34, 225)))
    z2 = classify_text("5 5").to_json()
    ok = (
        len(GOLDEN) >= 20
        and not wrong
        and cases == {"I", "II", "III", "IV", "V"}
        and shapes == {"single", "path2", "star4", "double_star6", "tree8"}
        and kernels == [-144, 225, 400]
        and [squarefree_kernel(k).value for k in kernels] == [-1, 1, 1]
        and z2["case"] == "IV"
        and z2.get("metadata") == {"z2_balanced": True}
    )
    _record(8, "golden classification corpus", ok, f"{len(GOLDEN)} curves, {len(cases)} cases, {len(shapes)} shapes, wrong={wrong}")
    assert ok

