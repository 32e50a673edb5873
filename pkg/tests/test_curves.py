from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from twoselmer.arith import squarefree_kernel
from twoselmer.curves import (
    CurveError,
    CurveModel,
    build_isogeny_graph,
    case_V_frame,
    classify_batch,
    classify_case,
    classify_text,
    enumerate_two_isogenies,
    isogeny_from,
    parse_curve,
    twist,
    vertex_key,
)

GOLDEN = json.loads((Path(__file__).parent / "data" / "curves_golden.json").read_text())

# root pairs (r, s) giving Case V models y^2 = x(x - r)(x - s)
CASE_V_ROOTS = [(25, 9), (16, -9), (-16, -25), (50, 18), (27, -48), (25, 16)]


def _balanced_by_kernels(r: int, s: int) -> int:
    """Count balanced kernels straight from the squarefree-kernel criterion on the roots."""
    count = 0
    for e, f, g in ((0, r, s), (r, 0, s), (s, 0, r)):
        B = (f - e) * (g - e)
        disc = (f - g) ** 2
        count += squarefree_kernel(B) == squarefree_kernel(disc)
    return count


# --- golden corpus -------------------------------------------------------------


def test_golden_corpus_coverage() -> None:
    assert len(GOLDEN) >= 20
    assert {row["case"] for row in GOLDEN} == {"I", "II", "III", "IV", "V"}
    assert {row["graph_shape"] for row in GOLDEN} == {"single", "path2", "star4", "double_star6", "tree8"}
    inputs = {row["input"] for row in GOLDEN}
    assert "-34 225" in inputs and "5 5" in inputs


@pytest.mark.parametrize("row", GOLDEN, ids=[row["input"] for row in GOLDEN])
def test_golden_classification(row: dict) -> None:
    got = classify_text(row["input"]).to_json()
    assert got["case"] == row["case"]
    assert got["graph_shape"] == row["graph_shape"]
    assert len(got["balanced_isogenies"]) == row["balanced"]
    assert got["model"] == row["model"]
    assert got.get("metadata") == row.get("metadata")


def test_case_V_example_kernels() -> None:
    E = CurveModel(-34, 225)
    assert E.roots == (0, 25, 9)
    kernels = sorted(phi.kernel_model.B for phi in enumerate_two_isogenies(E))
    assert kernels == [-144, 225, 400]
    assert [squarefree_kernel(k).value for k in kernels] == [-1, 1, 1]
    assert classify_case(E).case == "V"


@pytest.mark.parametrize("text, case", [("0 2", "II"), ("0 1", "III"), ("5 5", "IV"), ("0 -1", "I")])
def test_case_examples(text: str, case: str) -> None:
    assert classify_text(text).label.case == case


def test_case_IV_z2_flag() -> None:
    label = classify_case(CurveModel(5, 5))
    assert label.case == "IV" and label.meta == {"z2_balanced": True}
    assert classify_case(CurveModel(5, 4)).meta == {}


@pytest.mark.parametrize("r, s", CASE_V_ROOTS)
def test_case_V_matches_root_criterion(r: int, s: int) -> None:
    assert _balanced_by_kernels(r, s) == 2
    assert classify_case(CurveModel.from_roots(r, s)).case == "V"


def test_full_torsion_classification_matches_root_criterion() -> None:
    rng = random.Random(5)
    for _ in range(300):
        r, s = rng.randint(-40, 40), rng.randint(-40, 40)
        if 0 in (r, s) or r == s:
            continue
        n = _balanced_by_kernels(r, s)
        assert classify_case(CurveModel.from_roots(r, s)).case == {0: "I", 1: "IV", 2: "V"}[n]


# --- models and isogenies ------------------------------------------------------


def test_model_validation() -> None:
    with pytest.raises(CurveError):
        CurveModel(2, 1)
    with pytest.raises(CurveError):
        CurveModel(3, 0)
    with pytest.raises(CurveError):
        CurveModel(-3, 2, (0, 1, 3))


def test_translate_and_reduce() -> None:
    E = CurveModel(-34, 225)
    T = E.translate(25)
    assert (T.A, T.B) == (41, 400)
    assert sorted(T.roots) == [-25, -16, 0]
    assert CurveModel(4 * 5, 16 * 5).reduced() == CurveModel(5, 5)
    with pytest.raises(CurveError):
        E.translate(3)


def test_isogeny_target_formula() -> None:
    phi = isogeny_from(CurveModel(0, -1), 0)
    assert (phi.target.A, phi.target.B) == (0, 4)
    assert not phi.balanced


def _curves() -> list:
    out = [CurveModel(int(r["model"]["A"]), int(r["model"]["B"])) for r in GOLDEN if r["model"]]
    out += [CurveModel.from_roots(r, s) for r, s in CASE_V_ROOTS]
    return out


@pytest.mark.parametrize("E", _curves(), ids=str)
def test_dual_consistency(E: CurveModel) -> None:
    for phi in enumerate_two_isogenies(E):
        back = phi.dual()
        assert back in enumerate_two_isogenies(phi.target)
        assert vertex_key(back.target.reduced()) == vertex_key(E.translate(phi.kernel_x).reduced())
        assert back.balanced == phi.balanced


@pytest.mark.parametrize("E", _curves(), ids=str)
def test_twist_invariance(E: CurveModel) -> None:
    rng = random.Random(E.A * 1000 + E.B)
    base = classify_case(E)
    for _ in range(100):
        d = rng.choice([-1, 1]) * rng.randint(1, 10**4)
        t = classify_case(twist(E, d))
        assert t.case == base.case
        assert len(t.balanced) == len(base.balanced)


@given(st.integers(min_value=-50, max_value=50), st.integers(min_value=-300, max_value=300))
def test_graph_shape_always_valid(A: int, B: int) -> None:
    if B == 0 or A * A == 4 * B:
        return
    E = CurveModel(A, B)
    G = build_isogeny_graph(E)
    shape = G.shape
    assert shape in {"path2", "star4", "double_star6", "tree8"}
    # full 2-torsion exactly at the degree-3 vertices
    for v, deg in zip(G.vertices, G.degrees()):
        assert (deg == 3) == v.full_two_torsion
    label = classify_case(E)
    if label.case == "V":
        assert shape == "tree8" and G.is_central(0)
        assert sum(d == 3 for d in G.degrees()) >= 3
    if shape == "tree8" and G.is_central(0):
        assert label.case == "V"


@pytest.mark.parametrize("r, s", CASE_V_ROOTS)
def test_other_degree_three_nodes_of_case_V_graph_are_case_IV(r: int, s: int) -> None:
    G = build_isogeny_graph(CurveModel.from_roots(r, s))
    cases = [classify_case(v).case for v in G.vertices]
    deg = G.degrees()
    assert sorted(c for c, d in zip(cases, deg) if d == 3) == ["IV", "IV", "V"]
    assert all(c in ("II", "III") for c, d in zip(cases, deg) if d == 1)


def test_graph_examples() -> None:
    assert build_isogeny_graph(CurveModel(0, 2)).shape == "path2"
    assert build_isogeny_graph(CurveModel(0, -1)).shape == "star4"
    G = build_isogeny_graph(CurveModel(-34, 225))
    assert G.shape == "tree8" and G.is_central(0)


# --- parsing -------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, A, B",
    [("−34 225", -34, 225), ("  5 5 ", 5, 5), ("roots: 25 9", -34, 225), ("cubic: 0 -1 0", 0, -1), ("cubic: 1 1 1", -2, 2)],
)
def test_parse_curve(text: str, A: int, B: int) -> None:
    E, _ = parse_curve(text)
    assert E is not None and (E.A, E.B) == (A, B)


@pytest.mark.parametrize("text", ["", "1", "a b", "roots: 1", "1 0", "2 1", "cubic: 0 0 0"])
def test_parse_curve_rejects(text: str) -> None:
    with pytest.raises(CurveError):
        parse_curve(text)


def test_cubic_without_rational_root() -> None:
    E, cubic = parse_curve("cubic: 0 0 2")
    assert E is None and cubic == (0, 0, 2)


def test_classify_batch_skips_comments() -> None:
    rows = classify_batch(["# header", "", "0 2", "-34 225"])
    assert [r["case"] for r in rows] == ["II", "V"]


@pytest.mark.parametrize("r, s", CASE_V_ROOTS)
def test_case_V_frame(r: int, s: int) -> None:
    M, phi1, phi2 = case_V_frame(CurveModel.from_roots(r, s))
    assert M.roots[0] == 0 and phi1.kernel_x == 0 and phi2.kernel_x == M.roots[1]
    assert phi1.balanced and phi2.balanced
    with pytest.raises(CurveError):
        case_V_frame(CurveModel(5, 4))
