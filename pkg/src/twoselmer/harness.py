"""Twist-class enumeration, sweeps over quadratic twists, and comparison with the models."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import descent, gf2, randmodel
from .arith import INFINITY, Place, SquareClass, local_class_bits, primes_of
from .curves import CurveModel, classify_case, isogeny_from, twist
from .randmodel import RankDistribution

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "d", "case", "dim_sel_phi1", "dim_sel_phi1_dual", "dim_sel_phi2", "dim_sel_phi2_dual",
    "dim_sel2", "u1", "u2", "u0", "defect", "loc_image_dim", "flags",
]

MAX_HEIGHT = 10**8


# --- twist classes ------------------------------------------------------------


def curve_bad_places(E: CurveModel) -> List[Place]:
    return [INFINITY] + [Place(p) for p in sorted({2} | set(primes_of(E.discriminant)))]


@dataclass(frozen=True)
class TwistClassSpec:
    """Squarefree d with d * d0 a square at infinity, 2 and each odd bad prime."""

    d0: int
    bad_places: Tuple[Place, ...]

    def __post_init__(self) -> None:
        if self.d0 == 0:
            raise ValueError("d0 must be nonzero")
        if INFINITY not in self.bad_places or Place(2) not in self.bad_places:
            raise ValueError("bad places must include infinity and 2")

    @classmethod
    def for_curve(cls, E: CurveModel, d0: int) -> "TwistClassSpec":
        return cls(d0, tuple(curve_bad_places(E)))

    def key_of(self, d: int) -> Tuple[int, ...]:
        return tuple(local_class_bits(d, v) for v in self.bad_places)

    @property
    def key(self) -> Tuple[int, ...]:
        return self.key_of(self.d0)

    def contains(self, d: int) -> bool:
        return d != 0 and _is_squarefree_small(d) and self.key_of(d) == self.key


def _is_squarefree_small(d: int) -> bool:
    n = abs(d)
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def squarefree_up_to(H: int, segment: int = 1 << 20) -> Iterator[int]:
    """Positive squarefree integers n <= H, increasing, by a segmented sieve."""
    if H > MAX_HEIGHT:
        raise ValueError(f"height above {MAX_HEIGHT}")
    root = int(H**0.5) + 1
    small = np.ones(root + 1, dtype=bool)
    small[:2] = False
    for i in range(2, int(root**0.5) + 1):
        if small[i]:
            small[i * i :: i] = False
    primes = np.nonzero(small)[0]
    for lo in range(1, H + 1, segment):
        hi = min(lo + segment, H + 1)
        ok = np.ones(hi - lo, dtype=bool)
        for p in primes:
            q = int(p) * int(p)
            if q >= hi:
                break
            start = ((lo + q - 1) // q) * q
            ok[start - lo :: q] = False
        for n in np.nonzero(ok)[0]:
            yield int(n) + lo


def squarefree_twists(H: int) -> List[int]:
    """All squarefree d with |d| <= H, sorted by value."""
    pos = list(squarefree_up_to(H))
    return [-n for n in reversed(pos)] + pos


def enumerate_twist_class(spec: TwistClassSpec, H: int) -> Iterator[int]:
    sign = 1 if spec.d0 > 0 else -1
    target = spec.key
    for n in squarefree_up_to(H):
        d = sign * n
        if spec.key_of(d) == target:
            yield d


# --- per-twist records ---------------------------------------------------------


def _case_IV_record(E: CurveModel, d: int) -> Dict[str, object]:
    label = classify_case(E)
    phi = label.balanced[0]
    dual = phi.dual()
    s = descent.phi_selmer(phi, d)
    sd = descent.phi_selmer(dual, d)
    u = descent.tamagawa_u(phi, d).u
    ud = descent.tamagawa_u(dual, d).u
    flagged = descent.has_halvable_torsion(twist(phi.source, d)) or descent.has_halvable_torsion(twist(phi.target, d))
    rec: Dict[str, object] = {
        "d": d,
        "case": "IV",
        "dim_sel_phi1": s.dim,
        "dim_sel_phi1_dual": sd.dim,
        "u1": u,
        "flagged": flagged,
        "checks": {"greenberg_wiles": u == s.dim - sd.dim, "dual_antisymmetry": u == -ud},
    }
    if E.full_two_torsion:
        # move the balanced kernel to x = 0 so that Sel^phi sits in Sel^2 as (1, c)
        M = phi.kernel_model
        sel2 = descent.two_selmer(M, d)
        cc = sel2.coordinates()
        n = cc.size
        tors = [cc.encode(a) | (cc.encode(b) << n) for a, b in descent.torsion_images(M, d)]
        phis = [cc.encode(b) << n for _, b in map(descent.phi_to_two, s.basis)]
        t_dim = gf2.rank_rows(tors)
        rec["dim_sel2"] = sel2.dim
        rec["dim_V"] = sel2.dim - t_dim
        rec["dim_V0"] = gf2.rank_rows(tors + phis) - t_dim
        rec["checks"]["phi_into_two"] = all(sel2.contains(descent.phi_to_two(c)) for c in s.basis)  # type: ignore[index]
        rec["checks"]["torsion_in_two"] = all(sel2.contains(t) for t in descent.torsion_images(M, d))  # type: ignore[index]
    return rec


def _case_V_record(data: descent.CaseVData, d: int) -> Dict[str, object]:
    r = descent.case_V_rank_identity_check(data, d)
    return {
        "d": d,
        "case": "V",
        "dim_sel_phi1": r.dim_sel_phi1,
        "dim_sel_phi1_dual": r.dim_sel_phi1_dual,
        "dim_sel_phi2": r.dim_sel_phi2,
        "dim_sel_phi2_dual": r.dim_sel_phi2_dual,
        "dim_sel2": r.dim_sel2,
        "u1": r.u1,
        "u2": r.u2,
        "u0": r.u0,
        "defect": r.defect,
        "dim_L": r.dim_L,
        "loc_image_dim": r.loc_image_dim,
        "flagged": r.flagged,
        "checks": r.checks,
    }


def twist_record(E: CurveModel, d: int, case: Optional[str] = None, _cache: Dict = {}) -> Dict[str, object]:
    """Full descent record for E^d; failures become records with an ``error`` field."""
    case = case or classify_case(E).case
    try:
        if case == "V":
            key = (E.A, E.B)
            if key not in _cache:
                _cache[key] = descent.CaseVData(E)
            return _case_V_record(_cache[key], d)
        if case == "IV":
            return _case_IV_record(E, d)
        raise ValueError(f"sweeps need a Case IV or V curve, got Case {case}")
    except Exception as exc:  # isolate the failure, keep sweeping
        log.warning("twist d=%s failed: %s", d, exc)
        return {"d": d, "case": case, "error": f"{type(exc).__name__}: {exc}", "flagged": True, "checks": {}}


def _work(args: Tuple[int, int, str, List[int]]) -> List[Dict[str, object]]:
    A, B, case, ds = args
    E = CurveModel(A, B)
    return [twist_record(E, d, case) for d in ds]


# --- sweeps ---------------------------------------------------------------------


@dataclass
class SweepResult:
    curve: Tuple[int, int]
    case: str
    d0: Optional[int]
    H: int
    records: List[Dict[str, object]]
    class_keys: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def good(self) -> List[Dict[str, object]]:
        return [r for r in self.records if not r.get("flagged") and "error" not in r]

    def flagged_count(self) -> int:
        return sum(1 for r in self.records if r.get("flagged"))

    def error_count(self) -> int:
        return sum(1 for r in self.records if "error" in r)

    def distribution(self, stat: str, records: Optional[List[Dict[str, object]]] = None) -> RankDistribution:
        """Empirical law of a statistic over non-flagged twists; ``r_phi`` and ``r2`` are normalized ranks."""
        recs = self.good if records is None else records
        vals = []
        for r in recs:
            if stat == "r_phi":
                vals.append(int(r["dim_sel_phi1"]) - 1)
            elif stat == "r2":
                if "dim_sel2" in r:
                    vals.append(int(r["dim_sel2"]) - 2)
            else:
                vals.append(int(r[stat]))
        if not vals:
            raise ValueError("no unflagged twists to aggregate")
        counts = Counter(vals)
        n = len(vals)
        return RankDistribution({k: Fraction(c, n) for k, c in sorted(counts.items())})

    def joint(self) -> Dict[Tuple[int, int], Fraction]:
        recs = [r for r in self.good if "dim_sel2" in r]
        c = Counter((int(r["dim_sel_phi1"]) - 1, int(r["dim_sel2"]) - 2) for r in recs)
        return {k: Fraction(v, len(recs)) for k, v in sorted(c.items())}

    def loc_image_given_rank(self) -> Dict[int, Dict[int, Fraction]]:
        """Case V: law of the localization image dimension given r of phi1'."""
        groups: Dict[int, Counter] = defaultdict(Counter)
        for r in self.good:
            if "loc_image_dim" in r:
                groups[int(r["dim_sel_phi1_dual"]) - 1][int(r["loc_image_dim"])] += 1
        return {k: {j: Fraction(c, sum(g.values())) for j, c in sorted(g.items())} for k, g in sorted(groups.items())}

    def invariant_violations(self) -> Dict[str, int]:
        out: Counter = Counter()
        for r in self.records:
            if "error" in r:
                out["errors"] += 1
            for k, ok in r.get("checks", {}).items():  # type: ignore[union-attr]
                if not ok:
                    out[k] += 1
            if r.get("case") == "IV" and not r.get("flagged") and "error" not in r:
                if int(r["dim_sel_phi1"]) - 1 < max(int(r["u1"]), 0):
                    out["rank_below_u"] += 1
        # u depends only on the twist class
        by_class: Dict[Tuple[int, ...], set] = defaultdict(set)
        for r in self.records:
            if "error" in r:
                continue
            key = self.class_keys.get(int(r["d"]))  # type: ignore[arg-type]
            us = (r.get("u1"), r.get("u2"))
            by_class[key].add(us)  # type: ignore[index]
        out["u_constancy"] = sum(len(s) - 1 for s in by_class.values())
        for name in ("greenberg_wiles", "u0_even_nonnegative", "defect_parity_bound", "localization_injective", "rank_below_u"):
            out.setdefault(name, 0)
        return dict(sorted(out.items()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.records:
            row = {k: r.get(k, "") for k in CSV_COLUMNS}
            flags = []
            if r.get("flagged"):
                flags.append("degenerate")
            if "error" in r:
                flags.append("error")
            row["flags"] = ";".join(flags)
            w.writerow(row)
        return buf.getvalue()

    def report(self, model: Optional[RankDistribution] = None) -> Dict[str, object]:
        emp = {"r_phi": _dist_json(self.distribution("r_phi"))}
        if any("dim_sel2" in r for r in self.good):
            emp["r2"] = _dist_json(self.distribution("r2"))
        out: Dict[str, object] = {
            "curve": {"A": self.curve[0], "B": self.curve[1]},
            "case": self.case,
            "d0": self.d0,
            "H": self.H,
            "counts": {"twists": len(self.records), "flagged": self.flagged_count(), "errors": self.error_count()},
            "empirical_dists": emp,
            "model_dists": {},
            "tv_distances": {},
            "invariant_violations": self.invariant_violations(),
        }
        if model is not None:
            out["model_dists"] = {"r_phi": _dist_json(model)}
            out["tv_distances"] = {"r_phi": compare(self.distribution("r_phi"), model)["tv_distance"]}
        return out


def _dist_json(dist: RankDistribution) -> Dict[str, float]:
    return {str(k): float(v) for k, v in sorted(dist.probs.items())}


def _record_key(curve: Tuple[int, int], d0: Optional[int], d: int) -> str:
    return f"{curve[0]},{curve[1]}|{'all' if d0 is None else d0}|{d}"


def load_records(path: str) -> Dict[str, Dict[str, object]]:
    out: Dict[str, Dict[str, object]] = {}
    if not os.path.exists(path):
        return out
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # a torn final line from an interrupted run
            out[rec["key"]] = rec
    return out


def sweep(
    E: CurveModel,
    spec: Optional[TwistClassSpec],
    H: int,
    threads: int = 1,
    out: Optional[str] = None,
    chunk: int = 64,
    limit: Optional[int] = None,
) -> SweepResult:
    """Descent records for every twist in the class (or every squarefree |d| <= H when spec is None).

    With ``out`` set, records are appended as JSON lines keyed by (curve, d0, d)
    and already-present keys are reused, so an interrupted sweep resumes.
    ``limit`` stops after that many new records (used to test resumption).
    """
    t0 = time.perf_counter()
    label = classify_case(E)
    if label.case not in ("IV", "V"):
        raise ValueError(f"sweeps need a Case IV or V curve, got Case {label.case}")
    places = curve_bad_places(E)
    ds = list(enumerate_twist_class(spec, H)) if spec else squarefree_twists(H)
    ds.sort()
    curve = (E.A, E.B)
    d0 = spec.d0 if spec else None
    done = load_records(out) if out else {}
    todo = [d for d in ds if _record_key(curve, d0, d) not in done]
    if limit is not None:
        todo = todo[:limit]
    batches = [todo[i : i + chunk] for i in range(0, len(todo), chunk)]
    fh = open(out, "a", encoding="utf-8") if out else None
    try:
        results: Iterable[List[Dict[str, object]]]
        if threads > 1 and len(batches) > 1:
            pool = ProcessPoolExecutor(max_workers=threads)
            results = pool.map(_work, [(E.A, E.B, label.case, b) for b in batches])
        else:
            pool = None
            results = (_work((E.A, E.B, label.case, b)) for b in batches)
        for batch in results:
            for rec in batch:
                rec["key"] = _record_key(curve, d0, int(rec["d"]))  # type: ignore[arg-type]
                done[rec["key"]] = rec  # type: ignore[index]
                if fh:
                    fh.write(json.dumps(rec, sort_keys=True) + "\n")
            if fh:
                fh.flush()
        if pool:
            pool.shutdown()
    finally:
        if fh:
            fh.close()
    wanted = set(ds)
    records = sorted(
        (r for r in done.values() if int(r["d"]) in wanted and r["key"] == _record_key(curve, d0, int(r["d"]))),  # type: ignore[arg-type]
        key=lambda r: int(r["d"]),  # type: ignore[arg-type]
    )
    keys = {int(r["d"]): tuple(local_class_bits(int(r["d"]), v) for v in places) for r in records}  # type: ignore[arg-type]
    return SweepResult(curve, label.case, d0, H, records, keys, time.perf_counter() - t0)


# --- moments and comparisons ------------------------------------------------------


@dataclass
class MomentEstimate:
    a: int
    b: int
    estimate: float
    target: float
    n: int
    label: str = "proxy"


def tuple_count(a: int, b: int, dim_V0: int, dim_V: int, torsion_phi: int = 1, torsion_two: int = 2) -> int:
    """#S_{a,b} proxy: independence in Sel^2 modulo the torsion image.

    Each Sel^phi entry has 2^torsion_phi lifts and each Sel^2 entry
    2^torsion_two lifts of its class modulo torsion.
    """
    inj = randmodel.count_inj_C(randmodel.ObjC(a, b), randmodel.ObjC(dim_V0, dim_V - dim_V0))
    return 2 ** (a * torsion_phi + b * torsion_two) * inj


def estimate_moments(result: SweepResult, a: int, b: int) -> MomentEstimate:
    if a > 2 or b > 2 or a < 0 or b < 0:
        raise ValueError("moments implemented for a, b <= 2")
    recs = result.good
    if not recs:
        raise ValueError("no unflagged twists")
    us = {int(r["u1"]) for r in recs}  # type: ignore[arg-type]
    if len(us) != 1:
        raise ValueError("moment estimates need a single twist class")
    u = us.pop()
    total = 0
    for r in recs:
        if b > 0 or "dim_V" in r:
            if "dim_V" not in r:
                raise ValueError("b > 0 needs Sel^2 data (full 2-torsion)")
            total += tuple_count(a, b, int(r["dim_V0"]), int(r["dim_V"]))  # type: ignore[arg-type]
        else:
            total += tuple_count(a, 0, int(r["dim_sel_phi1"]) - 1, int(r["dim_sel_phi1"]) - 1)  # type: ignore[arg-type]
    h0 = 4 if any("dim_V" in r for r in recs) else 2
    target = h0**b * 2.0 ** (a + a * u + a * b + b * (b + 1) / 2)
    return MomentEstimate(a, b, total / len(recs), target, len(recs))


def compare(dist_emp: RankDistribution, dist_model: RankDistribution, n: Optional[int] = None) -> Dict[str, object]:
    if not dist_emp.probs:
        raise ValueError("empty empirical distribution")
    ranks = sorted(set(dist_emp.probs) | set(dist_model.probs))
    rows = []
    tv = 0.0
    chi = 0.0
    for r in ranks:
        p = float(dist_emp[r])
        q = float(dist_model[r])
        tv += abs(p - q)
        if q > 0:
            chi += (p - q) ** 2 / q
        rows.append({"rank": r, "empirical": p, "model": q, "delta": p - q})
    return {
        "tv_distance": tv / 2,
        "chi_square": chi * n if n else chi,
        "per_rank": rows,
    }


def sample_distribution(dist: RankDistribution, n: int, rng: np.random.Generator) -> RankDistribution:
    ranks = sorted(dist.probs)
    p = np.array([float(dist.probs[r]) for r in ranks])
    p = p / p.sum()
    draws = rng.choice(len(ranks), size=n, p=p)
    counts = np.bincount(draws, minlength=len(ranks))
    return RankDistribution({r: Fraction(int(c), n) for r, c in zip(ranks, counts) if c})


def model_for(result: SweepResult, max_rank: int = 30) -> RankDistribution:
    """p_mat_limit(., u) for the class's Tamagawa exponent."""
    us = {int(r["u1"]) for r in result.good}  # type: ignore[arg-type]
    if len(us) != 1:
        raise ValueError("model comparison needs a single twist class")
    return randmodel.p_mat_limit_distribution(us.pop(), max_rank)
