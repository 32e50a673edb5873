"""Command-line front end: classify, descend, sweep, model, verify.

Exit codes: 0 success, 1 usage error, 2 computation error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional, Sequence

from . import curves, descent, galmod, gf2, harness, randmodel

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _parse_params(items: Optional[Sequence[str]]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise UsageError(f"parameter {part!r} is not key=value")
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = int(v)
            except ValueError as exc:
                raise UsageError(f"parameter {k} needs an integer") from exc
    return out


def _curve(text: str) -> curves.CurveModel:
    try:
        E, _ = curves.parse_curve(text)
    except curves.CurveError as exc:
        raise UsageError(str(exc)) from exc
    if E is None:
        raise UsageError("curve has no rational 2-torsion point")
    return E


def cmd_classify(args: argparse.Namespace) -> int:
    lines: List[str] = list(args.curves)
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            lines.extend(fh.read().splitlines())
    if not lines:
        raise UsageError("no curves given")
    for line in lines:
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            c = curves.classify_text(line)
        except curves.CurveError as exc:
            raise UsageError(f"{line!r}: {exc}") from exc
        print(json.dumps(c.to_json(), sort_keys=True))
    return EXIT_OK


def cmd_descend(args: argparse.Namespace) -> int:
    E = _curve(args.curve)
    if args.d == 0:
        raise UsageError("d must be nonzero")
    rec = harness.twist_record(E, args.d)
    rec.pop("key", None)
    print(json.dumps(rec, sort_keys=True))
    return EXIT_COMPUTE if "error" in rec else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    E = _curve(args.curve)
    if args.height < 1 or args.height > harness.MAX_HEIGHT:
        raise UsageError("height out of range")
    if args.threads < 1:
        raise UsageError("threads must be positive")
    spec = None
    if args.d0 not in (None, "all"):
        try:
            spec = harness.TwistClassSpec.for_curve(E, int(args.d0))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    try:
        res = harness.sweep(E, spec, args.height, threads=args.threads, out=args.out)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    model = harness.model_for(res) if spec is not None and res.good else None
    report = res.report(model)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(res.to_csv())
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    bad = {k: v for k, v in report["invariant_violations"].items() if v}  # type: ignore[union-attr]
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_model(args: argparse.Namespace) -> int:
    params = _parse_params(args.params)
    for name in ("n", "m", "u", "u1", "u0", "max_rank"):
        val = getattr(args, name)
        if val is not None:
            params[name] = val
    if args.samples:
        if args.dist != "v":
            raise UsageError("Monte-Carlo sampling is only offered for --dist v")
        if args.seed is None:
            raise UsageError("--seed is required for Monte-Carlo runs")
        try:
            freqs = randmodel.p_v_monte_carlo(params["n"], params["m"], args.samples, gf2.make_rng(args.seed))
        except KeyError as exc:
            raise UsageError(f"missing parameter {exc}") from exc
        dist = randmodel.RankDistribution(freqs)
    else:
        try:
            dist = randmodel.table(args.dist, params)
        except KeyError as exc:
            raise UsageError(f"missing parameter {exc}") from exc
    if args.format == "csv":
        sys.stdout.write(dist.to_csv())
    else:
        print(json.dumps({str(k): randmodel._fmt(v) for k, v in sorted(dist.probs.items()) if v}, sort_keys=False))
    return EXIT_OK


def run_verification() -> List[Dict[str, object]]:
    """Module lemmas by enumeration plus the moment identities."""
    out: List[Dict[str, object]] = []
    for rep in galmod.run_all():
        out.append({"check": f"prop_{rep.proposition}", "parameters": rep.parameters, "verified": rep.verified})
    for a in range(4):
        for b in range(4):
            for u in range(-2, 3):
                got = randmodel.moment_mu_IV(a, b, u)
                want = randmodel.moment_mu_IV_target(a, b, u)
                out.append({"check": "moment_IV", "parameters": {"a": a, "b": b, "u": u}, "verified": abs(got / want - 1) < 1e-6})
    for L in range(5):
        for sub in gf2.enumerate_subspaces(L):
            for d in range(sub.dim, 4):
                for u in range(-2, 3):
                    got = randmodel.moment_mu_V(randmodel.ObjD(d, sub), u, L)
                    want = randmodel.moment_mu_V_target(d, u, L)
                    out.append({"check": "moment_V", "parameters": {"d": d, "rho": sub.dim, "L": L, "u": u}, "verified": abs(got / want - 1) < 1e-6})
    return out


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_verification()
    failed = [r for r in results if not r["verified"]]
    summary = {"checks": len(results), "failed": len(failed), "failures": failed}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twoselmer", description=__doc__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("classify", help="case label and isogeny graph shape")
    c.add_argument("curves", nargs="*", help="'A B', 'roots: r s' or 'cubic: c2 c1 c0'")
    c.add_argument("--file", help="batch file, one curve per line")
    c.set_defaults(func=cmd_classify)

    d = sub.add_parser("descend", help="Selmer data for a single twist")
    d.add_argument("--curve", required=True)
    d.add_argument("--d", type=int, required=True)
    d.set_defaults(func=cmd_descend)

    s = sub.add_parser("sweep", help="descent over a twist class")
    s.add_argument("--curve", required=True)
    s.add_argument("--d0", default=None, help="class representative, or 'all' for every squarefree d")
    s.add_argument("--height", type=int, required=True)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", help="append-only JSON-lines store (enables resume)")
    s.add_argument("--csv", help="write per-twist CSV here")
    s.add_argument("--report", help="write the JSON report here")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("model", help="random-matrix distribution tables")
    m.add_argument("--dist", required=True, choices=["mat", "alt", "v", "case4", "case5"])
    m.add_argument("--params", action="append", help="key=value[,key=value]")
    for name in ("n", "m", "u", "u1", "u0"):
        m.add_argument(f"--{name}", type=int)
    m.add_argument("--max-rank", dest="max_rank", type=int)
    m.add_argument("--samples", type=int, default=0, help="Monte-Carlo sample count (needs --seed)")
    m.add_argument("--seed", type=int)
    m.add_argument("--format", choices=["json", "csv"], default="json")
    m.set_defaults(func=cmd_model)

    v = sub.add_parser("verify", help="module lemmas and moment identities")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("missing subcommand")
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        _emit_error("computation", f"{type(exc).__name__}: {exc}")
        return EXIT_COMPUTE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
