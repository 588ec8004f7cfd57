"""Command line entry point.

Exit status: 0 success, 2 usage error, 3 input error, 4 enumeration budget
exceeded, 5 a ``reproduce`` scenario diverged from its expected conclusion.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import reproduce
from .axioms import LAD, RESPONSIVENESS, SUBSTITUTABILITY, validate_market
from .io import (
    InputError,
    allocation_json,
    audit_json,
    dumps,
    load_spec,
    to_csv,
    trace_json,
    violation_json,
)
from .manipulation import GuardrailError, audit_nom
from .market import MarketError
from .mechanisms import (
    Rule,
    RuleError,
    doctor_proposing_da,
    enumerate_stable,
    hospital_proposing_da,
    quantile_rule,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_GUARDRAIL, EXIT_REPRODUCE = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from None
    if not 0 <= q <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return q


def _parse_axioms(text: str) -> tuple[list[str], Optional[int]]:
    names, quota = [], None
    for part in text.split(","):
        part = part.strip()
        if part in ("subs", SUBSTITUTABILITY):
            names.append(SUBSTITUTABILITY)
        elif part == LAD:
            names.append(LAD)
        elif part.startswith("resp:"):
            names.append(RESPONSIVENESS)
            quota = int(part[5:])
        else:
            raise UsageError(f"unknown axiom {part!r}")
    return names, quota


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")

    p = argparse.ArgumentParser(prog="contractmatch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check hospital preference axioms")
    v.add_argument("market")
    v.add_argument("--axioms", default="subs")

    d = sub.add_parser("da", parents=[common], help="run deferred acceptance")
    d.add_argument("market")
    d.add_argument("--profile", required=True)
    d.add_argument("--side", choices=("doctors", "hospitals"), default="doctors")
    d.add_argument("--trace", action="store_true")

    s = sub.add_parser("stable", parents=[common], help="list all stable allocations")
    s.add_argument("market")
    s.add_argument("--profile", required=True)

    q = sub.add_parser("quantile", parents=[common], help="apply a quantile stable rule")
    q.add_argument("market")
    q.add_argument("--profile", required=True)
    q.add_argument("--q", type=_fraction, required=True)

    a = sub.add_parser("audit", parents=[common], help="search for obvious manipulations")
    a.add_argument("market")
    a.add_argument("--rule", required=True)
    a.add_argument("--budget", type=int)
    a.add_argument("--all-witnesses", action="store_true")
    a.add_argument("--timing", action="store_true", help="include wall time (not reproducible)")

    r = sub.add_parser("reproduce", parents=[common], help="run a self-checking scenario")
    r.add_argument("scenario", choices=("theorem2", "theorem4", "table1"))
    r.add_argument("--k", type=int, default=3)
    r.add_argument("--q", type=_fraction, default=Fraction(1, 2))
    r.add_argument("--seed", type=int, default=0)
    return p


def _run(args) -> tuple[dict, list[dict], list[str], int]:
    """Return (json report, csv rows, text lines, exit status)."""
    if args.command == "reproduce":
        if args.scenario == "theorem2":
            rep = reproduce.theorem2()
        elif args.scenario == "theorem4":
            try:
                rep = reproduce.theorem4(args.k, args.q)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        else:
            rep = reproduce.table1(args.seed)
        body = rep.to_json()
        rows = [
            {"check": c["name"], "expected": c["expected"], "actual": c["actual"], "passed": c["passed"]}
            for c in body["checks"]
        ]
        lines = [f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}" for c in rows]
        lines.append(f"{rep.scenario}: {'reproduced' if rep.ok else 'DIVERGED'}")
        return body, rows, lines, EXIT_OK if rep.ok else EXIT_REPRODUCE

    spec = load_spec(args.market)
    market = spec.market
    head = {"market_digest": market.digest()}

    if args.command == "validate":
        names, quota = _parse_axioms(args.axioms)
        found = validate_market(market, names, quota)
        body = {**head, "axioms": names, "quota": quota, "pass": not found,
                "violations": [violation_json(v) for v in found]}
        rows = [{"axiom": v["axiom"], "hospital": v["hospital"], "witness": v["witness"]}
                for v in body["violations"]] or [{"axioms": names, "pass": True}]
        lines = [v.describe() for v in found] or [f"pass: {', '.join(names)}"]
        return body, rows, lines, EXIT_OK

    if args.command == "audit":
        rule = Rule.parse(args.rule)
        report = audit_nom(rule, market, budget=args.budget, all_witnesses=args.all_witnesses)
        body = audit_json(report, timing=args.timing)
        rows = [
            {"rule": body["rule"], "verdict": body["verdict"], **w}
            for w in body["witnesses"]
        ] or [{"rule": body["rule"], "verdict": body["verdict"]}]
        lines = [f"{body['rule']}: {body['verdict']} "
                 f"({report.manipulations} manipulations, {report.obvious_manipulations} obvious, "
                 f"{report.profiles_evaluated} profiles)"]
        for w, wj in zip(report.witnesses, body["witnesses"]):
            lines.append(
                f"  {w.doctor}: {w.truth} -> {w.misreport} [{w.obvious.value}] "
                f"options {wj['truth_options']} -> {wj['misreport_options']}"
            )
        return body, rows, lines, EXIT_OK

    profile = spec.profile(args.profile)
    head["profile"] = args.profile

    if args.command == "da":
        run = doctor_proposing_da if args.side == "doctors" else hospital_proposing_da
        trace = run(market, profile)
        body = {**head, "side": args.side, "output": allocation_json(trace.output)}
        if args.trace:
            body["trace"] = trace_json(trace)
        rows = [{"round": t + 1, **r} for t, r in enumerate(trace_json(trace)["rounds"])]
        lines = [f"output: {{{', '.join(body['output'])}}} after {trace.T} rounds"]
        if args.trace:
            lines[:0] = [
                f"round {t}: offers {{{', '.join(r['offers'])}}} accepted {{{', '.join(r['accepted'])}}}"
                for t, r in enumerate(body["trace"]["rounds"], 1)
            ]
        return body, rows, lines, EXIT_OK

    if args.command == "stable":
        stable = [allocation_json(s) for s in enumerate_stable(market, profile)]
        body = {**head, "stable": stable, "count": len(stable)}
        rows = [{"index": i, "allocation": s} for i, s in enumerate(stable)]
        lines = ["{" + ", ".join(s) + "}" for s in stable]
        return body, rows, lines, EXIT_OK

    out = allocation_json(quantile_rule(market, profile, args.q))
    body = {**head, "q": f"{args.q.numerator}/{args.q.denominator}", "output": out}
    return body, [{"q": body["q"], "output": out}], ["{" + ", ".join(out) + "}"], EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        body, rows, lines, status = _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, MarketError, RuleError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GuardrailError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARDRAIL
    meta = {
        k: (f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else v)
        for k, v in sorted(vars(args).items())
    }
    report = {"command": args.command, "args": meta, "results": body}
    if args.format == "json":
        sys.stdout.write(dumps(report))
    elif args.format == "csv":
        sys.stdout.write(to_csv(rows))
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
