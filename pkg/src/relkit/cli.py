"""Command-line front end: ``relkit free|eval|malcev|verify|homtest``.

Algebra files are JSON:

    {"name": "S2", "size": 2,
     "operations": [{"name": "meet", "arity": 2, "table": [0, 0, 0, 1]}]}

Tables are row-major with the last argument varying fastest, so for a binary
operation f(a, b) sits at index a*size + b, and for a ternary one f(a, b, c)
at a*size^2 + b*size + c.  The names S2 and Z2m resolve to the shipped
examples when no such file exists.

Relations are JSON pair lists, optionally suffixed with ``+diag`` to add the
diagonal; ``0``/``diag`` and ``1``/``full`` are shorthands.

Exit codes: 0 holds/ok, 1 fails or no term found, 2 operator syntax error,
3 cap exceeded, 4 relation not reflexive admissible, 5 regularity unverified.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace
from importlib import resources
from pathlib import Path

from . import binrel
from .algebra import FiniteAlgebra, validate_algebra
from .binrel import BinaryRelation
from .errors import (
    CapExceeded,
    InvalidAlgebra,
    NotAdmissible,
    NotReflexive,
    OperatorSyntaxError,
    RegularityUnverified,
    UnknownVariable,
)
from .free import build_free
from .opchecks import (
    FAILS,
    HOLDS,
    _Evaluators,
    arity_of,
    check_hom_property,
    check_monotone,
    homs_among,
    pairs_json,
)
from .oplang import evaluate, parse, to_text
from .verification import (
    THM1_CONDITIONS,
    THM2_CONDITIONS,
    THM3_CONDITIONS,
    Caps,
    VarietyContext,
    check_thm1,
    check_thm2,
    check_thm3,
    equivalence_report,
    find_malcev_term,
)

EXIT_OK, EXIT_FAILS, EXIT_SYNTAX, EXIT_CAP, EXIT_ADMISSIBLE, EXIT_REGULAR = range(6)
ENV_CAPS = "RELKIT_CAPS"
_CAP_KEYS = {"free": "free", "power": "power", "homs": "homs", "checks": "checks",
             "sample": "sample_size", "exhaustive": "exhaustive_max"}


# ---------------------------------------------------------------------------
# input

def load_algebra(spec: str) -> FiniteAlgebra:
    path = Path(spec)
    if not path.exists():
        shipped = resources.files("relkit") / "data" / f"{Path(spec).stem}.json"
        if shipped.is_file():
            return validate_algebra(json.loads(shipped.read_text(encoding="utf-8")))
        raise FileNotFoundError(spec)
    return validate_algebra(json.loads(path.read_text(encoding="utf-8")))


def parse_relation(text: str, n: int) -> BinaryRelation:
    text = text.strip()
    if text in ("0", "diag"):
        return binrel.diagonal(n)
    if text in ("1", "full"):
        return binrel.full(n)
    add_diag = text.endswith("+diag")
    if add_diag:
        text = text[: -len("+diag")]
    pairs = json.loads(text)
    rel = BinaryRelation.from_pairs(n, [tuple(p) for p in pairs])
    return rel | binrel.diagonal(n) if add_diag else rel


def parse_caps(env_value: str | None, base: Caps) -> Caps:
    """``free=5000,power=1000000`` style overrides."""
    if not env_value:
        return base
    changes = {}
    for item in env_value.split(","):
        if not item.strip():
            continue
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _CAP_KEYS:
            raise ValueError(f"unknown cap {key!r} in {ENV_CAPS}")
        changes[_CAP_KEYS[key]] = int(value)
    return replace(base, **changes)


def run_config(args) -> Caps:
    caps = parse_caps(os.environ.get(ENV_CAPS), Caps())
    overrides = {"free": args.cap_free, "power": args.cap_power, "homs": args.cap_homs,
                 "seed": args.seed}
    caps = replace(caps, **{k: v for k, v in overrides.items() if v is not None})
    for k, v in asdict(caps).items():
        if k != "seed" and v <= 0 and k != "exhaustive_max":
            raise ValueError(f"cap {k} must be positive")
    return caps


# ---------------------------------------------------------------------------
# output

def emit(args, payload: dict, text_lines: list) -> None:
    if args.format == "json":
        out = dict(payload)
        out["seed"] = args.caps.seed
        out["caps"] = asdict(args.caps)
        if args.timing:
            out["timing"] = round(time.perf_counter() - args.started, 3)
        sys.stdout.write(json.dumps(out, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    else:
        for line in text_lines:
            sys.stdout.write(line + "\n")
        sys.stdout.write(f"seed {args.caps.seed}\n")


def _pairs_text(pairs) -> str:
    return " ".join(f"({a},{b})" for a, b in pairs)


# ---------------------------------------------------------------------------
# commands

def cmd_free(args) -> int:
    if args.rank not in (2, 3):
        raise ValueError("rank must be 2 or 3")
    base = [load_algebra(a) for a in args.algebras]
    cap = args.cap if args.cap is not None else args.caps.free
    free = build_free(base, args.rank, cap)
    terms = [free.term(i) for i in range(free.size)]
    payload = {"command": "free", "base": [b.name for b in base], "rank": args.rank,
               "size": free.size, "generators": list(free.names)}
    lines = [f"size {free.size}", "generators " + " ".join(free.names)]
    if args.terms:
        payload["terms"] = terms
        lines += [f"  {i}: {t}" for i, t in enumerate(terms)]
    emit(args, payload, lines)
    return EXIT_OK


def cmd_eval(args) -> int:
    alg = load_algebra(args.algebra)
    expr = parse(args.op)
    env = {}
    for item in args.rel or []:
        name, _, value = item.partition("=")
        env[name.strip()] = parse_relation(value, alg.size)
    value = evaluate(expr, alg, env)
    pairs = value.pairs()
    payload = {"command": "eval", "algebra": alg.name, "op": to_text(expr),
               "env": {k: pairs_json(v) for k, v in sorted(env.items())},
               "pairs": [list(p) for p in pairs]}
    emit(args, payload, [_pairs_text(pairs)])
    return EXIT_OK


def cmd_malcev(args) -> int:
    base = [load_algebra(a) for a in args.algebras]
    caps = replace(args.caps, free=args.cap) if args.cap is not None else args.caps
    ctx = VarietyContext(base, caps)
    w = find_malcev_term(ctx, args.F, args.G)
    payload = {"command": "malcev", "base": [b.name for b in base],
               "F": to_text(parse(args.F)), "G": to_text(parse(args.G))}
    if w is None:
        payload["result"] = "NotFound"
        emit(args, payload, ["NotFound"])
        return EXIT_FAILS
    payload["result"] = "found"
    payload["witness"] = w.to_json()
    emit(args, payload, [f"term {w.name}"])
    return EXIT_OK


def cmd_verify(args) -> int:
    base = [load_algebra(a) for a in args.algebras]
    ctx = VarietyContext(base, args.caps)
    th = args.theorem
    g = args.G if args.G is not None else args.F
    if args.condition == "all":
        rep = equivalence_report(ctx, args.F, g if th == 1 else None, th)
        payload = {"command": "verify"}
        payload.update(rep)
        lines = [f"theorem {th}: {rep['verdict']} (consistent: {rep['consistent']})"]
        lines += [f"  ({c}) {v}" for c, v in rep["verdicts"].items()]
        for c, why in rep.get("skipped", {}).items():
            lines.append(f"  ({c}) skipped: {why}")
        emit(args, payload, lines)
        if not rep["consistent"]:
            return EXIT_FAILS
        return EXIT_OK if rep["verdict"] == HOLDS else EXIT_FAILS
    known = {1: THM1_CONDITIONS, 2: THM2_CONDITIONS, 3: THM3_CONDITIONS}[th]
    if args.condition not in known:
        raise ValueError(f"theorem {th} has conditions {', '.join(known)}")
    if th == 1:
        rep = check_thm1(ctx, args.F, g, args.condition, swapped=args.swapped)
    elif th == 2:
        rep = check_thm2(ctx, args.F, args.condition)
    else:
        rep = check_thm3(ctx, args.F, args.condition)
    payload = {"command": "verify", "F": to_text(parse(args.F)), "sample": ctx.sample_json()}
    payload.update(rep.to_json())
    lines = [f"theorem {th} ({args.condition}): {rep.verdict} [{rep.scope}, {rep.cases} cases]"]
    if rep.counterexample is not None:
        lines.append("counterexample " + json.dumps(rep.counterexample, sort_keys=True))
    emit(args, payload, lines)
    return EXIT_OK if rep.holds else EXIT_FAILS


def cmd_homtest(args) -> int:
    base = [load_algebra(a) for a in args.algebras]
    ctx = VarietyContext(base, args.caps)
    expr = parse(args.op)
    algs = ctx.sample.algebras
    homs = homs_among(algs, args.caps.homs, max_homs=args.caps.homs)
    evs = _Evaluators()
    cap = args.cap
    hom = check_hom_property(expr, homs, cap=cap, seed=args.caps.seed, evaluators=evs)
    mono = [check_monotone(expr, a, cap=cap, seed=args.caps.seed, evaluators=evs) for a in algs]
    reports = [hom] + mono
    verdict = FAILS if any(r.verdict == FAILS for r in reports) else (
        HOLDS if all(r.verdict == HOLDS for r in reports) else "exhausted-cap")
    payload = {"command": "homtest", "op": to_text(expr), "arity": arity_of(expr),
               "verdict": verdict, "homs": len(homs), "sample": ctx.sample_json(),
               "homomorphism_property": hom.to_json(),
               "monotone": [r.to_json() for r in mono]}
    lines = [f"{to_text(expr)}: {verdict}",
             f"  homomorphism property: {hom.verdict} ({hom.cases} cases, {hom.mode}, {len(homs)} homs)"]
    for a, r in zip(algs, mono):
        lines.append(f"  monotone on {a.name}: {r.verdict} ({r.cases} cases, {r.mode})")
    emit(args, payload, lines)
    return EXIT_FAILS if verdict == FAILS else EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relkit", description=__doc__.split("\n")[0], allow_abbrev=False)
    p.add_argument("--cap-free", type=int, help="free algebra size cap")
    p.add_argument("--cap-power", type=int, help="direct power size cap")
    p.add_argument("--cap-homs", type=int, help="homomorphism enumeration cap")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock seconds to JSON output (breaks byte-identical reruns)")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("free", help="build F_V(k)")
    f.add_argument("algebras", nargs="+")
    f.add_argument("--rank", type=int, required=True)
    f.add_argument("--cap", type=int)
    f.add_argument("--terms", action="store_true", help="list a term for every element")
    f.set_defaults(func=cmd_free)

    e = sub.add_parser("eval", help="evaluate an operator expression")
    e.add_argument("algebra")
    e.add_argument("--op", required=True)
    e.add_argument("--rel", action="append", metavar="NAME=PAIRS")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("malcev", help="search F_V(3) for a Mal'cev-modulo term")
    m.add_argument("algebras", nargs="+")
    m.add_argument("--F", required=True)
    m.add_argument("--G", required=True)
    m.add_argument("--cap", type=int)
    m.set_defaults(func=cmd_malcev)

    v = sub.add_parser("verify", help="check theorem conditions")
    v.add_argument("algebras", nargs="+")
    v.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    v.add_argument("--F", required=True)
    v.add_argument("--G")
    v.add_argument("--condition", default="all")
    v.add_argument("--swapped", action="store_true",
                   help="experimental reversed Cg order in theorem 1 (vi)")
    v.set_defaults(func=cmd_verify)

    h = sub.add_parser("homtest", help="homomorphism property and monotonicity")
    h.add_argument("algebras", nargs="+")
    h.add_argument("--op", required=True)
    h.add_argument("--cap", type=int, default=500, help="cases per check")
    h.set_defaults(func=cmd_homtest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.started = time.perf_counter()
    try:
        args.caps = run_config(args)
        return args.func(args)
    except OperatorSyntaxError as exc:
        return _fail(args, "SyntaxError", exc, EXIT_SYNTAX)
    except CapExceeded as exc:
        return _fail(args, "CapExceeded", exc, EXIT_CAP, reached=exc.reached)
    except (NotAdmissible, NotReflexive) as exc:
        return _fail(args, type(exc).__name__, exc, EXIT_ADMISSIBLE)
    except RegularityUnverified as exc:
        return _fail(args, "RegularityUnverified", exc, EXIT_REGULAR,
                     report=exc.report.to_json() if exc.report is not None else None)
    except (InvalidAlgebra, UnknownVariable, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"relkit: {exc}\n")
        return EXIT_FAILS


def _fail(args, kind: str, exc: Exception, code: int, **extra) -> int:
    if getattr(args, "format", "text") == "json" and hasattr(args, "caps"):
        payload = {"command": args.command, "error": kind, "message": str(exc)}
        payload.update({k: v for k, v in extra.items() if v is not None})
        emit(args, payload, [])
    sys.stderr.write(f"relkit: {kind}: {exc}\n")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
