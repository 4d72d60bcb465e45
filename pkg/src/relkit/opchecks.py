"""Checks of the properties global operators are assumed to have.

Every check returns an OperatorCheckReport.  Quantification over reflexive
admissible relations is exhaustive while the number of cases stays within
``cap``; beyond that a seeded pseudo-random sample is drawn, and the seed is
recorded in the report so a run can be replayed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from . import binrel, closures
from .algebra import FiniteAlgebra, Homomorphism, enumerate_homomorphisms, quotient
from .binrel import BinaryRelation
from .errors import CapExceeded
from .oplang import Evaluator, Expr, to_text

HOLDS, FAILS, EXHAUSTED = "holds", "fails", "exhausted-cap"
DEFAULT_CHECK_CAP = 100_000


@dataclass
class OperatorCheckReport:
    property: str
    verdict: str
    cases: int = 0
    mode: str = "exhaustive"
    seed: int | None = None
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.verdict == FAILS) != (self.counterexample is not None):
            raise ValueError("a counterexample is present exactly when the verdict is 'fails'")

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_json(self) -> dict:
        out = {
            "property": self.property,
            "verdict": self.verdict,
            "cases": self.cases,
            "mode": self.mode,
            "seed": self.seed,
        }
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.details:
            out["details"] = {k: v.to_json() if hasattr(v, "to_json") else v
                              for k, v in self.details.items()}
        return out


def arity_of(expr: Expr) -> int:
    from .oplang import _collect_vars

    return max((v.index for v in _collect_vars(expr)), default=-1) + 1


def relation_family(alg: FiniteAlgebra, exhaustive_max: int = 2) -> list:
    """Relations a universally quantified condition ranges over.

    Every reflexive admissible relation when the algebra has at most
    ``exhaustive_max`` elements; otherwise 0, the single-pair generated
    relations, and 1.
    """
    if alg.size <= exhaustive_max:
        return closures.all_reflexive_admissible(alg)
    fam = {binrel.diagonal(alg.size): None}
    for r in closures.single_pair_relations(alg):
        fam.setdefault(r, None)
    fam.setdefault(binrel.full(alg.size), None)
    return list(fam)


def pairs_json(rel: BinaryRelation) -> list:
    return [list(p) for p in rel.pairs()]


def _env_json(names, env) -> dict:
    return {nm: pairs_json(r) for nm, r in zip(names, env)}


def _names(expr: Expr, n: int) -> list:
    from .oplang import _collect_vars

    names = [f"R{i}" for i in range(n)]
    for v in _collect_vars(expr):
        if v.name:
            names[v.index] = v.name
    return names


class _Evaluators(dict):
    def __missing__(self, alg):
        ev = Evaluator(alg)
        self[alg] = ev
        return ev


# ---------------------------------------------------------------------------
# monotonicity

def check_monotone(expr: Expr, alg: FiniteAlgebra, mode: str = "auto",
                   cap: int = DEFAULT_CHECK_CAP, seed: int = 0,
                   relations: Sequence[BinaryRelation] | None = None,
                   evaluators: dict | None = None) -> OperatorCheckReport:
    """env <= env' pointwise must give F(env) <= F(env')."""
    n = arity_of(expr)
    names = _names(expr, n)
    rels = list(relations) if relations is not None else closures.all_reflexive_admissible(alg)
    ev = (evaluators if evaluators is not None else _Evaluators())[alg]
    comparable = [(a, b) for a in rels for b in rels if a <= b]
    total = len(comparable) ** n
    if mode == "auto":
        mode = "exhaustive" if total <= cap else "sampled"
    if mode == "exhaustive":
        cases = itertools.islice(itertools.product(comparable, repeat=n), cap)
        used_seed = None
    else:
        rng = random.Random(seed)
        cases = (tuple(rng.choice(comparable) for _ in range(n)) for _ in range(cap))
        used_seed = seed
    count = 0
    for case in cases:
        count += 1
        small = tuple(a for a, _ in case)
        large = tuple(b for _, b in case)
        lo, hi = ev(expr, small), ev(expr, large)
        if not lo <= hi:
            missing = next(p for p in lo.pairs() if p not in hi)
            cex = {
                "algebra": alg.to_json(),
                "env_small": _env_json(names, small),
                "env_large": _env_json(names, large),
                "value_small": pairs_json(lo),
                "value_large": pairs_json(hi),
                "missing": list(missing),
            }
            return OperatorCheckReport("monotone", FAILS, count, mode, used_seed, cex)
    verdict = HOLDS if mode == "sampled" or total <= cap else EXHAUSTED
    return OperatorCheckReport("monotone", verdict, count, mode, used_seed)


# ---------------------------------------------------------------------------
# homomorphism property

def check_hom_property(expr: Expr, homs: Sequence[Homomorphism], cap: int = DEFAULT_CHECK_CAP,
                       seed: int = 0, mode: str = "auto",
                       evaluators: dict | None = None) -> OperatorCheckReport:
    """phi(F_B(R1..Rn)) <= F_A(phi R1, .., phi Rn) for each phi: B -> A given.

    ``cap`` bounds the environments tried per homomorphism.
    """
    n = arity_of(expr)
    names = _names(expr, n)
    evs = evaluators if evaluators is not None else _Evaluators()
    images: dict = {}
    count = 0
    modes = set()
    exhausted = False
    for hi, phi in enumerate(homs):
        rels = closures.all_reflexive_admissible(phi.source)
        total = len(rels) ** n
        m = mode if mode != "auto" else ("exhaustive" if total <= cap else "sampled")
        modes.add(m)
        if m == "exhaustive":
            envs = itertools.islice(itertools.product(rels, repeat=n), cap)
            exhausted |= total > cap
        else:
            rng = random.Random(seed + hi)
            envs = (tuple(rng.choice(rels) for _ in range(n)) for _ in range(cap))
        src_ev, dst_ev = evs[phi.source], evs[phi.target]
        for env in envs:
            count += 1
            img_env = []
            for r in env:
                key = (phi, r)
                if key not in images:
                    images[key] = closures.image(phi, r)
                img_env.append(images[key])
            lhs = closures.image(phi, src_ev(expr, env))
            rhs = dst_ev(expr, tuple(img_env))
            if not lhs <= rhs:
                missing = next(p for p in lhs.pairs() if p not in rhs)
                cex = {
                    "source": phi.source.to_json(),
                    "target": phi.target.to_json(),
                    "map": list(phi.map),
                    "env": _env_json(names, env),
                    "image_of_value": pairs_json(lhs),
                    "value_on_images": pairs_json(rhs),
                    "missing": list(missing),
                }
                return OperatorCheckReport("homomorphism property", FAILS, count,
                                           _mode_label(modes), _seed_for(modes, seed), cex)
    verdict = EXHAUSTED if exhausted else HOLDS
    return OperatorCheckReport("homomorphism property", verdict, count,
                               _mode_label(modes), _seed_for(modes, seed))


def _mode_label(modes: set) -> str:
    if not modes:
        return "exhaustive"
    return "exhaustive" if modes == {"exhaustive"} else "sampled"


def _seed_for(modes: set, seed: int):
    return seed if "sampled" in modes else None


def homs_among(algebras: Sequence[FiniteAlgebra], limit: int = 10**6,
               max_homs: int | None = None) -> list:
    """Every homomorphism between ordered pairs of similar algebras in the list."""
    out = []
    for src in algebras:
        for dst in algebras:
            if not src.is_similar(dst):
                continue
            out.extend(enumerate_homomorphisms(src, dst, limit))
            if max_homs is not None and len(out) > max_homs:
                raise CapExceeded(f"more than {max_homs} homomorphisms", len(out))
    return out


def replay_counterexample(expr: Expr, report: OperatorCheckReport) -> bool:
    """Re-run a failing case from its JSON counterexample; True if it still fails."""
    from .algebra import validate_algebra

    cex = report.counterexample
    if cex is None:
        return False
    names = _names(expr, arity_of(expr))

    def env_from(alg, d):
        return tuple(BinaryRelation.from_pairs(alg.size, map(tuple, d[nm])) for nm in names)

    if report.property == "monotone":
        alg = validate_algebra(cex["algebra"])
        ev = Evaluator(alg)
        return not ev(expr, env_from(alg, cex["env_small"])) <= ev(expr, env_from(alg, cex["env_large"]))
    if report.property == "homomorphism property":
        src = validate_algebra(cex["source"])
        dst = validate_algebra(cex["target"])
        phi = Homomorphism(src, dst, tuple(cex["map"]))
        env = env_from(src, cex["env"])
        lhs = closures.image(phi, Evaluator(src)(expr, env))
        rhs = Evaluator(dst)(expr, tuple(closures.image(phi, r) for r in env))
        return not lhs <= rhs
    raise ValueError(f"no replay for property {report.property!r}")


# ---------------------------------------------------------------------------
# regularity

def check_regular(expr: Expr, algebras: Sequence[FiniteAlgebra],
                  homs: Sequence[Homomorphism] | None = None,
                  cap: int = DEFAULT_CHECK_CAP, seed: int = 0,
                  exhaustive_max: int = 2, hom_limit: int = 10**6) -> OperatorCheckReport:
    """Congruence-valued, monotone, homomorphism property, quotient property.

    The side condition F(R) = F(R~) is reported under details but does not
    affect the verdict.
    """
    if arity_of(expr) > 1:
        raise ValueError("regularity is defined for unary operators")
    evs = _Evaluators()
    fams = {alg: relation_family(alg, exhaustive_max) for alg in algebras}
    text = to_text(expr)

    def first_failure(prop, pred, render):
        count = 0
        for alg in algebras:
            for r in fams[alg]:
                count += 1
                if not pred(alg, r):
                    return OperatorCheckReport(prop, FAILS, count, counterexample=render(alg, r))
        return OperatorCheckReport(prop, HOLDS, count)

    def value(alg, r):
        return evs[alg](expr, (r,))

    def case_json(alg, r, **extra):
        d = {"algebra": alg.to_json(), "R": pairs_json(r), "operator": text}
        d.update(extra)
        return d

    congruence = first_failure(
        "congruence-valued",
        lambda alg, r: closures.is_congruence(alg, value(alg, r)),
        lambda alg, r: case_json(alg, r, value=pairs_json(value(alg, r))),
    )

    mono_reports = [check_monotone(expr, alg, cap=cap, seed=seed, evaluators=evs) for alg in algebras]
    monotone = _merge("monotone", mono_reports)

    if homs is None:
        homs = homs_among(algebras, hom_limit)
    hom = check_hom_property(expr, homs, cap=cap, seed=seed, evaluators=evs)

    def quotient_ok(alg, r):
        theta = value(alg, r)
        if not closures.is_congruence(alg, theta):
            return False
        quo, pi = quotient(alg, theta)
        return evs[quo](expr, (closures.image(pi, r),)) == binrel.diagonal(quo.size)

    def quotient_json(alg, r):
        theta = value(alg, r)
        if not closures.is_congruence(alg, theta):
            return case_json(alg, r, reason="F(R) is not a congruence")
        quo, pi = quotient(alg, theta)
        t = closures.image(pi, r)
        return case_json(alg, r, quotient=quo.to_json(), R_mod_F=pairs_json(t),
                         value_on_quotient=pairs_json(evs[quo](expr, (t,))))

    quot = first_failure("quotient property", quotient_ok, quotient_json)
    conv = first_failure(
        "converse invariant",
        lambda alg, r: value(alg, r) == value(alg, binrel.converse(r)),
        lambda alg, r: case_json(alg, r, value=pairs_json(value(alg, r)),
                                 value_of_converse=pairs_json(value(alg, binrel.converse(r)))),
    )
    subs = {"congruence_valued": congruence, "monotone": monotone,
            "homomorphism_property": hom, "quotient_property": quot}
    verdicts = [s.verdict for s in subs.values()]
    if FAILS in verdicts:
        verdict = FAILS
        name, first = next((k, s) for k, s in subs.items() if s.verdict == FAILS)
        cex = {"subcheck": name, **first.counterexample}
    else:
        verdict = EXHAUSTED if EXHAUSTED in verdicts else HOLDS
        cex = None
    details = dict(subs)
    details["converse_invariant"] = conv
    return OperatorCheckReport("regular", verdict, sum(s.cases for s in subs.values()),
                               counterexample=cex, details=details)


def _merge(prop: str, reports: Sequence[OperatorCheckReport]) -> OperatorCheckReport:
    count = sum(r.cases for r in reports)
    for r in reports:
        if r.verdict == FAILS:
            return OperatorCheckReport(prop, FAILS, count, r.mode, r.seed, r.counterexample)
    verdict = EXHAUSTED if any(r.verdict == EXHAUSTED for r in reports) else HOLDS
    modes = {r.mode for r in reports}
    seed = next((r.seed for r in reports if r.seed is not None), None)
    return OperatorCheckReport(prop, verdict, count, _mode_label(modes), seed)
