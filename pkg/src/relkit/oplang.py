"""A small language for global relation operators F(R1, ..., Rn).

Concrete syntax (ASCII), loosest binding first::

    expr := plus
    plus := bar ("+" bar)*          R + S      transitive closure of the bar-join
    bar  := meet ("|" meet)*        R | S      least reflexive admissible relation over R u S
    meet := comp ("&" comp)*        R & S      intersection
    comp := post ("." post)*        R . S      relational composition
    post := atom ("~" | "*")*       R~  R*     converse, transitive closure
    atom := "0" | "1" | IDENT | "Cg(" expr ")" | "Tol(" expr ")" | "Adm(" expr ")"
          | "K(" expr "," expr ";" expr ";" expr ")" | "K(" expr "," expr ";" expr ")"
          | "(" expr ")"

All binary operators are left-associative.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import binrel, closures, commutator
from .algebra import FiniteAlgebra
from .binrel import BinaryRelation
from .errors import (
    NotAdmissible,
    NotReflexive,
    OperatorSyntaxError,
    SizeMismatch,
    UnknownVariable,
)

RESERVED = frozenset({"Cg", "Tol", "Adm", "K"})


# ---------------------------------------------------------------------------
# AST

class Expr:
    """Base class for operator AST nodes."""

    def children(self) -> tuple:
        return ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Zero(Expr):
    def __repr__(self):
        return "Zero()"


@dataclass(frozen=True, repr=False)
class One(Expr):
    def __repr__(self):
        return "One()"


@dataclass(frozen=True)
class Var(Expr):
    index: int
    name: str = ""


@dataclass(frozen=True)
class Conv(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Star(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Cg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Tol(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Adm(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Comp(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Meet(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class BarJoin(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Plus(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class K4(Expr):
    r: Expr
    s: Expr
    u: Expr
    t: Expr

    def children(self):
        return (self.r, self.s, self.u, self.t)


@dataclass(frozen=True)
class K3(Expr):
    r: Expr
    s: Expr
    t: Expr

    def children(self):
        return (self.r, self.s, self.t)


OperatorExpr = Expr

_BINARY = {Plus: ("+", 1), BarJoin: ("|", 2), Meet: ("&", 3), Comp: (".", 4)}
_UNARY_FN = {Cg: "Cg", Tol: "Tol", Adm: "Adm"}


def variables_of(expr: Expr) -> list:
    """Variable names in index order."""
    found = {}

    def walk(e):
        if isinstance(e, Var):
            found.setdefault(e.index, e.name)
        for c in e.children():
            walk(c)

    walk(expr)
    return [found[i] for i in sorted(found)]


def depth(expr: Expr) -> int:
    kids = expr.children()
    return 1 + max((depth(c) for c in kids), default=0)


# ---------------------------------------------------------------------------
# pretty printing

def _prec(e: Expr) -> int:
    for cls, (_, p) in _BINARY.items():
        if isinstance(e, cls):
            return p
    if isinstance(e, (Conv, Star)):
        return 5
    return 6


def to_text(e: Expr) -> str:
    """Canonical text: minimal parentheses, single spaces around binary operators."""
    for cls, (sym, p) in _BINARY.items():
        if isinstance(e, cls):
            left = to_text(e.left)
            if _prec(e.left) < p:
                left = f"({left})"
            right = to_text(e.right)
            if _prec(e.right) <= p:
                right = f"({right})"
            return f"{left} {sym} {right}"
    if isinstance(e, (Conv, Star)):
        inner = to_text(e.arg)
        if _prec(e.arg) < 5:
            inner = f"({inner})"
        return inner + ("~" if isinstance(e, Conv) else "*")
    if isinstance(e, Zero):
        return "0"
    if isinstance(e, One):
        return "1"
    if isinstance(e, Var):
        return e.name or f"R{e.index}"
    for cls, name in _UNARY_FN.items():
        if isinstance(e, cls):
            return f"{name}({to_text(e.arg)})"
    if isinstance(e, K4):
        return f"K({to_text(e.r)},{to_text(e.s)};{to_text(e.u)};{to_text(e.t)})"
    if isinstance(e, K3):
        return f"K({to_text(e.r)},{to_text(e.s)};{to_text(e.t)})"
    text = getattr(e, "to_text", None)
    if text is not None:
        return text()
    raise TypeError(f"cannot print node {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:([A-Za-z][A-Za-z0-9]*)|([01])|([()~*.&|+,;]))")


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = len(text) - len(text[pos:].lstrip())
            raise OperatorSyntaxError(f"unexpected character {text[bad]!r}", text, bad)
        kind = "ident" if m.group(1) else "const" if m.group(2) else "sym"
        start = m.start(m.lastindex)
        tokens.append((kind, m.group(m.lastindex), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.declared = list(variables) if variables is not None else None
        self.seen: list = []

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, sym: str):
        kind, val, pos = self.take()
        if val != sym or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise OperatorSyntaxError(f"expected {sym!r}, found {found}", self.text, pos)

    def fail(self, what: str):
        kind, val, pos = self.peek()
        found = "end of input" if kind == "end" else repr(val)
        raise OperatorSyntaxError(f"expected {what}, found {found}", self.text, pos)

    def parse(self) -> Expr:
        e = self.binary(1)
        if self.peek()[0] != "end":
            self.fail("end of input")
        return e

    def binary(self, level: int) -> Expr:
        if level == 5:
            return self.postfix()
        cls = next(c for c, (_, p) in _BINARY.items() if p == level)
        sym = _BINARY[cls][0]
        e = self.binary(level + 1)
        while self.peek()[1] == sym and self.peek()[0] == "sym":
            self.take()
            e = cls(e, self.binary(level + 1))
        return e

    def postfix(self) -> Expr:
        e = self.atom()
        while self.peek()[0] == "sym" and self.peek()[1] in ("~", "*"):
            e = Conv(e) if self.take()[1] == "~" else Star(e)
        return e

    def var(self, name: str, pos: int) -> Var:
        if self.declared is not None:
            if name not in self.declared:
                raise UnknownVariable(name)
            return Var(self.declared.index(name), name)
        if name not in self.seen:
            self.seen.append(name)
        return Var(self.seen.index(name), name)

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "const":
            return Zero() if val == "0" else One()
        if kind == "sym" and val == "(":
            e = self.binary(1)
            self.expect(")")
            return e
        if kind == "ident":
            if val in RESERVED:
                self.expect("(")
                if val == "K":
                    return self.k_args()
                e = self.binary(1)
                self.expect(")")
                return {"Cg": Cg, "Tol": Tol, "Adm": Adm}[val](e)
            return self.var(val, pos)
        self.i -= 1
        self.fail("a relation, constant or '('")

    def k_args(self) -> Expr:
        r = self.binary(1)
        self.expect(",")
        s = self.binary(1)
        self.expect(";")
        third = self.binary(1)
        if self.peek()[1] == ";" and self.peek()[0] == "sym":
            self.take()
            fourth = self.binary(1)
            self.expect(")")
            return K4(r, s, third, fourth)
        self.expect(")")
        return K3(r, s, third)


def parse(text: str, variables: Sequence[str] | None = None) -> Expr:
    """Parse operator text.

    With ``variables`` given, identifiers must come from that list and Var
    indices follow it; otherwise indices follow order of first appearance.
    """
    for v in variables or ():
        if v in RESERVED or not re.fullmatch(r"[A-Za-z][A-Za-z0-9]*", v):
            raise ValueError(f"invalid variable name {v!r}")
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# evaluation

def _env_list(expr: Expr, env) -> list:
    if not isinstance(env, Mapping):
        return list(env)
    refs = _collect_vars(expr)
    out = [None] * (max((v.index for v in refs), default=-1) + 1)
    for v in refs:
        if v.name not in env:
            raise UnknownVariable(v.name)
        out[v.index] = env[v.name]
    return out


def _collect_vars(expr: Expr) -> list:
    out = []

    def walk(e):
        if isinstance(e, Var):
            out.append(e)
        for c in e.children():
            walk(c)

    walk(expr)
    return out


class Evaluator:
    """Evaluates expressions on one algebra, memoizing on (node, environment)."""

    def __init__(self, alg: FiniteAlgebra, check_env: bool = True):
        self.alg = alg
        self.check_env = check_env
        self._memo: dict = {}
        self._checked: set = set()

    def _check(self, rel: BinaryRelation, label: str) -> None:
        if rel in self._checked:
            return
        if rel.size != self.alg.size:
            raise SizeMismatch(f"{label} is on {rel.size} elements, algebra has {self.alg.size}")
        if not rel.is_reflexive():
            raise NotReflexive(f"{label} is not reflexive")
        if not closures.is_admissible(self.alg, rel):
            raise NotAdmissible(f"{label} is not admissible")
        self._checked.add(rel)

    def __call__(self, expr: Expr, env) -> BinaryRelation:
        env = tuple(_env_list(expr, env))
        if self.check_env:
            for i, rel in enumerate(env):
                if rel is not None:
                    self._check(rel, f"variable #{i}")
        return self.eval(expr, env)

    def eval(self, e: Expr, env: tuple) -> BinaryRelation:
        key = (e, env)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = self._eval(e, env)
        self._memo[key] = val
        return val

    def _eval(self, e: Expr, env: tuple) -> BinaryRelation:
        alg = self.alg
        n = alg.size
        ev = self.eval
        if isinstance(e, Zero):
            return binrel.diagonal(n)
        if isinstance(e, One):
            return binrel.full(n)
        if isinstance(e, Var):
            if e.index >= len(env) or env[e.index] is None:
                raise UnknownVariable(e.name or f"#{e.index}")
            return env[e.index]
        if isinstance(e, Conv):
            return binrel.converse(ev(e.arg, env))
        if isinstance(e, Star):
            return binrel.transitive_closure(ev(e.arg, env))
        if isinstance(e, Comp):
            return binrel.compose(ev(e.left, env), ev(e.right, env))
        if isinstance(e, Meet):
            return binrel.meet(ev(e.left, env), ev(e.right, env))
        if isinstance(e, BarJoin):
            return closures.bar_join(alg, ev(e.left, env), ev(e.right, env))
        if isinstance(e, Plus):
            return closures.plus_join(alg, ev(e.left, env), ev(e.right, env))
        if isinstance(e, Cg):
            return closures.congruence_closure(alg, ev(e.arg, env))
        if isinstance(e, Tol):
            return closures.tolerance_closure(alg, ev(e.arg, env))
        if isinstance(e, Adm):
            return closures.adm_reflexive_closure(alg, ev(e.arg, env))
        if isinstance(e, K4):
            return commutator.k4(alg, ev(e.r, env), ev(e.s, env), ev(e.u, env), ev(e.t, env))
        if isinstance(e, K3):
            return commutator.k3(alg, ev(e.r, env), ev(e.s, env), ev(e.t, env))
        custom = getattr(e, "evaluate", None)
        if custom is not None:
            return custom(self, env)
        raise TypeError(f"cannot evaluate node {e!r}")


def evaluate(expr: Expr, alg: FiniteAlgebra, env) -> BinaryRelation:
    """Evaluate ``expr`` on ``alg``; ``env`` maps names (or positions) to relations."""
    return Evaluator(alg)(expr, env)
