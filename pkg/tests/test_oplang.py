from dataclasses import dataclass

import pytest
from hypothesis import given

from relkit import closures
from relkit import oplang as ol
from relkit.binrel import BinaryRelation, compose, converse, diagonal, full, meet
from relkit.errors import NotAdmissible, NotReflexive, OperatorSyntaxError, UnknownVariable
from relkit.oplang import Evaluator, evaluate, parse, to_text
from strategies import expressions

R, S, T, U = (ol.Var(i, n) for i, n in enumerate("RSTU"))


def test_parse_examples():
    assert parse("K(R,S;0)*") == ol.Star(ol.K3(R, S, ol.Zero()))
    assert parse("R~") == ol.Conv(R)
    assert parse("T & (R . S)") == ol.Meet(ol.Var(0, "T"), ol.Comp(ol.Var(1, "R"), ol.Var(2, "S")))


def test_precedence():
    e = parse("R + S | T & R . S~*")
    # + loosest, then |, &, ., postfix
    assert isinstance(e, ol.Plus)
    assert isinstance(e.right, ol.BarJoin)
    assert isinstance(e.right.right, ol.Meet)
    assert isinstance(e.right.right.right, ol.Comp)
    assert e.right.right.right.right == ol.Star(ol.Conv(ol.Var(1, "S")))


def test_left_associative():
    assert parse("R . S . T") == ol.Comp(ol.Comp(R, S), T)
    assert to_text(parse("R . (S . T)")) == "R . (S . T)"


def test_declared_variables():
    e = parse("T & R", variables=["R", "S", "T"])
    assert e == ol.Meet(ol.Var(2, "T"), ol.Var(0, "R"))
    with pytest.raises(UnknownVariable):
        parse("Q", variables=["R"])


@pytest.mark.parametrize("text, pos", [("R &", 3), ("K(R,S)", 5), ("(R", 2), ("R $ S", 2), ("Cg R", 3)])
def test_syntax_errors(text, pos):
    with pytest.raises(OperatorSyntaxError) as info:
        parse(text)
    assert info.value.position == pos
    assert isinstance(info.value, SyntaxError)


def test_reserved_names():
    with pytest.raises(OperatorSyntaxError):
        parse("K + R")


def test_canonical_text():
    assert to_text(parse("((T) & ((R) . (S)))")) == "T & R . S"
    assert to_text(parse("K( R , S ; 0 )*")) == "K(R,S;0)*"
    assert to_text(parse("(R | S)~")) == "(R | S)~"


@given(expressions())
def test_round_trip(e):
    text = to_text(e)
    back = parse(text, variables=["R", "S", "T"])
    assert back == e
    assert to_text(back) == text


def test_eval_examples(s2, z2m):
    assert evaluate(parse("0"), s2, {}) == diagonal(2)
    r = closures.adm_reflexive_closure(s2, [(0, 1)])
    assert evaluate(parse("Cg(R)"), s2, {"R": r}) == full(2)
    assert evaluate(parse("K(R,R;1;0)"), z2m, {"R": full(2)}) == diagonal(2)


def test_eval_node_semantics(s2sq):
    fam = closures.all_reflexive_admissible(s2sq)
    a, b = fam[7], fam[40]
    env = {"R": a, "S": b}
    ev = lambda text: evaluate(parse(text), s2sq, env)
    assert ev("R . S") == compose(a, b)
    assert ev("R & S") == meet(a, b)
    assert ev("R~") == converse(a)
    assert ev("R | S") == closures.bar_join(s2sq, a, b)
    assert ev("R + S") == closures.plus_join(s2sq, a, b)
    assert ev("Tol(R)") == closures.tolerance_closure(s2sq, a)
    assert ev("Adm(R . S)") == closures.adm_reflexive_closure(s2sq, compose(a, b))
    assert ev("1") == full(4)


def test_eval_env_checked(s2, s2sq):
    with pytest.raises(NotReflexive):
        evaluate(parse("R"), s2, {"R": BinaryRelation.from_pairs(2, [(0, 1)])})
    bad = BinaryRelation.from_pairs(4, [(0, 0), (1, 1), (2, 2), (3, 3), (1, 2)])
    with pytest.raises(NotAdmissible):
        evaluate(parse("R"), s2sq, {"R": bad})
    with pytest.raises(UnknownVariable):
        evaluate(parse("R . S"), s2, {"R": full(2)})


def test_eval_positional_env(z2m):
    assert evaluate(parse("R & S"), z2m, [full(2), diagonal(2)]) == diagonal(2)


def test_evaluator_memo(s2sq):
    ev = Evaluator(s2sq)
    e = parse("K(R,R;R;1)*")
    r = closures.all_reflexive_admissible(s2sq)[12]
    assert ev(e, (r,)) is ev(e, (r,))


def test_variables_and_depth():
    e = parse("K(R,S;T;0) . R~")
    assert ol.variables_of(e) == ["R", "S", "T"]
    assert ol.depth(e) == 3


@dataclass(frozen=True)
class Complement(ol.Expr):
    """Test-only node: the complement of its argument, with the diagonal added back."""

    arg: ol.Expr

    def children(self):
        return (self.arg,)

    def to_text(self):
        return f"Not({to_text(self.arg)})"

    def evaluate(self, ev, env):
        v = ev.eval(self.arg, env)
        return BinaryRelation(~v.bits) | diagonal(v.size)


def test_custom_node_evaluates(s2):
    e = Complement(ol.Var(0, "R"))
    assert to_text(e) == "Not(R)"
    assert evaluate(e, s2, [diagonal(2)]) == full(2)
    assert evaluate(e, s2, [full(2)]) == diagonal(2)
