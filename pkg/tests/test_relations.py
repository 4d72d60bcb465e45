import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from relkit import closures
from relkit.algebra import CongruencePartition, Homomorphism, enumerate_homomorphisms, quotient
from relkit.binrel import (
    BinaryRelation,
    compose,
    converse,
    diagonal,
    full,
    meet,
    transitive_closure,
    union_raw,
)
from relkit.errors import SizeMismatch
from strategies import adm_relations, algebras, relations


def rel(n, pairs, refl=False):
    r = BinaryRelation.from_pairs(n, pairs)
    return r | diagonal(n) if refl else r


def all_relations(n):
    cells = n * n
    for mask in range(1 << cells):
        bits = np.array([(mask >> i) & 1 for i in range(cells)], dtype=bool).reshape(n, n)
        yield BinaryRelation(bits)


def test_constants():
    assert diagonal(2).pairs() == [(0, 0), (1, 1)]
    assert len(full(2)) == 4
    assert diagonal(1) == full(1)


def test_compose_example():
    r = rel(2, [(0, 1)], refl=True)
    s = rel(2, [(1, 0)], refl=True)
    assert compose(r, s) == full(2)
    assert set(compose(r, s).pairs()) == oracles.compose(set(r.pairs()), set(s.pairs()))


def test_compose_size_mismatch():
    with pytest.raises(SizeMismatch):
        compose(diagonal(2), diagonal(3))


def test_compose_laws_exhaustive_size2():
    rels = list(all_relations(2))
    for r in rels:
        assert compose(diagonal(2), r) == r == compose(r, diagonal(2))
        if r.is_reflexive():
            assert r <= compose(r, r)
    for r, s, t in itertools.product(rels, repeat=3):
        assert compose(compose(r, s), t) == compose(r, compose(s, t))


@given(relations(3), relations(3))
def test_converse_of_compose(r, s):
    assert converse(compose(r, s)) == compose(converse(s), converse(r))


def test_converse_examples():
    r = rel(2, [(0, 1)], refl=True)
    assert converse(r) == rel(2, [(1, 0)], refl=True)
    assert converse(diagonal(3)) == diagonal(3) and converse(full(3)) == full(3)


@given(relations(3))
def test_converse_involution_and_meet(r):
    assert converse(converse(r)) == r
    assert meet(r, full(3)) == r
    assert meet(r, converse(r)).is_symmetric()


def test_union_raw_not_admissible_on_s2sq(s2sq):
    # search for two admissible relations whose raw union is not admissible
    fam = closures.all_reflexive_admissible(s2sq)
    found = None
    for r, s in itertools.combinations(fam, 2):
        u = union_raw(r, s)
        if not closures.is_admissible(s2sq, u):
            found = (r, s)
            break
    assert found is not None
    assert not oracles.is_admissible(s2sq, set(union_raw(*found).pairs()))


def test_union_raw_on_s2_stays_admissible(s2):
    # on S2 itself every union of reflexive relations is admissible
    for r, s in itertools.product(closures.all_reflexive_admissible(s2), repeat=2):
        assert closures.is_admissible(s2, union_raw(r, s))


def test_adm_reflexive_closure_examples(s2, z2m):
    assert closures.adm_reflexive_closure(s2, [(0, 1)]).pairs() == [(0, 0), (0, 1), (1, 1)]
    assert closures.adm_reflexive_closure(s2, []) == diagonal(2)
    assert closures.adm_reflexive_closure(z2m, [(0, 1)]) == full(2)


def test_tolerance_and_congruence_examples(s2):
    assert closures.tolerance_closure(s2, [(0, 1)]) == full(2)
    assert set(closures.tolerance_closure(s2, [(0, 1)]).pairs()) == oracles.tolerance(s2, {(0, 1)})
    assert closures.congruence_closure(s2, [(0, 1)]) == full(2)
    assert closures.congruence_closure(s2, []) == diagonal(2)


def test_transitive_closure_examples():
    r = rel(3, [(0, 1), (1, 2)], refl=True)
    assert (0, 2) in transitive_closure(r)
    t = transitive_closure(r)
    assert transitive_closure(t) == t


@pytest.mark.parametrize("which", ["s2", "z2m", "s2sq"])
def test_transitive_closure_of_admissible_is_admissible(which, request):
    alg = request.getfixturevalue(which)
    for r in closures.all_reflexive_admissible(alg):
        assert closures.is_admissible(alg, transitive_closure(r))


def test_bar_join_examples(s2):
    a = closures.adm_reflexive_closure(s2, [(0, 1)])
    b = closures.adm_reflexive_closure(s2, [(1, 0)])
    assert closures.bar_join(s2, a, b) == full(2)
    assert closures.bar_join(s2, a, diagonal(2)) == a
    assert union_raw(a, b) <= closures.bar_join(s2, a, b)


def test_plus_join(s2sq):
    fam = closures.all_reflexive_admissible(s2sq)
    for r in fam[:40]:
        assert closures.plus_join(s2sq, r, diagonal(4)) == transitive_closure(r)
        for s in fam[:40]:
            assert closures.plus_join(s2sq, r, s) == closures.plus_join(s2sq, s, r)
    cons = closures.congruences(s2sq)
    for a, b in itertools.product(cons, repeat=2):
        assert closures.plus_join(s2sq, a, b) == closures.congruence_closure(s2sq, union_raw(a, b))


def test_all_reflexive_admissible_matches_oracle(s2, z2m, s2sq):
    for alg, count in ((s2, 4), (z2m, 2), (s2sq, 306)):
        got = closures.all_reflexive_admissible(alg)
        assert len(got) == count
        if alg.size <= 2:
            assert {frozenset(r.pairs()) for r in got} == set(oracles.all_adm_refl(alg))


def test_congruences_of_s2sq(s2sq):
    cons = closures.congruences(s2sq)
    assert len(cons) == 7
    assert all(closures.is_congruence(s2sq, c) for c in cons)


def _closure_laws(fn, pred, alg, x, y):
    cx = fn(alg, x)
    assert x <= cx
    assert fn(alg, cx) == cx
    assert cx <= fn(alg, x | y)
    assert pred(alg, cx)


@given(algebras(max_size=3), st.data())
def test_closure_operators(alg, data):
    x = data.draw(relations(alg.size))
    y = data.draw(relations(alg.size))
    _closure_laws(closures.adm_reflexive_closure, closures.is_reflexive_admissible, alg, x, y)
    _closure_laws(closures.tolerance_closure, closures.is_tolerance, alg, x, y)
    _closure_laws(closures.congruence_closure, closures.is_congruence, alg, x, y)
    _closure_laws(lambda a, r: transitive_closure(r), lambda a, r: r.is_transitive(), alg, x, y)
    assert set(closures.adm_reflexive_closure(alg, x).pairs()) == oracles.adm_refl(alg, set(x.pairs()))
    assert set(closures.congruence_closure(alg, x).pairs()) == oracles.congruence(alg, set(x.pairs()))


def test_theta_conjugation_of_converse(s2sq):
    rng = np.random.default_rng(5)
    for theta in closures.congruences(s2sq):
        for _ in range(20):
            r = BinaryRelation(rng.random((4, 4)) < 0.4)
            lhs = converse(compose(compose(theta, r), theta))
            assert lhs == compose(compose(theta, converse(r)), theta)


def test_image_and_preimage(s2, s2sq):
    ident = Homomorphism(s2sq, s2sq, tuple(range(4)))
    for r in closures.all_reflexive_admissible(s2sq):
        assert closures.image(ident, r) == r
    for theta in closures.congruences(s2sq):
        q, pi = quotient(s2sq, CongruencePartition.from_relation(s2sq, theta))
        assert closures.preimage(pi, diagonal(q.size)) == pi.kernel()


def test_preimage_of_quotient_relation(s2, z2m):
    for alg in (s2, z2m):
        for s in closures.all_reflexive_admissible(alg):
            for theta in closures.congruences(alg):
                if not theta <= closures.congruence_closure(alg, s):
                    continue
                t, quo, pi = closures.quotient_rel(alg, s, theta)
                assert closures.preimage(pi, t) == compose(compose(theta, s), theta)


@given(st.data())
def test_image_monotone_and_commutes_with_closure(data):
    from conftest import make_s2
    from relkit.algebra import product
    src = product([make_s2(), make_s2()])
    homs = enumerate_homomorphisms(src, make_s2())
    phi = homs[data.draw(st.integers(0, len(homs) - 1))]
    pairs = data.draw(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=3))
    more = data.draw(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=2))
    r = closures.adm_reflexive_closure(src, pairs)
    r2 = closures.adm_reflexive_closure(src, pairs + more)
    assert closures.image(phi, r) <= closures.image(phi, r2)
    mapped = [(phi.map[a], phi.map[b]) for a, b in pairs]
    assert closures.image(phi, r) == closures.adm_reflexive_closure(phi.target, mapped)


@given(algebras(max_size=3), st.data())
def test_relation_strategy_is_reflexive_admissible(alg, data):
    r = data.draw(adm_relations(alg))
    assert closures.is_reflexive_admissible(alg, r)
