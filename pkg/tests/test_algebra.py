import itertools
import numpy as np

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from relkit import algebra, closures
from relkit.algebra import (
    CongruencePartition,
    FiniteAlgebra,
    Homomorphism,
    Operation,
    apply,
    decode,
    encode,
    enumerate_homomorphisms,
    is_homomorphism,
    power,
    product,
    quotient,
    subalgebra,
    subuniverse_generate,
    validate_algebra,
)
from relkit.binrel import diagonal, full
from relkit.errors import (
    ArityMismatch,
    CapExceeded,
    EmptyUniverse,
    EntryOutOfRange,
    IndexOutOfRange,
    NotACongruence,
    NotAHomomorphism,
    TableSizeMismatch,
)
from strategies import algebras


def raw(name, size, *ops):
    return {"name": name, "size": size,
            "operations": [{"name": n, "arity": a, "table": t} for n, a, t in ops]}


def test_validate_parity_table():
    z = validate_algebra(raw("Z2m", 2, ("m", 3, [0, 1, 1, 0, 1, 0, 0, 1])))
    for x, y, w in itertools.product((0, 1), repeat=3):
        assert apply(z, 0, (x, y, w)) == x ^ y ^ w


def test_validate_meet_table():
    s = validate_algebra(raw("S2", 2, ("meet", 2, [0, 0, 0, 1])))
    assert [apply(s, 0, p) for p in itertools.product((0, 1), repeat=2)] == [0, 0, 0, 1]


@pytest.mark.parametrize("bad, exc", [
    (raw("A", 2, ("f", 2, [0, 0, 0])), TableSizeMismatch),
    (raw("A", 2, ("f", 1, [0, 2])), EntryOutOfRange),
    (raw("A", 0), EmptyUniverse),
])
def test_validate_rejects(bad, exc):
    with pytest.raises(exc):
        validate_algebra(bad)


def test_constant_has_one_entry():
    a = validate_algebra(raw("C", 3, ("c", 0, [2]), ("f", 1, [0, 1, 2])))
    assert apply(a, 0, ()) == 2
    with pytest.raises(TableSizeMismatch):
        validate_algebra(raw("C", 3, ("c", 0, [2, 1])))


def test_apply_examples(s2, z2m):
    assert apply(z2m, 0, (1, 1, 0)) == 0
    assert apply(s2, 0, (1, 1)) == 1
    assert apply(z2m, 0, (0, 0, 0)) == 0


def test_apply_errors(s2):
    with pytest.raises(ArityMismatch):
        apply(s2, 0, (1,))
    with pytest.raises(IndexOutOfRange):
        apply(s2, 0, (1, 2))


def test_similarity(s2, z2m, s2sq):
    assert s2.is_similar(s2sq)
    assert not s2.is_similar(z2m)


def test_power_sizes(s2, z2m):
    sq = power(s2, 2)
    assert sq.size == 4
    # (0,1) meet (1,1) = (0,1); codes: (a,b) -> 2a + b
    assert apply(sq, 0, (encode((0, 1), 2), encode((1, 1), 2))) == encode((0, 1), 2)
    assert power(z2m, 4).size == 16
    with pytest.raises(CapExceeded):
        power(s2, 40, cap=10**6)


def test_encoding_coordinate_zero_most_significant():
    assert encode((1, 0, 0), 2) == 4
    assert decode(4, 2, 3) == (1, 0, 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_power_matches_coordinatewise(s2, z2m, k):
    for alg in (s2, z2m):
        p = power(alg, k)
        ar = alg.operations[0].arity
        for args in itertools.product(range(p.size), repeat=ar):
            coords = [decode(a, alg.size, k) for a in args]
            expect = tuple(apply(alg, 0, [c[i] for c in coords]) for i in range(k))
            assert decode(apply(p, 0, args), alg.size, k) == expect


def test_subuniverse_examples(s2, z2m):
    sq = power(s2, 2)
    seeds = {encode(p, 2) for p in [(0, 1), (0, 0), (1, 1)]}
    assert subuniverse_generate(sq, seeds) == frozenset(seeds)
    p4 = power(z2m, 4)
    gens = [(a, a, b, b) for a in (0, 1) for b in (0, 1)] + [(a, b, a, b) for a in (0, 1) for b in (0, 1)]
    got = {decode(c, 2, 4) for c in subuniverse_generate(p4, [encode(g, 2) for g in gens])}
    assert got == {q for q in itertools.product((0, 1), repeat=4) if sum(q) % 2 == 0}
    assert len(got) == 8
    assert subuniverse_generate(s2, range(2)) == frozenset({0, 1})
    assert subuniverse_generate(s2, []) == frozenset()


def test_constants_seed_generation():
    a = FiniteAlgebra("C", 3, (Operation("c", 0, (2,)), Operation("f", 1, (1, 1, 2))))
    assert subuniverse_generate(a, []) == frozenset({2})


@given(algebras(), st.data())
def test_subuniverse_is_closure_operator(alg, data):
    elems = st.sets(st.integers(0, alg.size - 1))
    x, y = data.draw(elems), data.draw(elems)
    cx = subuniverse_generate(alg, x)
    assert x <= cx
    assert subuniverse_generate(alg, cx) == cx
    assert cx <= subuniverse_generate(alg, x | y)
    width1 = {(v,) for v in cx}
    assert width1 == oracles.naive_close(alg, {(v,) for v in x}, 1)


def test_subalgebra_embedding(s2sq):
    sub, emb = subalgebra(s2sq, {0, 1})
    assert sub.size == 2
    assert emb.map == (0, 1)
    assert is_homomorphism(sub, s2sq, emb.map)


def test_homomorphism_validated(s2):
    with pytest.raises(NotAHomomorphism):
        Homomorphism(s2, s2, (1, 0))


def test_enumerate_examples(s2, z2m):
    assert [h.map for h in enumerate_homomorphisms(s2, s2)] == [(0, 0), (0, 1), (1, 1)]
    assert len(enumerate_homomorphisms(z2m, z2m)) == 4
    sq = power(z2m, 2)
    maps = {h.map for h in enumerate_homomorphisms(sq, z2m)}
    assert (0, 0, 1, 1) in maps and (0, 1, 0, 1) in maps


def test_enumerate_limit(s2sq):
    with pytest.raises(CapExceeded):
        enumerate_homomorphisms(s2sq, s2sq, limit=3)


@given(algebras(max_size=3, max_ops=1), algebras(max_size=3, max_ops=1))
def test_enumerate_matches_oracle(a, b):
    if not a.is_similar(b):
        return
    got = [h.map for h in enumerate_homomorphisms(a, b)]
    assert got == oracles.homs(a, b)


def test_quotient_examples(s2, z2m):
    q, pi = quotient(s2, CongruencePartition.from_relation(s2, full(2)))
    assert q.size == 1 and pi.map == (0, 0)
    q, pi = quotient(z2m, CongruencePartition.from_relation(z2m, diagonal(2)))
    assert q == z2m and pi.map == (0, 1)


def test_quotient_rejects_non_congruence(s2sq):
    from relkit.binrel import BinaryRelation
    bad = BinaryRelation.from_pairs(4, [(0, 0), (1, 1), (2, 2), (3, 3), (1, 2), (2, 1)])
    with pytest.raises(NotACongruence):
        CongruencePartition.from_relation(s2sq, bad)


def test_quotient_of_free_algebra(s2):
    from relkit.free import build_free, canonical_relations
    f2 = build_free([s2], 2)
    s = canonical_relations(f2, "thm3iii")["S"]
    theta = closures.congruence_closure(f2.carrier, s)
    expected = oracles.congruence(f2.carrier, set(s.pairs()))
    assert set(theta.pairs()) == expected
    blocks = {frozenset(b for a, b in expected if a == x) for x in range(f2.size)}
    q, _ = quotient(f2.carrier, CongruencePartition.from_relation(f2.carrier, theta))
    assert q.size == len(blocks)


def test_quotient_kernel_and_surjectivity(s2sq):
    for theta in closures.congruences(s2sq):
        part = CongruencePartition.from_relation(s2sq, theta)
        q, pi = quotient(s2sq, part)
        assert pi.is_surjective
        assert pi.kernel() == theta
        # blocks ordered by least member
        firsts = [min(b) for b in part.blocks()]
        assert firsts == sorted(firsts)


def test_structural_equality(s2):
    again = FiniteAlgebra("other name", 2, (Operation("meet", 2, (0, 0, 0, 1)),))
    assert again == s2 and hash(again) == hash(s2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**16 - 1), st.sampled_from([2, 3, 4]))
def test_lifted_closure_matches_generic(seed_bits, k):
    from unittest import mock
    from conftest import make_s2, make_z2m
    rng = np.random.default_rng(seed_bits)
    for alg in (make_s2(), make_z2m()):
        bits = rng.random((2,) * k) < 0.15
        fast = algebra.close_bits(alg, bits)
        with mock.patch.object(algebra, "_lifted_tables", lambda a, k: None):
            slow = algebra.close_bits(alg, bits)
        assert np.array_equal(fast, slow)
