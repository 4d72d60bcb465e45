import itertools

import pytest

import oracles
from relkit import closures
from relkit.algebra import power, product, subuniverse_generate
from relkit.binrel import BinaryRelation, diagonal, full
from relkit.commutator import k3, k4, matrix_set, transpose_quads
from relkit.errors import NotAdmissible, NotReflexive


def pairs(r):
    return set(r.pairs())


def test_parity_matrix_set(z2m):
    m = matrix_set(z2m, full(2), full(2))
    assert len(m) == 8
    assert set(m.members) == {q for q in itertools.product((0, 1), repeat=4) if sum(q) % 2 == 0}
    assert set(m.members) == oracles.matrix_set(z2m, pairs(full(2)), pairs(full(2)))


def test_matrix_set_is_subuniverse_of_power(z2m, s2):
    for alg in (z2m, s2):
        m = matrix_set(alg, full(2), full(2))
        p4 = power(alg, 4)
        assert subuniverse_generate(p4, m.codes) == frozenset(m.codes)


@pytest.mark.parametrize("which", ["s2", "z2m", "s2sq"])
def test_zero_zero_is_diagonal(which, request):
    alg = request.getfixturevalue(which)
    m = matrix_set(alg, diagonal(alg.size), diagonal(alg.size))
    assert set(m.members) == {(c, c, c, c) for c in range(alg.size)}
    for u in (diagonal(alg.size), full(alg.size)):
        assert k4(alg, diagonal(alg.size), diagonal(alg.size), u, full(alg.size)) <= diagonal(alg.size)


def test_semilattice_matrix(s2):
    assert (0, 0, 1, 0) in matrix_set(s2, full(2), full(2))


def test_k_examples(s2, z2m):
    one, zero = full(2), diagonal(2)
    assert k4(z2m, one, one, one, zero) == zero
    got = k4(s2, one, one, one, zero)
    assert (1, 0) in got and zero < got
    assert k3(z2m, one, one, zero) == zero
    assert k3(s2, one, one, one) == one


def test_k3_is_k4_with_full_u(s2sq):
    fam = closures.all_reflexive_admissible(s2sq)[::15]
    for r, s, t in itertools.product(fam, repeat=3):
        assert k3(s2sq, r, s, t) == k4(s2sq, r, s, full(4), t)


def test_k4_output_not_closed():
    # K on a 3-element chain with R = S = 1 and tight U, T: the raw pair set
    from relkit.algebra import FiniteAlgebra, Operation
    chain = FiniteAlgebra("C3", 3, (Operation("meet", 2, (0, 0, 0, 0, 1, 1, 0, 1, 2)),))
    one = full(3)
    u = closures.adm_reflexive_closure(chain, [(0, 1)])
    got = k4(chain, one, one, u, diagonal(3))
    expect = oracles.k4(chain, pairs(one), pairs(one), pairs(u), pairs(diagonal(3)))
    assert pairs(got) == expect


@pytest.mark.parametrize("which", ["s2", "z2m"])
def test_k4_matches_oracle_exhaustive(which, request):
    alg = request.getfixturevalue(which)
    fam = closures.all_reflexive_admissible(alg)
    for r, s, u, t in itertools.product(fam, repeat=4):
        assert pairs(k4(alg, r, s, u, t)) == oracles.k4(alg, pairs(r), pairs(s), pairs(u), pairs(t))


def test_matrix_set_matches_oracle_on_s2sq(s2sq):
    fam = closures.all_reflexive_admissible(s2sq)[::40]
    for r, s in itertools.product(fam, repeat=2):
        assert set(matrix_set(s2sq, r, s).members) == oracles.matrix_set(s2sq, pairs(r), pairs(s))


@pytest.mark.parametrize("which", ["s2", "z2m"])
def test_k4_monotone_exhaustive(which, request):
    alg = request.getfixturevalue(which)
    fam = closures.all_reflexive_admissible(alg)
    le = [(a, b) for a in fam for b in fam if a <= b]
    for (r, r2), (s, s2_), (u, u2), (t, t2) in itertools.product(le, repeat=4):
        assert k4(alg, r, s, u, t) <= k4(alg, r2, s2_, u2, t2)


@pytest.mark.parametrize("which", ["s2", "z2m"])
def test_transpose_symmetry(which, request):
    alg = request.getfixturevalue(which)
    fam = closures.all_reflexive_admissible(alg)
    for r, s in itertools.product(fam, repeat=2):
        assert (transpose_quads(matrix_set(alg, r, s)) == matrix_set(alg, s, r).bits).all()


def test_matrix_set_requires_reflexive_admissible(s2sq, s2):
    with pytest.raises(NotReflexive):
        matrix_set(s2, BinaryRelation.from_pairs(2, [(0, 1)]), full(2))
    bad = BinaryRelation.from_pairs(4, [(0, 0), (1, 1), (2, 2), (3, 3), (1, 2)])
    assert not closures.is_admissible(s2sq, bad)
    with pytest.raises(NotAdmissible):
        matrix_set(s2sq, bad, full(4))


def test_k_on_product_of_parity(z2m):
    sq = product([z2m, z2m])
    one = full(4)
    # abelian: K(1,1;1;0) stays the diagonal in the square as well
    assert k4(sq, one, one, one, diagonal(4)) == diagonal(4)
