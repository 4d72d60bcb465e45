"""Closures of binary relations inside a finite algebra, plus images under maps.

A relation is admissible when it is a subuniverse of A x A.  The closures here
are computed directly on the bit matrix: every operation is applied
componentwise to all tuples of related pairs until nothing new appears.
"""

from __future__ import annotations

import numpy as np

from . import binrel
from .algebra import (
    CongruencePartition,
    FiniteAlgebra,
    Homomorphism,
    _is_compatible,
    close_bits,
    quotient,
)
from .binrel import BinaryRelation
from .errors import CapExceeded, NotACongruence, SizeMismatch


def _as_bits(alg: FiniteAlgebra, pairs) -> np.ndarray:
    if isinstance(pairs, BinaryRelation):
        if pairs.size != alg.size:
            raise SizeMismatch(f"relation on {pairs.size} elements, algebra has {alg.size}")
        return pairs.bits.copy()
    return BinaryRelation.from_pairs(alg.size, pairs).bits.copy()


def _close_bits(alg: FiniteAlgebra, bits: np.ndarray) -> np.ndarray:
    return close_bits(alg, bits)


def is_admissible(alg: FiniteAlgebra, rel: BinaryRelation) -> bool:
    if rel.size != alg.size:
        raise SizeMismatch(f"relation on {rel.size} elements, algebra has {alg.size}")
    return _is_compatible(alg, rel)


def is_reflexive_admissible(alg: FiniteAlgebra, rel: BinaryRelation) -> bool:
    return rel.is_reflexive() and is_admissible(alg, rel)


def is_tolerance(alg: FiniteAlgebra, rel: BinaryRelation) -> bool:
    return rel.is_symmetric() and is_reflexive_admissible(alg, rel)


def is_congruence(alg: FiniteAlgebra, rel: BinaryRelation) -> bool:
    return rel.is_transitive() and is_tolerance(alg, rel)


def admissible_closure(alg: FiniteAlgebra, pairs) -> BinaryRelation:
    """Least admissible relation containing ``pairs`` (no reflexivity added)."""
    return BinaryRelation(_close_bits(alg, _as_bits(alg, pairs)))


def adm_reflexive_closure(alg: FiniteAlgebra, pairs) -> BinaryRelation:
    """The bar operator: least reflexive admissible relation containing ``pairs``."""
    bits = _as_bits(alg, pairs)
    bits |= np.eye(alg.size, dtype=bool)
    return BinaryRelation(_close_bits(alg, bits))


def tolerance_closure(alg: FiniteAlgebra, pairs) -> BinaryRelation:
    bits = _as_bits(alg, pairs)
    bits |= bits.T
    bits |= np.eye(alg.size, dtype=bool)
    # converse of an admissible relation is admissible, so one pass suffices
    return BinaryRelation(_close_bits(alg, bits))


def congruence_closure(alg: FiniteAlgebra, pairs) -> BinaryRelation:
    """Cg: least congruence containing ``pairs``."""
    rel = tolerance_closure(alg, pairs)
    while True:
        nxt = tolerance_closure(alg, binrel.transitive_closure(rel))
        if nxt == rel:
            return rel
        rel = nxt


def bar_join(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    return adm_reflexive_closure(alg, binrel.union_raw(r, s))


def plus_join(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    """R + S, read as the transitive closure of the bar-join.

    This is the least reflexive admissible transitive relation containing both;
    on congruences it is the congruence join.
    """
    return binrel.transitive_closure(bar_join(alg, r, s))


def image(phi: Homomorphism, rel: BinaryRelation) -> BinaryRelation:
    """phi(R): the reflexive admissible relation of the target generated by phi-pairs."""
    if rel.size != phi.source.size:
        raise SizeMismatch("relation is not over the homomorphism's source")
    m = np.array(phi.map)
    pairs = np.argwhere(rel.bits)
    bits = np.zeros((phi.target.size, phi.target.size), dtype=bool)
    bits[m[pairs[:, 0]], m[pairs[:, 1]]] = True
    return adm_reflexive_closure(phi.target, BinaryRelation(bits))


def raw_image(phi: Homomorphism, rel: BinaryRelation) -> BinaryRelation:
    m = np.array(phi.map)
    pairs = np.argwhere(rel.bits)
    bits = np.zeros((phi.target.size, phi.target.size), dtype=bool)
    bits[m[pairs[:, 0]], m[pairs[:, 1]]] = True
    return BinaryRelation(bits)


def preimage(phi: Homomorphism, rel: BinaryRelation) -> BinaryRelation:
    if rel.size != phi.target.size:
        raise SizeMismatch("relation is not over the homomorphism's target")
    m = np.array(phi.map)
    return BinaryRelation(rel.bits[m[:, None], m[None, :]])


def quotient_rel(alg: FiniteAlgebra, rel: BinaryRelation, theta) -> tuple:
    """R/theta = pi(R) in A/theta.  Returns (relation, quotient algebra, pi)."""
    if isinstance(theta, BinaryRelation) and not is_congruence(alg, theta):
        raise NotACongruence("theta is not a congruence")
    quo, pi = quotient(alg, theta)
    return image(pi, rel), quo, pi


# ---------------------------------------------------------------------------
# relation families used by the quantifier strategies

def single_pair_relations(alg: FiniteAlgebra) -> list:
    """Distinct relations bar<(a, b)> for a != b, in order of first generating pair."""
    seen = {}
    for a in range(alg.size):
        for b in range(alg.size):
            if a != b:
                rel = adm_reflexive_closure(alg, [(a, b)])
                seen.setdefault(rel, None)
    return list(seen)


def all_reflexive_admissible(alg: FiniteAlgebra, limit: int | None = None) -> list:
    """Every reflexive admissible relation, sorted by (size, bit pattern).

    Each one is the bar-join of the single-pair relations it contains, so the
    family is the join-closure of the single-pair relations and the diagonal.
    """
    base = single_pair_relations(alg)
    family = {binrel.diagonal(alg.size)}
    frontier = list(family)
    while frontier:
        nxt = []
        for rel in frontier:
            for p in base:
                if p <= rel:
                    continue
                j = bar_join(alg, rel, p)
                if j not in family:
                    family.add(j)
                    nxt.append(j)
                    if limit is not None and len(family) > limit:
                        raise CapExceeded(f"more than {limit} reflexive admissible relations",
                                          len(family))
        frontier = nxt
    return sorted(family, key=lambda r: (len(r), tuple(r.bits.ravel().tolist())))


def congruences(alg: FiniteAlgebra) -> list:
    """All congruences, as joins of principal congruences; sorted like relations above."""
    principal = {}
    for a in range(alg.size):
        for b in range(a + 1, alg.size):
            principal.setdefault(congruence_closure(alg, [(a, b)]), None)
    family = {binrel.diagonal(alg.size)}
    frontier = list(family)
    while frontier:
        nxt = []
        for rel in frontier:
            for p in principal:
                if p <= rel:
                    continue
                j = congruence_closure(alg, binrel.union_raw(rel, p))
                if j not in family:
                    family.add(j)
                    nxt.append(j)
        frontier = nxt
    return sorted(family, key=lambda r: (len(r), tuple(r.bits.ravel().tolist())))


def partition_of(alg: FiniteAlgebra, rel: BinaryRelation) -> CongruencePartition:
    return CongruencePartition.from_relation(alg, rel)
