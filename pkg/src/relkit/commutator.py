"""Matrix sets M(R, S) inside A^4 and the operators K(R,S;U;T), K(R,S;T).

A 2x2 matrix [[x, y], [z, w]] is stored as the quadruple (x, y, z, w).
M(R, S) is generated in A^4 by the column generators (a, a, a', a') for
a R a' and the row generators (b, b', b, b') for b S b'; closing under the
operations produces exactly the matrices t(a, b) arranged by a term t.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .algebra import FiniteAlgebra, close_bits
from .binrel import BinaryRelation, full
from .closures import is_admissible
from .errors import NotAdmissible, NotReflexive, SizeMismatch


class MatrixSet:
    """A subuniverse of A^4 held as a boolean array of shape (n, n, n, n)."""

    __slots__ = ("algebra", "bits")

    def __init__(self, algebra: FiniteAlgebra, bits: np.ndarray):
        bits = np.array(bits, dtype=bool)
        bits.setflags(write=False)
        self.algebra = algebra
        self.bits = bits

    @property
    def members(self) -> list:
        """Quadruples (x, y, z, w) in lexicographic order."""
        return [tuple(int(v) for v in q) for q in np.argwhere(self.bits)]

    @property
    def codes(self) -> list:
        """Members as elements of power(algebra, 4), coordinate 0 most significant."""
        return [int(c) for c in np.flatnonzero(self.bits)]

    def __contains__(self, quad) -> bool:
        return bool(self.bits[tuple(quad)])

    def __len__(self) -> int:
        return int(self.bits.sum())

    def __repr__(self):
        return f"MatrixSet({self.algebra.name}, {len(self)} members)"


def _require_reflexive_admissible(alg: FiniteAlgebra, rel: BinaryRelation, label: str) -> None:
    if rel.size != alg.size:
        raise SizeMismatch(f"{label} is on {rel.size} elements, algebra has {alg.size}")
    if not rel.is_reflexive():
        raise NotReflexive(f"{label} is not reflexive")
    if not is_admissible(alg, rel):
        raise NotAdmissible(f"{label} is not admissible")


def matrix_set(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation) -> MatrixSet:
    _require_reflexive_admissible(alg, r, "R")
    _require_reflexive_admissible(alg, s, "S")
    return _matrix_set(alg, r, s)


@lru_cache(maxsize=1 << 17)
def _matrix_set(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation) -> MatrixSet:
    n = alg.size
    seeds = np.zeros((n,) * 4, dtype=bool)
    ra = np.argwhere(r.bits)
    seeds[ra[:, 0], ra[:, 0], ra[:, 1], ra[:, 1]] = True
    sb = np.argwhere(s.bits)
    seeds[sb[:, 0], sb[:, 1], sb[:, 0], sb[:, 1]] = True
    return MatrixSet(alg, close_bits(alg, seeds))


def k_from_matrices(m: MatrixSet, u: BinaryRelation, t: BinaryRelation) -> BinaryRelation:
    """Pairs (z, w) from members [[x, y], [z, w]] with x U z and x T y."""
    n = m.algebra.size
    if u.size != n or t.size != n:
        raise SizeMismatch("U and T must live on the algebra of the matrix set")
    q = np.argwhere(m.bits)
    keep = u.bits[q[:, 0], q[:, 2]] & t.bits[q[:, 0], q[:, 1]]
    out = np.zeros((n, n), dtype=bool)
    out[q[keep, 2], q[keep, 3]] = True
    return BinaryRelation(out)


def k4(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation,
       u: BinaryRelation, t: BinaryRelation) -> BinaryRelation:
    """K(R,S;U;T); the result is returned as computed, with no further closure."""
    return k_from_matrices(matrix_set(alg, r, s), u, t)


def k3(alg: FiniteAlgebra, r: BinaryRelation, s: BinaryRelation,
       t: BinaryRelation) -> BinaryRelation:
    """K(R,S;T) = K(R,S;1;T)."""
    return k4(alg, r, s, full(alg.size), t)


def transpose_quads(m: MatrixSet) -> np.ndarray:
    """Swap the off-diagonal entries: (x, y, z, w) -> (x, z, y, w)."""
    return m.bits.transpose(0, 2, 1, 3)
