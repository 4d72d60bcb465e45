"""Binary relations on {0..n-1} stored as boolean matrices.

Only the algebra-free part of the relation calculus lives here: constants,
composition, converse, meet, raw union and transitive closure.  Closures that
need an algebra (admissible, tolerance, congruence) are in ``closures``.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import SizeMismatch


class BinaryRelation:
    """Immutable n x n boolean matrix; bit (a, b) is set iff a R b."""

    __slots__ = ("_bits", "_hash")

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"relation matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        self._bits = arr
        self._hash = None

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> BinaryRelation:
        bits = np.zeros((n, n), dtype=bool)
        for a, b in pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"pair ({a}, {b}) outside universe of size {n}")
            bits[a, b] = True
        return cls(bits)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def size(self) -> int:
        return self._bits.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        """Sorted list of related pairs."""
        return [(int(a), int(b)) for a, b in np.argwhere(self._bits)]

    def __contains__(self, pair) -> bool:
        a, b = pair
        return bool(self._bits[a, b])

    def __len__(self) -> int:
        return int(self._bits.sum())

    def __iter__(self):
        return iter(self.pairs())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryRelation):
            return NotImplemented
        return self.size == other.size and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.size, self._bits.tobytes()))
        return self._hash

    def __le__(self, other: BinaryRelation) -> bool:
        _check_sizes(self, other)
        return not bool(np.any(self._bits & ~other._bits))

    def __ge__(self, other: BinaryRelation) -> bool:
        return other <= self

    def __lt__(self, other: BinaryRelation) -> bool:
        return self <= other and self != other

    def __gt__(self, other: BinaryRelation) -> bool:
        return other < self

    def __and__(self, other: BinaryRelation) -> BinaryRelation:
        return meet(self, other)

    def __or__(self, other: BinaryRelation) -> BinaryRelation:
        return union_raw(self, other)

    def __repr__(self) -> str:
        return f"BinaryRelation(n={self.size}, pairs={self.pairs()})"

    def key(self) -> bytes:
        return self._bits.tobytes()

    def is_reflexive(self) -> bool:
        return bool(self._bits.diagonal().all())

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self._bits, self._bits.T))

    def is_transitive(self) -> bool:
        return compose(self, self) <= self

    def is_equivalence(self) -> bool:
        return self.is_reflexive() and self.is_symmetric() and self.is_transitive()


def _check_sizes(r: BinaryRelation, s: BinaryRelation) -> None:
    if r.size != s.size:
        raise SizeMismatch(f"relations on {r.size} and {s.size} elements")


def diagonal(n: int) -> BinaryRelation:
    """The equality relation 0."""
    if n < 1:
        raise ValueError("universe size must be positive")
    return BinaryRelation(np.eye(n, dtype=bool))


def full(n: int) -> BinaryRelation:
    """The all relation 1."""
    if n < 1:
        raise ValueError("universe size must be positive")
    return BinaryRelation(np.ones((n, n), dtype=bool))


def compose(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    """(a, c) iff a r b and b s c for some b."""
    _check_sizes(r, s)
    return BinaryRelation(r.bits @ s.bits)


def converse(r: BinaryRelation) -> BinaryRelation:
    return BinaryRelation(r.bits.T)


def meet(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    _check_sizes(r, s)
    return BinaryRelation(r.bits & s.bits)


def union_raw(r: BinaryRelation, s: BinaryRelation) -> BinaryRelation:
    """Set union, with no closure applied."""
    _check_sizes(r, s)
    return BinaryRelation(r.bits | s.bits)


def transitive_closure(r: BinaryRelation) -> BinaryRelation:
    # squaring the reflexive hull reaches every path length in log n rounds;
    # the original relation is then composed once to drop spurious diagonal bits
    bits = r.bits
    reach = bits | np.eye(r.size, dtype=bool)
    while True:
        nxt = reach @ reach
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    return BinaryRelation(bits | (bits @ reach))
