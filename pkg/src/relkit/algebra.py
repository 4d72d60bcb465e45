"""Finite algebras given by operation tables, and the constructions on them.

Tables are flat, row-major, with the LAST argument varying fastest: for a
binary operation on n elements the value at (a, b) sits at index a*n + b.
Elements of a direct power A^k are encoded as mixed-radix integers with
coordinate 0 most significant, so (c0, ..., c_{k-1}) is c0*n^(k-1) + ... + c_{k-1}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .binrel import BinaryRelation
from .errors import (
    ArityMismatch,
    CapExceeded,
    EmptyUniverse,
    EntryOutOfRange,
    IndexOutOfRange,
    NotACongruence,
    NotAHomomorphism,
    NotSimilar,
    TableSizeMismatch,
)

DEFAULT_POWER_CAP = 10**6
# hard ceiling on materialized table entries, independent of the user cap
TABLE_ENTRY_CAP = 2 * 10**7


@dataclass(frozen=True)
class Operation:
    name: str
    arity: int
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if self.arity < 0:
            raise ArityMismatch(f"operation {self.name!r} has negative arity")

    def array(self, n: int) -> np.ndarray:
        return np.array(self.table, dtype=np.int64).reshape((n,) * self.arity)


@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    """Universe {0..size-1} with an ordered list of operations."""

    name: str
    size: int
    operations: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        if self.size < 1:
            raise EmptyUniverse(f"algebra {self.name!r} has empty universe")
        for op in self.operations:
            expected = self.size**op.arity
            if len(op.table) != expected:
                raise TableSizeMismatch(
                    f"operation {op.name!r} of arity {op.arity} on {self.size} elements "
                    f"needs {expected} entries, got {len(op.table)}"
                )
            bad = [v for v in op.table if not 0 <= v < self.size]
            if bad:
                raise EntryOutOfRange(
                    f"operation {op.name!r} has entry {bad[0]} outside 0..{self.size - 1}"
                )

    # equality is structural on size and tables; names are labels only
    def __eq__(self, other):
        if not isinstance(other, FiniteAlgebra):
            return NotImplemented
        return self.size == other.size and self._signature_tables == other._signature_tables

    def __hash__(self):
        return self._hash

    @cached_property
    def _signature_tables(self):
        return tuple((op.arity, op.table) for op in self.operations)

    @cached_property
    def _hash(self):
        return hash((self.size, self._signature_tables))

    @cached_property
    def tables(self) -> tuple:
        """Operation tables as numpy arrays of shape (size,) * arity."""
        arrs = []
        for op in self.operations:
            a = op.array(self.size)
            a.setflags(write=False)
            arrs.append(a)
        return tuple(arrs)

    @property
    def arities(self) -> tuple:
        return tuple(op.arity for op in self.operations)

    @property
    def universe(self) -> range:
        return range(self.size)

    def is_similar(self, other: FiniteAlgebra) -> bool:
        return self.arities == other.arities

    def op_index(self, name: str) -> int:
        for i, op in enumerate(self.operations):
            if op.name == name:
                return i
        raise IndexOutOfRange(f"algebra {self.name!r} has no operation {name!r}")

    def __len__(self):
        return self.size

    def __repr__(self):
        ops = ", ".join(f"{op.name}/{op.arity}" for op in self.operations)
        return f"FiniteAlgebra({self.name!r}, size={self.size}, ops=[{ops}])"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "size": self.size,
            "operations": [
                {"name": op.name, "arity": op.arity, "table": list(op.table)}
                for op in self.operations
            ],
        }


def validate_algebra(raw: dict) -> FiniteAlgebra:
    """Build a FiniteAlgebra from the JSON algebra format."""
    size = raw.get("size")
    if not isinstance(size, int) or size < 1:
        raise EmptyUniverse(f"size must be a positive integer, got {size!r}")
    ops = []
    for i, rop in enumerate(raw.get("operations", [])):
        arity = rop.get("arity")
        if not isinstance(arity, int) or arity < 0:
            raise ArityMismatch(f"operation {i} has invalid arity {arity!r}")
        ops.append(Operation(str(rop.get("name", f"f{i}")), arity, tuple(rop.get("table", ()))))
    return FiniteAlgebra(str(raw.get("name", "A")), size, tuple(ops))


def apply(alg: FiniteAlgebra, op_index: int, args: Sequence[int]) -> int:
    if not 0 <= op_index < len(alg.operations):
        raise IndexOutOfRange(f"operation index {op_index} out of range")
    op = alg.operations[op_index]
    if len(args) != op.arity:
        raise ArityMismatch(f"{op.name} takes {op.arity} arguments, got {len(args)}")
    idx = 0
    for a in args:
        if not 0 <= a < alg.size:
            raise IndexOutOfRange(f"argument {a} outside universe of size {alg.size}")
        idx = idx * alg.size + a
    return op.table[idx]


# ---------------------------------------------------------------------------
# mixed-radix encoding

def encode(coords: Sequence[int], n: int) -> int:
    code = 0
    for c in coords:
        code = code * n + int(c)
    return code


def decode(code: int, n: int, k: int) -> tuple:
    out = [0] * k
    for i in range(k - 1, -1, -1):
        code, out[i] = divmod(code, n)
    return tuple(out)


def _check_table_budget(size: int, arities: Iterable[int]) -> None:
    for r in arities:
        if size**r > TABLE_ENTRY_CAP:
            raise CapExceeded(
                f"operation table with {size}**{r} entries exceeds {TABLE_ENTRY_CAP}", size**r
            )


def product(algebras: Sequence[FiniteAlgebra], name: str | None = None) -> FiniteAlgebra:
    """Direct product; element (c0, ..., c_{m-1}) encoded mixed-radix, c0 most significant."""
    if not algebras:
        raise ValueError("product of no algebras")
    first = algebras[0]
    for other in algebras[1:]:
        if not first.is_similar(other):
            raise NotSimilar(f"{first.name} and {other.name} are not similar")
    sizes = [a.size for a in algebras]
    total = int(np.prod(sizes))
    _check_table_budget(total, first.arities)
    coords = np.indices(sizes, dtype=np.int64).reshape(len(sizes), -1).T
    weights = np.array([int(np.prod(sizes[i + 1:])) for i in range(len(sizes))], dtype=np.int64)
    ops = []
    for oi, op in enumerate(first.operations):
        r = op.arity
        if r == 0:
            res = np.array([[alg.tables[oi][()] for alg in algebras]], dtype=np.int64)
        else:
            grid = np.indices((total,) * r, dtype=np.int64).reshape(r, -1)
            cols = []
            for j, alg in enumerate(algebras):
                t = alg.tables[oi]
                cols.append(t[tuple(coords[g, j] for g in grid)])
            res = np.stack(cols, axis=1)
        ops.append(Operation(op.name, r, tuple((res @ weights).tolist())))
    label = name or "x".join(a.name for a in algebras)
    return FiniteAlgebra(label, total, tuple(ops))


def power(alg: FiniteAlgebra, k: int, cap: int = DEFAULT_POWER_CAP) -> FiniteAlgebra:
    if k < 1:
        raise ValueError("power exponent must be positive")
    if alg.size**k > cap:
        raise CapExceeded(f"{alg.size}**{k} elements exceeds power cap {cap}", alg.size**k)
    return product([alg] * k, name=f"{alg.name}^{k}")


# ---------------------------------------------------------------------------
# generation engine

# An "op" for the engine is (arity, fn) where fn maps r arrays of shape
# (batch, d) to one array of shape (batch, d); constants get fn() -> (1, d).
EngineOp = tuple


def coordinatewise_ops(blocks: Sequence[tuple[FiniteAlgebra, int]]) -> list:
    """Engine ops acting on rows whose columns are split into blocks.

    ``blocks`` lists (algebra, width); the algebras must be similar, and each
    block of columns is acted on by its own algebra's tables.
    """
    first = blocks[0][0]
    bounds = []
    start = 0
    for alg, width in blocks:
        bounds.append((alg, start, start + width))
        start += width
    ops = []
    for oi, r in enumerate(first.arities):
        if len(bounds) == 1:
            t = first.tables[oi]
            if r == 0:
                width = bounds[0][2]
                c = int(t[()])
                ops.append((0, lambda c=c, width=width: np.full((1, width), c, dtype=np.int64)))
            else:
                ops.append((r, lambda *args, t=t: t[args]))
        else:
            def fn(*args, oi=oi, r=r):
                if r == 0:
                    parts = [np.full((1, hi - lo), alg.tables[oi][()], dtype=np.int64)
                             for alg, lo, hi in bounds]
                else:
                    parts = [alg.tables[oi][tuple(a[:, lo:hi] for a in args)]
                             for alg, lo, hi in bounds]
                return np.concatenate(parts, axis=1)
            ops.append((r, fn))
    return ops


@dataclass
class Generated:
    """Result of a generation run: rows in generation order plus provenance.

    ``parents[i]`` is None for seeds and (op_index, arg_indices) otherwise.
    """

    rows: np.ndarray
    parents: list

    def __len__(self):
        return len(self.parents)


_CHUNK_ROWS = 1 << 16


def generate(ops: Sequence[EngineOp], seeds, width: int, cap: int | None = None,
             on_cap: Callable[[int], Exception] | None = None) -> Generated:
    """Least set of rows containing ``seeds`` and closed under ``ops``.

    Semi-naive fixpoint: each round applies every operation only to argument
    tuples that involve at least one row added in the previous round.  Order is
    deterministic: seeds first, then by round, operation index, and
    lexicographic argument indices.
    """
    index: dict[bytes, int] = {}
    rows: list[np.ndarray] = []
    parents: list = []

    def add(row, parent):
        key = row.tobytes()
        if key in index:
            return
        index[key] = len(rows)
        rows.append(row)
        parents.append(parent)
        if cap is not None and len(rows) > cap:
            if on_cap is not None:
                raise on_cap(len(rows))
            raise CapExceeded(f"generation exceeded cap {cap}", len(rows))

    for row in np.asarray(seeds, dtype=np.int64).reshape(-1, width):
        add(np.ascontiguousarray(row), None)
    for oi, (r, fn) in enumerate(ops):
        if r == 0:
            add(np.ascontiguousarray(fn()[0]), (oi, ()))

    start = 0
    while start < len(rows):
        end = len(rows)
        arr = np.array(rows[:end], dtype=np.int64).reshape(end, width)
        for oi, (r, fn) in enumerate(ops):
            if r == 0:
                continue
            for combos in _frontier_combos(start, end, r):
                results = fn(*[arr[combos[:, j]] for j in range(r)])
                for i in range(len(combos)):
                    row = results[i]
                    key = row.tobytes()
                    if key not in index:
                        add(np.ascontiguousarray(row), (oi, tuple(int(c) for c in combos[i])))
        start = end
    out = np.array(rows, dtype=np.int64).reshape(len(rows), width)
    return Generated(out, parents)


def _frontier_combos(start: int, end: int, r: int):
    """Index tuples in range(end)^r, lexicographic, with some entry >= start."""
    if r == 1:
        yield np.arange(start, end, dtype=np.int64).reshape(-1, 1)
        return
    tail = np.indices((end,) * (r - 1), dtype=np.int64).reshape(r - 1, -1).T
    tail_new = (tail >= start).any(axis=1)
    per_chunk = max(1, _CHUNK_ROWS // max(1, len(tail)))
    for lo in range(0, end, per_chunk):
        heads = np.arange(lo, min(end, lo + per_chunk), dtype=np.int64)
        keep = (heads[:, None] >= start) | tail_new[None, :]
        hi, ti = np.nonzero(keep)
        if len(hi):
            yield np.hstack([heads[hi, None], tail[ti]])


_LIFT_BUDGET = 1 << 20


@lru_cache(maxsize=64)
def _lifted_tables(alg: FiniteAlgebra, k: int):
    """Operations of A^k as code tables, or None when they would be too large."""
    n_codes = alg.size**k
    if any(n_codes**r > _LIFT_BUDGET for r in alg.arities):
        return None
    coords = _coords(np.arange(n_codes, dtype=np.int64), alg.size, k)
    weights = alg.size ** np.arange(k - 1, -1, -1, dtype=np.int64)
    out = []
    for t, r in zip(alg.tables, alg.arities):
        idx = np.indices((n_codes,) * r, dtype=np.int64).reshape(r, -1)
        lifted = t[tuple(coords[idx[j]] for j in range(r))] @ weights
        lifted = lifted.reshape((n_codes,) * r)
        lifted.setflags(write=False)
        out.append(lifted)
    return tuple(out)


def close_bits(alg: FiniteAlgebra, bits: np.ndarray, cap: int | None = None) -> np.ndarray:
    """Close a subset of A^k, given as a boolean array of shape (n,) * k.

    Operations act coordinatewise.  Semi-naive like ``generate`` but without
    provenance, so results are scattered straight into the bit array.
    """
    n = alg.size
    k = bits.ndim
    flat = np.array(bits, dtype=bool).reshape(-1).copy()
    weights = n ** np.arange(k - 1, -1, -1, dtype=np.int64)
    for t, r in zip(alg.tables, alg.arities):
        if r == 0:
            flat[int(t[()]) * int(weights.sum())] = True
    order = list(np.flatnonzero(flat))
    lifted = _lifted_tables(alg, k)
    if lifted is not None:
        return _close_lifted(lifted, alg.arities, flat, order, cap).reshape(bits.shape)
    start = 0
    while start < len(order):
        end = len(order)
        arr = _coords(np.array(order, dtype=np.int64), n, k)
        fresh = []
        for t, r in zip(alg.tables, alg.arities):
            if r == 0:
                continue
            for combos in _frontier_combos(start, end, r):
                res = t[tuple(arr[combos[:, j]] for j in range(r))] @ weights
                hit = res[~flat[res]]
                if len(hit):
                    hit = np.unique(hit)
                    flat[hit] = True
                    fresh.append(hit)
        for h in fresh:
            order.extend(h.tolist())
        if cap is not None and len(order) > cap:
            raise CapExceeded(f"closure exceeded cap {cap}", len(order))
        start = end
    return flat.reshape(bits.shape)


def _close_lifted(lifted, arities, flat, order, cap):
    order = np.array(order, dtype=np.int64)
    start = 0
    while start < len(order):
        end = len(order)
        fresh = []
        for t, r in zip(lifted, arities):
            if r == 0:
                continue
            for combos in _frontier_combos(start, end, r):
                res = t[tuple(order[combos[:, j]] for j in range(r))]
                hit = res[~flat[res]]
                if len(hit):
                    hit = np.unique(hit)
                    flat[hit] = True
                    fresh.append(hit)
        if fresh:
            order = np.concatenate([order] + fresh)
        if cap is not None and len(order) > cap:
            raise CapExceeded(f"closure exceeded cap {cap}", len(order))
        start = end
    return flat


def _coords(codes: np.ndarray, n: int, k: int) -> np.ndarray:
    out = np.empty((len(codes), k), dtype=np.int64)
    rest = codes.copy()
    for i in range(k - 1, -1, -1):
        rest, out[:, i] = np.divmod(rest, n)
    return out


def subuniverse_generate(alg: FiniteAlgebra, seeds: Iterable[int]) -> frozenset:
    """Least subset containing ``seeds`` closed under all operations (constants included)."""
    seeds = sorted(set(int(s) for s in seeds))
    for s in seeds:
        if not 0 <= s < alg.size:
            raise IndexOutOfRange(f"seed {s} outside universe of size {alg.size}")
    gen = generate(coordinatewise_ops([(alg, 1)]), np.array(seeds, dtype=np.int64), 1)
    return frozenset(int(v) for v in gen.rows[:, 0])


def is_subuniverse(alg: FiniteAlgebra, subset: Iterable[int]) -> bool:
    subset = set(subset)
    return subuniverse_generate(alg, subset) == subset


def subalgebra(alg: FiniteAlgebra, subset: Iterable[int], name: str | None = None):
    """Subalgebra on a closed subset, renumbered in increasing order.

    Returns (algebra, embedding homomorphism).
    """
    elems = sorted(set(subset))
    if not elems:
        raise EmptyUniverse("subalgebra on the empty set")
    if subuniverse_generate(alg, elems) != set(elems):
        raise ValueError("subset is not closed under the operations")
    pos = {e: i for i, e in enumerate(elems)}
    m = len(elems)
    ops = []
    for oi, op in enumerate(alg.operations):
        t = alg.tables[oi]
        table = []
        for args in itertools.product(elems, repeat=op.arity):
            table.append(pos[int(t[args])])
        ops.append(Operation(op.name, op.arity, tuple(table)))
    sub = FiniteAlgebra(name or f"{alg.name}|{m}", m, tuple(ops))
    return sub, Homomorphism(sub, alg, tuple(elems))


# ---------------------------------------------------------------------------
# homomorphisms and congruences

@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    map: tuple

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(v) for v in self.map))
        if not self.source.is_similar(self.target):
            raise NotSimilar(f"{self.source.name} and {self.target.name} are not similar")
        if len(self.map) != self.source.size:
            raise NotAHomomorphism(
                f"map has length {len(self.map)}, source has {self.source.size} elements"
            )
        if any(not 0 <= v < self.target.size for v in self.map):
            raise NotAHomomorphism("map value outside target universe")
        bad = preservation_failure(self.source, self.target, self.map)
        if bad is not None:
            op, args = bad
            raise NotAHomomorphism(f"map does not preserve {op} at arguments {args}")

    def __call__(self, a: int) -> int:
        return self.map[a]

    def __eq__(self, other):
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and self.map == other.map)

    def __hash__(self):
        return hash((self.source, self.target, self.map))

    def __repr__(self):
        return f"Homomorphism({self.source.name} -> {self.target.name}, {list(self.map)})"

    def is_surjective(self) -> bool:
        return set(self.map) == set(range(self.target.size))

    def kernel(self) -> BinaryRelation:
        m = np.array(self.map)
        return BinaryRelation(m[:, None] == m[None, :])


def preservation_failure(src: FiniteAlgebra, dst: FiniteAlgebra, mapping: Sequence[int]):
    """First (op name, args) where ``mapping`` fails to commute, or None."""
    m = np.array(mapping, dtype=np.int64)
    for oi, op in enumerate(src.operations):
        ts, td = src.tables[oi], dst.tables[oi]
        if op.arity == 0:
            if m[ts[()]] != td[()]:
                return op.name, ()
            continue
        grid = np.indices(ts.shape, dtype=np.int64)
        lhs = m[ts]
        rhs = td[tuple(m[g] for g in grid)]
        diff = np.argwhere(lhs != rhs)
        if len(diff):
            return op.name, tuple(int(v) for v in diff[0])
    return None


def is_homomorphism(src: FiniteAlgebra, dst: FiniteAlgebra, mapping: Sequence[int]) -> bool:
    return src.is_similar(dst) and preservation_failure(src, dst, mapping) is None


DEFAULT_HOM_LIMIT = 10**6


def enumerate_homomorphisms(src: FiniteAlgebra, dst: FiniteAlgebra,
                            limit: int = DEFAULT_HOM_LIMIT) -> list:
    """All homomorphisms src -> dst in lexicographic order of their map arrays.

    Backtracking over source elements 0..n-1; a constraint f(args) = v is
    tested as soon as its highest-numbered element is assigned.  ``limit``
    bounds the number of search nodes visited.
    """
    if not src.is_similar(dst):
        raise NotSimilar(f"{src.name} and {dst.name} are not similar")
    n = src.size
    # constraints grouped by the largest source element they mention
    buckets: list[list] = [[] for _ in range(n)]
    for oi, op in enumerate(src.operations):
        ts = src.tables[oi]
        td = dst.tables[oi]
        for args in itertools.product(range(n), repeat=op.arity):
            res = int(ts[args])
            top = max(args + (res,))
            buckets[top].append((td, args, res))
    m = [0] * n
    found = []
    nodes = 0

    def extend(i):
        nonlocal nodes
        if i == n:
            found.append(Homomorphism(src, dst, tuple(m)))
            return
        for v in range(dst.size):
            nodes += 1
            if nodes > limit:
                raise CapExceeded(f"homomorphism search exceeded {limit} nodes", nodes)
            m[i] = v
            if all(td[tuple(m[a] for a in args)] == m[res] for td, args, res in buckets[i]):
                extend(i + 1)

    extend(0)
    return found


@dataclass(frozen=True, eq=False)
class CongruencePartition:
    """A congruence given by the least member of each element's block."""

    algebra: FiniteAlgebra
    class_rep: tuple

    def __post_init__(self):
        object.__setattr__(self, "class_rep", tuple(int(v) for v in self.class_rep))
        if len(self.class_rep) != self.algebra.size:
            raise NotACongruence("class_rep length differs from algebra size")
        for a, rep in enumerate(self.class_rep):
            if self.class_rep[rep] != rep or rep > a:
                raise NotACongruence("class_rep must map each element to its block's least member")
        if not _is_compatible(self.algebra, self.relation()):
            raise NotACongruence("partition is not compatible with the operations")

    @classmethod
    def from_relation(cls, alg: FiniteAlgebra, rel: BinaryRelation) -> CongruencePartition:
        if rel.size != alg.size:
            raise NotACongruence("relation size differs from algebra size")
        if not rel.is_equivalence():
            raise NotACongruence("relation is not an equivalence")
        if not _is_compatible(alg, rel):
            raise NotACongruence("relation is not compatible with the operations")
        reps = tuple(int(np.argmax(rel.bits[a])) for a in range(alg.size))
        return cls(alg, reps)

    def relation(self) -> BinaryRelation:
        r = np.array(self.class_rep)
        return BinaryRelation(r[:, None] == r[None, :])

    def blocks(self) -> list:
        out: dict[int, list] = {}
        for a, rep in enumerate(self.class_rep):
            out.setdefault(rep, []).append(a)
        return [out[k] for k in sorted(out)]


def _is_compatible(alg: FiniteAlgebra, rel: BinaryRelation) -> bool:
    """True iff rel is a subuniverse of alg^2."""
    pairs = np.argwhere(rel.bits)
    bits = rel.bits
    if len(pairs) == 0:
        return all(op.arity > 0 for op in alg.operations)
    left, right = pairs[:, 0], pairs[:, 1]
    for t, r in zip(alg.tables, alg.arities):
        if r == 0:
            if not bits[t[()], t[()]]:
                return False
            continue
        grid = np.indices((len(pairs),) * r, dtype=np.int64).reshape(r, -1)
        a = t[tuple(left[g] for g in grid)]
        b = t[tuple(right[g] for g in grid)]
        if not bits[a, b].all():
            return False
    return True


def quotient(alg: FiniteAlgebra, theta) -> tuple:
    """A/theta with blocks numbered by least member, and the canonical surjection."""
    if isinstance(theta, BinaryRelation):
        theta = CongruencePartition.from_relation(alg, theta)
    elif theta.algebra != alg:
        raise NotACongruence("partition belongs to a different algebra")
    reps = sorted(set(theta.class_rep))
    block_of = {rep: i for i, rep in enumerate(reps)}
    pi = tuple(block_of[theta.class_rep[a]] for a in range(alg.size))
    m = len(reps)
    ops = []
    for oi, op in enumerate(alg.operations):
        t = alg.tables[oi]
        table = [pi[int(t[tuple(reps[b] for b in args)])]
                 for args in itertools.product(range(m), repeat=op.arity)]
        ops.append(Operation(op.name, op.arity, tuple(table)))
    quo = FiniteAlgebra(f"{alg.name}/~{m}", m, tuple(ops))
    return quo, Homomorphism(alg, quo, pi)
