"""Free algebras F_V(k) of the variety generated by finitely many finite algebras.

An element of F_V(k) is a k-ary term function, stored by its values: for every
base algebra B and every assignment in B^k (mixed radix, first generator most
significant) the value the term takes.  The carrier is generated from the k
projection tuples, so carrier order is generation order with the generators
first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import (
    FiniteAlgebra,
    Homomorphism,
    Operation,
    coordinatewise_ops,
    generate,
)
from .binrel import BinaryRelation
from .closures import adm_reflexive_closure, tolerance_closure
from .errors import CapExceeded, NotAHomomorphism, NotSimilar, RankMismatch

DEFAULT_FREE_CAP = 5000
_TABLE_CHUNK = 1 << 14


def default_names(k: int) -> tuple:
    if k <= 3:
        return ("x", "y", "z")[:k]
    return tuple(f"x{i + 1}" for i in range(k))


@dataclass(eq=False)
class FreeAlgebra:
    base: tuple
    rank: int
    carrier: FiniteAlgebra
    generators: tuple
    names: tuple
    rows: np.ndarray = field(repr=False)
    parents: list = field(repr=False)

    @property
    def size(self) -> int:
        return self.carrier.size

    def generator(self, name: str) -> int:
        return self.generators[self.names.index(name)]

    def values(self, element: int) -> np.ndarray:
        return self.rows[element]

    def evaluate(self, element: int, base_index: int, assignment: Sequence[int]) -> int:
        """Value of the term function ``element`` on one base algebra at ``assignment``."""
        offset = 0
        for i, b in enumerate(self.base):
            if i == base_index:
                code = 0
                for a in assignment:
                    code = code * b.size + int(a)
                return int(self.rows[element, offset + code])
            offset += b.size**self.rank
        raise IndexError(f"no base algebra {base_index}")

    @cached_property
    def _term_names(self) -> list:
        out: list = [None] * self.size
        for g, nm in zip(self.generators, self.names):
            if out[g] is None:
                out[g] = nm
        for i, parent in enumerate(self.parents):
            if out[i] is not None:
                continue
            oi, args = parent
            op = self.carrier.operations[oi]
            inner = ",".join(out[a] for a in args)
            out[i] = f"{op.name}({inner})" if args else op.name
        return out

    def term(self, element: int) -> str:
        """Term over the generator names, recovered from the generation traceback."""
        return self._term_names[element]

    def find(self, term_or_rows) -> int:
        """Carrier index of an element given by its value row."""
        key = np.asarray(term_or_rows, dtype=np.int64).tobytes()
        for i in range(self.size):
            if self.rows[i].tobytes() == key:
                return i
        raise KeyError("not a carrier element")


def _projection_rows(base: Sequence[FiniteAlgebra], k: int) -> np.ndarray:
    blocks = []
    for b in base:
        assignments = np.indices((b.size,) * k, dtype=np.int64).reshape(k, -1)
        blocks.append(assignments)
    return np.concatenate(blocks, axis=1)


def build_free(base: Sequence[FiniteAlgebra], k: int, cap: int = DEFAULT_FREE_CAP,
               names: Sequence[str] | None = None) -> FreeAlgebra:
    base = tuple(base)
    if not base:
        raise ValueError("need at least one base algebra")
    for b in base[1:]:
        if not base[0].is_similar(b):
            raise NotSimilar(f"{base[0].name} and {b.name} are not similar")
    if k < 1:
        raise RankMismatch("rank must be positive")
    names = tuple(names) if names else default_names(k)
    blocks = [(b, b.size**k) for b in base]
    width = sum(w for _, w in blocks)
    ops = coordinatewise_ops(blocks)
    proj = _projection_rows(base, k)

    def too_big(reached):
        return CapExceeded(f"free algebra of rank {k} exceeded cap {cap} "
                           f"(reached {reached} elements)", reached)

    gen = generate(ops, proj, width, cap=cap, on_cap=too_big)
    index = {gen.rows[i].tobytes(): i for i in range(len(gen))}
    generators = tuple(index[proj[j].tobytes()] for j in range(k))
    tables = []
    n = len(gen)
    for oi, (r, fn) in enumerate(ops):
        tables.append(Operation(base[0].operations[oi].name, r,
                                tuple(_carrier_table(gen.rows, index, r, fn))))
    label = f"F({','.join(b.name for b in base)};{k})"
    carrier = FiniteAlgebra(label, n, tuple(tables))
    return FreeAlgebra(base, k, carrier, generators, names, gen.rows, gen.parents)


def _carrier_table(rows: np.ndarray, index: dict, r: int, fn) -> list:
    n = len(rows)
    if r == 0:
        return [index[fn()[0].tobytes()]]
    total = n**r
    out = []
    for lo in range(0, total, _TABLE_CHUNK):
        codes = np.arange(lo, min(total, lo + _TABLE_CHUNK), dtype=np.int64)
        args = []
        rest = codes
        for _ in range(r):
            rest, digit = np.divmod(rest, n)
            args.append(digit)
        args.reverse()
        res = fn(*[rows[a] for a in args])
        out.extend(index[row.tobytes()] for row in res)
    return out


def hom_from_free(free: FreeAlgebra, target: FiniteAlgebra,
                  assignment: Sequence[int]) -> Homomorphism:
    """The homomorphism extending generator i -> assignment[i].

    Every carrier element is evaluated along its generation traceback, so the
    target need not be one of the base algebras.  If the target is outside the
    variety the extension may fail to be a homomorphism (NotAHomomorphism).
    """
    if len(assignment) != free.rank:
        raise RankMismatch(f"need {free.rank} generator images, got {len(assignment)}")
    if not free.carrier.is_similar(target):
        raise NotSimilar(f"{free.carrier.name} and {target.name} are not similar")
    values: list = [None] * free.size
    for g, a in zip(free.generators, assignment):
        if values[g] is not None and values[g] != a:
            raise NotAHomomorphism("generators coincide in the free algebra but not in the target")
        values[g] = int(a)
    for i, parent in enumerate(free.parents):
        if values[i] is not None:
            continue
        oi, args = parent
        t = target.tables[oi]
        values[i] = int(t[tuple(values[a] for a in args)])
    return Homomorphism(free.carrier, target, tuple(values))


def substitution(src: FreeAlgebra, dst: FreeAlgebra, images: Sequence[str | int]) -> Homomorphism:
    """Hom src -> dst sending the i-th generator of src to dst's element images[i].

    ``images`` entries may be generator names of dst or carrier indices.
    """
    idx = [dst.generator(v) if isinstance(v, str) else int(v) for v in images]
    return hom_from_free(src, dst.carrier, idx)


CANONICAL = {
    # which -> (rank, description)
    "thm1vi": 3,
    "thm1vii": 3,
    "thm3iii": 2,
}


def canonical_relations(free: FreeAlgebra, which: str) -> dict:
    """The relations S (and T or Theta) fixed in the free-algebra conditions."""
    if which not in CANONICAL:
        raise ValueError(f"unknown relation family {which!r}")
    if free.rank != CANONICAL[which]:
        raise RankMismatch(f"{which} needs rank {CANONICAL[which]}, free algebra has rank {free.rank}")
    alg = free.carrier
    g = free.generators
    if which == "thm3iii":
        return {"S": adm_reflexive_closure(alg, [(g[0], g[1])])}
    if which == "thm1vi":
        return {
            "S": adm_reflexive_closure(alg, [(g[0], g[1])]),
            "T": adm_reflexive_closure(alg, [(g[1], g[2])]),
        }
    s = adm_reflexive_closure(alg, [(g[0], g[1]), (g[1], g[2])])
    return {"S": s, "Theta": tolerance_closure(alg, s)}


def term_table(free: FreeAlgebra, alg: FiniteAlgebra) -> np.ndarray:
    """Values of every carrier term on ``alg`` at every assignment.

    Row i is the term operation of element i, indexed by assignments in
    alg^rank encoded mixed radix (first generator most significant).
    """
    if not free.carrier.is_similar(alg):
        raise NotSimilar(f"{free.carrier.name} and {alg.name} are not similar")
    k = free.rank
    coords = np.indices((alg.size,) * k, dtype=np.int64).reshape(k, -1)
    vals: list = [None] * free.size
    for j, g in enumerate(free.generators):
        if vals[g] is None:
            vals[g] = coords[j]
    for i, parent in enumerate(free.parents):
        if vals[i] is not None:
            continue
        oi, args = parent
        t = alg.tables[oi]
        if args:
            vals[i] = t[tuple(vals[a] for a in args)]
        else:
            vals[i] = np.full(coords.shape[1], t[()], dtype=np.int64)
    return np.stack(vals)


def substitution_kernel(free: FreeAlgebra, images: Sequence[str | int]) -> BinaryRelation:
    """Kernel of the endomorphism of ``free`` sending generator i to images[i]."""
    return substitution(free, free, images).kernel()


THETA_SUBSTITUTIONS = (("x", "y", "z", "x", "y", "y", "z"),
                       ("x", "y", "z", "y", "x", "z", "y"))


def theta_by_terms(free3: FreeAlgebra, cap: int = DEFAULT_FREE_CAP) -> BinaryRelation:
    """Pairs (u(x,y,z,x,y,y,z), u(x,y,z,y,x,z,y)) for u ranging over 7-ary terms."""
    if free3.rank != 3:
        raise RankMismatch("needs the rank-3 free algebra")
    free7 = build_free(free3.base, 7, cap)
    first, second = (substitution(free7, free3, s).map for s in THETA_SUBSTITUTIONS)
    return BinaryRelation.from_pairs(free3.size, zip(first, second))
