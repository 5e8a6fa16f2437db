"""Cubes (partial models), domain permutations and the compact byte encoding."""

from __future__ import annotations

import hashlib
from random import Random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .ground import UNASSIGNED, CellLayout, GroundClauseSet, evaluate_clause
from .syntax import Signature

# Fixed-width table entries: one byte per cell.
BYTE_UNASSIGNED = 255
BYTE_TRUE = 254
BYTE_FALSE = 253
MAX_ORDER = 253

HEADER_SIZE = 5  # order byte + 4-byte signature digest


class EncodingError(ValueError):
    pass


def signature_digest(signature: Signature) -> bytes:
    return hashlib.blake2b(signature.describe().encode(), digest_size=4).digest()


_LAYOUTS: dict[tuple[Signature, int], CellLayout] = {}


def layout_for(signature: Signature, n: int) -> CellLayout:
    key = (signature, n)
    layout = _LAYOUTS.get(key)
    if layout is None:
        layout = _LAYOUTS[key] = CellLayout(signature, n)
    return layout


@dataclass
class Cube:
    """Partial assignment of cells to values, a model once total.

    ``values`` is flat in global cell order; function entries are domain
    elements, relation entries 0/1 for False/True, -1 for unassigned.
    ``trail`` lists assigned cells in assignment order with a decision flag.
    """

    signature: Signature
    n: int
    values: list[int]
    trail: list[tuple[int, bool]] = field(default_factory=list, compare=False, repr=False)

    @classmethod
    def empty(cls, signature: Signature, n: int) -> "Cube":
        return cls(signature, n, [UNASSIGNED] * layout_for(signature, n).num_cells)

    @classmethod
    def from_tables(cls, signature: Signature, n: int,
                    tables: Sequence[Sequence[int | bool | None]]) -> "Cube":
        """Build from per-symbol flat tables (None = unassigned, bools for relations)."""
        values = []
        for table in tables:
            for v in table:
                values.append(UNASSIGNED if v is None else int(v))
        cube = cls(signature, n, values)
        cube.validate()
        cube.trail = [(i, True) for i, v in enumerate(values) if v != UNASSIGNED]
        return cube

    @property
    def layout(self) -> CellLayout:
        return layout_for(self.signature, self.n)

    def validate(self) -> None:
        layout = self.layout
        if len(self.values) != layout.num_cells:
            raise ValueError(f"expected {layout.num_cells} cells, got {len(self.values)}")
        for cell, v in enumerate(self.values):
            top = 2 if layout.is_relation_cell[cell] else self.n
            if v != UNASSIGNED and not 0 <= v < top:
                raise ValueError(f"cell {layout.cell_name(cell)} has out-of-range value {v}")

    def table(self, symbol: int | str) -> list[int]:
        layout = self.layout
        if isinstance(symbol, str):
            symbol = layout.index_of[symbol]
        return self.values[layout.symbol_range(symbol).start:layout.symbol_range(symbol).stop]

    def assign(self, cell: int, value: int, decision: bool = True) -> None:
        if self.values[cell] != UNASSIGNED:
            raise ValueError(f"cell {self.layout.cell_name(cell)} already assigned")
        self.values[cell] = value
        self.trail.append((cell, decision))

    def copy(self) -> "Cube":
        return Cube(self.signature, self.n, list(self.values), list(self.trail))

    @property
    def assigned(self) -> int:
        return sum(1 for v in self.values if v != UNASSIGNED)

    def is_total(self) -> bool:
        return UNASSIGNED not in self.values

    def __hash__(self) -> int:
        return hash((self.signature, self.n, tuple(self.values)))


class Permutation(tuple):
    """A bijection on {0..n-1} stored as its image tuple."""

    def __new__(cls, images: Iterable[int]):
        p = super().__new__(cls, images)
        if sorted(p) != list(range(len(p))):
            raise ValueError(f"not a permutation: {tuple(p)}")
        return p

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(n))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "Permutation":
        images = list(range(n))
        images[a], images[b] = b, a
        return cls(images)

    @classmethod
    def random(cls, n: int, rng: Random, fixed: Iterable[int] = ()) -> "Permutation":
        fixed = set(fixed)
        movable = [d for d in range(n) if d not in fixed]
        shuffled = movable[:]
        rng.shuffle(shuffled)
        images = list(range(n))
        for a, b in zip(movable, shuffled):
            images[a] = b
        return cls(images)

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition: (p * q)(d) = p(q(d))."""
        return Permutation(self[d] for d in other)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for d, e in enumerate(self):
            inv[e] = d
        return Permutation(inv)

    def fixes(self, elements: Iterable[int]) -> bool:
        return all(self[d] == d for d in elements)


def permute_values(perm: Sequence[int], values: Sequence[int], layout: CellLayout) -> list[int]:
    """Table image of ``values`` under ``perm``: f(p(a)) = p(f(a)); truth values fixed."""
    n = layout.n
    out = [UNASSIGNED] * len(values)
    cell_args = layout.cell_args
    rel = layout.is_relation_cell
    offsets = layout.offsets
    cell_symbol = layout.cell_symbol
    for cell, v in enumerate(values):
        idx = 0
        for a in cell_args[cell]:
            idx = idx * n + perm[a]
        target = offsets[cell_symbol[cell]] + idx
        if v == UNASSIGNED or rel[cell]:
            out[target] = v
        else:
            out[target] = perm[v]
    return out


def apply_perm(perm: Sequence[int], cube: Cube) -> Cube:
    """Rename domain elements of ``cube`` by ``perm``; pinned elements must stay put."""
    if len(perm) != cube.n:
        raise ValueError("permutation size does not match the domain")
    for d in cube.signature.pinned:
        if perm[d] != d:
            raise ValueError(f"permutation moves pinned element {d}")
    layout = cube.layout
    values = permute_values(perm, cube.values, layout)
    trail = []
    for cell, decision in cube.trail:
        idx = 0
        for a in layout.cell_args[cell]:
            idx = idx * cube.n + perm[a]
        trail.append((layout.offsets[layout.cell_symbol[cell]] + idx, decision))
    return Cube(cube.signature, cube.n, values, trail)


def encode_values(values: Sequence[int], layout: CellLayout, header: bytes) -> bytes:
    rel = layout.is_relation_cell
    body = bytearray(len(values))
    for i, v in enumerate(values):
        if v == UNASSIGNED:
            body[i] = BYTE_UNASSIGNED
        elif rel[i]:
            body[i] = BYTE_TRUE if v else BYTE_FALSE
        else:
            body[i] = v
    return header + bytes(body)


def header_for(signature: Signature, n: int) -> bytes:
    if n > MAX_ORDER:
        raise EncodingError(f"order {n} exceeds the one-byte encoding limit {MAX_ORDER}")
    return bytes([n]) + signature_digest(signature)


def encode(cube: Cube) -> bytes:
    return encode_values(cube.values, cube.layout, header_for(cube.signature, cube.n))


def table_bytes(data: bytes) -> bytes:
    """The cell-table part of an encoding, without the header."""
    return data[HEADER_SIZE:]


def decode(data: bytes, signature: Signature) -> Cube:
    if len(data) < HEADER_SIZE:
        raise EncodingError("encoding shorter than its header")
    n = data[0]
    if n < 1 or n > MAX_ORDER:
        raise EncodingError(f"invalid order byte {n}")
    if data[1:HEADER_SIZE] != signature_digest(signature):
        raise EncodingError("signature digest does not match")
    layout = layout_for(signature, n)
    body = data[HEADER_SIZE:]
    if len(body) != layout.num_cells:
        raise EncodingError(f"expected {layout.num_cells} table entries, got {len(body)}")
    values = []
    for i, b in enumerate(body):
        if b == BYTE_UNASSIGNED:
            values.append(UNASSIGNED)
        elif layout.is_relation_cell[i]:
            if b not in (BYTE_TRUE, BYTE_FALSE):
                raise EncodingError(f"entry {i}: {b} is not a truth value")
            values.append(1 if b == BYTE_TRUE else 0)
        else:
            if b >= n:
                raise EncodingError(f"entry {i}: {b} is outside the domain")
            values.append(b)
    cube = Cube(signature, n, values)
    cube.trail = [(i, True) for i, v in enumerate(values) if v != UNASSIGNED]
    return cube


def is_model(cube: Cube, ground: GroundClauseSet) -> bool:
    """True iff the cube is total and every ground clause holds."""
    if not cube.is_total():
        return False
    values, n = cube.values, cube.n
    return all(evaluate_clause(c, values, n) for c in ground.clauses)
