"""Ground instantiation of clauses over the domain {0..n-1}.

Cells are numbered globally: symbols in signature order (functions, then
relations), each symbol's table in row-major argument order.  Ground terms are
kept nested; a compiled term is either an ``int`` (a known domain element) or a
pair ``(offset, args)`` naming the cell ``offset + row_major_index(args)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .syntax import Clause, Eq, Literal, Num, Signature, Term, TheoryError, Var, clause_variables

MAX_CLAUSE_VARIABLES = 6
MAX_GROUND_LITERALS = 10**8

UNASSIGNED = -1


class Cell(NamedTuple):
    symbol: int
    args: tuple[int, ...]


class CellLayout:
    """Global cell numbering for a signature at domain size ``n``."""

    def __init__(self, signature: Signature, n: int):
        self.signature = signature
        self.n = n
        self.symbols = signature.symbols
        self.num_functions = len(signature.functions)
        self.offsets: list[int] = []
        self.sizes: list[int] = []
        total = 0
        for _, arity in self.symbols:
            self.offsets.append(total)
            self.sizes.append(n ** arity)
            total += n ** arity
        self.num_cells = total
        self.cells: list[Cell] = []
        for s, (_, arity) in enumerate(self.symbols):
            for args in itertools.product(range(n), repeat=arity):
                self.cells.append(Cell(s, args))
        self.cell_symbol = [c.symbol for c in self.cells]
        self.cell_args = [c.args for c in self.cells]
        self.is_relation_cell = [c.symbol >= self.num_functions for c in self.cells]
        self.index_of = {name: i for i, (name, _) in enumerate(self.symbols)}

    def index(self, symbol: int, args: Sequence[int]) -> int:
        idx = 0
        for a in args:
            idx = idx * self.n + a
        return self.offsets[symbol] + idx

    def symbol_range(self, symbol: int) -> range:
        start = self.offsets[symbol]
        return range(start, start + self.sizes[symbol])

    def is_relation(self, symbol: int) -> bool:
        return symbol >= self.num_functions

    def cell_name(self, cell: int) -> str:
        c = self.cells[cell]
        name = self.symbols[c.symbol][0]
        if not c.args:
            return name
        return f"{name}({','.join(map(str, c.args))})"


def enumerate_cells(signature: Signature, n: int) -> list[Cell]:
    """All cells in total order: symbol order, then row-major arguments."""
    return CellLayout(signature, n).cells


# Ground literal layout: (is_equality, positive, lhs, rhs); relation atoms keep
# their compiled application in lhs and None in rhs.
GroundLiteral = tuple
GroundClause = tuple


@dataclass
class GroundClauseSet:
    layout: CellLayout
    clauses: list[GroundClause]
    occurrences: list[list[int]]  # cell -> ids of clauses mentioning it as a ground cell term
    instances: int  # ground instances generated before simplification

    @property
    def n(self) -> int:
        return self.layout.n

    def __len__(self) -> int:
        return len(self.clauses)


def _compile_term(t: Term, env: dict[str, int], layout: CellLayout):
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Num):
        return t.value
    sym = layout.index_of[t.name]
    return (layout.offsets[sym], tuple(_compile_term(a, env, layout) for a in t.args))


def _ground_literal(lit: Literal, env: dict[str, int], layout: CellLayout):
    atom = lit.atom
    if isinstance(atom, Eq):
        return (True, lit.positive, _compile_term(atom.lhs, env, layout),
                _compile_term(atom.rhs, env, layout))
    sym = layout.index_of[atom.name]
    app = (layout.offsets[sym], tuple(_compile_term(a, env, layout) for a in atom.args))
    return (False, lit.positive, app, None)


def _simplify(lits: list) -> GroundClause | None:
    out: list = []
    for lit in lits:
        is_eq, positive, lhs, rhs = lit
        if is_eq and lhs == rhs:
            if positive:
                return None
            continue
        if is_eq and type(lhs) is int and type(rhs) is int:
            # distinct elements: the equality is false
            if not positive:
                return None
            continue
        opposite = (is_eq, not positive, lhs, rhs)
        if opposite in out or is_eq and (True, not positive, rhs, lhs) in out:
            return None
        if lit in out or is_eq and (True, positive, rhs, lhs) in out:
            continue
        out.append(lit)
    return tuple(out)


def ground_cells(term, n: int) -> list[int]:
    """Cells named by sub-terms whose arguments are all known elements."""
    found: list[int] = []

    def walk(t) -> None:
        if type(t) is int:
            return
        off, args = t
        for a in args:
            walk(a)
        if all(type(a) is int for a in args):
            idx = 0
            for a in args:
                idx = idx * n + a
            found.append(off + idx)

    walk(term)
    return found


def clause_cells(clause: GroundClause, n: int) -> list[int]:
    cells: list[int] = []
    for is_eq, _, lhs, rhs in clause:
        cells.extend(ground_cells(lhs, n))
        if is_eq:
            cells.extend(ground_cells(rhs, n))
    return sorted(set(cells))


def ground_clauses(clauses: Sequence[Clause], signature: Signature, n: int) -> GroundClauseSet:
    """Instantiate every clause at every variable assignment over {0..n-1}."""
    if n < 1:
        raise ValueError("domain size must be positive")
    bad = [d for d in signature.pinned if d >= n]
    if bad:
        raise TheoryError(f"numeral {min(bad)} is outside the domain of order {n}")
    layout = CellLayout(signature, n)
    total = 0
    for clause in clauses:
        k = len(clause_variables(clause))
        if k > MAX_CLAUSE_VARIABLES:
            raise TheoryError(f"clause has {k} variables (maximum {MAX_CLAUSE_VARIABLES})")
        total += len(clause) * n ** k
    if total > MAX_GROUND_LITERALS:
        raise TheoryError(f"grounding would produce {total} literals "
                          f"(limit {MAX_GROUND_LITERALS})")

    out: list[GroundClause] = []
    instances = 0
    for clause in clauses:
        names = clause_variables(clause)
        for values in itertools.product(range(n), repeat=len(names)):
            instances += 1
            env = dict(zip(names, values))
            g = _simplify([_ground_literal(lit, env, layout) for lit in clause])
            if g is not None:
                out.append(g)

    occurrences: list[list[int]] = [[] for _ in range(layout.num_cells)]
    for cid, g in enumerate(out):
        for cell in clause_cells(g, n):
            occurrences[cell].append(cid)
    return GroundClauseSet(layout, out, occurrences, instances)


def evaluate_term(term, values: Sequence[int], n: int) -> int | None:
    """Value of a compiled ground term, or None if some needed cell is unassigned."""
    if type(term) is int:
        return term
    off, args = term
    idx = 0
    for a in args:
        v = evaluate_term(a, values, n)
        if v is None:
            return None
        idx = idx * n + v
    v = values[off + idx]
    return None if v == UNASSIGNED else v


def evaluate_clause(clause: GroundClause, values: Sequence[int], n: int) -> bool | None:
    """True/False under the (partial) assignment, None when undetermined."""
    undetermined = False
    for is_eq, positive, lhs, rhs in clause:
        if is_eq:
            a = evaluate_term(lhs, values, n)
            b = evaluate_term(rhs, values, n)
            if a is None or b is None:
                undetermined = True
                continue
            holds = a == b
        else:
            v = evaluate_term(lhs, values, n)
            if v is None:
                undetermined = True
                continue
            holds = v == 1
        if holds == positive:
            return True
    return None if undetermined else False


def format_ground_term(term, layout: CellLayout) -> str:
    if type(term) is int:
        return str(term)
    off, args = term
    sym = layout.offsets.index(off)
    name = layout.symbols[sym][0]
    if not args:
        return name
    return f"{name}({','.join(format_ground_term(a, layout) for a in args)})"


def count_cells(signature: Signature, n: int) -> int:
    return sum(n ** k for _, k in signature.symbols)
