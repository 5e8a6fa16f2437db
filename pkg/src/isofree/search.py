"""Depth-first model search with propagation and canonical-key pruning.

Every consistent cube reached by a decision plus unit propagation is
canonicalized; a cube whose key has been seen before is isomorphic to one
already explored and its subtree is skipped.  The least number heuristic
(LNH) additionally caps the values tried for a function cell at one more than
the largest element in use.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _engine
from .canon import brute_force_key, canonical_values
from .cube import Cube, header_for
from .graph import shape_for
from .ground import UNASSIGNED, GroundClauseSet, ground_clauses
from .store import SeenStore, StoreCapExceeded
from .syntax import Theory, clausify_theory

STRATEGIES = ("row-major", "concentric")
CANON_MODES = ("graph", "perm", "off")
# "compiled" runs the numba loop; "python" the reference engine below.  The
# brute-force canon mode always uses the reference engine.
ENGINES = ("compiled", "python")

Sink = Callable[[int, Cube], None]

# undo-log record kinds
_ASSIGN, _MDN, _CAND, _WATCH = 0, 1, 2, 3

_SAT, _OPEN, _CONFLICT = 0, 1, 2


class SearchAborted(RuntimeError):
    pass


@dataclass
class SearchOptions:
    strategy: str = "row-major"
    lnh: bool = True
    propagation: bool = True
    canon: str = "graph"
    max_models: int | None = None
    fingerprint: bool = False
    store_cap: int | None = None
    max_nodes: int | None = None
    engine: str = "compiled"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.canon not in CANON_MODES:
            raise ValueError(f"unknown canon mode {self.canon!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass
class SearchStats:
    order: int
    models: int = 0
    nodes: int = 0
    pruned: int = 0
    conflicts: int = 0
    keys: int = 0
    key_bytes: int = 0
    seconds: float = 0.0
    complete: bool = True
    stop_reason: str | None = None

    def line(self) -> str:
        text = (f"order={self.order} models={self.models} nodes={self.nodes} "
                f"pruned={self.pruned} seconds={self.seconds:.2f}")
        if not self.complete:
            text += f" incomplete={self.stop_reason}"
        return text


def cell_order(layout, strategy: str) -> list[int]:
    cells = range(layout.num_cells)
    if strategy == "row-major":
        return list(cells)
    return sorted(cells, key=lambda c: (max(layout.cell_args[c], default=-1), c))


class Engine:
    """Mutable search state over one ground theory: values, candidate sets, trail.

    All changes go through an undo log so a branch is reverted with
    ``undo_to(mark)``.  Clauses are re-evaluated when a cell they are blocked
    on gets a value; the blocking cells are registered lazily.
    """

    def __init__(self, ground: GroundClauseSet, options: SearchOptions | None = None):
        self.options = options or SearchOptions()
        self.ground = ground
        layout = ground.layout
        self.layout = layout
        self.signature = layout.signature
        self.n = n = layout.n
        nc = layout.num_cells
        self.num_cells = nc
        self.values = [UNASSIGNED] * nc
        self.is_rel = layout.is_relation_cell
        full = (1 << n) - 1
        self.cand = [3 if r else full for r in self.is_rel]
        self.max_arg = [max(args, default=-1) for args in layout.cell_args]
        self.watch: list[set[int]] = [set() for _ in range(nc)]
        self.undo: list[tuple[int, int, int]] = []
        self.trail: list[tuple[int, bool]] = []
        self.queue: list[int] = []
        self.mdn = max(self.signature.pinned, default=-1)
        self.order = cell_order(layout, self.options.strategy)
        self.conflicts = 0
        self.consistent = self._initial()

    # -- state primitives ---------------------------------------------------

    def mark(self) -> int:
        return len(self.undo)

    def undo_to(self, mark: int) -> None:
        undo, values, cand = self.undo, self.values, self.cand
        while len(undo) > mark:
            kind, a, b = undo.pop()
            if kind == _ASSIGN:
                values[a] = UNASSIGNED
                cand[a] = b
                self.trail.pop()
            elif kind == _CAND:
                cand[a] = b
            elif kind == _WATCH:
                self.watch[a].discard(b)
            else:
                self.mdn = a
        self.queue.clear()

    def _set(self, cell: int, v: int, decision: bool) -> bool:
        cur = self.values[cell]
        if cur >= 0:
            return cur == v
        old = self.cand[cell]
        if not (old >> v) & 1:
            return False
        self.values[cell] = v
        self.cand[cell] = 1 << v
        self.undo.append((_ASSIGN, cell, old))
        self.trail.append((cell, decision))
        m = self.max_arg[cell]
        if not self.is_rel[cell] and v > m:
            m = v
        if m > self.mdn:
            self.undo.append((_MDN, self.mdn, 0))
            self.mdn = m
        self.queue.append(cell)
        return True

    def _exclude(self, cell: int, v: int) -> bool:
        cur = self.values[cell]
        if cur >= 0:
            return cur != v
        old = self.cand[cell]
        if not (old >> v) & 1:
            return True
        new = old & ~(1 << v)
        if new == 0:
            return False
        self.undo.append((_CAND, cell, old))
        self.cand[cell] = new
        if new & (new - 1) == 0:
            return self._set(cell, new.bit_length() - 1, False)
        return True

    # -- clause evaluation --------------------------------------------------

    def _check(self, cid: int) -> int:
        """Evaluate one clause, register its blockers, and propagate if unit."""
        values = self.values
        n = self.n
        nc = self.num_cells
        deep = -nc

        def ev(t):
            # value >= 0, or -1-cell when blocked at the top cell,
            # or -1-nc-cell when blocked below it
            if type(t) is int:
                return t
            off, args = t
            idx = 0
            for a in args:
                if type(a) is not int:
                    a = ev(a)
                    if a < 0:
                        return a if a < deep else a + deep
                idx = idx * n + a
            c = off + idx
            v = values[c]
            return v if v >= 0 else -1 - c

        unknown = 0
        unit = None
        watch = self.watch
        for is_eq, positive, lhs, rhs in self.ground.clauses[cid]:
            a = ev(lhs)
            if is_eq:
                b = ev(rhs)
                if a >= 0 and b >= 0:
                    if (a == b) == positive:
                        return _SAT
                    continue
                blk = a if a < 0 else b
                if a >= 0 and b >= deep:
                    unit = (-1 - b, a, positive)
                elif b >= 0 and a >= deep:
                    unit = (-1 - a, b, positive)
                else:
                    unit = None
            else:
                if a >= 0:
                    if (a == 1) == positive:
                        return _SAT
                    continue
                blk = a
                unit = (-1 - a, 1 if positive else 0, True) if a >= deep else None
            cell = -1 - blk if blk >= deep else -1 - nc - blk
            w = watch[cell]
            if cid not in w:
                w.add(cid)
                self.undo.append((_WATCH, cell, cid))
            unknown += 1
            if unknown == 2:
                return _OPEN
        if unknown == 0:
            return _CONFLICT
        if unit is not None and self.options.propagation:
            cell, v, positive = unit
            ok = self._set(cell, v, False) if positive else self._exclude(cell, v)
            if not ok:
                return _CONFLICT
        return _OPEN

    def propagate(self) -> bool:
        """Process queued assignments to fixpoint; False on conflict."""
        queue = self.queue
        watch = self.watch
        check = self._check
        i = 0
        while i < len(queue):
            cell = queue[i]
            i += 1
            for cid in tuple(watch[cell]):
                if check(cid) == _CONFLICT:
                    self.conflicts += 1
                    queue.clear()
                    return False
        queue.clear()
        return True

    def _initial(self) -> bool:
        for cid in range(len(self.ground.clauses)):
            if self._check(cid) == _CONFLICT:
                self.queue.clear()
                return False
        return self.propagate()

    # -- search-facing operations ------------------------------------------

    def next_cell(self, start: int = 0) -> int | None:
        """First unassigned cell in strategy order, scanning from ``start``."""
        pos = self.next_position(start)
        return None if pos is None else self.order[pos]

    def next_position(self, start: int = 0) -> int | None:
        order, values = self.order, self.values
        for pos in range(start, self.num_cells):
            if values[order[pos]] < 0:
                return pos
        return None

    def candidate_values(self, cell: int) -> list[int]:
        c = self.cand[cell]
        top = 2 if self.is_rel[cell] else self.n
        if self.options.lnh and not self.is_rel[cell]:
            top = min(top, max(self.mdn, self.max_arg[cell]) + 2)
        return [v for v in range(top) if (c >> v) & 1]

    def assign_and_propagate(self, cell: int, value: int) -> bool:
        """Decide ``cell = value`` and propagate; on False the caller must undo."""
        if not self._set(cell, value, True):
            self.queue.clear()
            return False
        return self.propagate()

    def cube(self) -> Cube:
        return Cube(self.signature, self.n, list(self.values), list(self.trail))

    def is_total(self) -> bool:
        return UNASSIGNED not in self.values


class _Run:
    def __init__(self, engine: Engine, options: SearchOptions, sink: Sink | None):
        self.engine = engine
        self.options = options
        self.sink = sink
        self.store = SeenStore(options.fingerprint, options.store_cap)
        self.stats = SearchStats(engine.n)
        self.header = header_for(engine.signature, engine.n)

    def key(self) -> bytes:
        e = self.engine
        if self.options.canon == "graph":
            return canonical_values(e.signature, e.n, e.values)[0]
        return brute_force_key(Cube(e.signature, e.n, e.values))

    def admit(self) -> bool:
        stats = self.stats
        if self.options.canon != "off" and not self.store.insert_if_new(self.key()):
            stats.pruned += 1
            return False
        stats.nodes += 1
        if self.options.max_nodes is not None and stats.nodes > self.options.max_nodes:
            raise SearchAborted("node-cap")
        return True

    def emit(self) -> bool:
        stats = self.stats
        if self.sink is not None:
            self.sink(stats.models, self.engine.cube())
        stats.models += 1
        cap = self.options.max_models
        return cap is None or stats.models < cap

    def dfs(self, start: int) -> bool:
        """Explore below the current cube; False once the model cap is hit."""
        e = self.engine
        pos = e.next_position(start)
        if pos is None:
            return self.emit()
        cell = e.order[pos]
        for v in e.candidate_values(cell):
            mark = e.mark()
            keep_going = True
            if e.assign_and_propagate(cell, v) and self.admit():
                keep_going = self.dfs(pos + 1)
            e.undo_to(mark)
            if not keep_going:
                return False
        return True


def search(theory: Theory, n: int, options: SearchOptions | None = None,
           sink: Sink | None = None) -> SearchStats:
    """Enumerate models of ``theory`` of order ``n``, one per isomorphism class.

    With ``canon="off"`` every model reachable under LNH is emitted.
    """
    ground = ground_clauses(clausify_theory(theory), theory.signature, n)
    return search_ground(ground, options, sink)


def search_ground(ground: GroundClauseSet, options: SearchOptions | None = None,
                  sink: Sink | None = None) -> SearchStats:
    options = options or SearchOptions()
    if options.engine == "compiled" and options.canon != "perm":
        return _search_compiled(ground, options, sink)
    t0 = time.perf_counter()
    engine = Engine(ground, options)
    run = _Run(engine, options, sink)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, engine.num_cells + 1000))
    try:
        if engine.consistent:
            if not run.dfs(0):
                run.stats.complete = False
                run.stats.stop_reason = "max-models"
    except (SearchAborted, StoreCapExceeded) as exc:
        run.stats.complete = False
        run.stats.stop_reason = "node-cap" if isinstance(exc, SearchAborted) else "store-cap"
    finally:
        sys.setrecursionlimit(limit)
    run.stats.conflicts = engine.conflicts
    run.stats.keys, run.stats.key_bytes = run.store.stats()
    run.stats.seconds = time.perf_counter() - t0
    return run.stats


_STOP_REASONS = {_engine.STOP_MAX_MODELS: "max-models", _engine.STOP_NODE_CAP: "node-cap",
                 _engine.STOP_STORE_CAP: "store-cap"}


def _search_compiled(ground: GroundClauseSet, options: SearchOptions,
                     sink: Sink | None) -> SearchStats:
    t0 = time.perf_counter()
    layout = ground.layout
    signature, n = layout.signature, layout.n
    header = header_for(signature, n)
    key_len = SeenStore.DIGEST_SIZE if options.fingerprint else len(header) + layout.num_cells
    cap = lambda x: -1 if x is None else x  # noqa: E731
    models, raw = _engine.run(
        _engine.compile_clauses(ground.clauses), n, layout.num_cells,
        np.array(layout.is_relation_cell, np.bool_),
        np.array([max(a, default=-1) for a in layout.cell_args], np.int64),
        np.array(cell_order(layout, options.strategy), np.int64),
        max(signature.pinned, default=-1), options.lnh, options.propagation,
        options.canon == "graph", options.fingerprint, cap(options.store_cap),
        cap(options.max_nodes), cap(options.max_models), shape_for(signature, n).arrays,
        key_len)
    stats = SearchStats(n, models=int(raw[0]), nodes=int(raw[1]), pruned=int(raw[2]),
                        conflicts=int(raw[3]), keys=int(raw[4]), key_bytes=int(raw[5]))
    if raw[6] != _engine.STOP_NONE:
        stats.complete = False
        stats.stop_reason = _STOP_REASONS[int(raw[6])]
    if sink is not None:
        for i, row in enumerate(models.tolist()):
            sink(i, Cube(signature, n, row))
    stats.seconds = time.perf_counter() - t0
    return stats


def enumerate_models(theory: Theory, n: int, options: SearchOptions | None = None) \
        -> tuple[list[Cube], SearchStats]:
    models: list[Cube] = []
    stats = search(theory, n, options, lambda i, cube: models.append(cube))
    return models, stats
