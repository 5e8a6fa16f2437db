"""Canonical labeling of colored graphs and canonical forms of cubes.

The labeler is a plain individualization-refinement search:

* refine the coloring to the coarsest equitable one,
* if some class is still ambiguous, branch on individualizing each vertex of
  the first smallest such class,
* keep the leaf whose relabeled adjacency bitstring is smallest.

Two prunings keep the tree small without changing the result: automorphisms
discovered from equal leaves prune equivalent children (orbit pruning and
jumping back to the common ancestor), and classes made of structural twins
(vertices with identical neighborhoods, e.g. the unassigned cells of one
symbol) are never branched on, because any order of twins gives the same
relabeled graph.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .cube import Cube, Permutation, apply_perm, encode, header_for, layout_for
from .graph import ColoredGraph, shape_for
from .syntax import Signature

_NO_JUMP = 1 << 30


@dataclass
class Labeling:
    """Result of canonical labeling.

    ``order[i]`` is the vertex placed at canonical index ``i``; ``position``
    is its inverse (old vertex -> canonical index).  ``edge_keys`` is the
    sorted list of ``i * N + j`` (i < j) over canonical edges.
    """

    order: list[int]
    position: list[int]
    edge_keys: list[int]
    class_sizes: tuple[int, ...]
    leaves: int = 0
    generators: int = 0

    def certificate(self) -> bytes:
        """Class sizes, then the row-major upper-triangle adjacency bitstring."""
        n = len(self.order)
        bits = bytearray((n * (n - 1) // 2 + 7) // 8)
        for key in self.edge_keys:
            i, j = divmod(key, n)
            t = i * n - i * (i + 1) // 2 + (j - i - 1)
            bits[t >> 3] |= 0x80 >> (t & 7)
        header = [n, len(self.class_sizes), *self.class_sizes]
        return b"".join(x.to_bytes(4, "big") for x in header) + bytes(bits)


class _Refiner:
    """Ordered partition stored nauty-style: cells are contiguous runs of ``lab``."""

    def __init__(self, g: ColoredGraph):
        self.adj = g.adj
        self.n = g.num_vertices
        lab: list[int] = []
        cell = [0] * self.n
        end = [0] * self.n
        for members in g.classes:
            s = len(lab)
            lab.extend(members)
            for v in members:
                cell[v] = s
            end[s] = len(lab)
        self.lab = lab
        self.pos = [0] * self.n
        for i, v in enumerate(lab):
            self.pos[v] = i
        self.cell = cell
        self.end = end
        self.starts = [s for s in range(self.n) if s == 0 or cell[lab[s]] != cell[lab[s - 1]]]

    def snapshot(self):
        return self.lab[:], self.pos[:], self.cell[:], self.end[:]

    def restore(self, snap) -> None:
        lab, pos, cell, end = snap
        self.lab, self.pos, self.cell, self.end = lab[:], pos[:], cell[:], end[:]

    def cells(self) -> list[tuple[int, int]]:
        out = []
        s = 0
        while s < self.n:
            e = self.end[s]
            out.append((s, e))
            s = e
        return out

    def refine(self, queue: deque) -> None:
        """Split cells until every cell has uniform neighbor counts into every cell."""
        lab, pos, cell, end, adj = self.lab, self.pos, self.cell, self.end, self.adj
        queued = set(queue)
        while queue:
            w = queue.popleft()
            queued.discard(w)
            counts: dict[int, int] = {}
            get = counts.get
            for i in range(w, end[w]):
                for x in adj[lab[i]]:
                    counts[x] = get(x, 0) + 1
            touched: dict[int, list[int]] = {}
            for x in counts:
                s = cell[x]
                if end[s] - s > 1:
                    if s in touched:
                        touched[s].append(x)
                    else:
                        touched[s] = [x]
            for s in sorted(touched):
                xs = touched[s]
                e = end[s]
                if len(xs) == e - s:
                    c0 = counts[xs[0]]
                    for x in xs:
                        if counts[x] != c0:
                            break
                    else:
                        continue
                groups: dict[int, list[int]] = {}
                if len(xs) < e - s:
                    groups[0] = [v for v in lab[s:e] if v not in counts]
                for x in xs:
                    c = counts[x]
                    if c in groups:
                        groups[c].append(x)
                    else:
                        groups[c] = [x]
                p = s
                fragments = []
                for c in sorted(groups):
                    members = groups[c]
                    fs = p
                    for v in members:
                        lab[p] = v
                        pos[v] = p
                        cell[v] = fs
                        p += 1
                    end[fs] = p
                    fragments.append((fs, p - fs))
                if s in queued:
                    for fs, _ in fragments[1:]:
                        queue.append(fs)
                        queued.add(fs)
                else:
                    largest = max(range(len(fragments)), key=lambda i: (fragments[i][1], -i))
                    for i, (fs, _) in enumerate(fragments):
                        if i != largest:
                            queue.append(fs)
                            queued.add(fs)

    def individualize(self, v: int) -> int:
        """Split ``v`` off the front of its cell; returns the new singleton's start."""
        lab, pos, cell = self.lab, self.pos, self.cell
        s = cell[v]
        e = self.end[s]
        p = pos[v]
        u = lab[s]
        lab[s], lab[p] = v, u
        pos[v], pos[u] = s, p
        self.end[s] = s + 1
        for i in range(s + 1, e):
            cell[lab[i]] = s + 1
        self.end[s + 1] = e
        return s


class _Search:
    def __init__(self, g: ColoredGraph, generators: Sequence[Sequence[int]] = (),
                 inert: Sequence[int] = ()):
        self.g = g
        self.n = g.num_vertices
        self.refiner = _Refiner(g)
        self.inert = [False] * self.n
        for v in inert:
            self.inert[v] = True
        twin_ids: dict[tuple[int, ...], int] = {}
        self.twin = [twin_ids.setdefault(tuple(a), len(twin_ids)) for a in g.adj]
        self.generators: list[Sequence[int]] = [list(x) for x in generators]
        self.first = None  # (edge_keys, order, path)
        self.best = None
        self.leaves = 0

    def target(self) -> tuple[int, int] | None:
        ref = self.refiner
        lab, end, twin = ref.lab, ref.end, self.twin
        best = None
        s = 0
        n = self.n
        while s < n:
            e = end[s]
            size = e - s
            if size > 1 and (best is None or size < best[1] - best[0]) \
                    and not all(self.inert[v] for v in lab[s:e]):
                t0 = twin[lab[s]]
                for i in range(s + 1, e):
                    if twin[lab[i]] != t0:
                        best = (s, e)
                        break
            s = e
        return best

    def leaf_keys(self) -> list[int]:
        pos, adj, n = self.refiner.pos, self.g.adj, self.n
        keys = []
        for u in range(n):
            pu = pos[u]
            base = pu * n
            for x in adj[u]:
                px = pos[x]
                if px > pu:
                    keys.append(base + px)
        keys.sort()
        return keys

    def orbit_roots(self, fixed: list[int]) -> list[int]:
        parent = list(range(self.n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for gen in self.generators:
            if any(gen[v] != v for v in fixed):
                continue
            for x, y in enumerate(gen):
                if x != y:
                    rx, ry = find(x), find(y)
                    if rx != ry:
                        parent[max(rx, ry)] = min(rx, ry)
        return [find(x) for x in range(self.n)]

    def settle(self) -> None:
        """Order each remaining non-singleton cell by vertex id."""
        ref = self.refiner
        for s, e in ref.cells():
            if e - s > 1:
                ref.lab[s:e] = sorted(ref.lab[s:e])
                for i in range(s, e):
                    ref.pos[ref.lab[i]] = i

    def leaf(self, path: list[int]) -> int:
        self.leaves += 1
        self.settle()
        keys = self.leaf_keys()
        order = self.refiner.lab
        for ref in (self.first, self.best):
            if ref is not None and ref[0] == keys:
                gen = [0] * self.n
                for i, v in enumerate(ref[1]):
                    gen[v] = order[i]
                if any(x != y for x, y in enumerate(gen)):
                    self.generators.append(gen)
                common = 0
                for a, b in zip(ref[2], path):
                    if a != b:
                        break
                    common += 1
                return common
        if self.best is None:
            self.first = self.best = (keys, order[:], path[:])
        elif keys > self.best[0]:
            # larger sorted key list == lexicographically smaller bitstring
            self.best = (keys, order[:], path[:])
        return _NO_JUMP

    def explore(self, path: list[int]) -> int:
        target = self.target()
        if target is None:
            return self.leaf(path)
        ref = self.refiner
        s, e = target
        members = sorted(ref.lab[s:e])
        snap = ref.snapshot()
        depth = len(path)
        explored: list[int] = []
        roots = None
        seen_gens = -1
        for v in members:
            if explored and self.generators:
                if len(self.generators) != seen_gens:
                    roots = self.orbit_roots(path)
                    seen_gens = len(self.generators)
                rv = roots[v]
                if any(roots[u] == rv for u in explored):
                    continue
            explored.append(v)
            start = ref.individualize(v)
            ref.refine(deque([start]))
            path.append(v)
            jump = self.explore(path)
            path.pop()
            ref.restore(snap)
            if jump < depth:
                return jump
        return _NO_JUMP

    def run(self) -> Labeling:
        ref = self.refiner
        ref.refine(deque(ref.starts))
        self.explore([])
        keys, order, _ = self.best
        position = [0] * self.n
        for i, v in enumerate(order):
            position[v] = i
        sizes = tuple(len(c) for c in self.g.classes)
        return Labeling(order, position, keys, sizes, self.leaves, len(self.generators))


def refine(g: ColoredGraph, coloring: Sequence[Sequence[int]] | None = None) -> list[list[int]]:
    """Coarsest equitable refinement of ``coloring`` (default: the graph's classes)."""
    if coloring is not None:
        g = ColoredGraph(g.num_vertices, g.adj, [list(c) for c in coloring])
    ref = _Refiner(g)
    ref.refine(deque(ref.starts))
    return [ref.lab[s:e] for s, e in ref.cells()]


def canonical_labeling(g: ColoredGraph, generators: Sequence[Sequence[int]] = (),
                       inert: Sequence[int] = ()) -> Labeling:
    """Canonical labeling of a colored graph.

    ``generators`` may supply known color-preserving automorphisms; they only
    prune the search and never change the result.  ``inert`` vertices must
    form pairwise isomorphic connected components whose vertex ids are
    numbered consistently; cells made only of them are never branched on and
    are ordered by id instead.
    """
    return _Search(g, generators, inert).run()


def certificate(g: ColoredGraph) -> bytes:
    return canonical_labeling(g).certificate()


def element_permutation(cube_or_sig, n: int, labeling: Labeling) -> Permutation:
    """Domain permutation read off the canonical order of the E vertices.

    Pinned elements map to themselves; the others are renamed in the order
    their E vertices appear canonically.
    """
    signature = cube_or_sig.signature if isinstance(cube_or_sig, Cube) else cube_or_sig
    shape = shape_for(signature, n)
    pinned = signature.pinned
    free = [d for d in range(n) if d not in pinned]
    ranked = sorted(free, key=lambda d: labeling.position[shape.element_vertex(d)])
    images = list(range(n))
    for new, d in zip(free, ranked):
        images[d] = new
    return Permutation(images)


@dataclass
class CanonicalForm:
    cube: Cube
    key: bytes
    permutation: Permutation
    labeling: Labeling | None = None


def canonicalize(cube: Cube) -> CanonicalForm:
    shape = shape_for(cube.signature, cube.n)
    g = shape.build(cube.values)
    labeling = canonical_labeling(g, inert=shape.inert_vertices(cube.values))
    perm = element_permutation(cube, cube.n, labeling)
    canon = apply_perm(perm, cube)
    return CanonicalForm(canon, encode(canon), perm, labeling)


def canonical_key(cube: Cube) -> bytes:
    return canonical_values(cube.signature, cube.n, cube.values)[0]


# --- brute-force oracle -------------------------------------------------------

BRUTE_FORCE_MAX_ORDER = 8


def _pinned_fixing_perms(n: int, pinned) -> np.ndarray:
    free = [d for d in range(n) if d not in pinned]
    rows = []
    for images in itertools.permutations(free):
        p = list(range(n))
        for d, e in zip(free, images):
            p[d] = e
        rows.append(p)
    return np.array(rows, dtype=np.int64).reshape(len(rows), n)


def brute_force_canonicalize(cube: Cube) -> CanonicalForm:
    """Exact min-lex form: the smallest encoding over all pinned-fixing renamings."""
    n = cube.n
    if n > BRUTE_FORCE_MAX_ORDER:
        raise ValueError(f"brute force limited to order {BRUTE_FORCE_MAX_ORDER}, got {n}")
    sig = cube.signature
    layout = layout_for(sig, n)
    perms = _pinned_fixing_perms(n, sig.pinned)
    values = np.array(cube.values, dtype=np.int64)
    num_cells = layout.num_cells
    is_rel = np.array(layout.is_relation_cell, dtype=bool)
    # entries that renaming leaves alone: unassigned and truth values
    fixed_bytes = np.where(values < 0, 255, np.where(values == 1, 254, 253))
    fixed_bytes = np.where(is_rel | (values < 0), fixed_bytes, 0)
    func_assigned = (values >= 0) & ~is_rel
    best_row = None
    best_bytes = None
    chunk = 5040
    for lo in range(0, len(perms), chunk):
        P = perms[lo:lo + chunk]
        m = len(P)
        target = np.zeros((m, num_cells), dtype=np.int64)
        for cell, args in enumerate(layout.cell_args):
            idx = np.zeros(m, dtype=np.int64)
            for a in args:
                idx = idx * n + P[:, a]
            target[:, cell] = layout.offsets[layout.cell_symbol[cell]] + idx
        img = np.repeat(fixed_bytes[None, :], m, axis=0)
        img[:, func_assigned] = P[:, values[func_assigned]]
        out = np.empty((m, num_cells), dtype=np.uint8)
        out[np.arange(m)[:, None], target] = img
        order = np.lexsort(out.T[::-1])
        cand = out[order[0]].tobytes()
        if best_bytes is None or cand < best_bytes:
            best_bytes = cand
            best_row = P[order[0]]
    perm = Permutation(int(x) for x in best_row)
    canon = apply_perm(perm, cube)
    key = header_for(sig, n) + best_bytes
    return CanonicalForm(canon, key, perm)


def brute_force_key(cube: Cube) -> bytes:
    return brute_force_canonicalize(cube).key


def is_isomorphic(c1: Cube, c2: Cube) -> bool:
    if c1.signature != c2.signature or c1.n != c2.n:
        raise ValueError("cubes have different signatures or orders")
    return canonical_key(c1) == canonical_key(c2)



def canonical_values(signature: Signature, n: int, values: Sequence[int]) -> tuple[bytes, Permutation]:
    """Canonical key of a flat value list and the renaming that produces it.

    Compiled equivalent of ``canonicalize``; the two agree byte for byte.
    """
    body, perm = _kernels.canonical_table(np.asarray(values, dtype=np.int64),
                                          *shape_for(signature, n).arrays)
    return header_for(signature, n) + body.tobytes(), Permutation(perm.tolist())
