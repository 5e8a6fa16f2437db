"""Vertex-colored graph of a cube or model.

Vertex classes, in numbering order: E (domain elements), A_1..A_q (argument
positions), R (values), B_T and B_F (only when there are relations), one class
per function and relation holding its cells, and U (only when some cell is
unassigned).  Each class is its own color; a pinned element's E, A_p and R
vertices get singleton colors so canonical labeling never moves them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .cube import Cube, layout_for
from .ground import UNASSIGNED, CellLayout
from .syntax import Signature


@dataclass
class ColoredGraph:
    num_vertices: int
    adj: list[list[int]]
    classes: list[list[int]]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.num_vertices) for v in self.adj[u] if u < v]

    def color_of(self) -> list[int]:
        color = [0] * self.num_vertices
        for c, members in enumerate(self.classes):
            for v in members:
                color[v] = c
        return color

    def check(self) -> None:
        """Assert the structural invariants (symmetric, simple, partitioned)."""
        for u, nbrs in enumerate(self.adj):
            assert nbrs == sorted(set(nbrs)), f"vertex {u}: unsorted or duplicate neighbors"
            assert u not in nbrs, f"vertex {u}: self-loop"
            for v in nbrs:
                assert u in self.adj[v], f"edge {u}-{v} is not symmetric"
        seen = sorted(v for members in self.classes for v in members)
        assert seen == list(range(self.num_vertices)), "classes do not partition the vertices"

    def relabel(self, mapping: Sequence[int]) -> "ColoredGraph":
        """Image under the vertex bijection ``mapping`` (old -> new)."""
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for u, nbrs in enumerate(self.adj):
            adj[mapping[u]] = sorted(mapping[v] for v in nbrs)
        classes = [sorted(mapping[v] for v in members) for members in self.classes]
        return ColoredGraph(self.num_vertices, adj, classes)


class GraphShape:
    """Vertex numbering for one (signature, order); reused across cubes."""

    def __init__(self, signature: Signature, n: int):
        self.signature = signature
        self.n = n
        self.layout: CellLayout = layout_for(signature, n)
        q = signature.max_arity
        self.q = q
        self.has_relations = bool(signature.relations)
        self.e_base = 0
        self.r_base = n * (q + 1)
        self.bool_base = n * (q + 2)
        self.cell_base = self.bool_base + (2 if self.has_relations else 0)
        self.u_vertex = self.cell_base + self.layout.num_cells
        pinned = sorted(signature.pinned)
        free = [d for d in range(n) if d not in signature.pinned]

        classes: list[list[int]] = []
        for base in range(0, n * (q + 2), n):  # E, A_1..A_q, R
            classes.extend([base + d] for d in pinned)
            if free:
                classes.append([base + d for d in free])
        if self.has_relations:
            classes.append([self.bool_base])
            classes.append([self.bool_base + 1])
        for s in range(len(self.layout.symbols)):
            classes.append([self.cell_base + c for c in self.layout.symbol_range(s)])
        self.base_classes = classes

        # static E-A and E-R edges
        static: list[list[int]] = [[] for _ in range(self.u_vertex + 1)]
        for d in range(n):
            for p in range(1, q + 1):
                self._link(static, d, n * p + d)
            self._link(static, d, self.r_base + d)
        self.static = static
        # for each cell vertex, its argument vertices A_p,a_p
        self.arg_vertices = [[n * (p + 1) + a for p, a in enumerate(args)]
                             for args in self.layout.cell_args]

    @staticmethod
    def _link(adj: list[list[int]], u: int, v: int) -> None:
        adj[u].append(v)
        adj[v].append(u)

    def build(self, values: Sequence[int]) -> ColoredGraph:
        adj = [list(a) for a in self.static]
        rel = self.layout.is_relation_cell
        cell_base, r_base, bool_base = self.cell_base, self.r_base, self.bool_base
        u = self.u_vertex
        any_unassigned = False
        for cell, v in enumerate(values):
            x = cell_base + cell
            if v == UNASSIGNED:
                any_unassigned = True
                adj[x].append(u)
                adj[u].append(x)
                continue
            target = (bool_base + (0 if v else 1)) if rel[cell] else r_base + v
            adj[x].append(target)
            adj[target].append(x)
            for a in self.arg_vertices[cell]:
                adj[x].append(a)
                adj[a].append(x)
        classes = [list(c) for c in self.base_classes]
        if any_unassigned:
            classes.append([u])
        else:
            adj.pop()
        for a in adj:
            a.sort()
        return ColoredGraph(len(adj), adj, classes)

    def element_vertex(self, d: int) -> int:
        return self.e_base + d

    def inert_vertices(self, values: Sequence[int]) -> list[int]:
        """E, A and R vertices of elements that occur in no assigned cell.

        Each such element contributes an isolated star, all of them alike.
        """
        used = set()
        rel = self.layout.is_relation_cell
        for cell, v in enumerate(values):
            if v == UNASSIGNED:
                continue
            if not rel[cell]:
                used.add(v)
            used.update(self.layout.cell_args[cell])
        return [self.n * p + d for d in range(self.n) if d not in used
                for p in range(self.q + 2)]

    @cached_property
    def arrays(self) -> tuple:
        """Flat numpy views of the shape for the compiled key pipeline."""
        layout = self.layout
        width = max(self.q, 1)
        arg_vertices = np.full((layout.num_cells, width), -1, np.int64)
        cell_args = np.full((layout.num_cells, width), -1, np.int64)
        for c, args in enumerate(layout.cell_args):
            arg_vertices[c, :len(args)] = self.arg_vertices[c]
            cell_args[c, :len(args)] = args
        base_lab = np.array([v for members in self.base_classes for v in members], np.int64)
        starts, s = [], 0
        for members in self.base_classes:
            starts.append(s)
            s += len(members)
        free = np.array([d for d in range(self.n) if d not in self.signature.pinned], np.int64)
        return (self.n, self.q, self.r_base, self.bool_base, self.cell_base, self.u_vertex,
                arg_vertices, np.array(layout.is_relation_cell, np.bool_), base_lab,
                np.array(starts, np.int64), free, np.array(layout.offsets, np.int64),
                np.array(layout.cell_symbol, np.int64), cell_args)


_SHAPES: dict[tuple[Signature, int], GraphShape] = {}


def shape_for(signature: Signature, n: int) -> GraphShape:
    key = (signature, n)
    shape = _SHAPES.get(key)
    if shape is None:
        shape = _SHAPES[key] = GraphShape(signature, n)
    return shape


def build_graph(cube: Cube) -> ColoredGraph:
    return shape_for(cube.signature, cube.n).build(cube.values)


def dump_graph(g: ColoredGraph) -> str:
    """Adjacency listing, each edge printed once from its lower endpoint."""
    lines = []
    for u in range(g.num_vertices):
        higher = [v for v in g.adj[u] if v > u]
        lines.append(f"{u} :" + "".join(f" {v}" for v in higher))
    lines.append("partition : " + " | ".join(" ".join(map(str, c)) for c in g.classes))
    return "\n".join(lines) + "\n"


def parse_graph_dump(text: str) -> ColoredGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[-1].startswith("partition"):
        raise ValueError("graph dump must end with a partition line")
    body, part = lines[:-1], lines[-1]
    adj: list[list[int]] = [[] for _ in body]
    for i, ln in enumerate(body):
        head, _, rest = ln.partition(":")
        if int(head) != i:
            raise ValueError(f"expected vertex {i}, found {head.strip()}")
        for tok in rest.split():
            v = int(tok)
            adj[i].append(v)
            adj[v].append(i)
    for a in adj:
        a.sort()
    _, _, spec = part.partition(":")
    classes = [[int(t) for t in chunk.split()] for chunk in spec.split("|") if chunk.strip()]
    return ColoredGraph(len(body), adj, classes)
