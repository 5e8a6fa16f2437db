from __future__ import annotations

import random
import sys
from importlib import resources
from pathlib import Path

import pytest

from isofree.cube import Cube
from isofree.syntax import (And, Eq, Iff, Implies, Not, Num, Or, Rel, Signature, Theory,
                            Var, parse_theory)

sys.path.insert(0, str(Path(__file__).parent))

CORPUS = ("tarski", "involutive_lattices", "m_zeroids", "near_rings", "tarski_hsi",
          "loops", "c_loops", "ip_loops")


def theory_text(name: str) -> str:
    return resources.files("isofree.theories").joinpath(f"{name}.th").read_text()


def theory_path(name: str) -> str:
    return str(resources.files("isofree.theories").joinpath(f"{name}.th"))


def load(name: str) -> Theory:
    return parse_theory(theory_text(name))


def eval_term(t, env: dict, tables: dict, n: int) -> int:
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Num):
        return t.value
    idx = 0
    for a in t.args:
        idx = idx * n + eval_term(a, env, tables, n)
    return tables[t.name][idx]


def eval_formula(f, env: dict, tables: dict, n: int) -> bool:
    """Truth of ``f`` in a total structure, straight from the syntax tree."""
    if isinstance(f, Eq):
        return eval_term(f.lhs, env, tables, n) == eval_term(f.rhs, env, tables, n)
    if isinstance(f, Rel):
        idx = 0
        for a in f.args:
            idx = idx * n + eval_term(a, env, tables, n)
        return bool(tables[f.name][idx])
    if isinstance(f, Not):
        return not eval_formula(f.arg, env, tables, n)
    a = eval_formula(f.lhs, env, tables, n)
    b = eval_formula(f.rhs, env, tables, n)
    if isinstance(f, And):
        return a and b
    if isinstance(f, Or):
        return a or b
    if isinstance(f, Implies):
        return (not a) or b
    assert isinstance(f, Iff)
    return a == b


def random_signature(rng: random.Random, max_arity: int = 3) -> Signature:
    funcs, rels = [], []
    for i in range(rng.randint(1, 3)):
        arity = rng.randint(0 if i else 1, max_arity)
        funcs.append((f"f{i}", arity))
    if rng.random() < 0.4:
        rels.append(("r0", rng.randint(1, max_arity)))
    if rng.random() < 0.3:
        funcs = funcs[1:] or funcs
    if max(k for _, k in funcs + rels) < 1:
        funcs.append(("g", 1))
    return Signature(tuple(funcs), tuple(rels))


def random_cube(rng: random.Random, signature: Signature, n: int,
                fill: float | None = None) -> Cube:
    """Random cube; ``fill`` is the chance that a cell is assigned (random if None)."""
    cube = Cube.empty(signature, n)
    fill = rng.random() if fill is None else fill
    layout = cube.layout
    for cell in range(layout.num_cells):
        if rng.random() < fill:
            top = 2 if layout.is_relation_cell[cell] else n
            cube.values[cell] = rng.randrange(top)
    return cube


def small_cube(rng: random.Random, signature: Signature, n: int) -> Cube:
    """Random cube over a small value range so that collisions between classes happen."""
    cube = random_cube(rng, signature, n)
    layout = cube.layout
    spread = rng.randint(1, n)
    for cell, v in enumerate(cube.values):
        if v >= 0 and not layout.is_relation_cell[cell]:
            cube.values[cell] = v % spread
    return cube


@pytest.fixture(scope="session")
def corpus() -> dict[str, Theory]:
    return {name: load(name) for name in CORPUS}


# One PASS/FAIL line per acceptance criterion, repeated in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
