"""Second step of the two-step baseline: drop models isomorphic to an earlier one."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .canon import brute_force_key, canonical_key
from .cube import Cube
from .store import SeenStore

FILTER_MODES = ("graph", "brute-force")


@dataclass
class FilterStats:
    read: int = 0
    kept: int = 0
    dropped: int = 0


def filter_models(models: Iterable[Cube], mode: str = "graph",
                  stats: FilterStats | None = None) -> Iterator[tuple[int, Cube]]:
    """Yield ``(input index, model)`` for the first model of each isomorphism class."""
    if mode not in FILTER_MODES:
        raise ValueError(f"unknown filter mode {mode!r}")
    key_of = canonical_key if mode == "graph" else brute_force_key
    stats = stats if stats is not None else FilterStats()
    store = SeenStore()
    first = None
    for i, cube in enumerate(models):
        if first is None:
            first = (cube.signature, cube.n)
        elif (cube.signature, cube.n) != first:
            raise ValueError(f"model {i} has a different signature or order")
        stats.read += 1
        if store.insert_if_new(key_of(cube)):
            stats.kept += 1
            yield i, cube
        else:
            stats.dropped += 1
