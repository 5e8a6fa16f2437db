"""The search against oracles that share no code with it."""

import pytest

from isofree.search import SearchOptions, search
from isofree.syntax import parse_theory

import oracles
from conftest import load


def test_binary_operation_oracle_is_frozen():
    assert oracles.binary_operation_classes(2) == oracles.BINARY_OPS_ON_TWO


@pytest.mark.parametrize("n", sorted(oracles.LOOP_COUNTS))
def test_loop_oracle_is_frozen(n):
    assert oracles.loop_classes(n) == oracles.LOOP_COUNTS[n]


def test_normalized_squares_of_order_five():
    # reduced Latin squares of order 5: a classical count
    assert len(oracles.normalized_latin_squares(5)) == 56


def test_search_matches_binary_operation_oracle():
    th = parse_theory("functions */2.\nx * y = x * y.")
    for lnh in (True, False):
        assert search(th, 2, SearchOptions(lnh=lnh)).models == oracles.BINARY_OPS_ON_TWO


def test_search_matches_small_magma_oracle():
    th = parse_theory("functions */2.\nx * y = x * y.")
    assert search(th, 3).models == oracles.binary_operation_classes(3)


@pytest.mark.parametrize("n", sorted(oracles.LOOP_COUNTS))
def test_search_matches_loop_oracle(n):
    assert search(load("loops"), n).models == oracles.LOOP_COUNTS[n]
