"""Brute-force ground truth for desk-scale markets.

Everything here enumerates: price vectors over the whole grid, matchings
over all injective item assignments, deviations over every bid row below
the value row.  Nothing is shared with the combinatorial engine except
the market and bid containers, so agreement between the two is evidence.

Dummy buyers are ignored throughout; an item held by nobody stands for an
item sold to a dummy at price zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from maxeq.market import Allocation, BidMatrix, Market, Money


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_items: int = 3
    max_real_buyers: int = 4
    max_states: int = 10_000_000

    def check(self, n_real: int, n_items: int, price_cap: int) -> None:
        if n_items > self.max_items or n_real > self.max_real_buyers:
            raise BudgetExceeded(
                f"{n_real} buyers x {n_items} items exceeds {self.max_real_buyers} x {self.max_items}"
            )
        grid = (price_cap + 1) ** n_items
        matchings = sum(
            _falling(n_real, k) * _comb(n_items, k) for k in range(min(n_real, n_items) + 1)
        )
        if grid * matchings > self.max_states:
            raise BudgetExceeded(f"{grid} price vectors x {matchings} matchings is too many")


DEFAULT_BUDGET = OracleBudget()


def _falling(n: int, k: int) -> int:
    out = 1
    for t in range(k):
        out *= n - t
    return out


def _comb(n: int, k: int) -> int:
    return _falling(n, k) // _falling(k, k)


def _real_rows(bids: BidMatrix) -> list[tuple[int, ...]]:
    return [tuple(r) for r in bids.rows[: bids.n_real]]


def _ce_matchings(rows: Sequence[Sequence[int]], prices: Sequence[int]) -> Iterator[list[Optional[int]]]:
    """Every item->buyer assignment forming a competitive equilibrium at ``prices``.

    Straight from the definition: unsold items cost nothing, each winner
    gets a surplus-maximizing item with non-negative surplus, each loser
    has no positive surplus anywhere.
    """
    n, m = len(rows), len(prices)
    best = [max([0] + [row[j] - prices[j] for j in range(m)]) for row in rows]
    holder: list[Optional[int]] = [None] * m
    used = [False] * n

    def rec(j: int) -> Iterator[list[Optional[int]]]:
        if j == m:
            if all(used[i] or best[i] <= 0 for i in range(n)):
                yield list(holder)
            return
        if prices[j] == 0:
            yield from rec(j + 1)
        for i in range(n):
            if not used[i] and rows[i][j] - prices[j] == best[i]:
                used[i] = True
                holder[j] = i
                yield from rec(j + 1)
                holder[j] = None
                used[i] = False

    yield from rec(0)


def _to_allocation(holder: Sequence[Optional[int]], n_buyers: int) -> Allocation:
    alloc: list[Optional[int]] = [None] * n_buyers
    for j, i in enumerate(holder):
        if i is not None:
            alloc[i] = j
    return tuple(alloc)


def _equilibrium_price_vectors(rows, n_items: int, cap: int) -> Iterator[tuple[int, ...]]:
    for prices in itertools.product(range(cap + 1), repeat=n_items):
        if next(_ce_matchings(rows, prices), None) is not None:
            yield prices


def brute_equilibrium_prices(
    bids: BidMatrix, budget: OracleBudget = DEFAULT_BUDGET
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Entrywise minimum and maximum over all equilibrium price vectors on the grid."""
    rows = _real_rows(bids)
    cap = bids.max_bid()
    budget.check(bids.n_real, bids.n_items, cap)
    found = list(_equilibrium_price_vectors(rows, bids.n_items, cap))
    if not found:
        raise AssertionError("no equilibrium price vector on the grid")
    lo = tuple(min(p[j] for p in found) for j in range(bids.n_items))
    hi = tuple(max(p[j] for p in found) for j in range(bids.n_items))
    return lo, hi


def qualifies(bids: BidMatrix, prices: Sequence[int]) -> bool:
    """True iff some matching makes ``prices`` an equilibrium price vector."""
    return next(_ce_matchings(_real_rows(bids), prices), None) is not None


def enumerate_supported_allocations(bids: BidMatrix, prices: Sequence[int]) -> list[Allocation]:
    """All allocations (over every buyer row, dummies left out) supported by ``prices``."""
    return [
        _to_allocation(h, bids.n_buyers) for h in _ce_matchings(_real_rows(bids), prices)
    ]


def _all_matchings(n: int, m: int) -> Iterator[tuple[Optional[int], ...]]:
    """Every partial injective map buyer -> item, as a per-buyer tuple."""
    choices = [None] + list(range(m))
    for combo in itertools.product(choices, repeat=n):
        taken = [j for j in combo if j is not None]
        if len(taken) == len(set(taken)):
            yield combo


def brute_max_weight_matching(
    values: Sequence[Sequence[int]], budget: OracleBudget = DEFAULT_BUDGET
) -> tuple[tuple[Optional[int], ...], Money]:
    """Exhaustive maximum-weight matching; ties go to the lexicographically
    smallest allocation with None ordered before any item."""
    n = len(values)
    m = len(values[0]) if n else 0
    if n > budget.max_real_buyers + budget.max_items or m > budget.max_items + 3:
        raise BudgetExceeded(f"{n} x {m} is too large for exhaustive matching")
    best: Optional[tuple[Optional[int], ...]] = None
    best_w = -1
    for combo in _all_matchings(n, m):
        w = sum(values[i][j] for i, j in enumerate(combo) if j is not None)
        if w > best_w:
            best, best_w = combo, w
    assert best is not None
    return best, best_w


def worst_utility(market: Market, bids: BidMatrix, buyer: int, prices: Sequence[int]) -> Money:
    """The buyer's lowest true utility over allocations supported by ``prices``."""
    vals = market.values[buyer]
    worst: Optional[int] = None
    for alloc in enumerate_supported_allocations(bids, prices):
        j = alloc[buyer]
        u = 0 if j is None else vals[j] - prices[j]
        if worst is None or u < worst:
            worst = u
    if worst is None:
        raise AssertionError(f"prices {tuple(prices)} support no allocation")
    return worst


def brute_best_response_utility(
    market: Market, bids: BidMatrix, buyer: int, budget: OracleBudget = DEFAULT_BUDGET
) -> Money:
    """Best worst-case utility over every deviation row with 0 <= b' <= v."""
    vals = market.values[buyer]
    best: Optional[int] = None
    for row in itertools.product(*(range(v + 1) for v in vals)):
        dev = bids.with_row(buyer, row)
        _, hi = brute_equilibrium_prices(dev, budget)
        u = worst_utility(market, dev, buyer, hi)
        if best is None or u > best:
            best = u
    assert best is not None
    return best
