"""Competitive equilibria of the assignment market under reported bids.

The minimum equilibrium is reached by lowering prices along
min-alternating subgraphs, the maximum one by raising prices along
max-alternating subgraphs.  Both walks keep the allocation fixed and jump
straight to the next event on the integer grid instead of stepping one
epsilon at a time.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from maxeq.market import (
    Allocation,
    BidMatrix,
    ContractError,
    MarketError,
    Money,
    Outcome,
)
from maxeq.matching import max_weight_matching, matching_weight


@dataclass(frozen=True)
class Violation:
    buyer: Optional[int]
    item: Optional[int]
    reason: str

    def __str__(self) -> str:
        return f"buyer={self.buyer} item={self.item}: {self.reason}"


def _check_shapes(bids: BidMatrix, prices: Sequence[int], allocation: Optional[Sequence] = None) -> None:
    if len(prices) != bids.n_items:
        raise MarketError(f"{len(prices)} prices for {bids.n_items} items")
    if allocation is not None and len(allocation) != bids.n_buyers:
        raise MarketError(f"allocation covers {len(allocation)} buyers, market has {bids.n_buyers}")


def is_competitive_equilibrium(bids: BidMatrix, outcome: Outcome) -> list[Violation]:
    """List every violated equilibrium condition; an empty list means equilibrium."""
    prices, alloc = outcome.prices, outcome.allocation
    _check_shapes(bids, prices, alloc)
    out: list[Violation] = []
    owners = outcome.owners()
    for j, i in enumerate(owners):
        if prices[j] != 0 and (i is None or bids.is_dummy(i)):
            out.append(Violation(i, j, f"unsold item priced at {prices[j]}"))
    for i, row in enumerate(bids.rows):
        best = max((b - p for b, p in zip(row, prices)), default=0)
        j = alloc[i]
        if j is None:
            if best > 0:
                jj = max(range(len(row)), key=lambda k: row[k] - prices[k])
                out.append(Violation(i, jj, f"unallocated but surplus {best} > 0"))
            continue
        own = row[j] - prices[j]
        if own < 0:
            out.append(Violation(i, j, f"negative surplus {own}"))
        if own < best:
            out.append(Violation(i, j, f"surplus {own} below best available {best}"))
    return out


@dataclass(frozen=True)
class DemandGraph:
    """``edges[i]`` is the set of items giving buyer ``i`` maximal non-negative surplus."""

    edges: tuple[frozenset[int], ...]

    def has_edge(self, buyer: int, item: int) -> bool:
        return item in self.edges[buyer]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(i, j) for i, items in enumerate(self.edges) for j in items}


def demand_graph(bids: BidMatrix, prices: Sequence[int]) -> DemandGraph:
    _check_shapes(bids, prices)
    edges = []
    for row in bids.rows:
        surplus = [b - p for b, p in zip(row, prices)]
        best = max(surplus, default=-1)
        if best < 0:
            edges.append(frozenset())
        else:
            edges.append(frozenset(j for j, s in enumerate(surplus) if s == best))
    return DemandGraph(tuple(edges))


@dataclass(frozen=True)
class AlternatingSubgraph:
    """Items and buyers reachable from ``root`` by alternating paths.

    ``items`` maps each reached item to the buyer it was reached from (None
    for the root); ``buyers`` maps each reached buyer to its parent item.
    """

    root: int
    kind: str  # "max" or "min"
    items: dict[int, Optional[int]]
    buyers: dict[int, int]

    def path_to(self, buyer: int) -> list[tuple[str, int]]:
        path: list[tuple[str, int]] = []
        cur: Optional[int] = buyer
        while cur is not None:
            path.append(("buyer", cur))
            item = self.buyers[cur]
            path.append(("item", item))
            cur = self.items[item]
        path.reverse()
        return path


def max_alternating_subgraph(
    bids: BidMatrix,
    prices: Sequence[int],
    allocation: Allocation,
    root_item: int,
    graph: Optional[DemandGraph] = None,
) -> AlternatingSubgraph:
    """Closure from ``root_item``: item -> its holder, holder -> every demanded item."""
    graph = graph or demand_graph(bids, prices)
    owners = _owners(allocation, len(prices))
    items: dict[int, Optional[int]] = {root_item: None}
    buyers: dict[int, int] = {}
    queue = deque([root_item])
    while queue:
        j = queue.popleft()
        i = owners[j]
        if i is None or i in buyers:
            continue
        buyers[i] = j
        for k in sorted(graph.edges[i]):
            if k not in items:
                items[k] = i
                queue.append(k)
    return AlternatingSubgraph(root_item, "max", items, buyers)


def min_alternating_subgraph(
    bids: BidMatrix,
    prices: Sequence[int],
    allocation: Allocation,
    root_item: int,
    graph: Optional[DemandGraph] = None,
) -> AlternatingSubgraph:
    """Closure from ``root_item``: item -> buyers demanding it who do not hold it,
    buyer -> the item he holds."""
    graph = graph or demand_graph(bids, prices)
    demanders: list[list[int]] = [[] for _ in prices]
    for i, its in enumerate(graph.edges):
        for j in its:
            demanders[j].append(i)
    items: dict[int, Optional[int]] = {root_item: None}
    buyers: dict[int, int] = {}
    queue = deque([root_item])
    while queue:
        j = queue.popleft()
        for i in demanders[j]:
            if allocation[i] == j or i in buyers:
                continue
            buyers[i] = j
            k = allocation[i]
            if k is not None and k not in items:
                items[k] = i
                queue.append(k)
    return AlternatingSubgraph(root_item, "min", items, buyers)


def find_critical_max_path(
    subgraph: AlternatingSubgraph, bids: BidMatrix, prices: Sequence[int]
) -> Optional[list[tuple[str, int]]]:
    """A path ending at a reached buyer whose bid on his own item equals its price."""
    for i, j in subgraph.buyers.items():
        if bids.rows[i][j] == prices[j]:
            return subgraph.path_to(i)
    return None


def find_critical_min_path(
    subgraph: AlternatingSubgraph,
    bids: BidMatrix,
    prices: Sequence[int],
    allocation: Allocation,
) -> Optional[list[tuple[str, int]]]:
    """A path ending at a reached unallocated buyer whose bid equals the price."""
    for i, j in subgraph.buyers.items():
        if allocation[i] is None and bids.rows[i][j] == prices[j]:
            return subgraph.path_to(i)
    return None


def _owners(allocation: Allocation, n_items: int) -> list[Optional[int]]:
    owners: list[Optional[int]] = [None] * n_items
    for i, j in enumerate(allocation):
        if j is not None:
            owners[j] = i
    return owners


def _require_equilibrium(bids: BidMatrix, outcome: Outcome, what: str) -> None:
    bad = is_competitive_equilibrium(bids, outcome)
    if bad:
        raise ContractError(f"{what} is not an equilibrium: " + "; ".join(map(str, bad)))


def alg_max_eq(bids: BidMatrix, start: Outcome, order: Optional[Sequence[int]] = None) -> Outcome:
    """Raise prices from the equilibrium ``start`` to the maximum equilibrium.

    Repeatedly picks the first item (in ``order``) whose max-alternating
    subgraph has no critical path and raises every price in it by the
    distance to the nearest event: some holder becoming bid-tight, or some
    holder starting to demand an item outside the subgraph.
    """
    _require_equilibrium(bids, start, "start")
    prices = list(start.prices)
    alloc = start.allocation
    order = list(range(bids.n_items)) if order is None else list(order)
    rows = bids.rows
    while True:
        graph = demand_graph(bids, prices)
        for j in order:
            sub = max_alternating_subgraph(bids, prices, alloc, j, graph)
            if find_critical_max_path(sub, bids, prices) is None:
                break
        else:
            return Outcome(tuple(prices), alloc)
        step: Optional[int] = None
        for i, own in sub.buyers.items():
            slack = rows[i][own] - prices[own]
            outside = [rows[i][k] - prices[k] for k in range(bids.n_items) if k not in sub.items]
            target = max([0] + outside)
            gap = slack - target
            if step is None or gap < step:
                step = gap
        assert step is not None and step > 0
        for k in sub.items:
            prices[k] += step


def lower_to_min_eq(bids: BidMatrix, start: Outcome, order: Optional[Sequence[int]] = None) -> Outcome:
    """Mirror of :func:`alg_max_eq`: lower prices to the minimum equilibrium.

    An item's subgraph is blocked when it holds a critical min-alternating
    path or a zero-priced item.  Otherwise every price in it drops by the
    distance to the nearest event: a price reaching zero, or an outside
    buyer starting to demand an item of the subgraph.
    """
    _require_equilibrium(bids, start, "start")
    prices = list(start.prices)
    alloc = start.allocation
    order = list(range(bids.n_items)) if order is None else list(order)
    rows = bids.rows
    while True:
        graph = demand_graph(bids, prices)
        for j in order:
            sub = min_alternating_subgraph(bids, prices, alloc, j, graph)
            blocked = any(prices[k] == 0 for k in sub.items) or (
                find_critical_min_path(sub, bids, prices, alloc) is not None
            )
            if not blocked:
                break
        else:
            return Outcome(tuple(prices), alloc)
        step = min(prices[k] for k in sub.items)
        for i, row in enumerate(rows):
            own = alloc[i]
            if i in sub.buyers or (own is not None and own in sub.items):
                continue
            held = row[own] - prices[own] if own is not None else 0
            for k in sub.items:
                gap = held - (row[k] - prices[k])
                if gap < step:
                    step = gap
        assert step > 0
        for k in sub.items:
            prices[k] -= step


def priority_order(n_real: int, n_buyers: int, mover: Optional[int] = None) -> list[int]:
    """Tie-break order: dummies first, then real buyers by index, the mover last."""
    order = list(range(n_real, n_buyers)) + [i for i in range(n_real) if i != mover]
    if mover is not None:
        order.append(mover)
    return order


def _priority_bonus(n_real: int, n_buyers: int, mover: Optional[int] = None) -> list[int]:
    bonus = [0] * n_buyers
    for pos, i in enumerate(priority_order(n_real, n_buyers, mover)):
        bonus[i] = 1 << (n_buyers - 1 - pos)
    return bonus


def bid_welfare(bids: BidMatrix, excluded_item: Optional[int] = None) -> Money:
    """Maximum total bid over matchings, optionally with one item withdrawn."""
    weights = [
        [None if j == excluded_item else b for j, b in enumerate(row)] for row in bids.rows
    ]
    return matching_weight(weights, max_weight_matching(weights, bids.n_items))


def max_weight_allocation(bids: BidMatrix) -> Allocation:
    """A maximum-bid-weight matching; ties go to dummies, then lower buyer index."""
    n = bids.n_buyers
    scale = 1 << n
    bonus = _priority_bonus(bids.n_real, n)
    weights = [[b * scale + bonus[i] for b in row] for i, row in enumerate(bids.rows)]
    return tuple(max_weight_matching(weights, bids.n_items))


def _seed_outcome(bids: BidMatrix) -> Outcome:
    # Each item priced at the welfare lost by withdrawing it: an equilibrium
    # price vector, used only as the starting point of the descent.
    alloc = max_weight_allocation(bids)
    total = bid_welfare(bids)
    prices = tuple(total - bid_welfare(bids, excluded_item=j) for j in range(bids.n_items))
    return Outcome(prices, alloc)


@lru_cache(maxsize=65536)
def compute_min_eq(bids: BidMatrix) -> Outcome:
    """Minimum equilibrium prices with a maximum-weight supporting allocation."""
    return lower_to_min_eq(bids, _seed_outcome(bids))


@lru_cache(maxsize=65536)
def compute_max_eq(bids: BidMatrix) -> Outcome:
    """Maximum equilibrium prices, raised from the minimum equilibrium."""
    return alg_max_eq(bids, compute_min_eq(bids))


def select_allocation(
    bids: BidMatrix,
    prices: Sequence[int],
    previous: Optional[Allocation] = None,
    mover: Optional[int] = None,
    mover_values: Optional[Sequence[int]] = None,
) -> Allocation:
    """Deterministic supported allocation for an equilibrium price vector.

    Objectives in strict lexicographic order:

    1. support the prices: every positive-priced item and every buyer with
       positive surplus is matched, along demand-graph edges only;
    2. when ``mover`` and his true ``mover_values`` are given, minimize the
       mover's true utility (the worst case he must assume);
    3. keep as many pairs of ``previous`` as possible;
    4. prefer dummies, then real buyers by index, the mover last.

    Levels are encoded as one integer weight per edge, so a single
    maximum-weight matching optimizes all of them at once.
    """
    _check_shapes(bids, prices, previous)
    n, m = bids.n_buyers, bids.n_items
    graph = demand_graph(bids, prices)
    surplus = [max([0] + [b - p for b, p in zip(row, prices)]) for row in bids.rows]
    must_buyer = [s > 0 for s in surplus]
    must_item = [p > 0 for p in prices]

    bonus = _priority_bonus(bids.n_real, n, mover)
    keep_unit = 1 << n
    worst_unit = keep_unit * (m + 2)
    if mover is not None and mover_values is not None:
        top = max(list(mover_values) + [0]) + max(list(prices) + [0]) + 2
    else:
        top = 1
    cover_unit = worst_unit * (top + 1) * (m + n + 2)

    def worst_score(u: int) -> int:
        return (top - 1 - u) * worst_unit

    null_col = m  # only the mover may use it, meaning "stays unallocated"
    weights: list[list[Optional[int]]] = []
    for i in range(n):
        row: list[Optional[int]] = [None] * (m + 1)
        for j in graph.edges[i]:
            w = bonus[i] + cover_unit * (must_buyer[i] + must_item[j])
            if previous is not None and previous[i] == j:
                w += keep_unit
            if i == mover and mover_values is not None:
                w += worst_score(mover_values[j] - prices[j])
            row[j] = w
        if i == mover and mover_values is not None and not must_buyer[i]:
            row[null_col] = worst_score(0)
        weights.append(row)

    match = max_weight_matching(weights, m + 1)
    alloc = tuple(None if j == null_col else j for j in match)
    held = {j for j in alloc if j is not None}
    if any(must_buyer[i] and alloc[i] is None for i in range(n)) or any(
        must_item[j] and j not in held for j in range(m)
    ):
        raise ContractError(f"no allocation supports prices {tuple(prices)}")
    return alloc


def max_eq_outcome(
    bids: BidMatrix,
    previous: Optional[Allocation] = None,
    mover: Optional[int] = None,
    mover_values: Optional[Sequence[int]] = None,
) -> Outcome:
    """What the mechanism announces: max-eq prices with :func:`select_allocation`."""
    prices = compute_max_eq(bids).prices
    return Outcome(prices, select_allocation(bids, prices, previous, mover, mover_values))
