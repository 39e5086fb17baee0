"""Market primitives on the epsilon grid.

Every monetary amount (value, bid, price, utility) is an ``int`` counting
multiples of the grid step epsilon, so epsilon itself is ``1`` and every
equality test is exact.  Conversion from natural units happens only at the
scenario boundary (see :mod:`maxeq.scenario`).

A market always carries one zero-value dummy buyer per item, stored as the
last ``n_items`` rows.  Selling an item to a dummy at price zero is how an
unsold item is represented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

Money = int
Row = tuple[Money, ...]
Matrix = tuple[Row, ...]
Allocation = tuple[Optional[int], ...]


class MarketError(ValueError):
    """Invalid market data (negative values, bids above values, bad shapes)."""


class ContractError(RuntimeError):
    """An operation was called outside its precondition."""


def _as_matrix(rows: Iterable[Iterable[int]]) -> Matrix:
    out = []
    for row in rows:
        vals = []
        for x in row:
            if isinstance(x, bool) or int(x) != x:
                raise MarketError(f"non-integer grid amount {x!r}")
            vals.append(int(x))
        out.append(tuple(vals))
    return tuple(out)


@dataclass(frozen=True)
class Market:
    values: Matrix
    n_real: int
    n_items: int

    @property
    def n_buyers(self) -> int:
        return self.n_real + self.n_items

    @property
    def real_buyers(self) -> range:
        return range(self.n_real)

    def is_dummy(self, buyer: int) -> bool:
        return buyer >= self.n_real

    @property
    def max_value(self) -> Money:
        return max((v for row in self.values for v in row), default=0)

    def real_values(self) -> Matrix:
        return self.values[: self.n_real]


def new_market(values: Sequence[Sequence[int]], n_items: Optional[int] = None) -> Market:
    """Build a market from real buyers' value rows, appending one dummy per item.

    ``n_items`` is only needed when there are no real buyers.
    """
    rows = _as_matrix(values)
    if n_items is None:
        n_items = len(rows[0]) if rows else 0
    for i, row in enumerate(rows):
        if len(row) != n_items:
            raise MarketError(f"buyer {i} has {len(row)} values, expected {n_items}")
        for j, v in enumerate(row):
            if v < 0:
                raise MarketError(f"negative value {v} for buyer {i}, item {j}")
    dummies = tuple((0,) * n_items for _ in range(n_items))
    return Market(values=rows + dummies, n_real=len(rows), n_items=n_items)


@dataclass(frozen=True)
class BidMatrix:
    """Reported bids for every buyer row, dummies included (always zero)."""

    rows: Matrix
    n_real: int

    @property
    def n_buyers(self) -> int:
        return len(self.rows)

    @property
    def n_items(self) -> int:
        return self.n_buyers - self.n_real

    def is_dummy(self, buyer: int) -> bool:
        return buyer >= self.n_real

    def with_row(self, buyer: int, row: Sequence[int]) -> BidMatrix:
        rows = list(self.rows)
        rows[buyer] = tuple(row)
        return BidMatrix(tuple(rows), self.n_real)

    def without(self, buyer: int) -> BidMatrix:
        """The same bids with ``buyer`` bidding zero on every item."""
        return self.with_row(buyer, (0,) * self.n_items)

    def max_bid(self) -> Money:
        return max((b for row in self.rows for b in row), default=0)


def bid_matrix(market: Market, rows: Sequence[Sequence[int]]) -> BidMatrix:
    """Validate bids against ``market``.

    ``rows`` may list only the real buyers; dummy rows are then filled in.
    """
    mat = _as_matrix(rows)
    if len(mat) == market.n_real:
        mat = mat + market.values[market.n_real:]
    if len(mat) != market.n_buyers:
        raise MarketError(f"expected {market.n_real} bid rows, got {len(mat)}")
    for i, (brow, vrow) in enumerate(zip(mat, market.values)):
        if len(brow) != market.n_items:
            raise MarketError(f"buyer {i} has {len(brow)} bids, expected {market.n_items}")
        for j, (b, v) in enumerate(zip(brow, vrow)):
            if b < 0:
                raise MarketError(f"negative bid {b} for buyer {i}, item {j}")
            if b > v:
                raise MarketError(f"bid {b} above value {v} for buyer {i}, item {j}")
    return BidMatrix(mat, market.n_real)


def truthful_bids(market: Market) -> BidMatrix:
    return BidMatrix(market.values, market.n_real)


@dataclass(frozen=True)
class Outcome:
    prices: Row
    allocation: Allocation

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.prices):
            raise MarketError(f"negative price in {self.prices}")
        taken = [j for j in self.allocation if j is not None]
        if len(taken) != len(set(taken)):
            raise MarketError(f"allocation {self.allocation} is not a matching")

    def owners(self) -> list[Optional[int]]:
        """Buyer holding each item, or None."""
        owner: list[Optional[int]] = [None] * len(self.prices)
        for i, j in enumerate(self.allocation):
            if j is not None:
                owner[j] = i
        return owner


def _check_buyer(values: Matrix, buyer: int) -> None:
    if not 0 <= buyer < len(values):
        raise IndexError(f"buyer {buyer} out of range")


def utility(market: Market, outcome: Outcome, buyer: int) -> Money:
    """True utility of ``buyer``: value minus price of the won item, else 0."""
    _check_buyer(market.values, buyer)
    j = outcome.allocation[buyer]
    if j is None:
        return 0
    return market.values[buyer][j] - outcome.prices[j]


def social_welfare(market: Market, allocation: Sequence[Optional[int]]) -> Money:
    """Sum of true values over matched pairs; dummies contribute nothing."""
    if len(allocation) > market.n_buyers:
        raise IndexError("allocation longer than the buyer list")
    taken = [j for j in allocation if j is not None]
    if len(taken) != len(set(taken)):
        raise MarketError(f"allocation {tuple(allocation)} is not a matching")
    total = 0
    for i, j in enumerate(allocation):
        if j is None:
            continue
        if not 0 <= j < market.n_items:
            raise IndexError(f"item {j} out of range")
        total += market.values[i][j]
    return total


def is_aligned(bid_row: Sequence[int], value_row: Sequence[int]) -> bool:
    """True iff the bid row is the value row shifted down by a constant, floored at 0."""
    if len(bid_row) != len(value_row):
        raise MarketError("bid and value rows differ in length")
    diffs = {v - b for b, v in zip(bid_row, value_row) if b > 0}
    if not diffs:
        return True
    if len(diffs) > 1:
        return False
    (gap,) = diffs
    return all(v <= gap for b, v in zip(bid_row, value_row) if b == 0)
