"""Best-response dynamics under the maximum-equilibrium mechanism.

Buyers move one at a time.  A mover who holds no item targets the best
surplus ``d`` available at the current prices; a mover who holds an item
targets the best surplus at the prices the market would clear at without
him.  The aligned response bids ``max(0, v - d + eps)`` on every item; the
zero-fill variant keeps that bid only on the items attaining ``d`` and
bids zero elsewhere.

A response is applied whenever it differs from the current row, even at
zero utility gain, so a run stops exactly at a syntactic fixed point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from maxeq.equilibrium import compute_max_eq, compute_min_eq, max_eq_outcome
from maxeq.market import (
    BidMatrix,
    ContractError,
    Market,
    MarketError,
    Money,
    Outcome,
    Row,
    is_aligned,
    social_welfare,
    truthful_bids,
    utility,
)
from maxeq.matching import max_weight_matching, matching_weight
from maxeq.oracle import BudgetExceeded, brute_max_weight_matching

EPS = 1


class Policy(str, Enum):
    ALIGNED = "aligned"
    ZERO_FILL = "zero_fill"


class Termination(str, Enum):
    CONVERGED = "converged"
    CYCLE_DETECTED = "cycle_detected"
    STEP_LIMIT = "step_limit"


@dataclass(frozen=True)
class ResponseContext:
    """Target surplus ``d`` and the prices it was measured against.

    For a winner ``counterfactual`` is the max-eq outcome with his row zeroed.
    """

    d: Money
    prices: Row
    counterfactual: Optional[Outcome] = None


def response_context(market: Market, bids: BidMatrix, current: Outcome, buyer: int) -> ResponseContext:
    vals = market.values[buyer]
    if current.allocation[buyer] is None:
        prices = current.prices
        cf = None
    else:
        cf = compute_max_eq(bids.without(buyer))
        prices = cf.prices
    d = max((v - p for v, p in zip(vals, prices)), default=0)
    return ResponseContext(d, prices, cf)


def _aligned_row(vals: Sequence[int], d: int) -> Row:
    return tuple(max(0, v - d + EPS) for v in vals)


def loser_best_response(market: Market, bids: BidMatrix, current: Outcome, buyer: int) -> Row:
    if current.allocation[buyer] is not None:
        raise ContractError(f"buyer {buyer} holds item {current.allocation[buyer]}")
    ctx = response_context(market, bids, current, buyer)
    if ctx.d <= 0:
        return bids.rows[buyer]
    return _aligned_row(market.values[buyer], ctx.d)


def winner_best_response(market: Market, bids: BidMatrix, current: Outcome, buyer: int) -> Row:
    if current.allocation[buyer] is None:
        raise ContractError(f"buyer {buyer} holds no item")
    ctx = response_context(market, bids, current, buyer)
    if ctx.d <= 0 or utility(market, current, buyer) >= ctx.d:
        return bids.rows[buyer]
    return _aligned_row(market.values[buyer], ctx.d)


def zero_fill_best_response(market: Market, bids: BidMatrix, current: Outcome, buyer: int) -> Row:
    """Same target as the aligned response, but zero on every item short of it."""
    ctx = response_context(market, bids, current, buyer)
    winner = current.allocation[buyer] is not None
    if ctx.d <= 0 or (winner and utility(market, current, buyer) >= ctx.d):
        return bids.rows[buyer]
    vals = market.values[buyer]
    return tuple(
        max(0, v - ctx.d + EPS) if v - p == ctx.d else 0 for v, p in zip(vals, ctx.prices)
    )


def best_response(
    market: Market, bids: BidMatrix, current: Outcome, buyer: int, policy: Policy
) -> Row:
    if market.is_dummy(buyer):
        raise ContractError(f"buyer {buyer} is a dummy")
    if Policy(policy) is Policy.ZERO_FILL:
        return zero_fill_best_response(market, bids, current, buyer)
    if current.allocation[buyer] is None:
        return loser_best_response(market, bids, current, buyer)
    return winner_best_response(market, bids, current, buyer)


def step(
    market: Market,
    bids: BidMatrix,
    policy: Policy,
    mover: int,
    current: Optional[Outcome] = None,
) -> tuple[BidMatrix, Outcome, bool]:
    """One move: the mover responds and the mechanism recomputes.

    ``current`` is the outcome the market last announced; when omitted it is
    recomputed with no previous allocation.  An unchanged row leaves the
    outcome untouched.
    """
    if current is None:
        current = max_eq_outcome(bids)
    new_row = best_response(market, bids, current, mover, policy)
    if new_row == bids.rows[mover]:
        return bids, current, False
    new_bids = bids.with_row(mover, new_row)
    outcome = max_eq_outcome(
        new_bids, previous=current.allocation, mover=mover, mover_values=market.values[mover]
    )
    return new_bids, outcome, True


@dataclass(frozen=True)
class Step:
    round: int
    mover: int
    was_winner: bool
    target: Money
    old_row: Row
    new_row: Row
    prices_before: Row
    outcome: Outcome
    utility: Money
    aligned_before: bool
    responded_before: bool


@dataclass(frozen=True)
class DynamicsTrace:
    policy: Policy
    initial_bids: BidMatrix
    initial_outcome: Outcome
    steps: tuple[Step, ...]
    termination: Termination
    final_bids: BidMatrix
    final_outcome: Outcome
    n_moves: int
    rounds: int

    @property
    def converged(self) -> bool:
        return self.termination is Termination.CONVERGED


Ordering = Union[str, Sequence[int]]


def default_step_budget(market: Market) -> int:
    return max(1, market.n_real * market.n_items * (market.max_value // EPS + 1) * 4)


def _movers(market: Market, ordering: Ordering, seed: Optional[int]):
    """Yield (round, mover, position) forever; position is None when not periodic."""
    real = list(market.real_buyers)
    if isinstance(ordering, str):
        if ordering == "round_robin":
            cycle = real
        elif ordering in ("random", "seeded_random"):
            rng = random.Random(seed)
            rnd = 0
            while True:
                perm = real[:]
                rng.shuffle(perm)
                for i in perm:
                    yield rnd, i, None
                rnd += 1
        else:
            raise MarketError(f"unknown ordering {ordering!r}")
    else:
        cycle = [int(i) for i in ordering]
        if not cycle or any(not 0 <= i < market.n_real for i in cycle) or set(cycle) != set(real):
            raise MarketError(f"ordering {list(ordering)} must list every real buyer")
    rnd = 0
    while True:
        for pos, i in enumerate(cycle):
            yield rnd, i, pos
        rnd += 1


def run_dynamics(
    market: Market,
    initial_bids: Optional[BidMatrix] = None,
    policy: Policy = Policy.ALIGNED,
    ordering: Ordering = "round_robin",
    max_steps: Optional[int] = None,
    seed: Optional[int] = None,
) -> DynamicsTrace:
    """Run best responses until a fixed point, a repeated state, or the budget.

    ``max_steps`` counts mover turns, including turns that change nothing.
    Converged means every real buyer has taken a turn since the last change
    and kept his row.  A repeated (bids, allocation, position) triple under a
    periodic ordering is a genuine cycle of the deterministic process.
    """
    policy = Policy(policy)
    bids = initial_bids if initial_bids is not None else truthful_bids(market)
    if max_steps is None:
        max_steps = default_step_budget(market)
    if max_steps < 1:
        raise MarketError("max_steps must be at least 1")
    movers = _movers(market, ordering, seed)
    current = max_eq_outcome(bids)
    initial_outcome = current
    steps: list[Step] = []
    quiet: set[int] = set()
    responded: set[int] = set()
    seen: set = set()
    n_moves = 0
    rnd = 0
    termination = Termination.STEP_LIMIT
    if market.n_real == 0:
        termination = Termination.CONVERGED
    while market.n_real and n_moves < max_steps:
        rnd, mover, pos = next(movers)
        if pos is not None:
            key = (bids, current.allocation, pos)
            if key in seen:
                termination = Termination.CYCLE_DETECTED
                break
            seen.add(key)
        n_moves += 1
        was_winner = current.allocation[mover] is not None
        old_row = bids.rows[mover]
        before = current
        target = response_context(market, bids, current, mover).d
        bids, current, changed = step(market, bids, policy, mover, current)
        if not changed:
            quiet.add(mover)
            if len(quiet) == market.n_real:
                termination = Termination.CONVERGED
                break
            continue
        quiet = set()
        steps.append(
            Step(
                round=rnd,
                mover=mover,
                was_winner=was_winner,
                target=target,
                old_row=old_row,
                new_row=bids.rows[mover],
                prices_before=before.prices,
                outcome=current,
                utility=utility(market, current, mover),
                aligned_before=is_aligned(old_row, market.values[mover]),
                responded_before=mover in responded,
            )
        )
        responded.add(mover)
    return DynamicsTrace(
        policy=policy,
        initial_bids=initial_bids if initial_bids is not None else truthful_bids(market),
        initial_outcome=initial_outcome,
        steps=tuple(steps),
        termination=termination,
        final_bids=bids,
        final_outcome=current,
        n_moves=n_moves,
        rounds=rnd + 1 if n_moves else 0,
    )


def is_terminal(
    market: Market, bids: BidMatrix, policy: Policy = Policy.ALIGNED, outcome: Optional[Outcome] = None
) -> bool:
    """True iff every real buyer's response is his current row."""
    current = outcome if outcome is not None else max_eq_outcome(bids)
    return all(
        best_response(market, bids, current, i, Policy(policy)) == bids.rows[i]
        for i in market.real_buyers
    )


def check_nash_gap(market: Market, bids: BidMatrix, outcome: Optional[Outcome] = None) -> list[Money]:
    """Per real buyer, the utility he is sure to gain by responding.

    Responding guarantees at least ``d - eps``; the gap is how far that
    exceeds his current utility, floored at zero.
    """
    current = outcome if outcome is not None else max_eq_outcome(bids)
    gaps = []
    for i in market.real_buyers:
        d = response_context(market, bids, current, i).d
        gaps.append(max(0, d - EPS - utility(market, current, i)) if d > 0 else 0)
    return gaps


def check_max_min_gap(bids: BidMatrix) -> bool:
    """Max-eq and min-eq prices differ by at most one grid step on every item."""
    lo = compute_min_eq(bids).prices
    hi = compute_max_eq(bids).prices
    return all(h - l in (0, EPS) for l, h in zip(lo, hi))


def _require_converged(trace: DynamicsTrace) -> None:
    if not trace.converged:
        raise ContractError(f"trace ended with {trace.termination.value}, not converged")


def check_reaches_min_eq(market: Market, trace: DynamicsTrace) -> bool:
    """Final max-eq prices sit at or one step above the truthful min-eq prices."""
    _require_converged(trace)
    for i in market.real_buyers:
        if not is_aligned(trace.initial_bids.rows[i], market.values[i]):
            raise ContractError(f"buyer {i} did not start from an aligned row")
    target = compute_min_eq(truthful_bids(market)).prices
    return all(p - q in (0, EPS) for p, q in zip(trace.final_outcome.prices, target))


def efficient_welfare(market: Market) -> Money:
    vals = market.real_values()
    try:
        return brute_max_weight_matching(vals)[1]
    except BudgetExceeded:
        return matching_weight(vals, max_weight_matching(vals, market.n_items))


def check_efficiency(market: Market, trace: DynamicsTrace) -> bool:
    """The converged allocation maximizes true social welfare."""
    _require_converged(trace)
    if trace.policy is not Policy.ALIGNED:
        raise ContractError("efficiency is only claimed for the aligned policy")
    return social_welfare(market, trace.final_outcome.allocation) == efficient_welfare(market)
