import pytest

from maxeq.market import bid_matrix, new_market, truthful_bids
from maxeq.oracle import (
    BudgetExceeded,
    OracleBudget,
    brute_best_response_utility,
    brute_equilibrium_prices,
    brute_max_weight_matching,
    enumerate_supported_allocations,
    qualifies,
    worst_utility,
)


def test_single_item_interval():
    bids = truthful_bids(new_market([[10], [5], [2]]))
    assert brute_equilibrium_prices(bids) == ((5,), (10,))
    assert qualifies(bids, (7,))
    assert not qualifies(bids, (4,))
    assert not qualifies(bids, (11,))


def test_two_item_interval():
    bids = truthful_bids(new_market([[10, 6], [8, 4], [3, 2]]))
    lo, hi = brute_equilibrium_prices(bids)
    assert (lo, hi) == ((6, 2), (8, 4))
    assert qualifies(bids, lo) and qualifies(bids, hi)


def test_no_bids_means_free_items():
    bids = truthful_bids(new_market([[0, 0], [0, 0]]))
    assert brute_equilibrium_prices(bids) == ((0, 0), (0, 0))


def test_supported_allocations_at_a_tie():
    bids = truthful_bids(new_market([[5], [5]]))
    allocs = enumerate_supported_allocations(bids, (5,))
    assert {a[:2] for a in allocs} == {(0, None), (None, 0)}
    assert enumerate_supported_allocations(bids, (4,)) == []


def test_budget_is_enforced():
    bids = truthful_bids(new_market([[1] * 4]))
    with pytest.raises(BudgetExceeded):
        brute_equilibrium_prices(bids)
    tight = OracleBudget(max_states=10)
    with pytest.raises(BudgetExceeded):
        brute_equilibrium_prices(truthful_bids(new_market([[9, 9], [9, 9]])), tight)


def test_brute_matching():
    alloc, w = brute_max_weight_matching([[10, 6], [8, 4], [3, 2]])
    assert w == 14 and alloc in ((0, 1, None), (1, 0, None))
    assert brute_max_weight_matching([[0]]) == ((None,), 0)


def test_worst_utility_takes_the_bad_allocation():
    mk = new_market([[20, 18], [10, 10], [10, 10]])
    bids = bid_matrix(mk, [[15, 15], [10, 10], [10, 10]])
    assert worst_utility(mk, bids, 0, (10, 10)) == 8


def test_best_response_single_item():
    mk = new_market([[10], [5]])
    # shading to 6 wins at 6; a tie at 5 may go either way
    assert brute_best_response_utility(mk, truthful_bids(mk), 0) == 4
    assert brute_best_response_utility(mk, truthful_bids(mk), 1) == 0


def test_best_response_shading_example():
    mk = new_market([[20, 18], [10, 10], [10, 10]])
    assert brute_best_response_utility(mk, truthful_bids(mk), 0) == 9
