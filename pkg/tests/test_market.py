import pytest

from maxeq.market import (
    MarketError,
    Outcome,
    bid_matrix,
    is_aligned,
    new_market,
    social_welfare,
    truthful_bids,
    utility,
)


def test_dummies_are_appended():
    mk = new_market([[10, 6], [8, 4], [3, 2]])
    assert mk.n_real == 3 and mk.n_items == 2 and mk.n_buyers == 5
    assert mk.values[3:] == ((0, 0), (0, 0))
    assert mk.is_dummy(3) and not mk.is_dummy(2)
    assert mk.max_value == 10
    assert mk.real_values() == ((10, 6), (8, 4), (3, 2))


def test_market_without_buyers_needs_item_count():
    mk = new_market([], n_items=2)
    assert mk.n_real == 0 and mk.n_buyers == 2


@pytest.mark.parametrize(
    "values",
    [[[1, -1]], [[1, 2], [3]], [[1.5]], [[True]]],
)
def test_bad_values_rejected(values):
    with pytest.raises(MarketError):
        new_market(values)


def test_bid_matrix_fills_dummy_rows():
    mk = new_market([[5, 3], [4, 4]])
    b = bid_matrix(mk, [[2, 3], [0, 1]])
    assert b.rows == ((2, 3), (0, 1), (0, 0), (0, 0))
    assert b.n_items == 2 and b.max_bid() == 3


def test_bid_matrix_accepts_full_rows():
    mk = new_market([[5]])
    assert bid_matrix(mk, [[4], [0]]).rows == ((4,), (0,))


@pytest.mark.parametrize(
    "rows, msg",
    [([[6, 0], [0, 0]], "above value"), ([[-1, 0], [0, 0]], "negative"), ([[1]], "expected")],
)
def test_bid_matrix_validation(rows, msg):
    mk = new_market([[5, 3], [4, 4]])
    with pytest.raises(MarketError, match=msg):
        bid_matrix(mk, rows)


def test_dummy_bids_must_be_zero():
    mk = new_market([[5]])
    with pytest.raises(MarketError):
        bid_matrix(mk, [[1], [1]])


def test_with_row_and_without():
    mk = new_market([[5, 3], [4, 4]])
    b = truthful_bids(mk)
    assert b.with_row(0, (1, 1)).rows[0] == (1, 1)
    assert b.without(1).rows[1] == (0, 0)
    assert b.rows[1] == (4, 4)


def test_outcome_rejects_double_assignment():
    with pytest.raises(MarketError):
        Outcome((1, 1), (0, 0, None))
    with pytest.raises(MarketError):
        Outcome((-1,), (0,))
    assert Outcome((3, 0), (1, None, 0)).owners() == [2, 0]


def test_utility_and_welfare_use_true_values():
    mk = new_market([[10, 6], [8, 4]])
    out = Outcome((7, 2), (1, 0, None, None))
    assert utility(mk, out, 0) == 4
    assert utility(mk, out, 1) == 1
    assert utility(mk, out, 2) == 0
    assert social_welfare(mk, out.allocation) == 14
    with pytest.raises(IndexError):
        utility(mk, out, 9)
    with pytest.raises(MarketError):
        social_welfare(mk, (0, 0))


@pytest.mark.parametrize(
    "bids, values, expected",
    [
        ((5, 3), (7, 5), True),
        ((0, 0), (7, 5), True),
        ((5, 0), (7, 2), True),
        ((5, 0), (7, 3), False),
        ((5, 4), (7, 5), False),
        ((7, 5), (7, 5), True),
    ],
)
def test_is_aligned(bids, values, expected):
    assert is_aligned(bids, values) is expected
