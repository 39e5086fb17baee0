"""Maximum competitive equilibrium pricing in unit-demand assignment markets,
and best-response bidding dynamics under it.

All money is integer multiples of the grid step epsilon.
"""

from maxeq.dynamics import Policy, Termination, run_dynamics
from maxeq.equilibrium import compute_max_eq, compute_min_eq, max_eq_outcome
from maxeq.market import BidMatrix, Market, Outcome, bid_matrix, new_market, truthful_bids

__all__ = [
    "BidMatrix",
    "Market",
    "Outcome",
    "Policy",
    "Termination",
    "bid_matrix",
    "compute_max_eq",
    "compute_min_eq",
    "max_eq_outcome",
    "new_market",
    "run_dynamics",
    "truthful_bids",
]
