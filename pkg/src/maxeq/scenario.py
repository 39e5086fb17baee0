"""Scenario files, built-in market generators and trace emission.

Scenario files hold amounts in natural units next to an explicit
``epsilon``; everything is converted to integer epsilon-units on the way in
and back on the way out, through :class:`decimal.Decimal` so that no
binary rounding creeps in.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping, Optional, Union

from maxeq.dynamics import DynamicsTrace, Policy
from maxeq.market import (
    BidMatrix,
    Market,
    MarketError,
    Matrix,
    Money,
    bid_matrix,
    new_market,
    truthful_bids,
)

Ordering = Union[str, tuple[int, ...]]

ORDERINGS = ("round_robin", "random", "seeded_random")
CHAIN_VARIANTS = ("small-prices", "large-prices")
TRACE_FIELDS = ("round", "mover", "bids", "prices", "allocation", "utility", "termination")


@dataclass(frozen=True)
class Scenario:
    """A market plus everything needed to run or check it, in epsilon-units.

    ``prices`` and ``allocation`` are only used by ``verify``; the
    allocation lists real buyers only.
    """

    epsilon: Decimal
    values: Matrix
    bids: Optional[Matrix] = None
    policy: Policy = Policy.ALIGNED
    ordering: Ordering = "round_robin"
    seed: Optional[int] = None
    max_steps: Optional[int] = None
    prices: Optional[tuple[Money, ...]] = None
    allocation: Optional[tuple[Optional[int], ...]] = None
    n_items: Optional[int] = None

    def market(self) -> Market:
        return new_market(self.values, self.n_items)

    def initial_bids(self) -> BidMatrix:
        market = self.market()
        if self.bids is None:
            return truthful_bids(market)
        return bid_matrix(market, self.bids)


def _to_units(x: Any, eps: Decimal, where: str) -> Money:
    if isinstance(x, bool) or not isinstance(x, (int, Decimal, float, str)):
        raise MarketError(f"{where}: {x!r} is not a number")
    try:
        amount = Decimal(str(x))
    except InvalidOperation:
        raise MarketError(f"{where}: {x!r} is not a number") from None
    units = amount / eps
    if units != units.to_integral_value():
        raise MarketError(f"{where}: {x} is not a multiple of epsilon {eps}")
    return int(units)


def _matrix(raw: Any, eps: Decimal, name: str) -> Matrix:
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        raise MarketError(f"{name} must be an array of arrays")
    return tuple(
        tuple(_to_units(x, eps, f"{name}[{i}][{j}]") for j, x in enumerate(row))
        for i, row in enumerate(raw)
    )


def _int_field(doc: Mapping[str, Any], key: str) -> Optional[int]:
    x = doc.get(key)
    if x is None:
        return None
    if isinstance(x, bool) or not isinstance(x, int):
        raise MarketError(f"{key} must be an integer, got {x!r}")
    return x


def _ordering(raw: Any, n_real: int) -> Ordering:
    if isinstance(raw, str):
        if raw not in ORDERINGS:
            raise MarketError(f"unknown ordering {raw!r}")
        return raw
    if isinstance(raw, list) and all(isinstance(i, int) and not isinstance(i, bool) for i in raw):
        if set(raw) != set(range(n_real)):
            raise MarketError(f"ordering {raw} must list every buyer 0..{n_real - 1}")
        return tuple(raw)
    raise MarketError(f"ordering must be a name or an index array, got {raw!r}")


def parse_scenario(document: Union[str, bytes, Mapping[str, Any]]) -> Scenario:
    """Validate a scenario document (JSON text or an already-decoded object)."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document, parse_float=Decimal)
        except json.JSONDecodeError as exc:
            raise MarketError(f"malformed scenario JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise MarketError("scenario must be a JSON object")
    if "values" not in doc:
        raise MarketError("scenario has no 'values'")
    try:
        eps = Decimal(str(doc.get("epsilon", 1)))
    except InvalidOperation:
        raise MarketError(f"epsilon {doc.get('epsilon')!r} is not a number") from None
    if not eps.is_finite() or eps <= 0:
        raise MarketError(f"epsilon must be positive, got {doc.get('epsilon')!r}")

    values = _matrix(doc["values"], eps, "values")
    n_items = _int_field(doc, "n_items")
    market = new_market(values, n_items)  # shape and sign checks
    bids = None
    if doc.get("bids") is not None:
        bids = _matrix(doc["bids"], eps, "bids")
        if len(bids) != market.n_real:
            raise MarketError(f"bids has {len(bids)} rows, values has {market.n_real}")
        bid_matrix(market, bids)

    try:
        policy = Policy(doc.get("policy", "aligned"))
    except ValueError:
        raise MarketError(f"unknown policy {doc.get('policy')!r}") from None
    max_steps = _int_field(doc, "max_steps")
    if max_steps is not None and max_steps < 1:
        raise MarketError("max_steps must be at least 1")

    prices = None
    if doc.get("prices") is not None:
        raw = doc["prices"]
        if not isinstance(raw, list) or len(raw) != market.n_items:
            raise MarketError(f"prices must list {market.n_items} amounts")
        prices = tuple(_to_units(x, eps, f"prices[{j}]") for j, x in enumerate(raw))
    allocation = None
    if doc.get("allocation") is not None:
        raw = doc["allocation"]
        if not isinstance(raw, list) or len(raw) != market.n_real:
            raise MarketError(f"allocation must list {market.n_real} entries")
        for i, j in enumerate(raw):
            if j is not None and (isinstance(j, bool) or not isinstance(j, int) or not 0 <= j < market.n_items):
                raise MarketError(f"allocation[{i}]: bad item {j!r}")
        allocation = tuple(raw)

    return Scenario(
        epsilon=eps,
        values=values,
        bids=bids,
        policy=policy,
        ordering=_ordering(doc.get("ordering", "round_robin"), market.n_real),
        seed=_int_field(doc, "seed"),
        max_steps=max_steps,
        prices=prices,
        allocation=allocation,
        n_items=n_items if not values else None,
    )


def natural(x: Money, eps: Decimal) -> Union[int, float]:
    """An epsilon-unit amount as a JSON-friendly natural-unit number."""
    amount = Decimal(x) * eps
    if amount == amount.to_integral_value():
        return int(amount)
    return float(amount)


def _natural_rows(rows: Matrix, eps: Decimal) -> list[list[Union[int, float]]]:
    return [[natural(x, eps) for x in row] for row in rows]


def scenario_document(sc: Scenario) -> dict[str, Any]:
    eps = int(sc.epsilon) if sc.epsilon == sc.epsilon.to_integral_value() else float(sc.epsilon)
    doc: dict[str, Any] = {"epsilon": eps, "values": _natural_rows(sc.values, sc.epsilon)}
    if sc.n_items is not None:
        doc["n_items"] = sc.n_items
    if sc.bids is not None:
        doc["bids"] = _natural_rows(sc.bids, sc.epsilon)
    doc["policy"] = sc.policy.value
    doc["ordering"] = sc.ordering if isinstance(sc.ordering, str) else list(sc.ordering)
    if sc.seed is not None:
        doc["seed"] = sc.seed
    if sc.max_steps is not None:
        doc["max_steps"] = sc.max_steps
    if sc.prices is not None:
        doc["prices"] = [natural(p, sc.epsilon) for p in sc.prices]
    if sc.allocation is not None:
        doc["allocation"] = list(sc.allocation)
    return doc


def emit_scenario(sc: Scenario) -> str:
    """JSON text with one top-level key, or one matrix row, per line."""
    lines = []
    for key, val in scenario_document(sc).items():
        if key in ("values", "bids"):
            rows = ",\n    ".join(json.dumps(r) for r in val)
            lines.append(f'  "{key}": [\n    {rows}\n  ]')
        else:
            lines.append(f"  {json.dumps(key)}: {json.dumps(val)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


# ---------------------------------------------------------------- generators


def random_values(
    rng: random.Random, max_buyers: int = 4, max_items: int = 3, max_value: int = 8
) -> list[list[int]]:
    n = rng.randint(1, max_buyers)
    m = rng.randint(1, max_items)
    return [[rng.randint(0, max_value) for _ in range(m)] for _ in range(n)]


def random_market(
    rng: random.Random, max_buyers: int = 4, max_items: int = 3, max_value: int = 8
) -> Market:
    return new_market(random_values(rng, max_buyers, max_items, max_value))


def random_bids(rng: random.Random, market: Market) -> BidMatrix:
    """Arbitrary bids with 0 <= b <= v."""
    rows = [[rng.randint(0, v) for v in row] for row in market.real_values()]
    return bid_matrix(market, rows)


def aligned_bids(rng: random.Random, market: Market) -> BidMatrix:
    """Each buyer shades his whole value row by one random amount."""
    rows = []
    for row in market.real_values():
        shift = rng.randint(0, max(row, default=0))
        rows.append([max(0, v - shift) for v in row])
    return bid_matrix(market, rows)


def chain_values(n: int, variant: str = "small-prices") -> list[list[int]]:
    """Chain of n+1 buyers over n items, buyer k valuing items k-1 and k.

    All valued pairs are worth ``n``; in the large-prices variant the first
    buyer values his single item at 1 instead.
    """
    if n < 1:
        raise MarketError("chain length must be at least 1")
    if variant not in CHAIN_VARIANTS:
        raise MarketError(f"unknown chain variant {variant!r}")
    vals = [[0] * n for _ in range(n + 1)]
    vals[0][0] = n if variant == "small-prices" else 1
    for k in range(1, n):
        vals[k][k - 1] = vals[k][k] = n
    vals[n][n - 1] = n
    return vals


def chain_scenario(n: int, variant: str = "small-prices") -> Scenario:
    return Scenario(epsilon=Decimal(1), values=new_market(chain_values(n, variant)).real_values())


def chain_nash_bids(n: int) -> Matrix:
    """Small-prices chain bids that form a Nash equilibrium below p*.

    Every buyer bids n-1 on the items he values, except the last buyer,
    who bids n-2.  Buyer k wins item k at price n-1 and the last buyer
    loses; no unilateral deviation raises anybody's utility, yet every
    price sits one grid step under the truthful minimum of n.
    """
    if n < 2:
        raise MarketError("chain length must be at least 2")
    rows = [[0] * n for _ in range(n + 1)]
    rows[0][0] = n - 1
    for k in range(1, n):
        rows[k][k - 1] = rows[k][k] = n - 1
    rows[n][n - 1] = n - 2
    return tuple(tuple(r) for r in rows)


def chain_staircase_bids(n: int) -> Matrix:
    """Small-prices chain bids whose max-eq prices climb 1, 2, ..., n.

    Buyer k < n bids k+1 on item k and k on item k-1; the last buyer bids
    n-1.  Buyer k wins item k and the last buyer loses.  The first item
    sells for a single grid step, but a winner can still gain one step by
    deviating, so this is only a Nash equilibrium up to epsilon.
    """
    if n < 2:
        raise MarketError("chain length must be at least 2")
    rows = [[0] * n for _ in range(n + 1)]
    for k in range(n):
        rows[k][k] = k + 1
        if k:
            rows[k][k - 1] = k
    rows[n][n - 1] = n - 1
    return tuple(tuple(r) for r in rows)


# ---------------------------------------------------------------- traces


def _fmt(x: Union[int, float]) -> str:
    return str(x)


def _records(market: Market, trace: DynamicsTrace, eps: Decimal) -> list[dict[str, Any]]:
    out = []
    n = market.n_real
    for st in trace.steps:
        alloc = st.outcome.allocation[:n]
        out.append(
            {
                "round": st.round,
                "mover": st.mover,
                "bids": [natural(b, eps) for b in st.new_row],
                "prices": [natural(p, eps) for p in st.outcome.prices],
                "allocation": list(alloc),
                "utility": natural(st.utility, eps),
                "termination": None,
            }
        )
    final = trace.final_outcome
    out.append(
        {
            "round": trace.rounds,
            "mover": None,
            "bids": None,
            "prices": [natural(p, eps) for p in final.prices],
            "allocation": list(final.allocation[:n]),
            "utility": None,
            "termination": trace.termination.value,
        }
    )
    return out


def _cell(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, list):
        return " ".join("-" if v is None else _fmt(v) for v in x)
    return _fmt(x)


def emit_trace(
    market: Market, trace: DynamicsTrace, fmt: str = "table", epsilon: Decimal = Decimal(1)
) -> str:
    """Render a trace as ``table``, ``csv`` or ``jsonl`` text in natural units.

    One record per bid change, then a record carrying the termination
    reason with the final prices and allocation.  In csv and table cells
    vectors are space separated and ``-`` marks an unallocated buyer.
    """
    records = _records(market, trace, epsilon)
    if fmt == "jsonl":
        return "".join(json.dumps(r) + "\n" for r in records)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for r in records:
            w.writerow([_cell(r[k]) for k in TRACE_FIELDS])
        return buf.getvalue()
    if fmt == "table":
        cells = [list(TRACE_FIELDS)] + [[_cell(r[k]) for k in TRACE_FIELDS] for r in records]
        widths = [max(len(row[c]) for row in cells) for c in range(len(TRACE_FIELDS))]
        lines = ["  ".join(s.ljust(w) for s, w in zip(row, widths)).rstrip() for row in cells]
        return "\n".join(lines) + "\n"
    raise MarketError(f"unknown trace format {fmt!r}")
