"""Command-line front end.

    maxeq solve     --scenario FILE
    maxeq dynamics  --scenario FILE [--policy P] [--ordering O] [--seed S] [--max-steps N]
    maxeq verify    --scenario FILE
    maxeq oracle    --scenario FILE
    maxeq gen-chain --n N --variant small-prices|large-prices [--witness nash|staircase]

Exit status: 0 success, 1 invalid input or contract failure, 2 a check
failed (verify, oracle), 3 dynamics hit a cycle, 4 dynamics hit the step
limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional, Sequence

from maxeq.dynamics import (
    Policy,
    Termination,
    check_efficiency,
    check_max_min_gap,
    check_nash_gap,
    check_reaches_min_eq,
    is_terminal,
    run_dynamics,
)
from maxeq.equilibrium import compute_max_eq, compute_min_eq, is_competitive_equilibrium, max_eq_outcome
from maxeq.market import ContractError, MarketError, Outcome, is_aligned
from maxeq.oracle import (
    BudgetExceeded,
    brute_best_response_utility,
    brute_equilibrium_prices,
    worst_utility,
)
from maxeq.scenario import (
    CHAIN_VARIANTS,
    Scenario,
    chain_nash_bids,
    chain_scenario,
    chain_staircase_bids,
    emit_scenario,
    emit_trace,
    natural,
    parse_scenario,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CHECK_FAILED = 2
EXIT_CYCLE = 3
EXIT_STEP_LIMIT = 4

FORMATS = ("table", "csv", "jsonl")


def _load(args: argparse.Namespace) -> Scenario:
    if not args.scenario:
        raise MarketError("--scenario is required")
    if args.scenario == "-":
        return parse_scenario(sys.stdin.read())
    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        raise MarketError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text)


def _vec(xs: Sequence[Any]) -> str:
    return " ".join("-" if x is None else str(x) for x in xs)


def _emit_rows(fmt: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Small tabular report in any of the three formats."""
    if fmt == "jsonl":
        return "".join(json.dumps(dict(zip(header, r))) + "\n" for r in rows)
    cells = [[_vec(c) if isinstance(c, list) else ("" if c is None else str(c)) for c in r] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(cells)
        return buf.getvalue()
    table = [list(header)] + cells
    widths = [max(len(r[c]) for r in table) for c in range(len(header))]
    return "".join("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip() + "\n" for r in table)


# ------------------------------------------------------------------ commands


def cmd_solve(args: argparse.Namespace) -> tuple[int, str]:
    sc = _load(args)
    bids = sc.initial_bids()
    lo = compute_min_eq(bids).prices
    hi = max_eq_outcome(bids)
    eps = sc.epsilon
    owners = hi.owners()
    rows = [
        [j, natural(lo[j], eps), natural(hi.prices[j], eps), owners[j] if owners[j] is not None and owners[j] < bids.n_real else None]
        for j in range(bids.n_items)
    ]
    return EXIT_OK, _emit_rows(args.format, ("item", "min_price", "max_price", "buyer"), rows)


def _with_overrides(sc: Scenario, args: argparse.Namespace) -> Scenario:
    changes: dict[str, Any] = {}
    if args.policy is not None:
        changes["policy"] = Policy(args.policy)
    if args.ordering is not None:
        if args.ordering in ("round_robin", "random", "seeded_random"):
            changes["ordering"] = args.ordering
        else:
            try:
                changes["ordering"] = tuple(int(x) for x in args.ordering.split(","))
            except ValueError:
                raise MarketError(f"bad ordering {args.ordering!r}") from None
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.max_steps is not None:
        if args.max_steps < 1:
            raise MarketError("max_steps must be at least 1")
        changes["max_steps"] = args.max_steps
    return replace(sc, **changes)


def _run(sc: Scenario):
    market = sc.market()
    return market, run_dynamics(
        market,
        sc.initial_bids(),
        policy=sc.policy,
        ordering=sc.ordering,
        max_steps=sc.max_steps,
        seed=sc.seed,
    )


def cmd_dynamics(args: argparse.Namespace) -> tuple[int, str]:
    sc = _with_overrides(_load(args), args)
    market, trace = _run(sc)
    text = emit_trace(market, trace, args.format, sc.epsilon)
    code = {
        Termination.CONVERGED: EXIT_OK,
        Termination.CYCLE_DETECTED: EXIT_CYCLE,
        Termination.STEP_LIMIT: EXIT_STEP_LIMIT,
    }[trace.termination]
    return code, text


def cmd_verify(args: argparse.Namespace) -> tuple[int, str]:
    """Checks that must hold print pass/fail; informational ones print yes/no."""
    sc = _load(args)
    market = sc.market()
    bids = sc.initial_bids()
    rows: list[list[Any]] = []
    failed = False

    if sc.prices is not None or sc.allocation is not None:
        if sc.prices is None or sc.allocation is None:
            raise MarketError("verify needs both prices and allocation, or neither")
        alloc = list(sc.allocation) + [None] * market.n_items
        outcome = Outcome(sc.prices, tuple(alloc))
        violations = is_competitive_equilibrium(bids, outcome)
        failed |= bool(violations)
        rows.append(["competitive_equilibrium", "fail" if violations else "pass", "; ".join(map(str, violations))])

    outcome = max_eq_outcome(bids)
    terminal = is_terminal(market, bids, sc.policy, outcome)
    rows.append(["terminal", "yes" if terminal else "no", sc.policy.value])
    gaps = [natural(g, sc.epsilon) for g in check_nash_gap(market, bids, outcome)]
    rows.append(["nash_gap", "yes" if not any(gaps) else "no", gaps])
    # prices are only claimed to pin down at a fixed point of the dynamics
    ok41 = check_max_min_gap(bids)
    if terminal:
        failed |= not ok41
        rows.append(["max_min_within_eps", "pass" if ok41 else "fail", ""])
    else:
        rows.append(["max_min_within_eps", "yes" if ok41 else "no", "not terminal"])

    _, trace = _run(sc)
    rows.append(["dynamics", trace.termination.value, f"{len(trace.steps)} changes"])
    if trace.converged:
        ok = check_max_min_gap(trace.final_bids)
        failed |= not ok
        rows.append(["final_max_min_within_eps", "pass" if ok else "fail", ""])
        if all(is_aligned(bids.rows[i], market.values[i]) for i in market.real_buyers):
            ok = check_reaches_min_eq(market, trace)
            failed |= not ok
            rows.append(["converges_to_min_eq", "pass" if ok else "fail", ""])
        else:
            rows.append(["converges_to_min_eq", "n/a", "start not aligned"])
        if trace.policy is Policy.ALIGNED:
            ok = check_efficiency(market, trace)
            failed |= not ok
            rows.append(["efficient", "pass" if ok else "fail", ""])
    return (EXIT_CHECK_FAILED if failed else EXIT_OK), _emit_rows(args.format, ("check", "result", "detail"), rows)


def cmd_oracle(args: argparse.Namespace) -> tuple[int, str]:
    sc = _load(args)
    market = sc.market()
    bids = sc.initial_bids()
    eps = sc.epsilon
    lo, hi = brute_equilibrium_prices(bids)
    lo_e, hi_e = compute_min_eq(bids), compute_max_eq(bids)
    rows: list[list[Any]] = []
    failed = False
    for name, brute, engine in (("min_prices", lo, lo_e), ("max_prices", hi, hi_e)):
        same = tuple(brute) == engine.prices
        ce = not is_competitive_equilibrium(bids, engine)
        failed |= not (same and ce)
        rows.append([name, "pass" if same and ce else "fail",
                     [natural(x, eps) for x in brute], [natural(x, eps) for x in engine.prices]])
    for i in market.real_buyers:
        now = worst_utility(market, bids, i, hi)
        best = brute_best_response_utility(market, bids, i)
        rows.append([f"buyer_{i}_best_response", "gain" if best > now else "none",
                     natural(best, eps), natural(now, eps)])
    return (EXIT_CHECK_FAILED if failed else EXIT_OK), _emit_rows(
        args.format, ("check", "result", "oracle", "engine"), rows
    )


def cmd_gen_chain(args: argparse.Namespace) -> tuple[int, str]:
    sc = chain_scenario(args.n, args.variant)
    if args.witness is not None:
        if args.variant != "small-prices":
            raise MarketError("witness bids exist only for the small-prices variant")
        bids = chain_nash_bids(args.n) if args.witness == "nash" else chain_staircase_bids(args.n)
        sc = replace(sc, bids=bids)
    return EXIT_OK, emit_scenario(sc)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default=argparse.SUPPRESS, help="scenario JSON file, or - for stdin")
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="maxeq", description="Max-eq mechanism solver and best-response dynamics.")
    p.add_argument("--scenario", default=None, help="scenario JSON file, or - for stdin")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="min-eq and max-eq prices").set_defaults(func=cmd_solve)

    d = sub.add_parser("dynamics", parents=[common], help="run best-response dynamics")
    d.add_argument("--policy", choices=[x.value for x in Policy])
    d.add_argument("--ordering", help="round_robin, random, or comma-separated buyer indices")
    d.add_argument("--seed", type=int)
    d.add_argument("--max-steps", type=int)
    d.set_defaults(func=cmd_dynamics)

    sub.add_parser("verify", parents=[common], help="check equilibrium and convergence claims").set_defaults(
        func=cmd_verify
    )
    sub.add_parser("oracle", parents=[common], help="diff the engine against brute force").set_defaults(
        func=cmd_oracle
    )

    g = sub.add_parser("gen-chain", parents=[common], help="emit a chain-market scenario")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--variant", choices=CHAIN_VARIANTS, default="small-prices")
    g.add_argument("--witness", choices=("nash", "staircase"), help="include low-price bids")
    g.set_defaults(func=cmd_gen_chain)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> tuple[int, str]:
    """Parse ``argv`` and run it; returns (exit status, output text).

    Diagnostics for invalid input are returned as the text with status 1.
    """
    args = build_parser().parse_args(argv)
    try:
        code, text = args.func(args)
    except (MarketError, ContractError, BudgetExceeded) as exc:
        return EXIT_INVALID, f"error: {exc}\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            return EXIT_INVALID, f"error: cannot write {args.out}: {exc}\n"
        return code, ""
    return code, text


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, text = run_command(argv)
    stream = sys.stderr if code == EXIT_INVALID else sys.stdout
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
