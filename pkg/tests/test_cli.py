import json
import subprocess
import sys

import pytest

from maxeq.cli import EXIT_CHECK_FAILED, EXIT_CYCLE, EXIT_INVALID, EXIT_OK, EXIT_STEP_LIMIT, run_command
from maxeq.scenario import parse_scenario


def solve(path):
    code, text = run_command(["solve", "--scenario", str(path), "--format", "jsonl"])
    assert code == EXIT_OK
    recs = [json.loads(x) for x in text.splitlines()]
    return tuple(r["min_price"] for r in recs), tuple(r["max_price"] for r in recs)


@pytest.mark.parametrize(
    "name, lo, hi",
    [
        ("single_item", (5,), (10,)),
        ("two_items", (6, 2), (8, 4)),
        ("shading", (10, 10), (12, 10)),
        ("chain4_small", (4, 4, 4, 4), (4, 4, 4, 4)),
    ],
)
def test_solve(scenario_dir, name, lo, hi):
    assert solve(scenario_dir / f"{name}.json") == (lo, hi)


def test_solve_non_monotone(scenario_dir):
    assert solve(scenario_dir / "non_monotone.json")[1] == (3, 5)
    assert solve(scenario_dir / "non_monotone_raised.json")[1] == (2, 5)


def test_solve_table(scenario_dir):
    code, text = run_command(["solve", "--scenario", str(scenario_dir / "two_items.json")])
    assert code == EXIT_OK
    assert text.splitlines()[0].split() == ["item", "min_price", "max_price", "buyer"]


def test_dynamics_exit_codes(scenario_dir):
    path = str(scenario_dir / "zero_fill_cycle.json")
    code, text = run_command(["dynamics", "--scenario", path, "--format", "csv"])
    assert code == EXIT_CYCLE and text.splitlines()[-1].endswith("cycle_detected")
    code, text = run_command(["dynamics", "--scenario", path, "--policy", "aligned", "--format", "csv"])
    assert code == EXIT_OK and text.splitlines()[-1].endswith("converged")
    code, _ = run_command(["dynamics", "--scenario", path, "--policy", "aligned", "--max-steps", "1"])
    assert code == EXIT_STEP_LIMIT


def test_dynamics_orderings(scenario_dir):
    path = str(scenario_dir / "two_items.json")
    for extra in (["--ordering", "2,0,1"], ["--ordering", "random", "--seed", "5"]):
        code, _ = run_command(["dynamics", "--scenario", path] + extra)
        assert code == EXIT_OK
    code, text = run_command(["dynamics", "--scenario", path, "--ordering", "0,x"])
    assert code == EXIT_INVALID and "ordering" in text


def test_shading_trace_record(scenario_dir):
    code, text = run_command(["dynamics", "--scenario", str(scenario_dir / "shading.json"), "--format", "jsonl"])
    first = json.loads(text.splitlines()[0])
    assert code == EXIT_OK
    assert first["mover"] == 0 and first["prices"][0] == 11 and first["utility"] == 9


def test_verify(scenario_dir, tmp_path):
    code, text = run_command(["verify", "--scenario", str(scenario_dir / "two_items.json")])
    assert code == EXIT_OK and "fail" not in text
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"epsilon": 1, "values": [[10, 6], [8, 4], [3, 2]],
                                "prices": [8, 4], "allocation": [0, 1, None]}))
    assert run_command(["verify", "--scenario", str(good)])[0] == EXIT_OK
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"epsilon": 1, "values": [[10, 6], [8, 4], [3, 2]],
                               "prices": [9, 4], "allocation": [0, 1, None]}))
    code, text = run_command(["verify", "--scenario", str(bad), "--format", "csv"])
    assert code == EXIT_CHECK_FAILED and "competitive_equilibrium,fail" in text
    half = tmp_path / "half.json"
    half.write_text(json.dumps({"epsilon": 1, "values": [[1]], "prices": [0]}))
    assert run_command(["verify", "--scenario", str(half)])[0] == EXIT_INVALID


def test_oracle(scenario_dir):
    code, text = run_command(["oracle", "--scenario", str(scenario_dir / "two_items.json"), "--format", "csv"])
    assert code == EXIT_OK
    assert text.splitlines()[1].startswith("min_prices,pass,6 2,6 2")
    code, text = run_command(["oracle", "--scenario", str(scenario_dir / "chain4_small.json")])
    assert code == EXIT_INVALID and "exceeds" in text


def test_gen_chain():
    code, text = run_command(["gen-chain", "--n", "4", "--variant", "small-prices"])
    assert code == EXIT_OK
    sc = parse_scenario(text)
    assert sc.values[0] == (4, 0, 0, 0) and len(sc.values) == 5 and sc.bids is None
    code, text = run_command(["gen-chain", "--n", "3", "--witness", "nash"])
    assert parse_scenario(text).bids[-1] == (0, 0, 1)
    code, text = run_command(["gen-chain", "--n", "3", "--variant", "large-prices", "--witness", "nash"])
    assert code == EXIT_INVALID
    assert run_command(["gen-chain", "--n", "0"])[0] == EXIT_INVALID


def test_out_flag(scenario_dir, tmp_path):
    out = tmp_path / "trace.csv"
    code, text = run_command(["dynamics", "--scenario", str(scenario_dir / "shading.json"),
                              "--format", "csv", "--out", str(out)])
    assert code == EXIT_OK and text == ""
    assert out.read_text().startswith("round,mover,bids,prices,allocation,utility,termination")


def test_global_flags_before_subcommand(scenario_dir):
    code, text = run_command(["--scenario", str(scenario_dir / "single_item.json"), "--format", "csv", "solve"])
    assert code == EXIT_OK and text.startswith("item,min_price")


def test_bad_inputs(tmp_path):
    assert run_command(["solve"])[0] == EXIT_INVALID
    assert run_command(["solve", "--scenario", str(tmp_path / "missing.json")])[0] == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text('{"epsilon": 1, "values": [[2.5]]}')
    code, text = run_command(["solve", "--scenario", str(bad)])
    assert code == EXIT_INVALID and "values[0][0]" in text


def test_module_entry_point(scenario_dir):
    proc = subprocess.run(
        [sys.executable, "-m", "maxeq", "dynamics", "--scenario", str(scenario_dir / "zero_fill_cycle.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_CYCLE
    assert "cycle_detected" in proc.stdout
