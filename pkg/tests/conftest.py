from __future__ import annotations

from pathlib import Path

import pytest

from maxeq.scenario import Scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def load(name: str) -> Scenario:
    return parse_scenario((SCENARIOS / f"{name}.json").read_text())


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIOS
