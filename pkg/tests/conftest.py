import random
from pathlib import Path

import pytest

from chartpot import charts

DATA = Path(__file__).parent / "data"

_acceptance_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    try:
        from test_acceptance import CRITERION_TITLES
    except ImportError:
        CRITERION_TITLES = {}
    terminalreporter.section("acceptance criteria")
    for name, passed in _acceptance_results:
        title = CRITERION_TITLES.get(name, name)
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def example_table_text() -> str:
    return (DATA / "worked_example_table.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def example_table(example_table_text) -> charts.ChartTable:
    return charts.parse_table(example_table_text)


@pytest.fixture(scope="session")
def example_program() -> str:
    return (DATA / "worked_example_program.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def golden_prompt() -> str:
    return (DATA / "prompt_golden.txt").read_text(encoding="utf-8")


def make_random_table(rng: random.Random, min_rows: int = 2, max_rows: int = 8,
                      n_value_cols: int | None = None) -> charts.ChartTable:
    """A synthetic all-numeric chart table with distinct labels."""
    n_rows = rng.randint(min_rows, max_rows)
    n_cols = n_value_cols if n_value_cols is not None else rng.randint(1, 3)
    colors = ["steelblue", "sienna", "tomato", "slategray", None]
    headers = ["Category"] + [f"Metric {c + 1}" for c in range(n_cols)]
    rows = []
    for r in range(n_rows):
        values = tuple(round(rng.uniform(-50, 150), rng.choice([0, 1, 2])) for _ in range(n_cols))
        rows.append(charts.Row(label=f"Item {r}", color=rng.choice(colors), values=values))
    return charts.ChartTable(
        title=f"Synthetic chart {rng.randint(0, 999)}",
        chart_type=rng.choice(["Bar chart", "Line chart", "Horizontal bar chart"]),
        column_headers=tuple(headers),
        rows=tuple(rows),
    )
