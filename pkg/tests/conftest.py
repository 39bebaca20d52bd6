from datetime import date, timedelta
from pathlib import Path

import pytest

from stocklot.ledger import Direction, Movement, MovementLedger, Period, read_ledger

FIXTURES = Path(__file__).parent / "fixtures"


def make_ledger(rows, period=None):
    """rows: (item, date, signed qty) triples."""
    moves = [
        Movement(item, Direction.ENTRY if qty > 0 else Direction.EXIT, day, qty)
        for item, day, qty in rows
    ]
    return MovementLedger.from_movements(moves, period)


def daily(start, n):
    return [start + timedelta(days=k) for k in range(n)]


@pytest.fixture
def ledger_2011_text():
    return (FIXTURES / "movements_2011.csv").read_text()


@pytest.fixture
def ledger_2011(ledger_2011_text):
    from stocklot.ledger import parse_ledger

    return parse_ledger(ledger_2011_text)


@pytest.fixture(scope="session")
def beta_ledger():
    return read_ledger(FIXTURES / "item_beta_2016.csv")


def abc_items():
    """50 items shaped like the worked ABC table: total value 4,000,000."""
    items = [("Item 1", 12000, 10.0), ("Item 2", 6667, 15.0), ("Item 3", 10000, 9.0)]
    values = [89000 - 320 * j for j in range(45)]
    values[-1] -= 205
    items += [(f"Item {k + 4}", v, 1.0) for k, v in enumerate(values)]
    items += [("Item 49", 1200, 1.0), ("Item 50", 800, 1.0)]
    return items


@pytest.fixture
def abc_sample():
    return abc_items()


def jit_ledger(year=2016):
    rows = []
    for week in range(50):
        day = date(year, 1, 4) + timedelta(weeks=week)
        rows.append(("item J", day, 100))
        rows.append(("item J", day + timedelta(days=1), -100))
    return make_ledger(rows, Period.year(year))


def sawtooth_ledger(year=2016, lot=1600, rate=70):
    rows = [("item S", date(year, 1, 1), lot)]
    level = lot
    for day in Period.year(year).dates():
        rows.append(("item S", day, -rate))
        level -= rate
        if level < rate:
            rows.append(("item S", day, lot))
            level += lot
    return make_ledger(rows, Period.year(year))


def pathological_ledger(year=2016):
    rows = [("item P", date(year, 1, 1), 10000)]
    for month in range(1, 13):
        rows.append(("item P", date(year, month, 15), 500))
    for day in Period.year(year).dates():
        rows.append(("item P", day, -20))
    return make_ledger(rows, Period.year(year))


# acceptance reporting: one line per criterion, plus the whole-suite time budget
ACCEPTANCE: list[tuple[str, bool, str]] = []
SUITE_BUDGET_S = 10.0
_session_start = [0.0]


def pytest_sessionstart(session):
    import time

    _session_start[0] = time.perf_counter()


def _elapsed():
    import time

    return time.perf_counter() - _session_start[0]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    elapsed = _elapsed()
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[1].rstrip(":"))):
        if name.startswith("criterion 8:"):
            ok = ok and elapsed < SUITE_BUDGET_S
            detail = f"{detail}; suite runtime {elapsed:.2f}s (budget {SUITE_BUDGET_S:.0f}s)"
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name} {detail}")


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE and _elapsed() >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
