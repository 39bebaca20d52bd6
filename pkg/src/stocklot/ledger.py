"""Stock-movement ledgers and per-item stock timelines.

A ledger is a delimiter-separated file with one movement per row::

    Nome;Movimento;Data;Qtd.;Saldo KG
    item A;E;10/01/2011;200;22,8
    item A;S;24/09/2011;-300;-34,2

Levels are end-of-day values: the level on day ``d`` includes every movement
dated ``d`` or earlier. Areas and averages are taken over whole days.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Iterable

logger = logging.getLogger(__name__)


class LedgerError(Exception):
    """Base class for ledger problems."""


class EmptyLedgerError(LedgerError):
    pass


class LedgerParseError(LedgerError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ItemNotFoundError(LedgerError, KeyError):
    def __str__(self) -> str:
        return f"unknown item: {self.args[0]!r}"


class DegeneratePeriodError(LedgerError, ValueError):
    pass


class Direction(enum.Enum):
    ENTRY = "E"
    EXIT = "S"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.ENTRY else -1


class UnitBasis(enum.Enum):
    UNITS = "units"
    KG = "kg"


@dataclass(frozen=True)
class Period:
    """Inclusive date range."""

    start: date
    end: date

    @classmethod
    def year(cls, year: int) -> "Period":
        return cls(date(year, 1, 1), date(year, 12, 31))

    @property
    def days(self) -> int:
        return (self.end - self.start).days + 1

    def __contains__(self, day: date) -> bool:
        return self.start <= day <= self.end

    def dates(self) -> Iterable[date]:
        for offset in range(self.days):
            yield self.start + timedelta(days=offset)


@dataclass(frozen=True)
class Movement:
    item_id: str
    direction: Direction
    date: date
    qty_units: int
    qty_kg: float | None = None

    def __post_init__(self) -> None:
        if self.qty_units == 0:
            raise ValueError("movement quantity must be nonzero")
        if (self.qty_units > 0) != (self.direction is Direction.ENTRY):
            raise ValueError(
                f"{self.direction.name} movement with quantity {self.qty_units}"
            )
        if self.qty_kg is not None and self.qty_kg != 0:
            if (self.qty_kg > 0) != (self.qty_units > 0):
                raise ValueError("kg quantity sign disagrees with unit quantity")

    def quantity(self, basis: UnitBasis = UnitBasis.UNITS) -> float:
        if basis is UnitBasis.UNITS:
            return self.qty_units
        if self.qty_kg is None:
            raise LedgerError(f"movement of {self.item_id} on {self.date} has no kg quantity")
        return self.qty_kg


@dataclass(frozen=True)
class MovementLedger:
    movements: tuple[Movement, ...]
    period: Period
    warnings: tuple[str, ...] = ()

    @classmethod
    def from_movements(
        cls,
        movements: Iterable[Movement],
        period: Period | None = None,
        warnings: Iterable[str] = (),
    ) -> "MovementLedger":
        # sorted() is stable, so same-key rows keep input order
        ordered = tuple(sorted(movements, key=lambda m: (m.item_id, m.date)))
        if period is None:
            if not ordered:
                raise EmptyLedgerError("cannot infer the period of an empty ledger")
            period = Period(min(m.date for m in ordered), max(m.date for m in ordered))
        outside = [m for m in ordered if m.date not in period]
        if outside:
            raise LedgerError(f"{len(outside)} movements fall outside {period}")
        return cls(ordered, period, tuple(warnings))

    @property
    def item_ids(self) -> list[str]:
        return sorted({m.item_id for m in self.movements})

    def resolve_item(self, item_id: str) -> str:
        """Return the ledger's spelling of ``item_id`` (case-insensitive)."""
        wanted = _item_key(item_id)
        for known in self.item_ids:
            if _item_key(known) == wanted:
                return known
        raise ItemNotFoundError(item_id)

    def for_item(self, item_id: str) -> list[Movement]:
        key = _item_key(item_id)
        return [m for m in self.movements if _item_key(m.item_id) == key]


@dataclass(frozen=True)
class FormatConfig:
    delimiter: str = ";"
    date_format: str = "%d/%m/%Y"
    decimal_separator: str = ","
    has_header: bool | None = None  # None: detect
    casefold_items: bool = True


def _item_key(name: str) -> str:
    return " ".join(name.split()).casefold()


def _parse_number(raw: str, config: FormatConfig) -> float:
    text = raw.strip()
    if config.decimal_separator != "." and config.decimal_separator in text:
        text = text.replace(".", "").replace(config.decimal_separator, ".")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {raw!r}")
    return value


def _format_number(value: float, config: FormatConfig) -> str:
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    return text.replace(".", config.decimal_separator)


def _looks_like_header(row: list[str], config: FormatConfig) -> bool:
    if len(row) < 3 or row[1].strip().upper() in {d.value for d in Direction}:
        return False
    try:
        datetime.strptime(row[2].strip(), config.date_format)
    except ValueError:
        return True
    return False


def parse_ledger(text: str, config: FormatConfig | None = None) -> MovementLedger:
    """Parse ledger text into a sorted :class:`MovementLedger`.

    Rows whose quantity sign disagrees with the movement code are repaired to
    match the code and reported in ``ledger.warnings``.
    """
    config = config or FormatConfig()
    if not text.strip():
        raise EmptyLedgerError("empty ledger")

    rows = list(csv.reader(io.StringIO(text), delimiter=config.delimiter))
    numbered = [(n, row) for n, row in enumerate(rows, start=1) if any(c.strip() for c in row)]
    if not numbered:
        raise EmptyLedgerError("empty ledger")
    header = config.has_header
    if header is None:
        header = _looks_like_header(numbered[0][1], config)
    if header:
        numbered = numbered[1:]
    if not numbered:
        raise EmptyLedgerError("ledger has a header but no movements")

    spellings: dict[str, str] = {}
    movements: list[Movement] = []
    warnings: list[str] = []
    for line, row in numbered:
        if len(row) < 4:
            raise LedgerParseError(line, f"expected at least 4 columns, got {len(row)}")
        name, code, raw_date, raw_units = (c.strip() for c in row[:4])
        raw_kg = row[4].strip() if len(row) > 4 else ""
        if not name:
            raise LedgerParseError(line, "missing item name")
        try:
            direction = Direction(code.upper())
        except ValueError:
            raise LedgerParseError(line, f"unknown movement code {code!r}") from None
        try:
            day = datetime.strptime(raw_date, config.date_format).date()
        except ValueError:
            raise LedgerParseError(line, f"malformed date {raw_date!r}") from None
        try:
            units = _parse_number(raw_units, config)
        except ValueError:
            raise LedgerParseError(line, f"non-numeric quantity {raw_units!r}") from None
        if units != int(units):
            raise LedgerParseError(line, f"unit quantity {raw_units!r} is not whole")
        if units == 0:
            raise LedgerParseError(line, "zero quantity")
        kg = None
        if raw_kg:
            try:
                kg = _parse_number(raw_kg, config)
            except ValueError:
                raise LedgerParseError(line, f"non-numeric kg quantity {raw_kg!r}") from None

        units = int(units)
        if (units > 0) != (direction is Direction.ENTRY):
            warnings.append(
                f"line {line}: {direction.name} row with quantity {units}; sign repaired"
            )
            units = -units
        if kg is not None and kg != 0 and (kg > 0) != (units > 0):
            kg = -kg

        if config.casefold_items:
            name = spellings.setdefault(_item_key(name), " ".join(name.split()))
        movements.append(Movement(name, direction, day, units, kg))

    for message in warnings:
        logger.warning(message)
    return MovementLedger.from_movements(movements, warnings=warnings)


def serialize_ledger(
    ledger: MovementLedger, config: FormatConfig | None = None, header: bool = True
) -> str:
    """Write ``ledger`` back in the input format (normalized order)."""
    config = config or FormatConfig()
    out = io.StringIO()
    writer = csv.writer(out, delimiter=config.delimiter, lineterminator="\n")
    if header:
        writer.writerow(["Nome", "Movimento", "Data", "Qtd.", "Saldo KG"])
    for m in ledger.movements:
        writer.writerow(
            [
                m.item_id,
                m.direction.value,
                m.date.strftime(config.date_format),
                str(m.qty_units),
                "" if m.qty_kg is None else _format_number(m.qty_kg, config),
            ]
        )
    return out.getvalue()


def read_ledger(path, config: FormatConfig | None = None) -> MovementLedger:
    with open(path, encoding="utf-8-sig") as fh:
        return parse_ledger(fh.read(), config)


@dataclass(frozen=True)
class StockTimeline:
    """Right-continuous step function of the on-hand level.

    ``points[0]`` is the level at ``period.start``; each later point marks a
    day on which the end-of-day level changed.
    """

    item_id: str
    points: tuple[tuple[date, float], ...]
    period: Period
    unit_basis: UnitBasis = UnitBasis.UNITS
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def has_negative_levels(self) -> bool:
        return any(level < 0 for _, level in self.points)

    def level_at(self, day: date) -> float:
        if day < self.period.start:
            raise ValueError(f"{day} precedes the timeline period")
        level = self.points[0][1]
        for when, value in self.points:
            if when > day:
                break
            level = value
        return level

    def segments(self) -> Iterable[tuple[date, int, float]]:
        """Yield ``(start, n_days, level)`` for each constant stretch."""
        bounds = [when for when, _ in self.points] + [self.period.end + timedelta(days=1)]
        for (when, level), nxt in zip(self.points, bounds[1:]):
            yield when, (nxt - when).days, level

    def daily_levels(self) -> list[float]:
        levels: list[float] = []
        for _, n_days, level in self.segments():
            levels.extend([level] * n_days)
        return levels


def stock_timeline(
    ledger: MovementLedger,
    item_id: str,
    period: Period | None = None,
    initial_level: float = 0,
    unit_basis: UnitBasis = UnitBasis.UNITS,
) -> StockTimeline:
    """Reconstruct the end-of-day stock level of one item over ``period``.

    ``initial_level`` is the balance before the first ledger movement;
    movements dated before ``period.start`` are folded into the opening level.
    Negative levels are kept and flagged.
    """
    period = period or ledger.period
    if period.days <= 0:
        raise DegeneratePeriodError(f"empty period {period}")
    item = ledger.resolve_item(item_id)
    moves = ledger.for_item(item)

    level = float(initial_level)
    daily: dict[date, float] = {}
    for m in moves:
        if m.date > period.end:
            break
        qty = m.quantity(unit_basis)
        if m.date < period.start:
            level += qty
        else:
            daily[m.date] = daily.get(m.date, 0.0) + qty

    points = [(period.start, level + daily.pop(period.start, 0.0))]
    for day in sorted(daily):
        new_level = points[-1][1] + daily[day]
        if new_level != points[-1][1]:
            points.append((day, new_level))

    warnings = []
    negative = [(d, v) for d, v in points if v < 0]
    if negative:
        d, v = negative[0]
        message = f"{item}: stock level goes negative ({v:g} on {d.isoformat()})"
        warnings.append(message)
        logger.warning(message)
    return StockTimeline(item, tuple(points), period, unit_basis, tuple(warnings))


def integrated_stock_area(timeline: StockTimeline) -> float:
    """Exact area under the step function, in unit-days."""
    if timeline.period.days <= 0:
        raise DegeneratePeriodError("zero-length period")
    if timeline.has_negative_levels:
        logger.warning("%s: negative stock segments reduce the area", timeline.item_id)
    return sum(level * n_days for _, n_days, level in timeline.segments())


def average_inventory(timeline: StockTimeline) -> float:
    """Time-weighted mean level over the timeline period."""
    days = timeline.period.days
    if days <= 0:
        raise DegeneratePeriodError("zero-length period")
    return integrated_stock_area(timeline) / days


def order_count(ledger: MovementLedger, item_id: str, period: Period | None = None) -> int:
    """Number of entry rows (replenishment orders) for the item in ``period``."""
    period = period or ledger.period
    return sum(
        1
        for m in ledger.for_item(item_id)
        if m.direction is Direction.ENTRY and m.date in period
    )


def ledger_to_json(ledger: MovementLedger) -> str:
    payload = {
        "period": {"start": ledger.period.start.isoformat(), "end": ledger.period.end.isoformat()},
        "movements": [
            {
                "item_id": m.item_id,
                "direction": m.direction.name.lower(),
                "date": m.date.isoformat(),
                "qty_units": m.qty_units,
                "qty_kg": m.qty_kg,
            }
            for m in ledger.movements
        ],
        "warnings": list(ledger.warnings),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def ledger_to_csv(ledger: MovementLedger) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["item_id", "direction", "date", "qty_units", "qty_kg"])
    for m in ledger.movements:
        writer.writerow(
            [m.item_id, m.direction.name.lower(), m.date.isoformat(), m.qty_units,
             "" if m.qty_kg is None else repr(m.qty_kg)]
        )
    return out.getvalue()


def timeline_to_csv(timeline: StockTimeline) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", "level"])
    for when, level in timeline.points:
        writer.writerow([when.isoformat(), repr(float(level))])
    return out.getvalue()


def timeline_to_json(timeline: StockTimeline) -> str:
    payload = {
        "item_id": timeline.item_id,
        "unit_basis": timeline.unit_basis.value,
        "period": {"start": timeline.period.start.isoformat(), "end": timeline.period.end.isoformat()},
        "points": [[when.isoformat(), float(level)] for when, level in timeline.points],
        "warnings": list(timeline.warnings),
    }
    return json.dumps(payload, indent=2, sort_keys=True)
