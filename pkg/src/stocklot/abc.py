"""ABC classification of items by annual monetary value.

Items are ranked by ``annual_demand * unit_price`` (descending, ties by item
id) and banded by cumulative share of the total value.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .ledger import Direction, MovementLedger, Period

# guards the band tests against round-off in running sums
_CUT_TOL = 1e-12


class AbcError(ValueError):
    pass


class EmptyRankingError(AbcError):
    pass


class ClassBand(enum.Enum):
    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class ItemValue:
    item_id: str
    annual_demand: float
    unit_price: float

    def __post_init__(self) -> None:
        if self.annual_demand < 0 or self.unit_price < 0:
            raise AbcError(f"{self.item_id}: demand and price must be nonnegative")

    @property
    def monetary_value(self) -> float:
        return self.annual_demand * self.unit_price


@dataclass(frozen=True)
class AbcEntry:
    item: ItemValue
    relative_pct: float
    cumulative_pct: float
    class_band: ClassBand | None = None

    @property
    def item_id(self) -> str:
        return self.item.item_id


@dataclass(frozen=True)
class AbcThresholds:
    a_cut: float = 0.80
    b_cut: float = 0.95

    def __post_init__(self) -> None:
        if not 0 < self.a_cut < self.b_cut <= 1:
            raise AbcError(f"need 0 < a_cut < b_cut <= 1, got {self.a_cut}, {self.b_cut}")

    @classmethod
    def parse(cls, text: str) -> "AbcThresholds":
        """Parse ``"0.8,0.95"`` or ``"80,95"`` (percent) into thresholds."""
        parts = [float(p) for p in text.replace(";", ",").split(",")]
        if len(parts) != 2:
            raise AbcError(f"expected two cut points, got {text!r}")
        if max(parts) > 1:
            parts = [p / 100 for p in parts]
        return cls(*parts)


@dataclass(frozen=True)
class AbcReport:
    entries: tuple[AbcEntry, ...]
    thresholds: AbcThresholds

    @property
    def total_value(self) -> float:
        return math.fsum(e.item.monetary_value for e in self.entries)

    def band_of(self, item_id: str) -> ClassBand:
        for entry in self.entries:
            if entry.item_id == item_id:
                return entry.class_band
        raise KeyError(item_id)

    def items_in(self, band: ClassBand) -> list[str]:
        return [e.item_id for e in self.entries if e.class_band is band]


def monetary_ranking(items: Iterable[tuple[str, float, float] | ItemValue]) -> list[AbcEntry]:
    """Rank items by monetary value and fill in relative/cumulative shares."""
    values = [i if isinstance(i, ItemValue) else ItemValue(*i) for i in items]
    total = math.fsum(v.monetary_value for v in values)
    if not values or total <= 0:
        raise EmptyRankingError("no item has a positive monetary value")

    values.sort(key=lambda v: (-v.monetary_value, v.item_id))
    entries = []
    running = 0.0
    for v in values:
        running += v.monetary_value
        entries.append(AbcEntry(v, v.monetary_value / total, min(running / total, 1.0)))
    return entries


def classify_abc(
    ranking: Iterable[AbcEntry], thresholds: AbcThresholds | None = None
) -> AbcReport:
    """Band a ranking into A/B/C.

    An item belongs to A when the share accumulated *before* it is still
    below ``a_cut``, so the item that crosses the cut stays in A (and the
    item that crosses ``b_cut`` stays in B). Zero-value items are always C.
    """
    thresholds = thresholds or AbcThresholds()
    ranking = list(ranking)
    for prev, cur in zip(ranking, ranking[1:]):
        if cur.item.monetary_value > prev.item.monetary_value or (
            cur.cumulative_pct < prev.cumulative_pct
        ):
            raise AbcError("ranking is not sorted by descending monetary value")

    entries = []
    before = 0.0
    for entry in ranking:
        if entry.item.monetary_value <= 0:
            band = ClassBand.C
        elif before < thresholds.a_cut - _CUT_TOL or not entries:
            band = ClassBand.A
        elif before < thresholds.b_cut - _CUT_TOL:
            band = ClassBand.B
        else:
            band = ClassBand.C
        entries.append(AbcEntry(entry.item, entry.relative_pct, entry.cumulative_pct, band))
        before = entry.cumulative_pct
    return AbcReport(tuple(entries), thresholds)


def abc_curve_points(ranking: Iterable[AbcEntry]) -> list[tuple[float, float]]:
    """Polyline of (share of items, cumulative share of value) from (0, 0) to (1, 1)."""
    ranking = list(ranking)
    n = len(ranking)
    points = [(0.0, 0.0)]
    points.extend(((k + 1) / n, e.cumulative_pct) for k, e in enumerate(ranking))
    if points[-1][1] != 1.0:
        # absorb round-off so the curve closes exactly
        points[-1] = (1.0, 1.0)
    return points


def annual_demand_by_item(ledger: MovementLedger, period: Period) -> dict[str, float]:
    """Total exit quantity per item within ``period``."""
    demand: dict[str, float] = {item: 0.0 for item in ledger.item_ids}
    for m in ledger.movements:
        if m.direction is Direction.EXIT and m.date in period:
            demand[m.item_id] += -m.qty_units
    return demand


def abc_from_ledger(
    ledger: MovementLedger,
    period: Period,
    prices: Mapping[str, float],
    thresholds: AbcThresholds | None = None,
) -> AbcReport:
    demand = annual_demand_by_item(ledger, period)
    lookup = {k.casefold(): v for k, v in prices.items()}
    missing = [i for i, d in demand.items() if d > 0 and i.casefold() not in lookup]
    if missing:
        raise KeyError(missing)
    items = [ItemValue(i, d, lookup.get(i.casefold(), 0.0)) for i, d in demand.items()]
    return classify_abc(monetary_ranking(items), thresholds)


def report_to_csv(report: AbcReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["item", "annual_demand", "unit_price", "monetary_value", "relative_pct",
         "cumulative_pct", "class"]
    )
    for e in report.entries:
        writer.writerow(
            [e.item_id, f"{e.item.annual_demand:g}", f"{e.item.unit_price:.2f}",
             f"{e.item.monetary_value:.2f}", f"{100 * e.relative_pct:.2f}%",
             f"{100 * e.cumulative_pct:.2f}%", e.class_band.value]
        )
    writer.writerow(["total", "", "", f"{report.total_value:.2f}", "100.00%", "100.00%", ""])
    return out.getvalue()


def report_to_json(report: AbcReport) -> str:
    payload = {
        "thresholds": {"a_cut": report.thresholds.a_cut, "b_cut": report.thresholds.b_cut},
        "total_value": round(report.total_value, 6),
        "entries": [
            {
                "item": e.item_id,
                "annual_demand": e.item.annual_demand,
                "unit_price": e.item.unit_price,
                "monetary_value": round(e.item.monetary_value, 6),
                "relative_pct": round(e.relative_pct, 10),
                "cumulative_pct": round(e.cumulative_pct, 10),
                "class": e.class_band.value,
            }
            for e in report.entries
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def curve_to_csv(points: Iterable[tuple[float, float]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["item_fraction", "cumulative_pct"])
    for x, y in points:
        writer.writerow([f"{x:.10g}", f"{y:.10g}"])
    return out.getvalue()
