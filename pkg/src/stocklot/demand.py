"""Demand estimation and consumption diagnostics."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import statistics
from dataclasses import dataclass
from datetime import date, timedelta

from .ledger import (
    Direction,
    MovementLedger,
    Period,
    StockTimeline,
    UnitBasis,
    average_inventory,
    integrated_stock_area,
)

logger = logging.getLogger(__name__)

YEAR_DAYS = 365


class DemandError(ValueError):
    pass


class Pattern(enum.Enum):
    STABLE = "Stable"
    PATHOLOGICAL = "Pathological"
    JUST_IN_TIME = "JustInTime"


@dataclass(frozen=True)
class DemandStats:
    item_id: str
    annual_demand_D: float
    daily_rate: float
    period_days: int
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class ConsumptionCurve:
    """Remaining stock if the year's entries were all available up front.

    ``points[0]`` is the opening anchor, dated the day before the period
    starts; every later point is an end-of-day value on a day with exits.
    The reference line falls linearly from ``start_total`` at the anchor to
    zero at ``period.end``.
    """

    points: tuple[tuple[date, float], ...]
    start_total: float
    period: Period

    @property
    def anchor(self) -> date:
        return self.points[0][0]

    def remaining_at(self, day: date) -> float:
        value = self.points[0][1]
        for when, remaining in self.points:
            if when > day:
                break
            value = remaining
        return value

    def reference_at(self, day: date) -> float:
        span = (self.period.end - self.anchor).days
        left = (self.period.end - day).days
        return self.start_total * left / span


@dataclass(frozen=True)
class LeadTimeDemand:
    window_days: int
    mu_star: float
    sigma2_star: float

    def __post_init__(self) -> None:
        if self.window_days < 1:
            raise DemandError("window_days must be >= 1")
        if self.sigma2_star < 0:
            raise DemandError("variance must be nonnegative")


def _exits_by_day(ledger: MovementLedger, item_id: str, period: Period, basis: UnitBasis):
    daily: dict[date, float] = {}
    for m in ledger.for_item(item_id):
        if m.direction is Direction.EXIT and m.date in period:
            daily[m.date] = daily.get(m.date, 0.0) - m.quantity(basis)
    return daily


def demand_stats(
    ledger: MovementLedger,
    item_id: str,
    year: int,
    unit_basis: UnitBasis = UnitBasis.UNITS,
    year_days: int = YEAR_DAYS,
) -> DemandStats:
    """Annual demand (sum of exits in ``year``) and its daily rate over ``year_days``."""
    item = ledger.resolve_item(item_id)
    daily = _exits_by_day(ledger, item, Period.year(year), unit_basis)
    total = sum(daily.values())
    warnings = ()
    if not daily:
        message = f"{item}: no exits in {year}; demand is zero"
        logger.warning(message)
        warnings = (message,)
    return DemandStats(item, total, total / year_days, year_days, warnings)


def consumption_curve(
    ledger: MovementLedger,
    item_id: str,
    year: int,
    unit_basis: UnitBasis = UnitBasis.UNITS,
) -> ConsumptionCurve:
    """Start from the year's total entries and subtract exits day by day."""
    item = ledger.resolve_item(item_id)
    period = Period.year(year)
    start_total = float(
        sum(
            m.quantity(unit_basis)
            for m in ledger.for_item(item)
            if m.direction is Direction.ENTRY and m.date in period
        )
    )
    points = [(period.start - timedelta(days=1), start_total)]
    daily = _exits_by_day(ledger, item, period, unit_basis)
    remaining = start_total
    for day in sorted(daily):
        remaining -= daily[day]
        points.append((day, remaining))
    return ConsumptionCurve(tuple(points), start_total, period)


def constancy_metric(curve: ConsumptionCurve) -> float:
    """Largest gap between the curve and its reference line, as a share of ``start_total``.

    The curve is flat between exit days while the line keeps falling, so the
    gap on each flat stretch peaks at one of its two ends; checking the exit
    days, the days just before them and the last day covers every stretch.
    """
    if curve.start_total <= 0:
        raise DemandError("constancy is undefined without entries")
    if len(curve.points) < 2:
        raise DemandError("constancy needs at least one exit")
    days = {curve.period.end}
    for when, _ in curve.points[1:]:
        days.add(when)
        if when - timedelta(days=1) >= curve.anchor:
            days.add(when - timedelta(days=1))
    gap = max(abs(curve.remaining_at(d) - curve.reference_at(d)) for d in days)
    return min(gap / curve.start_total, 1.0)


def daily_exit_series(
    ledger: MovementLedger,
    item_id: str,
    period: Period,
    unit_basis: UnitBasis = UnitBasis.UNITS,
) -> list[float]:
    daily = _exits_by_day(ledger, ledger.resolve_item(item_id), period, unit_basis)
    return [daily.get(day, 0.0) for day in period.dates()]


def lead_time_demand(
    ledger: MovementLedger,
    item_id: str,
    year: int,
    window_days: int,
    unit_basis: UnitBasis = UnitBasis.UNITS,
) -> LeadTimeDemand:
    """Mean and population variance of demand over every ``window_days`` window.

    Windows slide one calendar day at a time across the year.
    """
    if window_days < 1:
        raise DemandError("window_days must be >= 1")
    period = Period.year(year)
    series = daily_exit_series(ledger, item_id, period, unit_basis)
    return window_demand(series, window_days)


def window_demand(series: list[float], window_days: int) -> LeadTimeDemand:
    if window_days < 1:
        raise DemandError("window_days must be >= 1")
    if len(series) < window_days:
        raise DemandError(f"{len(series)} days of data cannot fill a {window_days}-day window")
    sums = []
    current = sum(series[:window_days])
    sums.append(current)
    for i in range(window_days, len(series)):
        current += series[i] - series[i - window_days]
        sums.append(current)
    mu = statistics.fmean(sums)
    var = statistics.pvariance(sums, mu)
    return LeadTimeDemand(window_days, mu, max(var, 0.0))


@dataclass(frozen=True)
class PatternThresholds:
    jit_dwell_days: float = 3.0
    pathology_factor: float = 2.0


def mean_dwell_days(timeline: StockTimeline, curve: ConsumptionCurve) -> float:
    """Average days a unit sits in stock: stock area over units consumed."""
    consumed = curve.start_total - curve.points[-1][1]
    if consumed <= 0:
        return float("inf")
    return integrated_stock_area(timeline) / consumed


def detect_pattern(
    timeline: StockTimeline,
    curve: ConsumptionCurve,
    thresholds: PatternThresholds | None = None,
) -> Pattern:
    """Label an item's movement history as Stable, Pathological or JustInTime.

    Total exits are read off ``curve``; it should cover the same stretch as
    ``timeline``.
    """
    thresholds = thresholds or PatternThresholds()
    if not timeline.points:
        raise DemandError("empty timeline")
    if mean_dwell_days(timeline, curve) < thresholds.jit_dwell_days:
        return Pattern.JUST_IN_TIME
    levels = [level for _, level in timeline.points]
    entries = [b - a for a, b in zip(levels, levels[1:]) if b > a]
    largest_entry = max(entries, default=0.0)
    if average_inventory(timeline) > thresholds.pathology_factor * (largest_entry / 2):
        return Pattern.PATHOLOGICAL
    return Pattern.STABLE


def curve_to_rows(curve: ConsumptionCurve) -> list[tuple[str, float, float]]:
    return [(d.isoformat(), r, curve.reference_at(d)) for d, r in curve.points]


def curve_to_csv(curve: ConsumptionCurve) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", "remaining", "reference"])
    for day, remaining, reference in curve_to_rows(curve):
        writer.writerow([day, repr(float(remaining)), f"{reference:.6f}"])
    return out.getvalue()


def curve_to_json(curve: ConsumptionCurve) -> str:
    payload = {
        "start_total": curve.start_total,
        "period": {"start": curve.period.start.isoformat(), "end": curve.period.end.isoformat()},
        "points": [[d, r, round(ref, 6)] for d, r, ref in curve_to_rows(curve)],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
