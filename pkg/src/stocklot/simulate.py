"""Replay a (Q, R) policy against a historical daily demand series.

Each day:

1. orders due today are received,
2. demand is served from on-hand stock; any shortfall is lost,
3. if on-hand plus on-order is at or below ``R`` and nothing arrived today,
   an order of ``Q`` is placed,
4. the end-of-day on-hand level is recorded.

An order placed at the end of day ``t`` can serve demand from day
``t + lead_time_days`` on; a zero lead time delivers before the day closes.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import asdict, dataclass
from datetime import date

from .ledger import Direction, MovementLedger, Period
from .policy import CostParams


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    lot_size_Q: float
    reorder_point_R: float
    lead_time_days: int

    def __post_init__(self) -> None:
        if not self.lot_size_Q > 0:
            raise SimulationError("lot size must be positive")
        if self.reorder_point_R < 0:
            raise SimulationError("reorder point must be nonnegative")
        if self.lead_time_days < 0:
            raise SimulationError("lead time must be nonnegative")


@dataclass(frozen=True)
class TraceRow:
    date: date
    on_hand: float
    on_order: float
    received: float
    served: float
    unmet: float
    ordered: float


@dataclass(frozen=True)
class SimulationReport:
    realized_avg_inventory: float
    orders_placed: int
    stockout_days: int
    unmet_demand: float
    total_demand: float
    total_received: float
    final_on_hand: float
    realized_cost: float
    fill_rate: float
    trace: tuple[TraceRow, ...] = ()

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("trace")
        return {k: (round(v, 6) if isinstance(v, float) else v) for k, v in data.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trace_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["date", "on_hand", "on_order", "received", "served", "unmet", "ordered"])
        for row in self.trace:
            writer.writerow(
                [row.date.isoformat(), f"{row.on_hand:g}", f"{row.on_order:g}",
                 f"{row.received:g}", f"{row.served:g}", f"{row.unmet:g}", f"{row.ordered:g}"]
            )
        return out.getvalue()


def replay(
    daily_demand: list[tuple[date, float]],
    spec: PolicySpec,
    costs: CostParams,
    initial_level: float = 0.0,
) -> SimulationReport:
    """Run ``spec`` over ``daily_demand`` under lost sales.

    ``realized_cost`` is ``avg_inventory * Cm + orders * Cp``, i.e. an annual
    figure when the series spans one year.
    """
    if not daily_demand:
        raise SimulationError("demand series is empty")
    on_hand = float(initial_level)
    pipeline: deque[tuple[int, float]] = deque()  # (due day index, qty), due order
    orders = stockout_days = 0
    unmet_total = demand_total = received_total = level_sum = 0.0
    trace = []

    for i, (day, demand) in enumerate(daily_demand):
        received = 0.0
        while pipeline and pipeline[0][0] <= i:
            received += pipeline.popleft()[1]
        on_hand += received

        served = min(demand, max(on_hand, 0.0))
        unmet = demand - served
        on_hand -= served
        demand_total += demand
        if unmet > 0:
            unmet_total += unmet
            stockout_days += 1

        ordered = 0.0
        on_order = sum(q for _, q in pipeline)
        if on_hand + on_order <= spec.reorder_point_R and received == 0:
            ordered = spec.lot_size_Q
            orders += 1
            if spec.lead_time_days == 0:
                on_hand += ordered
                received += ordered
            else:
                pipeline.append((i + spec.lead_time_days, ordered))
                on_order += ordered
        received_total += received

        level_sum += on_hand
        trace.append(TraceRow(day, on_hand, on_order, received, served, unmet, ordered))

    avg = level_sum / len(daily_demand)
    fill_rate = 1.0 if demand_total == 0 else 1 - unmet_total / demand_total
    return SimulationReport(
        realized_avg_inventory=avg,
        orders_placed=orders,
        stockout_days=stockout_days,
        unmet_demand=unmet_total,
        total_demand=demand_total,
        total_received=received_total,
        final_on_hand=on_hand,
        realized_cost=avg * costs.Cm + orders * costs.Cp,
        fill_rate=fill_rate,
        trace=tuple(trace),
    )


def extract_daily_demand(
    ledger: MovementLedger, item_id: str, year: int
) -> list[tuple[date, float]]:
    """Exit quantities summed per calendar day of ``year``, zero-filled."""
    period = Period.year(year)
    daily: dict[date, float] = {}
    for m in ledger.for_item(item_id):
        if m.direction is Direction.EXIT and m.date in period:
            daily[m.date] = daily.get(m.date, 0.0) - m.qty_units
    return [(day, daily.get(day, 0.0)) for day in period.dates()]
