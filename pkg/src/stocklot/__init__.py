"""Inventory policy toolkit: ledgers, ABC bands, demand diagnostics, EOQ and (Q,R) lots."""

from .abc import AbcThresholds, ClassBand, abc_curve_points, classify_abc, monetary_ranking
from .demand import (
    Pattern,
    consumption_curve,
    constancy_metric,
    demand_stats,
    detect_pattern,
    lead_time_demand,
)
from .ledger import (
    FormatConfig,
    MovementLedger,
    Period,
    UnitBasis,
    average_inventory,
    integrated_stock_area,
    order_count,
    parse_ledger,
    stock_timeline,
)
from .policy import (
    AggregateExpenses,
    CostParams,
    compare_policies,
    cost_breakdown,
    eoq,
    eoq_reorder_point,
    historical_cost,
    normal_quantile,
    qr_lot,
    qr_reorder_point,
    unit_costs,
)
from .simulate import PolicySpec, extract_daily_demand, replay

__version__ = "0.1.0"
