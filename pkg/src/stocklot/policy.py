"""Lot-size and reorder-point policies and their cost model.

Annual cost of ordering lots of size ``Q``::

    f(Q) = Q/2 * Cm + D/Q * Cp + D * P

``Cm`` is per unit per year and ``Cp`` per order. Lot sizes are kept
unrounded; :func:`round_display` is for reports only.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

from .demand import LeadTimeDemand

YEAR_DAYS = 365

SAVINGS_CAVEAT = (
    "savings assume holding and ordering costs scale linearly with stock and "
    "order count; realized savings are usually smaller"
)


class PolicyError(ValueError):
    """Invalid cost parameter or policy input."""


class MissingShortageCostError(PolicyError):
    pass


class InsufficientDataError(PolicyError):
    pass


class Model(enum.Enum):
    LEC = "LEC"
    QR = "QR"


@dataclass(frozen=True)
class CostParams:
    D: float
    Cm: float
    Cp: float
    P: float = 0.0
    Cf: float | None = None
    lead_time_days: int = 0

    def __post_init__(self) -> None:
        for name in ("D", "Cm", "Cp"):
            if not getattr(self, name) > 0:
                raise PolicyError(f"{name} must be positive, got {getattr(self, name)}")
        if self.P < 0:
            raise PolicyError(f"P must be nonnegative, got {self.P}")
        if self.Cf is not None and not self.Cf > 0:
            raise PolicyError(f"Cf must be positive when given, got {self.Cf}")
        if self.lead_time_days < 0:
            raise PolicyError("lead time must be nonnegative")


@dataclass(frozen=True)
class CostBreakdown:
    holding: float
    ordering: float
    acquisition: float

    @property
    def total(self) -> float:
        return self.holding + self.ordering + self.acquisition

    @property
    def inventory_cost(self) -> float:
        """Holding plus ordering, the part a lot-size decision can change."""
        return self.holding + self.ordering


@dataclass(frozen=True)
class PolicyResult:
    model: Model
    lot_size_Q: float
    reorder_point_R: float
    predicted_annual_cost: float
    service_level_L: float | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.lot_size_Q > 0:
            raise PolicyError("lot size must be positive")
        if self.reorder_point_R < 0:
            raise PolicyError("reorder point must be nonnegative")
        if self.model is Model.QR and not (
            self.service_level_L is not None and 0 < self.service_level_L < 1
        ):
            raise PolicyError("QR policies need a service level in (0, 1)")


@dataclass(frozen=True)
class AggregateExpenses:
    CM_total: float
    CP_total: float
    A_t: float
    E_t: int

    def __post_init__(self) -> None:
        if min(self.CM_total, self.CP_total, self.A_t, self.E_t) < 0:
            raise PolicyError("aggregate expenses must be nonnegative")


@dataclass(frozen=True)
class UnitCosts:
    Cm_per_unit_day: float
    Cp: float
    year_days: int = YEAR_DAYS

    @property
    def Cm(self) -> float:
        """Holding cost per unit per year."""
        return self.Cm_per_unit_day * self.year_days


def cost_breakdown(Q: float, params: CostParams) -> CostBreakdown:
    if not Q > 0:
        raise PolicyError(f"lot size must be positive, got {Q}")
    return CostBreakdown(
        holding=Q / 2 * params.Cm,
        ordering=params.D / Q * params.Cp,
        acquisition=params.D * params.P,
    )


def eoq(params: CostParams) -> float:
    """Economic lot size sqrt(2 D Cp / Cm)."""
    return math.sqrt(2 * params.D * params.Cp / params.Cm)


def eoq_reorder_point(daily_rate: float, lead_time_days: int) -> float:
    if daily_rate < 0 or lead_time_days < 0:
        raise PolicyError("rate and lead time must be nonnegative")
    return daily_rate * lead_time_days


def historical_cost(avg_inventory: float, orders: int, Cm: float, Cp: float) -> float:
    if min(avg_inventory, orders, Cm, Cp) < 0:
        raise PolicyError("historical cost inputs must be nonnegative")
    return avg_inventory * Cm + orders * Cp


def qr_lot(params: CostParams) -> float:
    """EOQ scaled by sqrt((Cf + Cm) / Cf) to account for shortage cost."""
    if params.Cf is None:
        raise MissingShortageCostError("the (Q,R) lot needs a shortage cost Cf")
    return eoq(params) * math.sqrt((params.Cf + params.Cm) / params.Cf)


# Acklam's rational approximation to the inverse normal CDF
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2))


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1
        )
    if p > 1 - _P_LOW:
        return -_acklam(1 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1
    )


def normal_quantile(p: float) -> float:
    """Standard normal quantile: Acklam's approximation plus one Halley step."""
    if not 0 < p < 1:
        raise PolicyError(f"probability must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # work in the lower tail, where erfc keeps full relative precision
        return -normal_quantile(1 - p)
    z = _acklam(p)
    e = normal_cdf(z) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(z * z / 2)
    return z - u / (1 + z * u / 2)


def normal_reorder_point(ltd: LeadTimeDemand, L: float) -> float:
    return ltd.mu_star + normal_quantile(L) * math.sqrt(ltd.sigma2_star)


def qr_reorder_point(
    ltd: LeadTimeDemand,
    L: float,
    model: Callable[[LeadTimeDemand, float], float] = normal_reorder_point,
) -> float:
    """Reorder point covering lead-time demand with probability ``L``.

    ``model`` maps (lead-time demand, L) to a reorder point; the default
    treats lead-time demand as normal, giving mu + z(L) * sigma.
    """
    if not 0 < L < 1:
        raise PolicyError(f"service level must lie in (0, 1), got {L}")
    return max(model(ltd, L), 0.0)


def unit_costs(expenses: AggregateExpenses, year_days: int = YEAR_DAYS) -> UnitCosts:
    """Per-unit costs from aggregate annual expenses.

    Holding expense is spread over the total stock area (unit-days), ordering
    expense over the total number of orders.
    """
    if expenses.A_t <= 0:
        raise InsufficientDataError("stock area must be positive to derive Cm")
    if expenses.E_t <= 0:
        raise InsufficientDataError("order count must be positive to derive Cp")
    return UnitCosts(expenses.CM_total / expenses.A_t, expenses.CP_total / expenses.E_t, year_days)


def lec_policy(params: CostParams, daily_rate: float) -> PolicyResult:
    Q = eoq(params)
    return PolicyResult(
        Model.LEC,
        Q,
        eoq_reorder_point(daily_rate, params.lead_time_days),
        cost_breakdown(Q, params).inventory_cost,
    )


def qr_policy(params: CostParams, ltd: LeadTimeDemand, L: float) -> PolicyResult:
    """(Q,R) policy; predicted cost adds holding of the safety stock R - mu*."""
    Q = qr_lot(params)
    R = qr_reorder_point(ltd, L)
    safety = max(R - ltd.mu_star, 0.0)
    cost = cost_breakdown(Q, params).inventory_cost + safety * params.Cm
    notes = [f"reorder point mu* + z(L)*sigma* with normal lead-time demand "
             f"(mu*={ltd.mu_star:g}, sigma2*={ltd.sigma2_star:g}, z={normal_quantile(L):.4f})"]
    sigma = math.sqrt(ltd.sigma2_star)
    if sigma > 0:
        # rounding R to hundreds, as hand-made tables often do, moves the real service level
        lower = math.floor(R / 100) * 100
        notes.append(
            f"R={R:.1f} is not rounded; a reorder point of {lower:.0f} would give "
            f"L={normal_cdf((lower - ltd.mu_star) / sigma):.3f} under the same model"
        )
    return PolicyResult(Model.QR, Q, R, cost, service_level_L=L, notes=tuple(notes))


def round_display(value: float, step: float | None = 100) -> float:
    """Round half up to a multiple of ``step`` for display; ``None`` keeps the value.

    Lot sizes use the configured step; reorder points are shown to the unit.
    """
    if not step:
        return value
    return math.floor(value / step + 0.5) * step


@dataclass(frozen=True)
class ComparisonRow:
    model: Model
    lot_size_Q: float
    reorder_point_R: float
    predicted_annual_cost: float
    savings: float


@dataclass(frozen=True)
class PolicyComparison:
    rows: tuple[ComparisonRow, ...]
    historical_cost: float
    notes: tuple[str, ...] = field(default=(SAVINGS_CAVEAT,))

    def row(self, model: Model) -> ComparisonRow:
        for r in self.rows:
            if r.model is model:
                return r
        raise KeyError(model)

    def to_dict(self, step: float | None = 100) -> dict:
        return {
            "historical_cost": round(self.historical_cost, 2),
            "rounding_step": step,
            "policies": [
                {
                    "model": r.model.value,
                    "lot_size_Q": round(r.lot_size_Q, 2),
                    "lot_size_Q_display": round_display(r.lot_size_Q, step),
                    "reorder_point_R": round(r.reorder_point_R, 2),
                    "reorder_point_R_display": round_display(r.reorder_point_R, step and 1),
                    "predicted_annual_cost": round(r.predicted_annual_cost, 2),
                    "savings": round(r.savings, 2),
                }
                for r in self.rows
            ],
            "notes": list(self.notes),
        }

    def to_json(self, step: float | None = 100) -> str:
        return json.dumps(self.to_dict(step), indent=2, sort_keys=True)

    def format_table(self, step: float | None = 100) -> str:
        def num(x: float, step: float | None) -> str:
            shown = round_display(x, step)
            return f"{shown:.0f}" if step else f"{shown:.2f}"

        header = f"{'':8}{'Lot size':>12}{'Reorder pt':>12}{'Cost/yr':>12}{'Savings':>12}"
        lines = [header]
        for r in self.rows:
            lines.append(
                f"{r.model.value:8}{num(r.lot_size_Q, step):>12}{num(r.reorder_point_R, step and 1):>12}"
                f"{r.predicted_annual_cost:>12.2f}{r.savings:>12.2f}"
            )
        lines.append(f"historical cost: {self.historical_cost:.2f}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def compare_policies(
    lec: PolicyResult, qr: PolicyResult, historical: float
) -> PolicyComparison:
    """Side-by-side LEC and (Q,R) results with savings against ``historical``."""
    rows = tuple(
        ComparisonRow(
            r.model, r.lot_size_Q, r.reorder_point_R, r.predicted_annual_cost,
            historical - r.predicted_annual_cost,
        )
        for r in (lec, qr)
    )
    notes = (SAVINGS_CAVEAT,) + lec.notes + qr.notes
    return PolicyComparison(rows, historical, notes)


def cost_curve(
    params: CostParams, q_min: float, q_max: float, n_points: int = 200
) -> list[tuple[float, float, float, float]]:
    """Sample (Q, holding, ordering, total) on an even grid of lot sizes."""
    if not 0 < q_min < q_max or n_points < 2:
        raise PolicyError("need 0 < q_min < q_max and at least two points")
    step = (q_max - q_min) / (n_points - 1)
    series = []
    for k in range(n_points):
        q = q_min + k * step
        c = cost_breakdown(q, params)
        series.append((q, c.holding, c.ordering, c.total))
    return series
