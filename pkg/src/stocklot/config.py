"""Flat ``key = value`` run configuration.

Example::

    # global cost inputs
    Cm = 1
    Cp = 50
    Cf = 4
    lead_time_days = 14
    price.item A = 12,5      # per-item keys use "<name>.<item id>"
    Cm.item B = 0.8

Blank lines and ``#`` comments are ignored. Numbers accept ``,`` or ``.`` as
the decimal separator. All analysis defaults live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .abc import AbcThresholds
from .ledger import UnitBasis
from .policy import AggregateExpenses


class ConfigError(ValueError):
    pass


_PER_ITEM = {"price", "Cm", "Cp", "Cf", "P", "D", "lead_time_days", "initial_level"}
_GLOBAL = {
    "ledger", "year", "out", "a_cut", "b_cut", "service_level", "year_days",
    "rounding_step", "Cm", "Cp", "Cf", "P", "D", "lead_time_days", "window_days",
    "CM_total", "CP_total", "unit_basis", "jit_dwell_days", "pathology_factor",
    "initial_level",
}


def parse_flat(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {n}: empty key")
        values[key] = value
    return values


def _number(key: str, raw: str) -> float:
    try:
        return float(raw.replace(",", "."))
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw!r}") from None


@dataclass
class RunConfig:
    ledger_path: Path | None = None
    year: int | None = None
    output_dir: Path = Path("out")
    abc_thresholds: AbcThresholds = field(default_factory=AbcThresholds)
    service_level_L: float = 0.75
    year_days: int = 365
    rounding_step: float | None = 100
    unit_basis: UnitBasis = UnitBasis.UNITS
    window_days: int | None = None
    jit_dwell_days: float = 3.0
    pathology_factor: float = 2.0
    globals: dict[str, float] = field(default_factory=dict)
    per_item: dict[str, dict[str, float]] = field(default_factory=dict)
    aggregate_CM: float | None = None
    aggregate_CP: float | None = None

    def __post_init__(self) -> None:
        if not 0 < self.service_level_L < 1:
            raise ConfigError(f"service level must lie in (0, 1), got {self.service_level_L}")

    def item_value(self, key: str, item_id: str) -> float | None:
        """Per-item override if present, otherwise the global value."""
        for item, values in self.per_item.items():
            if item.casefold() == item_id.casefold() and key in values:
                return values[key]
        return self.globals.get(key)

    def prices(self) -> dict[str, float]:
        return {
            item: values["price"] for item, values in self.per_item.items() if "price" in values
        }

    def aggregate(self, A_t: float, E_t: int) -> AggregateExpenses | None:
        if self.aggregate_CM is None or self.aggregate_CP is None:
            return None
        return AggregateExpenses(self.aggregate_CM, self.aggregate_CP, A_t, E_t)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_mapping(parse_flat(text))


def config_from_mapping(values: dict[str, str]) -> RunConfig:
    cfg = RunConfig()
    a_cut, b_cut = cfg.abc_thresholds.a_cut, cfg.abc_thresholds.b_cut
    for key, raw in values.items():
        name, _, item = key.partition(".")
        if item:
            if name not in _PER_ITEM:
                raise ConfigError(f"unknown per-item key {name!r}")
            cfg.per_item.setdefault(" ".join(item.split()), {})[name] = _number(key, raw)
            continue
        if key not in _GLOBAL:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "ledger":
            cfg.ledger_path = Path(raw)
        elif key == "out":
            cfg.output_dir = Path(raw)
        elif key == "year":
            cfg.year = int(_number(key, raw))
        elif key == "a_cut":
            a_cut = _number(key, raw)
        elif key == "b_cut":
            b_cut = _number(key, raw)
        elif key == "service_level":
            cfg.service_level_L = _number(key, raw)
        elif key == "year_days":
            cfg.year_days = int(_number(key, raw))
        elif key == "rounding_step":
            step = _number(key, raw)
            cfg.rounding_step = step or None
        elif key == "unit_basis":
            try:
                cfg.unit_basis = UnitBasis(raw.lower())
            except ValueError:
                raise ConfigError(f"unit_basis must be 'units' or 'kg', got {raw!r}") from None
        elif key == "window_days":
            cfg.window_days = int(_number(key, raw))
        elif key == "jit_dwell_days":
            cfg.jit_dwell_days = _number(key, raw)
        elif key == "pathology_factor":
            cfg.pathology_factor = _number(key, raw)
        elif key == "CM_total":
            cfg.aggregate_CM = _number(key, raw)
        elif key == "CP_total":
            cfg.aggregate_CP = _number(key, raw)
        else:
            cfg.globals[key] = _number(key, raw)
    try:
        cfg.abc_thresholds = AbcThresholds(a_cut, b_cut)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.__post_init__()
    return cfg
