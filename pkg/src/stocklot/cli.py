"""``stocklot`` command-line entry point.

Exit codes: 0 success, 1 input error, 2 missing data, 3 internal invariant
violation. Every subcommand builds all of its outputs before writing any, so
a failing run leaves no partial reports behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
import tempfile
from pathlib import Path

from . import abc, demand, ledger, policy, simulate
from .config import ConfigError, RunConfig, load_config
from .ledger import Period

logger = logging.getLogger("stocklot")

EXIT_OK, EXIT_INPUT, EXIT_MISSING, EXIT_INTERNAL = 0, 1, 2, 3


class MissingDataError(Exception):
    """Required input (price, cost, item) is absent."""


class InputError(Exception):
    pass


def _slug(item_id: str) -> str:
    return re.sub(r"[^0-9A-Za-z_-]+", "_", item_id).strip("_") or "item"


def _dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, text in files.items():
            target = out_dir / name
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
            written.append(target)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise


class Run:
    """Resolved inputs for one invocation."""

    def __init__(self, args: argparse.Namespace, cfg: RunConfig):
        self.args = args
        self.cfg = cfg
        path = args.ledger or cfg.ledger_path
        if path is None:
            raise InputError("no ledger given (use --ledger or 'ledger =' in the config)")
        try:
            self.ledger = ledger.read_ledger(path)
        except OSError as exc:
            raise InputError(f"cannot read ledger {path}: {exc}") from None
        self.year = args.year or cfg.year or self.ledger.period.end.year
        self.period = Period.year(self.year)
        if not (self.ledger.period.start.year <= self.year <= self.ledger.period.end.year):
            raise InputError(f"year {self.year} is outside the ledger period")
        self.step = None if args.no_round else cfg.rounding_step
        self.formats = {"json", "csv"}
        if args.json and not args.csv:
            self.formats = {"json"}
        elif args.csv and not args.json:
            self.formats = {"csv"}

    def item(self) -> str:
        if not self.args.item:
            raise MissingDataError("this command needs --item")
        return self.ledger.resolve_item(self.args.item)

    def timeline(self, item: str) -> ledger.StockTimeline:
        initial = self.cfg.item_value("initial_level", item) or 0.0
        return ledger.stock_timeline(
            self.ledger, item, self.period, initial, self.cfg.unit_basis
        )

    def unit_costs(self, item: str) -> tuple[float, float, list[str]]:
        """(Cm per unit-year, Cp, provenance notes) for ``item``."""
        Cm = self.cfg.item_value("Cm", item)
        Cp = self.cfg.item_value("Cp", item)
        notes = []
        if Cm is None or Cp is None:
            A_t = 0.0
            E_t = 0
            for other in self.ledger.item_ids:
                A_t += ledger.integrated_stock_area(self.timeline(other))
                E_t += ledger.order_count(self.ledger, other, self.period)
            expenses = self.cfg.aggregate(A_t, E_t)
            if expenses is None:
                raise MissingDataError(f"{item}: no Cm/Cp and no CM_total/CP_total to derive them")
            derived = policy.unit_costs(expenses, self.cfg.year_days)
            notes.append(
                f"unit costs derived from aggregate expenses: Cm={derived.Cm_per_unit_day:.6g}"
                f"/unit-day ({derived.Cm:.6g}/unit-year), Cp={derived.Cp:.6g}/order"
            )
            Cm = derived.Cm if Cm is None else Cm
            Cp = derived.Cp if Cp is None else Cp
        return Cm, Cp, notes

    def params(self, item: str, need_cf: bool = False) -> tuple[policy.CostParams, float, list[str]]:
        stats = demand.demand_stats(
            self.ledger, item, self.year, self.cfg.unit_basis, self.cfg.year_days
        )
        D = self.cfg.item_value("D", item) or stats.annual_demand_D
        if D <= 0:
            raise MissingDataError(f"{item}: zero annual demand in {self.year}")
        Cm, Cp, notes = self.unit_costs(item)
        Cf = self.cfg.item_value("Cf", item)
        if need_cf and Cf is None:
            raise MissingDataError(f"{item}: the (Q,R) model needs a shortage cost Cf")
        lead = int(self.cfg.item_value("lead_time_days", item) or 0)
        P = self.cfg.item_value("P", item) or 0.0
        params = policy.CostParams(D=D, Cm=Cm, Cp=Cp, P=P, Cf=Cf, lead_time_days=lead)
        return params, D / self.cfg.year_days, notes + list(stats.warnings)

    def historical(self, item: str, params: policy.CostParams) -> dict:
        tl = self.timeline(item)
        avg = ledger.average_inventory(tl)
        orders = ledger.order_count(self.ledger, item, self.period)
        return {
            "avg_inventory": avg,
            "orders": orders,
            "cost": policy.historical_cost(max(avg, 0.0), orders, params.Cm, params.Cp),
        }

    def lead_time_demand(self, item: str, params: policy.CostParams) -> demand.LeadTimeDemand:
        window = self.cfg.window_days or params.lead_time_days
        if window < 1:
            raise MissingDataError(f"{item}: set lead_time_days or window_days (>= 1)")
        return demand.lead_time_demand(self.ledger, item, self.year, window, self.cfg.unit_basis)


def _policy_dict(result: policy.PolicyResult, step) -> dict:
    return {
        "model": result.model.value,
        "lot_size_Q": round(result.lot_size_Q, 6),
        "lot_size_Q_display": policy.round_display(result.lot_size_Q, step),
        "reorder_point_R": round(result.reorder_point_R, 6),
        "reorder_point_R_display": policy.round_display(result.reorder_point_R, step and 1),
        "predicted_annual_cost": round(result.predicted_annual_cost, 6),
        "service_level_L": result.service_level_L,
        "notes": list(result.notes),
    }


def _params_dict(params: policy.CostParams) -> dict:
    return {
        "D": params.D, "Cm": params.Cm, "Cp": params.Cp, "P": params.P, "Cf": params.Cf,
        "lead_time_days": params.lead_time_days,
    }


def _cost_curve_csv(params: policy.CostParams, center: float) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["Q", "holding", "ordering", "total"])
    for row in policy.cost_curve(params, center / 10, 3 * center, 200):
        writer.writerow([f"{v:.6f}" for v in row])
    return out.getvalue()


def _emit(run: Run, files: dict[str, str]) -> dict[str, str]:
    return {
        name: text
        for name, text in files.items()
        if name.rsplit(".", 1)[-1] not in {"json", "csv"}
        or name.rsplit(".", 1)[-1] in run.formats
    }


def cmd_abc(run: Run) -> dict[str, str]:
    thresholds = run.cfg.abc_thresholds
    if run.args.thresholds:
        thresholds = abc.AbcThresholds.parse(run.args.thresholds)
    try:
        report = abc.abc_from_ledger(run.ledger, run.period, run.cfg.prices(), thresholds)
    except KeyError as exc:
        raise MissingDataError(f"missing prices for: {', '.join(exc.args[0])}") from None
    except abc.EmptyRankingError as exc:
        raise MissingDataError(str(exc)) from None
    return {
        "abc_report.csv": abc.report_to_csv(report),
        "abc_report.json": abc.report_to_json(report) + "\n",
        "abc_curve.csv": abc.curve_to_csv(abc.abc_curve_points(report.entries)),
    }


def cmd_analyze(run: Run) -> dict[str, str]:
    item = run.item()
    slug = _slug(item)
    tl = run.timeline(item)
    stats = demand.demand_stats(run.ledger, item, run.year, run.cfg.unit_basis, run.cfg.year_days)
    curve = demand.consumption_curve(run.ledger, item, run.year, run.cfg.unit_basis)
    thresholds = demand.PatternThresholds(run.cfg.jit_dwell_days, run.cfg.pathology_factor)
    try:
        constancy = demand.constancy_metric(curve)
    except demand.DemandError:
        constancy = None
    summary = {
        "item_id": item,
        "year": run.year,
        "unit_basis": run.cfg.unit_basis.value,
        "annual_demand_D": stats.annual_demand_D,
        "daily_rate": round(stats.daily_rate, 6),
        "period_days": stats.period_days,
        "average_inventory": round(ledger.average_inventory(tl), 6),
        "integrated_stock_area": ledger.integrated_stock_area(tl),
        "order_count": ledger.order_count(run.ledger, item, run.period),
        "constancy_metric": None if constancy is None else round(constancy, 6),
        "mean_dwell_days": round(demand.mean_dwell_days(tl, curve), 6)
        if curve.start_total > curve.points[-1][1] else None,
        "pattern": demand.detect_pattern(tl, curve, thresholds).value,
        "warnings": list(stats.warnings) + list(tl.warnings),
    }
    return {
        f"{slug}_stats.json": _dumps(summary),
        f"{slug}_timeline.csv": ledger.timeline_to_csv(tl),
        f"{slug}_timeline.json": ledger.timeline_to_json(tl) + "\n",
        f"{slug}_consumption.csv": demand.curve_to_csv(curve),
        f"{slug}_consumption.json": demand.curve_to_json(curve) + "\n",
    }


def _lec(run: Run, item: str):
    params, rate, notes = run.params(item)
    result = policy.lec_policy(params, rate)
    hist = run.historical(item, params)
    return params, rate, notes, result, hist


def cmd_eoq(run: Run) -> dict[str, str]:
    item = run.item()
    params, rate, notes, result, hist = _lec(run, item)
    payload = {
        "item_id": item,
        "params": _params_dict(params),
        "daily_rate": round(rate, 6),
        "policy": _policy_dict(result, run.step),
        "historical": {k: round(v, 6) for k, v in hist.items()},
        "savings": round(hist["cost"] - result.predicted_annual_cost, 6),
        "notes": [policy.SAVINGS_CAVEAT] + notes,
    }
    return {
        f"{_slug(item)}_eoq.json": _dumps(payload),
        f"{_slug(item)}_cost_curve.csv": _cost_curve_csv(params, result.lot_size_Q),
    }


def _qr(run: Run, item: str):
    params, rate, notes = run.params(item, need_cf=True)
    ltd = run.lead_time_demand(item, params)
    L = run.args.service_level or run.cfg.service_level_L
    return params, notes, ltd, policy.qr_policy(params, ltd, L)


def cmd_qr(run: Run) -> dict[str, str]:
    item = run.item()
    params, notes, ltd, result = _qr(run, item)
    payload = {
        "item_id": item,
        "params": _params_dict(params),
        "lead_time_demand": {
            "window_days": ltd.window_days,
            "mu_star": round(ltd.mu_star, 6),
            "sigma2_star": round(ltd.sigma2_star, 6),
        },
        "policy": _policy_dict(result, run.step),
        "notes": notes,
    }
    return {
        f"{_slug(item)}_qr.json": _dumps(payload),
        f"{_slug(item)}_cost_curve.csv": _cost_curve_csv(params, result.lot_size_Q),
    }


def cmd_compare(run: Run) -> dict[str, str]:
    item = run.item()
    params, _, notes, lec, hist = _lec(run, item)
    _, _, ltd, qr = _qr(run, item)
    comparison = policy.compare_policies(lec, qr, hist["cost"])
    payload = comparison.to_dict(run.step)
    payload["item_id"] = item
    payload["historical"] = {k: round(v, 6) for k, v in hist.items()}
    payload["notes"] += notes
    return {
        f"{_slug(item)}_compare.json": _dumps(payload),
        f"{_slug(item)}_compare.txt": comparison.format_table(run.step) + "\n",
        f"{_slug(item)}_cost_curve.csv": _cost_curve_csv(params, lec.lot_size_Q),
    }


def cmd_simulate(run: Run) -> dict[str, str]:
    item = run.item()
    if run.args.policy == "qr":
        params, _, _, result = _qr(run, item)
    else:
        params, _, _, result, _ = _lec(run, item)
    spec = simulate.PolicySpec(result.lot_size_Q, result.reorder_point_R, params.lead_time_days)
    series = simulate.extract_daily_demand(run.ledger, item, run.year)
    initial = run.timeline(item).points[0][1]
    report = simulate.replay(series, spec, params, max(initial, 0.0))
    payload = report.to_dict()
    payload.update(
        item_id=item,
        policy={"model": result.model.value, "lot_size_Q": round(spec.lot_size_Q, 6),
                "reorder_point_R": round(spec.reorder_point_R, 6),
                "lead_time_days": spec.lead_time_days},
        initial_level=initial,
    )
    files = {f"{_slug(item)}_simulation.json": _dumps(payload)}
    if run.args.trace:
        files[f"{_slug(item)}_trace.csv"] = report.trace_csv()
    return files


COMMANDS = {
    "abc": cmd_abc,
    "analyze": cmd_analyze,
    "eoq": cmd_eoq,
    "qr": cmd_qr,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stocklot", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--ledger", type=Path)
    parser.add_argument("--year", type=int)
    parser.add_argument("--config", type=Path)
    parser.add_argument("--item")
    parser.add_argument("--out", type=Path)
    parser.add_argument("--json", action="store_true", help="write JSON outputs only")
    parser.add_argument("--csv", action="store_true", help="write CSV outputs only")
    parser.add_argument("--thresholds", help="ABC cut points, e.g. 0.8,0.95")
    parser.add_argument("--service-level", type=float)
    parser.add_argument("--no-round", action="store_true", help="report raw lot sizes")
    parser.add_argument("--policy", choices=["lec", "qr"], default="lec")
    parser.add_argument("--trace", action="store_true", help="also write the per-day replay trace")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.service_level is not None and not 0 < args.service_level < 1:
            raise ConfigError("--service-level must lie in (0, 1)")
        run = Run(args, cfg)
        files = _emit(run, COMMANDS[args.command](run))
        _write_outputs(args.out or cfg.output_dir, files)
    except (MissingDataError, ledger.ItemNotFoundError, policy.MissingShortageCostError,
            policy.InsufficientDataError) as exc:
        print(f"stocklot: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (InputError, ConfigError, ledger.LedgerError, abc.AbcError, demand.DemandError,
            policy.PolicyError, simulate.SimulationError, OSError) as exc:
        print(f"stocklot: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # invariant breaks surface as code 3
        print(f"stocklot: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    for name in sorted(files):
        print(Path(args.out or cfg.output_dir) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
