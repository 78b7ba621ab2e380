"""Command line front end.

Subcommands: demand-curve, optimal, profit-sweep, simulate-day, supply-risk.
Exit codes: 0 success, 1 domain error (bad files, infeasible inputs),
2 usage error. Tables go to --out when given, else CSV to stdout.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import dataio, forecast, provider, simulation, vg
from .dataio import ScenarioError, SeriesParseError
from .market import PhaseError
from .provider import DispatchableUnit, ScenarioModel, UnitKind

DEFAULT_PRICE_RATIOS = tuple(round(0.05 * i, 2) for i in range(11))  # 0 .. 0.5

# Built-in units for supply-risk (no scenario file in that command). The
# marginal unit's cost sits above the mean RT price so its dispatch flips on
# scarcity; headroom is symmetric 50 MW and the generator clips shifts to it.
_RISK_UNITS = {
    "base_load": DispatchableUnit(
        kind=UnitKind.BASE_LOAD, p_min=150.0, p_max=250.0,
        marginal_cost=15.0, da_schedule=200.0,
    ),
    "marginal": DispatchableUnit(
        kind=UnitKind.MARGINAL, p_min=150.0, p_max=250.0,
        marginal_cost=35.0, da_schedule=200.0,
    ),
}
_RISK_HEADROOM = 50.0

CONTRACT_COLUMNS = [
    "id", "hour", "buyer", "seller", "direction", "quantity_mw",
    "premium_price", "status", "executed_mw", "trimmed_mw",
]
LEDGER_COLUMNS = ["hour", "payer", "payee", "amount", "tag"]
TOTALS_COLUMNS = ["party", "net_cash"]


class UsageError(ValueError):
    """Bad argument values caught after argparse (maps to exit code 2)."""


@dataclass(frozen=True)
class CommandResult:
    exit_code: int
    artifacts: tuple[str, ...] = ()


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _emit(rows, args, columns=None) -> CommandResult:
    fmt = args.format
    if args.out is None:
        sys.stdout.write(dataio.format_table(rows, fmt, columns))
        return CommandResult(0)
    dataio.write_table(rows, args.out, fmt, columns)
    print(f"wrote {args.out}")
    return CommandResult(0, artifacts=(str(args.out),))


def _load(args) -> dataio.ScenarioConfig:
    return dataio.load_scenario(args.scenario)


def _check_hour(cfg: dataio.ScenarioConfig, hour: int) -> int:
    if not 0 <= hour < cfg.horizon:
        raise UsageError(f"--hour {hour} outside scenario horizon {cfg.horizon}")
    return hour


def cmd_demand_curve(args) -> CommandResult:
    cfg = _load(args)
    hour = _check_hour(cfg, args.hour)
    alphas = [a for chunk in args.alpha for a in chunk] if args.alpha else [
        cfg.penalty.over
    ]
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise UsageError(f"--alpha values must be in [0, 1], got {a}")
    s, _, d = simulation.hour_context(cfg, hour)
    rows = []
    for direction in (vg.DOWN, vg.UP):
        for a in alphas:
            pf = vg.PenaltyFactors(over=a, under=a)
            curve = vg.demand_curve(s, pf, d, direction, args.points)
            for q, value in curve.points:
                rows.append(
                    {
                        "direction": direction.value,
                        "alpha": a,
                        "quantity_mw": q,
                        "marginal_value": value,
                    }
                )
    return _emit(rows, args)


def cmd_optimal(args) -> CommandResult:
    cfg = _load(args)
    hour = _check_hour(cfg, args.hour)
    s, pf, d = simulation.hour_context(cfg, hour)
    model_down, model_up = cfg.brs_price.prices_at(s.da_price)
    down_price = args.down_price if args.down_price is not None else model_down
    up_price = args.up_price if args.up_price is not None else model_up
    if down_price < 0 or up_price < 0:
        raise UsageError("premium prices must be >= 0")
    pos = vg.optimal_position(s, pf, d, down_price, up_price)
    report = vg.oic_report(s, pf, pos, d)
    gross = vg.expected_revenue(s, pf, pos, d)
    rows = [
        {
            "hour": hour,
            "down_qty_mw": pos.down_qty,
            "up_qty_mw": pos.up_qty,
            "down_price": pos.down_price,
            "up_price": pos.up_price,
            "gross_expected_revenue": gross,
            "net_expected_revenue": gross - report.premium_paid,
            "premium_paid": report.premium_paid,
            "expected_residual_penalty": report.expected_residual_penalty,
            "total_oic": report.total_oic,
            "consumer_surplus": report.consumer_surplus,
        }
    ]
    return _emit(rows, args)


def cmd_profit_sweep(args) -> CommandResult:
    cfg = _load(args)
    ratios = (
        [r for chunk in args.price_ratios for r in chunk]
        if args.price_ratios
        else list(DEFAULT_PRICE_RATIOS)
    )
    scales = (
        [k for chunk in args.variance_scales for k in chunk]
        if args.variance_scales
        else list(cfg.variance_scale_factors)
    )
    for r in ratios:
        if r < 0:
            raise UsageError(f"price ratios must be >= 0, got {r}")
    rows = []
    for scale in scales:
        for ratio in ratios:
            profit = 0.0
            gross_total = 0.0
            premium_total = 0.0
            for h in range(cfg.horizon):
                s, pf, d = simulation.hour_context(cfg, h)
                d = forecast.scale_variance(d, scale)
                price = ratio * s.da_price
                pos = vg.optimal_position(s, pf, d, price, price)
                gross = vg.expected_revenue(s, pf, pos, d)
                premium = vg.premium_cost(pos)
                profit += gross - premium
                gross_total += gross
                premium_total += premium
            rows.append(
                {
                    "variance_scale": scale,
                    "price_ratio": ratio,
                    "expected_profit": profit,
                    "gross_expected_revenue": gross_total,
                    "premium_paid": premium_total,
                }
            )
    rows.sort(key=lambda r: (r["variance_scale"], r["price_ratio"]))
    return _emit(rows, args)


def cmd_simulate_day(args) -> CommandResult:
    cfg = _load(args)
    result = simulation.simulate_day(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    tables = (
        ("contracts", simulation.contract_rows(result), CONTRACT_COLUMNS),
        ("ledger", simulation.ledger_rows(result), LEDGER_COLUMNS),
        ("totals", simulation.totals_rows(result), TOTALS_COLUMNS),
    )
    for name, rows, columns in tables:
        for fmt in ("csv", "json"):
            path = out_dir / f"{name}.{fmt}"
            dataio.write_table(rows, path, fmt, columns)
            artifacts.append(str(path))
            print(f"wrote {path}")
    return CommandResult(0, artifacts=tuple(artifacts))


def cmd_supply_risk(args) -> CommandResult:
    if not -1.0 <= args.correlation <= 1.0:
        raise UsageError(f"--correlation must be in [-1, 1], got {args.correlation}")
    if args.samples < 2:
        raise UsageError(f"--samples must be >= 2, got {args.samples}")
    model = ScenarioModel(
        correlation=args.correlation, execution_limit=_RISK_HEADROOM
    )
    if args.exhaustive:
        scenarios, weights = provider.exhaustive_scenarios(model)
    else:
        scenarios = provider.generate_scenarios(model, args.samples, args.seed)
        weights = None
    kinds = ["base_load", "marginal"] if args.unit_kind == "both" else [args.unit_kind]
    rows = []
    reports = {}
    for kind in kinds:
        report = provider.risk_report(_RISK_UNITS[kind], scenarios, weights)
        reports[kind] = report
        rows.append(
            {
                "kind": kind,
                "expected_delta": report.expected_delta,
                "variance_without": report.variance_without,
                "variance_with": report.variance_with,
                "incremental_variance": report.incremental_variance,
            }
        )
    result = _emit(rows, args)
    if len(kinds) == 2:
        less = reports["marginal"].incremental_variance < reports["base_load"].incremental_variance
        print(f"verdict: marginal_less_risky={str(less).lower()}")
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brsim",
        description="Bilateral re-dispatch capacity market tools",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p):
        p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=dataio.TABLE_FORMATS, default="csv")

    p = sub.add_parser("demand-curve", help="marginal value of cover vs quantity")
    p.add_argument("scenario", type=Path)
    p.add_argument("--hour", type=int, default=0)
    p.add_argument("--alpha", type=_float_list, action="append",
                   help="penalty factor(s), comma-separated and/or repeated")
    p.add_argument("--points", type=int, default=21)
    add_output_flags(p)
    p.set_defaults(func=cmd_demand_curve)

    p = sub.add_parser("optimal", help="optimal cover and its cost report")
    p.add_argument("scenario", type=Path)
    p.add_argument("--hour", type=int, default=0)
    p.add_argument("--down-price", type=float, default=None)
    p.add_argument("--up-price", type=float, default=None)
    add_output_flags(p)
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("profit-sweep", help="expected profit over premium ratios and variance scales")
    p.add_argument("scenario", type=Path)
    p.add_argument("--price-ratios", type=_float_list, action="append",
                   help=f"premium/DA-price ratios (default {','.join(str(r) for r in DEFAULT_PRICE_RATIOS)})")
    p.add_argument("--variance-scales", type=_float_list, action="append",
                   help="variance scale factors (default: scenario's variance_scale_factors)")
    add_output_flags(p)
    p.set_defaults(func=cmd_profit_sweep)

    p = sub.add_parser("simulate-day", help="run the full lifecycle and dump ledger/contracts")
    p.add_argument("scenario", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_simulate_day)

    p = sub.add_parser("supply-risk", help="incremental cash-flow risk of selling cover")
    p.add_argument("--unit-kind", choices=["both", "base_load", "marginal"], default="both")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correlation", type=float, default=0.0)
    p.add_argument("--exhaustive", action="store_true",
                   help="replace sampling with the two-point joint enumeration")
    add_output_flags(p)
    p.set_defaults(func=cmd_supply_risk)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, SeriesParseError, PhaseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
