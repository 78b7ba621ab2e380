"""Scenario-driven day runs: wires forecasts, the hourly capacity market,
claims, and settlement into one deterministic pipeline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import forecast, market, provider, vg
from .dataio import ScenarioConfig, UnitConfig
from .market import (
    BrsContract,
    HourAccounts,
    HourMarket,
    Offer,
    Phase,
    SettlementLedger,
    ZonalRule,
)
from .provider import DispatchableUnit, UnitKind
from .vg import PenaltyFactors, VgSchedule


@dataclass(frozen=True)
class TimelineState:
    """Per-hour lifecycle phases; monotone within a run by construction."""

    phases: tuple[Phase, ...]


@dataclass
class HourOutcome:
    hour: int
    vg_schedule: float
    vg_modified: float
    vg_realized: float
    unit_schedules: dict[str, float]
    unit_modified: dict[str, float]
    contracts: list[BrsContract]
    ledger: SettlementLedger


@dataclass
class DayResult:
    hours: list[HourOutcome]
    timeline: TimelineState

    @property
    def ledger(self) -> SettlementLedger:
        merged = SettlementLedger()
        for h in self.hours:
            merged.extend(h.ledger)
        return merged

    @property
    def contracts(self) -> list[BrsContract]:
        return [c for h in self.hours for c in h.contracts]

    def party_totals(self) -> dict[str, float]:
        return self.ledger.net_by_party()


def hour_context(
    cfg: ScenarioConfig, hour: int
) -> tuple[VgSchedule, PenaltyFactors, "forecast.ForecastDistribution"]:
    """Producer-side inputs (schedule, penalties, forecast) for one hour."""
    if not 0 <= hour < cfg.horizon:
        raise ValueError(f"hour {hour} outside horizon {cfg.horizon}")
    d = forecast.from_mean(
        cfg.vg.capacity_mw,
        cfg.vg.forecast_mean_mw[hour],
        coefficient=cfg.vg.variance_coefficient,
        scale=cfg.vg.variance_scale,
    )
    s = VgSchedule(da_quantity=cfg.vg.da_schedule_mw[hour], da_price=cfg.da_price[hour])
    return s, PenaltyFactors(over=cfg.penalty.over, under=cfg.penalty.under), d


def _unit_for_hour(uc: UnitConfig, hour: int) -> DispatchableUnit:
    return DispatchableUnit(
        kind=UnitKind(uc.kind),
        p_min=uc.p_min_mw,
        p_max=uc.p_max_mw,
        marginal_cost=uc.marginal_cost,
        da_schedule=uc.da_schedule_mw[hour],
    )


def simulate_day(cfg: ScenarioConfig) -> DayResult:
    """Run the full lifecycle for every hour of the scenario.

    Requires the scenario to declare offers and realized producer output.
    Deterministic for a fixed config (the seed only feeds the optional
    claim-time forecast error).
    """
    if cfg.vg.realized_mw is None:
        raise ValueError("scenario declares no realized output; cannot simulate")

    pf = PenaltyFactors(over=cfg.penalty.over, under=cfg.penalty.under)
    zonal_rule = (
        ZonalRule.from_pairs(cfg.zonal_rule.congested_boundaries)
        if cfg.zonal_rule is not None
        else None
    )
    unit_zones = {u.id: u.zone for u in cfg.units if u.zone is not None}
    rng = np.random.default_rng(cfg.seed)

    hours: list[HourOutcome] = []
    phases: list[Phase] = []
    next_contract_id = 0
    for h in range(cfg.horizon):
        d = forecast.from_mean(
            cfg.vg.capacity_mw,
            cfg.vg.forecast_mean_mw[h],
            coefficient=cfg.vg.variance_coefficient,
            scale=cfg.vg.variance_scale,
        )
        s = VgSchedule(da_quantity=cfg.vg.da_schedule_mw[h], da_price=cfg.da_price[h])
        units = {u.id: _unit_for_hour(u, h) for u in cfg.units}

        hm = HourMarket(h, buyer=cfg.vg.id, id_start=next_contract_id)
        hm.open_window()
        for oc in cfg.offers:
            if oc.hour != h:
                continue
            hm.post_offer(
                Offer(
                    seller=oc.seller,
                    hour=oc.hour,
                    direction=vg.Direction.from_label(oc.direction),
                    price=oc.price,
                    quantity=oc.quantity_mw,
                    zone=oc.zone if oc.zone is not None else (unit_zones.get(oc.seller)),
                )
            )
        hm.run_matching(s, pf, d)
        next_contract_id += len(hm.contracts)
        hm.close_window()
        hm.validate(units, cfg.vg.zone, unit_zones, zonal_rule)

        realized = cfg.vg.realized_mw[h]
        claimed = realized
        if cfg.vg.claim_error_std_mw > 0.0:
            claimed = float(
                np.clip(
                    realized + cfg.vg.claim_error_std_mw * rng.standard_normal(),
                    0.0,
                    cfg.vg.capacity_mw,
                )
            )
        claim = hm.claim(s.da_quantity, claimed)

        rt_price = cfg.rt_price[h]
        vg_modified = s.da_quantity + claim.executed_down - claim.executed_up
        unit_modified: dict[str, float] = {}
        unit_rt_output: dict[str, float] = {}
        for uc in cfg.units:
            u = units[uc.id]
            modified = (
                u.da_schedule
                - claim.per_seller_down.get(uc.id, 0.0)
                + claim.per_seller_up.get(uc.id, 0.0)
            )
            unit_modified[uc.id] = modified
            if uc.rt_mode == "modified_schedule":
                unit_rt_output[uc.id] = modified
            else:
                unit_rt_output[uc.id] = provider.rt_dispatch(u, rt_price)

        ledger = hm.settle(
            HourAccounts(
                hour=h,
                vg_id=cfg.vg.id,
                da_price=s.da_price,
                rt_price=rt_price,
                penalty=pf,
                vg_da_schedule=s.da_quantity,
                vg_realized=realized,
                contracts=hm.contracts,
                units=units,
                unit_rt_output=unit_rt_output,
            )
        )
        assert ledger.grand_total() == 0.0

        hours.append(
            HourOutcome(
                hour=h,
                vg_schedule=s.da_quantity,
                vg_modified=vg_modified,
                vg_realized=realized,
                unit_schedules={u.id: units[u.id].da_schedule for u in cfg.units},
                unit_modified=unit_modified,
                contracts=list(hm.contracts),
                ledger=ledger,
            )
        )
        phases.append(hm.phase)

    return DayResult(hours=hours, timeline=TimelineState(phases=tuple(phases)))


def contract_rows(result: DayResult) -> list[dict]:
    """Flat table of every contract signed during the day."""
    rows = []
    for c in result.contracts:
        rows.append(
            {
                "id": c.id,
                "hour": c.hour,
                "buyer": c.buyer,
                "seller": c.seller,
                "direction": c.direction.value,
                "quantity_mw": c.quantity,
                "premium_price": c.premium_price,
                "status": c.status.value,
                "executed_mw": c.executed_mw,
                "trimmed_mw": c.trimmed_mw,
            }
        )
    return rows


def ledger_rows(result: DayResult) -> list[dict]:
    return [
        {
            "hour": e.hour,
            "payer": e.payer,
            "payee": e.payee,
            "amount": e.amount,
            "tag": e.tag,
        }
        for e in result.ledger.entries
    ]


def totals_rows(result: DayResult) -> list[dict]:
    return [
        {"party": party, "net_cash": net}
        for party, net in result.party_totals().items()
    ]
