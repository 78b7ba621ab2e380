"""Bilateral re-dispatch capacity market for one delivery hour.

Lifecycle: DA clearing happens elsewhere; this module runs the capacity
window (offers, matching), physical validation against seller headroom,
execution claims against realized output, and the cash settlement that makes
every hour a closed zero-sum ledger against the settlement pool.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

from . import vg as vg_econ
from .forecast import ForecastDistribution
from .provider import DispatchableUnit
from .vg import DOWN, UP, BrsPosition, Direction, PenaltyFactors, VgSchedule

POOL = "pool"

LEDGER_TAGS = ("premium", "da_energy", "brs_energy_shift", "rt_imbalance", "penalty")

# MW below which a fill or execution share is treated as nothing.
_MW_EPS = 1e-9


class PhaseError(RuntimeError):
    """Operation attempted outside its lifecycle phase."""


class Phase(enum.Enum):
    DA_CLEARED = 0
    BRS_WINDOW_OPEN = 1
    BRS_WINDOW_CLOSED = 2
    VALIDATED = 3
    RT_CLAIMED = 4
    SETTLED = 5


class ContractStatus(str, enum.Enum):
    SIGNED = "signed"
    VALIDATED = "validated"
    REJECTED = "rejected"
    EXECUTED = "executed"
    RELEASED = "released"


_LEGAL_TRANSITIONS = {
    ContractStatus.SIGNED: {ContractStatus.VALIDATED, ContractStatus.REJECTED},
    ContractStatus.VALIDATED: {ContractStatus.EXECUTED, ContractStatus.RELEASED},
    ContractStatus.REJECTED: set(),
    ContractStatus.EXECUTED: set(),
    ContractStatus.RELEASED: set(),
}


@dataclass(frozen=True)
class Offer:
    """Standing sell offer for re-dispatch capacity in one hour."""

    seller: str
    hour: int
    direction: Direction
    price: float
    quantity: float
    zone: str | None = None

    def __post_init__(self) -> None:
        if self.quantity <= 0.0:
            raise ValueError(f"offer quantity must be positive, got {self.quantity}")
        if self.price < 0.0:
            raise ValueError(f"offer price must be >= 0, got {self.price}")
        if self.hour < 0:
            raise ValueError(f"hour must be >= 0, got {self.hour}")


@dataclass
class BrsContract:
    """Signed cover for one hour. executed_mw is set when the claim lands;
    trimmed_mw records quantity removed at validation."""

    id: int
    buyer: str
    seller: str
    hour: int
    direction: Direction
    quantity: float
    premium_price: float
    status: ContractStatus = ContractStatus.SIGNED
    executed_mw: float = 0.0
    trimmed_mw: float = 0.0

    def __post_init__(self) -> None:
        if self.quantity <= 0.0:
            raise ValueError(f"contract quantity must be positive, got {self.quantity}")
        if self.premium_price < 0.0:
            raise ValueError(f"premium price must be >= 0, got {self.premium_price}")
        if self.buyer == self.seller:
            raise ValueError("buyer and seller must differ")

    def transition(self, new_status: ContractStatus) -> None:
        if new_status not in _LEGAL_TRANSITIONS[self.status]:
            raise PhaseError(
                f"contract {self.id}: illegal transition "
                f"{self.status.value} -> {new_status.value}"
            )
        self.status = new_status


@dataclass(frozen=True)
class ZonalRule:
    """Binary prohibition: no contracts across the flagged zone boundaries."""

    congested_boundaries: frozenset[frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs) -> "ZonalRule":
        boundaries = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"boundary must join two distinct zones, got ({a}, {b})")
            boundaries.add(frozenset((a, b)))
        return cls(congested_boundaries=frozenset(boundaries))

    def blocks(self, zone_a: str | None, zone_b: str | None) -> bool:
        if zone_a is None or zone_b is None or zone_a == zone_b:
            return False
        return frozenset((zone_a, zone_b)) in self.congested_boundaries


@dataclass(frozen=True)
class LedgerEntry:
    hour: int
    payer: str
    payee: str
    amount: float
    tag: str


class SettlementLedger:
    """Append-only double-entry ledger. Every flow names a payer and a payee,
    so the grand total over all parties is zero by construction."""

    def __init__(self) -> None:
        self.entries: list[LedgerEntry] = []

    def add(self, hour: int, payer: str, payee: str, amount: float, tag: str) -> None:
        if payer == payee:
            raise ValueError(f"payer and payee must differ, both {payer!r}")
        if tag not in LEDGER_TAGS:
            raise ValueError(f"unknown ledger tag {tag!r}")
        if amount < 0.0 or not math.isfinite(amount):
            raise ValueError(f"amount must be finite and >= 0, got {amount}")
        if amount == 0.0:
            return
        self.entries.append(LedgerEntry(hour, payer, payee, amount, tag))

    def extend(self, other: "SettlementLedger") -> None:
        self.entries.extend(other.entries)

    def parties(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.payer)
            seen.setdefault(e.payee)
        return list(seen)

    def net(self, party: str) -> float:
        total = 0.0
        for e in self.entries:
            if e.payee == party:
                total += e.amount
            if e.payer == party:
                total -= e.amount
        return total

    def net_by_party(self) -> dict[str, float]:
        return {p: self.net(p) for p in self.parties()}

    def grand_total(self) -> float:
        # Entry-wise +amount/-amount keeps the running sum exactly zero in
        # floating point, which the per-hour assertion relies on.
        total = 0.0
        for e in self.entries:
            total += e.amount
            total -= e.amount
        return total


@dataclass(frozen=True)
class ExecutionClaim:
    """Outcome of claiming execution against (near-)RT output."""

    executed_down: float
    executed_up: float
    per_seller_down: dict[str, float]
    per_seller_up: dict[str, float]


def match_offers(
    offers: list[Offer],
    s: VgSchedule,
    pf: PenaltyFactors,
    d: ForecastDistribution,
    direction: Direction,
    buyer: str,
    id_start: int = 0,
) -> list[BrsContract]:
    """Greedy price-priority match of one side of the book against the
    buyer's marginal-value curve.

    Walks price levels ascending; each level is taken up to the buyer's
    optimal total at that price (beyond it the marginal value is below the
    price). A level that only partially fits is allocated pro-rata by offer
    quantity.
    """
    book = sorted(
        [o for o in offers if o.direction is direction],
        key=lambda o: o.price,
    )
    contracts: list[BrsContract] = []
    taken = 0.0
    next_id = id_start
    for price, level_iter in itertools.groupby(book, key=lambda o: o.price):
        level = list(level_iter)
        desired = vg_econ.optimal_quantity(s, pf, d, direction, price)
        room = desired - taken
        if room <= _MW_EPS:
            break
        level_qty = sum(o.quantity for o in level)
        if level_qty <= room:
            fills = [(o, o.quantity) for o in level]
        else:
            fills = [(o, room * o.quantity / level_qty) for o in level]
        for o, mw in fills:
            if mw <= _MW_EPS:
                continue
            contracts.append(
                BrsContract(
                    id=next_id,
                    buyer=buyer,
                    seller=o.seller,
                    hour=o.hour,
                    direction=direction,
                    quantity=mw,
                    premium_price=price,
                )
            )
            next_id += 1
            taken += mw
        if level_qty > room:
            break
    return contracts


def validate_contracts(
    contracts: list[BrsContract],
    units: dict[str, DispatchableUnit],
    buyer_zone: str | None = None,
    unit_zones: dict[str, str] | None = None,
    zonal_rule: ZonalRule | None = None,
) -> None:
    """Physical validation against seller headroom, oldest contracts first.

    Upward cover consumes p_max - da_schedule, downward consumes
    da_schedule - p_min. A contract that straddles the remaining headroom is
    trimmed (the overflow MW are rejected); strictly newer contracts on an
    exhausted side are rejected whole. Optional zonal rule rejects contracts
    across flagged boundaries outright.
    """
    used: dict[tuple[str, Direction], float] = {}
    for c in sorted(contracts, key=lambda c: c.id):
        if c.status is not ContractStatus.SIGNED:
            raise PhaseError(f"contract {c.id} already {c.status.value}, cannot validate")
        if c.seller not in units:
            raise ValueError(f"contract {c.id}: unknown seller {c.seller!r}")
        seller_zone = (unit_zones or {}).get(c.seller)
        if zonal_rule is not None and zonal_rule.blocks(buyer_zone, seller_zone):
            c.transition(ContractStatus.REJECTED)
            continue
        u = units[c.seller]
        if c.direction is UP:
            headroom = u.p_max - u.da_schedule
        else:
            headroom = u.da_schedule - u.p_min
        key = (c.seller, c.direction)
        room = headroom - used.get(key, 0.0)
        if room <= _MW_EPS:
            c.transition(ContractStatus.REJECTED)
            continue
        if c.quantity > room:
            c.trimmed_mw = c.quantity - room
            c.quantity = room
        used[key] = used.get(key, 0.0) + c.quantity
        c.transition(ContractStatus.VALIDATED)


def claim_execution(
    contracts: list[BrsContract],
    da_quantity: float,
    claimed_output: float,
) -> ExecutionClaim:
    """Turn a near-RT output claim into per-contract executions.

    Only the deviation side executes, capped by the contracted total, and the
    cap is shared pro-rata by contract quantity. Remainders are released.
    """
    validated = [c for c in contracts if c.status is ContractStatus.VALIDATED]
    for c in contracts:
        if c.status is ContractStatus.SIGNED:
            raise PhaseError(f"contract {c.id} not validated, cannot claim")
    deviation = claimed_output - da_quantity
    per_seller: dict[Direction, dict[str, float]] = {DOWN: {}, UP: {}}
    totals = {DOWN: 0.0, UP: 0.0}
    for direction in (DOWN, UP):
        side = [c for c in validated if c.direction is direction]
        side_qty = sum(c.quantity for c in side)
        want = max(deviation, 0.0) if direction is DOWN else max(-deviation, 0.0)
        total = min(want, side_qty)
        for c in side:
            mw = total * (c.quantity / side_qty) if side_qty > 0.0 else 0.0
            if mw > _MW_EPS:
                c.executed_mw = mw
                c.transition(ContractStatus.EXECUTED)
                bucket = per_seller[direction]
                bucket[c.seller] = bucket.get(c.seller, 0.0) + mw
            else:
                c.transition(ContractStatus.RELEASED)
        totals[direction] = sum(per_seller[direction].values())
    return ExecutionClaim(
        executed_down=totals[DOWN],
        executed_up=totals[UP],
        per_seller_down=per_seller[DOWN],
        per_seller_up=per_seller[UP],
    )


def apply_execution(
    vg_schedule: float,
    provider_schedule: float,
    executed_down: float,
    executed_up: float,
) -> tuple[float, float]:
    """Shift both settlement schedules by the executed amounts; the total is
    conserved exactly."""
    if executed_down < 0.0 or executed_up < 0.0:
        raise ValueError("executed amounts must be >= 0")
    shift = executed_down - executed_up
    return vg_schedule + shift, provider_schedule - shift


@dataclass(frozen=True)
class HourAccounts:
    """Everything settle needs for one hour, after claims are applied."""

    hour: int
    vg_id: str
    da_price: float
    rt_price: float
    penalty: PenaltyFactors
    vg_da_schedule: float
    vg_realized: float
    contracts: list[BrsContract]
    units: dict[str, DispatchableUnit]
    unit_rt_output: dict[str, float]


def settle(acc: HourAccounts) -> SettlementLedger:
    """Cash out one hour into a zero-sum ledger.

    Premiums are owed on the full validated quantity (released cover is still
    paid for). DA energy is settled on original schedules, with a bilateral
    transfer at the DA price moving the executed MW so both sides effectively
    settle on modified schedules. Residual deviations clear against the pool:
    the producer at the penalized DA price, units at the RT price.
    """
    lam_d, lam_r = acc.da_price, acc.rt_price
    ledger = SettlementLedger()

    executed_down: dict[str, float] = {}
    executed_up: dict[str, float] = {}
    for c in acc.contracts:
        if c.status is ContractStatus.REJECTED:
            continue
        if c.status not in (ContractStatus.EXECUTED, ContractStatus.RELEASED):
            raise PhaseError(f"contract {c.id} still {c.status.value} at settlement")
        ledger.add(acc.hour, c.buyer, c.seller, c.premium_price * c.quantity, "premium")
        if c.status is ContractStatus.EXECUTED:
            side = executed_down if c.direction is DOWN else executed_up
            side[c.seller] = side.get(c.seller, 0.0) + c.executed_mw

    # DA energy on original schedules.
    ledger.add(acc.hour, POOL, acc.vg_id, lam_d * acc.vg_da_schedule, "da_energy")
    for uid, u in acc.units.items():
        ledger.add(acc.hour, POOL, uid, lam_d * u.da_schedule, "da_energy")

    # Bilateral transfer of the executed MW at the DA price.
    vg_shift = 0.0
    for uid, mw in executed_down.items():
        ledger.add(acc.hour, uid, acc.vg_id, lam_d * mw, "brs_energy_shift")
        vg_shift += mw
    for uid, mw in executed_up.items():
        ledger.add(acc.hour, acc.vg_id, uid, lam_d * mw, "brs_energy_shift")
        vg_shift -= mw

    # Producer residual deviation vs the pool at the penalized DA price.
    vg_modified = acc.vg_da_schedule + vg_shift
    residual = acc.vg_realized - vg_modified
    if residual > 0.0:
        ledger.add(
            acc.hour, POOL, acc.vg_id, (1.0 - acc.penalty.over) * lam_d * residual,
            "rt_imbalance",
        )
    elif residual < 0.0:
        ledger.add(
            acc.hour, acc.vg_id, POOL, (1.0 + acc.penalty.under) * lam_d * (-residual),
            "rt_imbalance",
        )

    # Unit deviations from modified schedules vs the pool at the RT price.
    for uid, u in acc.units.items():
        modified = u.da_schedule - executed_down.get(uid, 0.0) + executed_up.get(uid, 0.0)
        if not u.p_min - _MW_EPS <= modified <= u.p_max + _MW_EPS:
            raise AssertionError(
                f"unit {uid} pushed to {modified} MW despite validation"
            )
        if uid not in acc.unit_rt_output:
            raise ValueError(f"missing RT output for unit {uid!r}")
        dev = acc.unit_rt_output[uid] - modified
        if lam_r >= 0.0:
            if dev > 0.0:
                ledger.add(acc.hour, POOL, uid, lam_r * dev, "rt_imbalance")
            elif dev < 0.0:
                ledger.add(acc.hour, uid, POOL, lam_r * (-dev), "rt_imbalance")
        else:
            # Negative RT price flips who owes whom for the same deviation.
            if dev > 0.0:
                ledger.add(acc.hour, uid, POOL, -lam_r * dev, "rt_imbalance")
            elif dev < 0.0:
                ledger.add(acc.hour, POOL, uid, -lam_r * (-dev), "rt_imbalance")

    return ledger


class HourMarket:
    """Phase machine for one delivery hour.

    open_window -> post_offer*/run_matching -> close_window -> validate ->
    claim -> settle. Operations outside their phase raise PhaseError.
    """

    def __init__(self, hour: int, buyer: str = "vg", id_start: int = 0) -> None:
        self.hour = hour
        self.buyer = buyer
        self.id_start = id_start
        self.phase = Phase.DA_CLEARED
        self.offers: list[Offer] = []
        self.contracts: list[BrsContract] = []
        self._claim: ExecutionClaim | None = None

    def _require(self, *phases: Phase) -> None:
        if self.phase not in phases:
            allowed = ", ".join(p.name for p in phases)
            raise PhaseError(
                f"hour {self.hour}: operation requires phase {allowed}, "
                f"currently {self.phase.name}"
            )

    def open_window(self) -> Phase:
        self._require(Phase.DA_CLEARED)
        self.phase = Phase.BRS_WINDOW_OPEN
        return self.phase

    def post_offer(self, offer: Offer) -> bool:
        self._require(Phase.BRS_WINDOW_OPEN)
        if offer.hour != self.hour:
            raise ValueError(f"offer for hour {offer.hour} posted to hour {self.hour}")
        self.offers.append(offer)
        return True

    def run_matching(
        self, s: VgSchedule, pf: PenaltyFactors, d: ForecastDistribution
    ) -> list[BrsContract]:
        self._require(Phase.BRS_WINDOW_OPEN)
        for direction in (DOWN, UP):
            new = match_offers(
                self.offers, s, pf, d, direction, self.buyer,
                id_start=self.id_start + len(self.contracts),
            )
            self.contracts.extend(new)
        return self.contracts

    def close_window(self) -> Phase:
        self._require(Phase.BRS_WINDOW_OPEN)
        self.phase = Phase.BRS_WINDOW_CLOSED
        return self.phase

    def validate(
        self,
        units: dict[str, DispatchableUnit],
        buyer_zone: str | None = None,
        unit_zones: dict[str, str] | None = None,
        zonal_rule: ZonalRule | None = None,
    ) -> Phase:
        self._require(Phase.BRS_WINDOW_CLOSED)
        validate_contracts(self.contracts, units, buyer_zone, unit_zones, zonal_rule)
        self.phase = Phase.VALIDATED
        return self.phase

    def claim(self, da_quantity: float, claimed_output: float) -> ExecutionClaim:
        self._require(Phase.VALIDATED)
        self._claim = claim_execution(self.contracts, da_quantity, claimed_output)
        self.phase = Phase.RT_CLAIMED
        return self._claim

    def settle(self, acc: HourAccounts) -> SettlementLedger:
        self._require(Phase.RT_CLAIMED)
        ledger = settle(acc)
        self.phase = Phase.SETTLED
        return ledger

    def position(self) -> BrsPosition:
        """Validated cover as a position (premiums averaged per side)."""
        down = [c for c in self.contracts if c.direction is DOWN and c.status
                in (ContractStatus.VALIDATED, ContractStatus.EXECUTED, ContractStatus.RELEASED)]
        up = [c for c in self.contracts if c.direction is UP and c.status
              in (ContractStatus.VALIDATED, ContractStatus.EXECUTED, ContractStatus.RELEASED)]
        down_qty = sum(c.quantity for c in down)
        up_qty = sum(c.quantity for c in up)
        down_cost = sum(c.premium_price * c.quantity for c in down)
        up_cost = sum(c.premium_price * c.quantity for c in up)
        return BrsPosition(
            down_qty=down_qty,
            up_qty=up_qty,
            down_price=down_cost / down_qty if down_qty > 0 else 0.0,
            up_price=up_cost / up_qty if up_qty > 0 else 0.0,
        )
