"""Variable-generation producer economics.

Two-settlement cash flows for a producer whose day-ahead schedule can miss,
with optional bilateral re-dispatch capacity (BRS) bought from dispatchable
units to absorb part of the miss. Downward BRS covers over-generation (the
counterparty backs its schedule down); upward BRS covers under-generation
(the counterparty ramps up).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import forecast
from .forecast import ForecastDistribution


class Direction(str, enum.Enum):
    """Re-dispatch direction, named by what the capacity covers for the buyer."""

    DOWN_COVERS_OVER = "down"
    UP_COVERS_UNDER = "up"

    @classmethod
    def from_label(cls, label: str) -> "Direction":
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown direction {label!r}, expected 'down' or 'up'")


DOWN = Direction.DOWN_COVERS_OVER
UP = Direction.UP_COVERS_UNDER


@dataclass(frozen=True)
class PenaltyFactors:
    """Deviation penalty fractions of the DA price: over-generation is paid
    (1-over)*price, under-generation is charged (1+under)*price."""

    over: float
    under: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.over <= 1.0:
            raise ValueError(
                f"over-generation penalty factor must be in [0, 1], got {self.over}"
            )
        if self.under < 0.0:
            raise ValueError(
                f"under-generation penalty factor must be >= 0, got {self.under}"
            )


@dataclass(frozen=True)
class VgSchedule:
    """Cleared day-ahead position: scheduled MW and the DA energy price."""

    da_quantity: float
    da_price: float

    def __post_init__(self) -> None:
        if self.da_quantity < 0.0:
            raise ValueError(f"da_quantity must be >= 0, got {self.da_quantity}")
        if not self.da_price > 0.0:
            raise ValueError(f"da_price must be positive, got {self.da_price}")


@dataclass(frozen=True)
class BrsPosition:
    """Contracted re-dispatch capacity: quantities in MW, premiums in $/MW."""

    down_qty: float
    up_qty: float
    down_price: float
    up_price: float

    def __post_init__(self) -> None:
        if self.down_qty < 0.0 or self.up_qty < 0.0:
            raise ValueError("position quantities must be >= 0")
        if self.down_price < 0.0 or self.up_price < 0.0:
            raise ValueError("premium prices must be >= 0")


ZERO_POSITION = BrsPosition(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DemandCurve:
    direction: Direction
    points: tuple[tuple[float, float], ...]  # (quantity MW, marginal value $/MW)


@dataclass(frozen=True)
class OicReport:
    """Opportunity/imbalance cost breakdown for one hour."""

    premium_paid: float
    expected_residual_penalty: float
    total_oic: float
    consumer_surplus: float


def _check_actual(actual: float, capacity: float | None) -> None:
    if actual < 0.0 or not math.isfinite(actual):
        raise ValueError(f"actual output must be finite and >= 0, got {actual}")
    if capacity is not None and actual > capacity:
        raise ValueError(f"actual output {actual} exceeds capacity {capacity}")


def _check_schedule_fits(s: VgSchedule, d: ForecastDistribution) -> None:
    if s.da_quantity > d.capacity:
        raise ValueError(
            f"da_quantity {s.da_quantity} exceeds forecast capacity {d.capacity}"
        )


def _check_position_fits(pos: BrsPosition, s: VgSchedule, d: ForecastDistribution) -> None:
    _check_schedule_fits(s, d)
    if pos.down_qty > d.capacity - s.da_quantity + 1e-9:
        raise ValueError(
            f"down_qty {pos.down_qty} exceeds headroom {d.capacity - s.da_quantity}"
        )
    if pos.up_qty > s.da_quantity + 1e-9:
        raise ValueError(f"up_qty {pos.up_qty} exceeds schedule {s.da_quantity}")


def revenue_realized(
    s: VgSchedule, pf: PenaltyFactors, actual: float, capacity: float | None = None
) -> float:
    """Settled revenue with no re-dispatch cover: deviations clear at the
    penalized DA price."""
    _check_actual(actual, capacity)
    lam = s.da_price
    if actual >= s.da_quantity:
        return lam * s.da_quantity + (1.0 - pf.over) * lam * (actual - s.da_quantity)
    return lam * s.da_quantity - (1.0 + pf.under) * lam * (s.da_quantity - actual)


def revenue_with_brs(
    s: VgSchedule,
    pf: PenaltyFactors,
    pos: BrsPosition,
    actual: float,
    capacity: float | None = None,
) -> float:
    """Settled revenue gross of premiums, with the covered band [schedule -
    up_qty, schedule + down_qty] paying the full DA price."""
    _check_actual(actual, capacity)
    if pos.up_qty > s.da_quantity + 1e-9:
        raise ValueError(f"up_qty {pos.up_qty} exceeds schedule {s.da_quantity}")
    if capacity is not None and pos.down_qty > capacity - s.da_quantity + 1e-9:
        raise ValueError("down_qty exceeds headroom")
    lam = s.da_price
    hi = s.da_quantity + pos.down_qty
    lo = s.da_quantity - pos.up_qty
    if actual > hi:
        return lam * hi + (1.0 - pf.over) * lam * (actual - hi)
    if actual < lo:
        return lam * lo - (1.0 + pf.under) * lam * (lo - actual)
    return lam * actual


def premium_cost(pos: BrsPosition) -> float:
    return pos.down_price * pos.down_qty + pos.up_price * pos.up_qty


def expected_revenue(
    s: VgSchedule, pf: PenaltyFactors, pos: BrsPosition, d: ForecastDistribution
) -> float:
    """Expectation of revenue_with_brs under the forecast, in closed form.

    Gross of premiums. Splits the support at the covered band's edges and
    reduces each piece to CDF / partial-expectation terms.
    """
    _check_position_fits(pos, s, d)
    lam = s.da_price
    lo = max(s.da_quantity - pos.up_qty, 0.0)
    hi = min(s.da_quantity + pos.down_qty, d.capacity)
    f_lo = forecast.cdf(d, lo)
    f_hi = forecast.cdf(d, hi)
    pe_below = forecast.partial_expectation(d, 0.0, lo)
    pe_mid = forecast.partial_expectation(d, lo, hi)
    pe_above = forecast.partial_expectation(d, hi, d.capacity)
    below = (1.0 + pf.under) * pe_below - pf.under * lo * f_lo
    above = pf.over * hi * (1.0 - f_hi) + (1.0 - pf.over) * pe_above
    return lam * (below + pe_mid + above)


def net_expected_revenue(
    s: VgSchedule, pf: PenaltyFactors, pos: BrsPosition, d: ForecastDistribution
) -> float:
    """expected_revenue minus the deterministic premium outlay."""
    return expected_revenue(s, pf, pos, d) - premium_cost(pos)


def marginal_utility_down(
    s: VgSchedule, pf: PenaltyFactors, d: ForecastDistribution, r: float
) -> float:
    """Marginal value ($/MW) of the next MW of over-generation cover at depth r."""
    _check_schedule_fits(s, d)
    if not 0.0 <= r <= d.capacity - s.da_quantity + 1e-9:
        raise ValueError(f"r={r} outside [0, {d.capacity - s.da_quantity}]")
    return s.da_price * pf.over * (1.0 - forecast.cdf(d, s.da_quantity + r))


def marginal_utility_up(
    s: VgSchedule, pf: PenaltyFactors, d: ForecastDistribution, r: float
) -> float:
    """Marginal value ($/MW) of the next MW of under-generation cover at depth r."""
    _check_schedule_fits(s, d)
    if not 0.0 <= r <= s.da_quantity + 1e-9:
        raise ValueError(f"r={r} outside [0, {s.da_quantity}]")
    return s.da_price * pf.under * forecast.cdf(d, s.da_quantity - r)


def marginal_utility(
    s: VgSchedule,
    pf: PenaltyFactors,
    d: ForecastDistribution,
    direction: Direction,
    r: float,
) -> float:
    if direction is DOWN:
        return marginal_utility_down(s, pf, d, r)
    return marginal_utility_up(s, pf, d, r)


def _clip(x: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, x))


def optimal_quantity(
    s: VgSchedule,
    pf: PenaltyFactors,
    d: ForecastDistribution,
    direction: Direction,
    price: float,
) -> float:
    """Critical-fractile optimum for one side at a flat premium price."""
    _check_schedule_fits(s, d)
    if price < 0.0:
        raise ValueError(f"premium price must be >= 0, got {price}")
    lam = s.da_price
    if direction is DOWN:
        if pf.over <= 0.0 or price >= lam * pf.over:
            return 0.0
        level = forecast.quantile(d, 1.0 - price / (lam * pf.over))
        return _clip(level - s.da_quantity, 0.0, d.capacity - s.da_quantity)
    if pf.under <= 0.0 or price >= lam * pf.under:
        return 0.0
    level = forecast.quantile(d, price / (lam * pf.under))
    return _clip(s.da_quantity - level, 0.0, s.da_quantity)


def optimal_position(
    s: VgSchedule,
    pf: PenaltyFactors,
    d: ForecastDistribution,
    down_price: float,
    up_price: float,
) -> BrsPosition:
    """Profit-maximizing cover at flat premium prices, one side at a time
    (the objective is separable)."""
    return BrsPosition(
        down_qty=optimal_quantity(s, pf, d, DOWN, down_price),
        up_qty=optimal_quantity(s, pf, d, UP, up_price),
        down_price=down_price,
        up_price=up_price,
    )


def demand_curve(
    s: VgSchedule,
    pf: PenaltyFactors,
    d: ForecastDistribution,
    direction: Direction,
    n_points: int,
) -> DemandCurve:
    """Marginal value sampled on an even quantity grid over [0, headroom]."""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    _check_schedule_fits(s, d)
    headroom = (
        d.capacity - s.da_quantity if direction is DOWN else s.da_quantity
    )
    step = headroom / (n_points - 1)
    pts = []
    for i in range(n_points):
        q = min(i * step, headroom)
        pts.append((q, marginal_utility(s, pf, d, direction, q)))
    return DemandCurve(direction=direction, points=tuple(pts))


def oic_report(
    s: VgSchedule, pf: PenaltyFactors, pos: BrsPosition, d: ForecastDistribution
) -> OicReport:
    """Opportunity/imbalance cost of a position vs. the penalty-free ideal.

    total = premiums + (ideal revenue - expected gross revenue); surplus is
    the cost saved relative to holding no cover at all.
    """
    ideal = s.da_price * d.mean
    premium = premium_cost(pos)
    residual = ideal - expected_revenue(s, pf, pos, d)
    total = premium + residual
    baseline = ideal - expected_revenue(s, pf, ZERO_POSITION, d)
    return OicReport(
        premium_paid=premium,
        expected_residual_penalty=residual,
        total_oic=total,
        consumer_surplus=baseline - total,
    )
