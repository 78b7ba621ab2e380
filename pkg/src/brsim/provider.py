"""Dispatchable-unit economics: RT dispatch, revenue with and without
executed re-dispatch, and the incremental cash-flow risk of selling cover.

Selling re-dispatch capacity moves the unit's settlement schedule by the
executed amount while its RT market position is priced at the RT price, so
the incremental cash flow per scenario is (da_price - rt_price) * shift.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class UnitKind(str, enum.Enum):
    BASE_LOAD = "base_load"
    MARGINAL = "marginal"


# Feasibility slack in MW. Full-headroom contracts reconstruct range edges by
# subtraction, which can land an ulp outside; the same slack is used by the
# matching and settlement layers.
_MW_EPS = 1e-9


class ContractInfeasibleError(ValueError):
    """Executed shift would push the unit outside its operating range."""


@dataclass(frozen=True)
class DispatchableUnit:
    kind: UnitKind
    p_min: float
    p_max: float
    marginal_cost: float
    da_schedule: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_min <= self.p_max:
            raise ValueError(f"need 0 <= p_min <= p_max, got [{self.p_min}, {self.p_max}]")
        if not self.p_min <= self.da_schedule <= self.p_max:
            raise ValueError(
                f"da_schedule {self.da_schedule} outside [{self.p_min}, {self.p_max}]"
            )
        if not math.isfinite(self.marginal_cost):
            raise ValueError("marginal_cost must be finite")


@dataclass(frozen=True)
class JointScenario:
    """One joint draw of prices and executed shift (signed MW, + = upward)."""

    da_price: float
    rt_price: float
    executed: float

    def __post_init__(self) -> None:
        if not self.da_price > 0.0:
            raise ValueError(f"da_price must be positive, got {self.da_price}")
        if not math.isfinite(self.rt_price) or not math.isfinite(self.executed):
            raise ValueError("rt_price and executed must be finite")


@dataclass(frozen=True)
class RiskReport:
    expected_delta: float
    variance_without: float
    variance_with: float
    incremental_variance: float


@dataclass(frozen=True)
class KindComparison:
    base: RiskReport
    marginal: RiskReport
    marginal_less_risky: bool


@dataclass(frozen=True)
class ScenarioModel:
    """Joint generator for (da_price, rt_price, executed).

    The price gap da-rt and the executed shift are zero-mean; ``correlation``
    couples the RT price with the shift (shortage hours: high RT price and
    upward execution together). ``execution_limit`` clips the shift so deep
    tails cannot leave a unit's operating range.
    """

    da_price_mean: float = 30.0
    da_price_std: float = 0.0
    gap_std: float = 5.0
    execution_std: float = 10.0
    correlation: float = 0.0
    execution_limit: float | None = None

    def __post_init__(self) -> None:
        if self.da_price_mean <= 0 or self.da_price_std < 0:
            raise ValueError("da price parameters out of range")
        if self.gap_std < 0 or self.execution_std < 0:
            raise ValueError("spreads must be >= 0")
        if not -1.0 <= self.correlation <= 1.0:
            raise ValueError(f"correlation must be in [-1, 1], got {self.correlation}")
        if self.execution_limit is not None and self.execution_limit <= 0:
            raise ValueError("execution_limit must be positive when set")


def rt_dispatch(u: DispatchableUnit, rt_price: float) -> float:
    """Merit-order RT output: full range against the RT price for marginal
    units, the DA schedule regardless of price for base load. A tie between
    RT price and marginal cost holds the schedule."""
    if u.kind is UnitKind.BASE_LOAD:
        return u.da_schedule
    if rt_price > u.marginal_cost:
        return u.p_max
    if rt_price < u.marginal_cost:
        return u.p_min
    return u.da_schedule


def revenue_unit(
    u: DispatchableUnit, sc: JointScenario, rt_output: float | None = None
) -> float:
    """Two-settlement revenue with no cover sold."""
    out = rt_dispatch(u, sc.rt_price) if rt_output is None else rt_output
    return sc.da_price * u.da_schedule + (out - u.da_schedule) * sc.rt_price


def revenue_unit_with_brs(
    u: DispatchableUnit, sc: JointScenario, rt_output: float | None = None
) -> float:
    """Revenue gross of premiums with sc.executed MW of shift applied to the
    settlement schedule."""
    shifted = u.da_schedule + sc.executed
    if not u.p_min - _MW_EPS <= shifted <= u.p_max + _MW_EPS:
        raise ContractInfeasibleError(
            f"shifted schedule {shifted} outside [{u.p_min}, {u.p_max}]"
        )
    out = rt_dispatch(u, sc.rt_price) if rt_output is None else rt_output
    return sc.da_price * shifted + (out - shifted) * sc.rt_price


def _scenario_arrays(scenarios: Sequence[JointScenario]) -> tuple[np.ndarray, ...]:
    da = np.fromiter((s.da_price for s in scenarios), dtype=float, count=len(scenarios))
    rt = np.fromiter((s.rt_price for s in scenarios), dtype=float, count=len(scenarios))
    ex = np.fromiter((s.executed for s in scenarios), dtype=float, count=len(scenarios))
    return da, rt, ex


def _dispatch_array(u: DispatchableUnit, rt: np.ndarray) -> np.ndarray:
    if u.kind is UnitKind.BASE_LOAD:
        return np.full_like(rt, u.da_schedule)
    return np.where(
        rt > u.marginal_cost,
        u.p_max,
        np.where(rt < u.marginal_cost, u.p_min, u.da_schedule),
    )


def risk_report(
    u: DispatchableUnit,
    scenarios: Sequence[JointScenario],
    weights: Sequence[float] | None = None,
) -> RiskReport:
    """Moments of the incremental cash flow over a scenario set.

    Unweighted sets are treated as samples (variance with n-1). A weighted
    set is an exhaustive enumeration of a discrete joint law; moments are
    then exact under the weights.
    """
    if len(scenarios) < 2:
        raise ValueError(f"need at least 2 scenarios, got {len(scenarios)}")
    da, rt, ex = _scenario_arrays(scenarios)
    shifted = u.da_schedule + ex
    bad = (shifted < u.p_min - _MW_EPS) | (shifted > u.p_max + _MW_EPS)
    if bad.any():
        i = int(np.argmax(bad))
        raise ContractInfeasibleError(
            f"scenario {i}: shifted schedule {shifted[i]} outside "
            f"[{u.p_min}, {u.p_max}]"
        )
    out = _dispatch_array(u, rt)
    rev0 = da * u.da_schedule + (out - u.da_schedule) * rt
    rev1 = da * shifted + (out - shifted) * rt
    delta = rev1 - rev0

    if weights is None:
        mean_delta = float(np.mean(delta))
        var0 = float(np.var(rev0, ddof=1))
        var1 = float(np.var(rev1, ddof=1))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(scenarios),):
            raise ValueError("weights must match the scenario count")
        if (w < 0).any() or not math.isclose(float(w.sum()), 1.0, rel_tol=1e-12):
            raise ValueError("weights must be nonnegative and sum to 1")
        mean_delta = float(w @ delta)
        var0 = float(w @ (rev0 - w @ rev0) ** 2)
        var1 = float(w @ (rev1 - w @ rev1) ** 2)
    return RiskReport(
        expected_delta=mean_delta,
        variance_without=var0,
        variance_with=var1,
        incremental_variance=var1 - var0,
    )


def compare_kinds(
    base: DispatchableUnit,
    marginal: DispatchableUnit,
    scenarios: Sequence[JointScenario],
    weights: Sequence[float] | None = None,
) -> KindComparison:
    """Same scenario set applied to both unit kinds; reports whether selling
    cover adds less cash-flow variance to the marginal unit."""
    if base.kind is not UnitKind.BASE_LOAD or marginal.kind is not UnitKind.MARGINAL:
        raise ValueError("compare_kinds expects (base_load, marginal) units in that order")
    rb = risk_report(base, scenarios, weights)
    rm = risk_report(marginal, scenarios, weights)
    return KindComparison(
        base=rb,
        marginal=rm,
        marginal_less_risky=rm.incremental_variance < rb.incremental_variance,
    )


def generate_scenarios(model: ScenarioModel, n: int, seed: int) -> list[JointScenario]:
    """Seeded joint draws. The shift is built from the same normal factor as
    the price gap so corr(rt_price, executed) equals model.correlation when
    the DA price is flat."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    z1, z2, z3 = rng.standard_normal((3, n))
    da = model.da_price_mean + model.da_price_std * z3
    if (da <= 0).any():
        raise ValueError("da_price_std too large: drew a non-positive DA price")
    gap = model.gap_std * z1
    rt = da - gap
    rho = model.correlation
    shift = model.execution_std * (rho * (-z1) + math.sqrt(1.0 - rho * rho) * z2)
    if model.execution_limit is not None:
        shift = np.clip(shift, -model.execution_limit, model.execution_limit)
    return [
        JointScenario(da_price=float(da[i]), rt_price=float(rt[i]), executed=float(shift[i]))
        for i in range(n)
    ]


def exhaustive_scenarios(
    model: ScenarioModel,
) -> tuple[list[JointScenario], list[float]]:
    """Two-point enumeration of the joint law: gap in {-gap_std, +gap_std},
    shift in {-execution_std, +execution_std}, equiprobable, DA price at its
    mean. Returns (scenarios, probability weights)."""
    da = model.da_price_mean
    scenarios = [
        JointScenario(da_price=da, rt_price=da - g, executed=s)
        for g in (-model.gap_std, model.gap_std)
        for s in (-model.execution_std, model.execution_std)
    ]
    return scenarios, [0.25, 0.25, 0.25, 0.25]
