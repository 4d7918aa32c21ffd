"""Two-leg escape plans.

Flow along ``v_perp`` until the stream function reaches a level ``t0`` whose
level set inside the disk is short, then flow along ``v``, which follows that
level set out of the disk.  The total is at most ``sqrt(4 pi c2/c1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConsistencyError, HypothesisViolated
from .fieldcore import Disk, FieldBounds, PlanarField, Point2, estimate_bounds, perpendicular
from .flow import (
    Event,
    FlowCurve,
    disk_exit_event,
    escape_length,
    integrate_unit_speed,
)
from .stream import ScalarGrid, compute_stream_function, find_short_level

PLAN_TOL = 0.05
DEFAULT_H = 1 / 256
MAX_LEVEL_RETRIES = 3


@dataclass(frozen=True)
class EscapePlan:
    start: Point2
    t0: float
    s_leg: FlowCurve = field(repr=False)
    t_leg: FlowCurve = field(repr=False)
    total_length: float
    bound: float
    satisfied: bool
    mode: str
    bounds: FieldBounds = field(repr=False)
    level_length: float = math.nan
    attempts: int = 1
    t_direction: str = "forward"

    @property
    def exit_point(self) -> Point2:
        leg = self.t_leg if len(self.t_leg) > 1 else self.s_leg
        return leg.end

    def to_dict(self) -> dict:
        return {
            "start": list(self.start),
            "t0": self.t0,
            "bound": self.bound,
            "total_length": self.total_length,
            "satisfied": self.satisfied,
            "mode": self.mode,
            "c1": self.bounds.c1,
            "c2": self.bounds.c2,
            "level_length": self.level_length,
            "t_direction": self.t_direction,
            "s_leg": self.s_leg.points.tolist(),
            "t_leg": self.t_leg.points.tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def plan_bound(bounds: FieldBounds, mode: str = "unsigned") -> float:
    """``sqrt(4 pi c2/c1)``, halved for the signed variant."""
    full = math.sqrt(4 * math.pi * bounds.c2 / bounds.c1)
    return full if mode == "unsigned" else full / 2


def _level_event(grid: ScalarGrid, t0: float, rising: bool) -> Event:
    if rising:
        return Event("level", lambda x, y: grid(x, y) - t0)
    return Event("level", lambda x, y: t0 - grid(x, y))


def _still(p: Point2, name: str, direction: str) -> FlowCurve:
    return FlowCurve(np.zeros(1), np.array([p], dtype=float), p, name, direction)


def _s_leg(f: PlanarField, grid: ScalarGrid, p0: Point2, t0: float, d: Disk, budget: float):
    """Flow along ``±v_perp`` until ``A = t0`` or the disk boundary."""
    if t0 == 0.0:
        return _still(p0, f.name, "forward"), None
    rising = t0 > 0
    perp = perpendicular(f) if rising else perpendicular(f).reversed()
    events = [_level_event(grid, t0, rising), disk_exit_event(d.center, d.radius)]
    curve, hit = integrate_unit_speed(perp, p0, budget, events)
    return curve, hit


def _t_leg(f: PlanarField, q: Point2, d: Disk, budget: float, directions):
    """Flow along ``v`` (then ``-v``) from ``q``; first direction that exits wins."""
    exit_ev = [disk_exit_event(d.center, d.radius)]
    for direction in directions:
        g = f if direction == "forward" else f.reversed()
        curve, hit = integrate_unit_speed(g, q, budget, exit_ev)
        if hit is not None:
            return curve, direction
    return None, None


def plan_escape(f: PlanarField, p0: Point2 = (0.0, 0.0), mode: str = "unsigned", *,
                h: float = DEFAULT_H, bounds: Optional[FieldBounds] = None,
                grid: Optional[ScalarGrid] = None, plan_tol: float = PLAN_TOL) -> EscapePlan:
    """Escape from the unit disk around ``p0`` along ``v_perp`` then ``v``.

    ``mode="unsigned"`` scans levels in ``(0, sqrt(pi c1 c2)]`` and follows
    ``v`` forward only.  ``mode="signed"`` scans ``[-z/2, z/2]``, flows along
    ``-v_perp`` for negative levels and tries ``v`` forward then backward;
    its bound is half the unsigned one and is experimental.

    Raises ``HypothesisViolated`` when ``c1`` vanishes on the disk and
    ``ConsistencyError`` when no scanned level lets the ``v`` leg exit within
    the level-length budget.
    """
    if mode not in ("unsigned", "signed"):
        raise ValueError(f"mode must be 'unsigned' or 'signed', got {mode!r}")
    p0 = (float(p0[0]), float(p0[1]))
    d = Disk(p0, 1.0)
    if bounds is None:
        bounds = estimate_bounds(f, d)
    if bounds.violates_hypothesis:
        raise HypothesisViolated(f"field {f.name!r} has c1 = {bounds.c1:.3g} on the disk around {p0}")
    if grid is None:
        grid = compute_stream_function(f, d, h, base=p0)
    signed = mode == "signed"
    bound = plan_bound(bounds, mode)
    leg_budget = math.sqrt(math.pi * bounds.c2 / bounds.c1) * (1 + plan_tol)
    directions = ("forward", "backward") if signed else ("forward",)

    tried: list[float] = []
    for attempt in range(1, MAX_LEVEL_RETRIES + 2):
        level = find_short_level(grid, bounds, d, signed=signed, exclude=tried)
        t0 = level.t0
        s_curve, hit = _s_leg(f, grid, p0, t0, d, leg_budget)
        if hit is None and t0 != 0.0:
            raise ConsistencyError(
                f"v_perp leg did not reach level {t0:.6g} or the boundary within {leg_budget:.4g}"
            )
        if hit is not None and hit.name == "disk_exit":
            t_curve, t_dir = _still(hit.point, f.name, "forward"), "none"
        else:
            q = s_curve.end
            t_curve, t_dir = _t_leg(f, q, d, leg_budget, directions)
            if t_curve is None:
                tried.append(t0)
                continue
        total = s_curve.length + t_curve.length
        return EscapePlan(p0, t0, s_curve, t_curve, total, bound, total <= bound * (1 + plan_tol),
                          mode, bounds, level.length, attempt, t_dir)
    raise ConsistencyError(
        f"v leg failed to exit within {leg_budget:.4g} on levels {', '.join(f'{t:.6g}' for t in tried)}"
    )


@dataclass(frozen=True)
class StrategyReport:
    field_name: str
    start: Point2
    direct: float
    perpendicular: float
    plan: float
    plan_bound: float
    c1: float
    c2: float

    @property
    def perpendicular_over_plan(self) -> float:
        return self.perpendicular / self.plan

    def to_dict(self) -> dict:
        return {
            "field": self.field_name,
            "start": list(self.start),
            "direct": self.direct,
            "perpendicular": self.perpendicular,
            "plan": self.plan,
            "plan_bound": self.plan_bound,
            "c1": self.c1,
            "c2": self.c2,
            "perpendicular_over_plan": self.perpendicular_over_plan,
        }


def compare_strategies(f: PlanarField, p0: Point2 = (0.0, 0.0), h: float = DEFAULT_H) -> StrategyReport:
    """Escape along ``v``, along ``v_perp`` and with the two-leg plan."""
    p0 = (float(p0[0]), float(p0[1]))
    bounds = estimate_bounds(f, Disk(p0, 1.0))
    budget = 100 * bounds.c2 / max(bounds.c1, 1e-12)
    direct = escape_length(f, p0, 1.0, max_length=budget)
    perp = escape_length(perpendicular(f), p0, 1.0, max_length=budget)
    plan = plan_escape(f, p0, bounds=bounds, h=h)
    return StrategyReport(f.name, p0, direct.escape_length if direct.escaped else math.inf,
                          perp.escape_length if perp.escaped else math.inf,
                          plan.total_length, plan.bound, bounds.c1, bounds.c2)
