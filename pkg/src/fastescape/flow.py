"""Unit-speed flow curves and escape lengths.

Curves solve ``dγ/ds = f(γ)/|f(γ)|`` in arclength ``s`` with an embedded
Dormand-Prince 5(4) pair.  Events are scalar functions ``g(x, y)`` that start
negative; a curve stops at the first ``s`` where ``g`` reaches zero.  Event
locations are refined with Brent's method on exact re-steps from the last
accepted point, so they carry the integrator's accuracy rather than that of
an interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import StagnationError, StiffnessError
from .fieldcore import Disk, PlanarField, Point2

STEP_TOL = 1e-10
MAX_STEP = 1e-2
SPEED_FLOOR = 1e-12
EVENT_TOL = 1e-9
# a maximum of g within this distance of zero counts as touching the boundary
TOUCH_TOL = 1e-8
DEFAULT_BUDGET = 1e4

# Dormand-Prince 5(4) error weights (5th minus embedded 4th order)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class FlowCurve:
    s: np.ndarray  # arclength at each sample, s[0] == 0
    points: np.ndarray  # (n, 2)
    start: Point2
    field_name: str
    direction: str  # "forward" | "backward"

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def end(self) -> Point2:
        return float(self.points[-1, 0]), float(self.points[-1, 1])

    def __len__(self):
        return len(self.s)


@dataclass(frozen=True)
class Event:
    """Stop condition ``g(x, y) >= 0``; ``touch`` also stops at tangential contact."""

    name: str
    g: Callable[[float, float], float]
    touch: bool = False


@dataclass(frozen=True)
class EventHit:
    name: str
    s: float
    point: Point2


@dataclass(frozen=True)
class EscapeResult:
    curve: FlowCurve
    escape_length: float
    exit_point: Point2
    status: str  # "escaped" | "budget_exhausted" | "hypothesis_violated"
    radius: float = 1.0

    @property
    def escaped(self) -> bool:
        return self.status == "escaped"


def disk_exit_event(center: Point2, radius: float) -> Event:
    cx, cy = center
    return Event("disk_exit", lambda x, y: math.hypot(x - cx, y - cy) - radius, touch=True)


class _UnitSpeed:
    """Normalised right-hand side with the DP step."""

    def __init__(self, f: PlanarField, speed_floor: float):
        self.f = f
        self.floor = speed_floor

    def rhs(self, x, y):
        u, v = self.f.at(x, y)
        n = math.hypot(u, v)
        if not n > self.floor:
            if math.isnan(n):
                raise StagnationError(f"field {self.f.name!r} is not finite at ({x:.6g}, {y:.6g})")
            raise StagnationError(
                f"speed {n:.3g} below floor {self.floor:g} at ({x:.6g}, {y:.6g}) on {self.f.name!r}"
            )
        return u / n, v / n

    def step(self, x, y, h, k1):
        rhs = self.rhs
        k1x, k1y = k1
        k2x, k2y = rhs(x + h * (k1x / 5), y + h * (k1y / 5))
        k3x, k3y = rhs(x + h * (3 / 40 * k1x + 9 / 40 * k2x), y + h * (3 / 40 * k1y + 9 / 40 * k2y))
        k4x, k4y = rhs(x + h * (44 / 45 * k1x - 56 / 15 * k2x + 32 / 9 * k3x),
                       y + h * (44 / 45 * k1y - 56 / 15 * k2y + 32 / 9 * k3y))
        k5x, k5y = rhs(
            x + h * (19372 / 6561 * k1x - 25360 / 2187 * k2x + 64448 / 6561 * k3x - 212 / 729 * k4x),
            y + h * (19372 / 6561 * k1y - 25360 / 2187 * k2y + 64448 / 6561 * k3y - 212 / 729 * k4y))
        k6x, k6y = rhs(
            x + h * (9017 / 3168 * k1x - 355 / 33 * k2x + 46732 / 5247 * k3x + 49 / 176 * k4x
                     - 5103 / 18656 * k5x),
            y + h * (9017 / 3168 * k1y - 355 / 33 * k2y + 46732 / 5247 * k3y + 49 / 176 * k4y
                     - 5103 / 18656 * k5y))
        xn = x + h * (35 / 384 * k1x + 500 / 1113 * k3x + 125 / 192 * k4x - 2187 / 6784 * k5x + 11 / 84 * k6x)
        yn = y + h * (35 / 384 * k1y + 500 / 1113 * k3y + 125 / 192 * k4y - 2187 / 6784 * k5y + 11 / 84 * k6y)
        # FSAL: the last stage is the slope at the new point
        k7x, k7y = rhs(xn, yn)
        e = _E
        ex = h * (e[0] * k1x + e[2] * k3x + e[3] * k4x + e[4] * k5x + e[5] * k6x + e[6] * k7x)
        ey = h * (e[0] * k1y + e[2] * k3y + e[3] * k4y + e[4] * k5y + e[5] * k6y + e[6] * k7y)
        return xn, yn, max(abs(ex), abs(ey)), (k7x, k7y)


def _locate(rk, x, y, k1, h_acc, events, g_prev, g_next):
    """Return (delta, event) for the earliest event inside an accepted step."""
    def g_at(ev, delta):
        if delta <= 0.0:
            return ev.g(x, y)
        xn, yn, _, _ = rk.step(x, y, delta, k1)
        return ev.g(xn, yn)

    best = None
    for ev, g0, g1 in zip(events, g_prev, g_next):
        if g1 >= 0.0:
            root = h_acc if g0 >= 0.0 else brentq(lambda d: g_at(ev, d), 0.0, h_acc, xtol=EVENT_TOL * 1e-3)
            if ev.touch:
                # shallow crossing: a touch within TOUCH_TOL further on wins
                res = minimize_scalar(lambda d: -g_at(ev, d), bounds=(root, h_acc), method="bounded",
                                      options={"xatol": EVENT_TOL * 1e-3})
                gmax = -res.fun
                if gmax <= TOUCH_TOL and root < res.x < h_acc * (1 - 1e-9):
                    root = res.x
            cand = root
        else:
            continue
        if best is None or cand < best[0]:
            best = (cand, ev)
    return best


def _touch_check(rk, x, y, k1, span, ev):
    """Search a bracketed maximum of ``ev.g`` in ``[0, span]`` from (x, y)."""
    def neg_g(d):
        if d <= 0.0:
            return -ev.g(x, y)
        xn, yn, _, _ = rk.step(x, y, d, k1)
        return -ev.g(xn, yn)

    res = minimize_scalar(neg_g, bounds=(0.0, span), method="bounded", options={"xatol": EVENT_TOL * 1e-3})
    if -res.fun >= -TOUCH_TOL:
        return res.x
    return None


def integrate_unit_speed(
    f: PlanarField,
    p0: Point2,
    max_length: float,
    events: Sequence[Event] = (),
    *,
    tol: float = STEP_TOL,
    max_step: float = MAX_STEP,
    speed_floor: float = SPEED_FLOOR,
) -> tuple[FlowCurve, Optional[EventHit]]:
    """Integrate the unit-speed flow of ``f`` from ``p0``.

    Stops at the first triggered event or when the arclength reaches
    ``max_length``.  Returns the curve and the event hit (or ``None``).
    """
    if not max_length > 0:
        raise ValueError("max_length must be positive")
    rk = _UnitSpeed(f, speed_floor)
    x, y = float(p0[0]), float(p0[1])
    k1 = rk.rhs(x, y)
    s = 0.0
    ss = [0.0]
    xs = [x]
    ys = [y]
    g_prev = [ev.g(x, y) for ev in events]
    # the three most recent accepted states, for touch detection
    history = [(s, x, y, k1)]
    h = min(max_step, 1e-3)
    hit = None
    direction = "forward" if f.orientation_sign > 0 else "backward"

    while True:
        h = min(h, max_step, max_length - s)
        if h < 1e-14:
            if max_length - s <= 1e-14:
                break
            raise StiffnessError(f"step size underflow at s={s:.6g} on {f.name!r}")
        xn, yn, err, k7 = rk.step(x, y, h, k1)
        if err > tol:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
            continue

        g_new = [ev.g(xn, yn) for ev in events]
        found = None
        if any(g >= 0.0 for g in g_new):
            found = _locate(rk, x, y, k1, h, events, g_prev, g_new)
        if found is not None:
            delta, ev = found
            if delta > 0.0:
                xe, ye, _, _ = rk.step(x, y, delta, k1)
            else:
                xe, ye = x, y
            s += delta
            if delta > 0.0:
                ss.append(s)
                xs.append(xe)
                ys.append(ye)
            hit = EventHit(ev.name, s, (xe, ye))
            break

        # tangential contact: g peaked just below zero at a previous sample
        for ev, ga, gb in zip(events, g_prev, g_new):
            if not ev.touch or len(history) < 2:
                continue
            s_a, xa, ya, ka = history[-2]
            if not (ga > ev.g(xa, ya) and ga > gb and ga > -1e-3):
                continue
            # the peak lies in one of the two steps around the current sample
            for s_base, xb, yb, kb, span in ((s_a, xa, ya, ka, s - s_a), (s, x, y, k1, h)):
                d = _touch_check(rk, xb, yb, kb, span, ev)
                if d is None:
                    continue
                xe, ye = rk.step(xb, yb, d, kb)[:2] if d > 0 else (xb, yb)
                s_hit = s_base + d
                while len(ss) > 1 and ss[-1] > s_hit:
                    ss.pop()
                    xs.pop()
                    ys.pop()
                if s_hit > ss[-1]:
                    ss.append(s_hit)
                    xs.append(xe)
                    ys.append(ye)
                hit = EventHit(ev.name, s_hit, (xe, ye))
                break
            if hit is not None:
                break
        if hit is not None:
            break

        s += h
        x, y, k1 = xn, yn, k7
        ss.append(s)
        xs.append(x)
        ys.append(y)
        g_prev = g_new
        history.append((s, x, y, k1))
        if len(history) > 3:
            history.pop(0)
        if s >= max_length:
            break
        h *= min(5.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)

    curve = FlowCurve(np.array(ss), np.column_stack([xs, ys]), (float(p0[0]), float(p0[1])), f.name, direction)
    return curve, hit


def default_budget(f: PlanarField, radius: float = 1.0, center: Point2 = (0.0, 0.0)) -> float:
    """``100 c2/c1`` when closed-form bounds exist, else ``DEFAULT_BUDGET``."""
    if f.speed_bounds is not None:
        c1, c2 = f.speed_bounds(Disk(center, radius))
        if c1 > 0:
            return 100.0 * c2 / c1
    return DEFAULT_BUDGET


def escape_length(f: PlanarField, p0: Point2, radius: float = 1.0,
                  max_length: Optional[float] = None, **kwargs) -> EscapeResult:
    """Arclength until the flow from ``p0`` first reaches distance ``radius``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    p0 = (float(p0[0]), float(p0[1]))
    budget = default_budget(f, radius, p0) if max_length is None else max_length
    try:
        curve, hit = integrate_unit_speed(f, p0, budget, [disk_exit_event(p0, radius)], **kwargs)
    except StagnationError:
        empty = FlowCurve(np.zeros(1), np.array([p0]), p0, f.name,
                          "forward" if f.orientation_sign > 0 else "backward")
        return EscapeResult(empty, math.nan, p0, "hypothesis_violated", radius)
    if hit is None:
        return EscapeResult(curve, curve.length, curve.end, "budget_exhausted", radius)
    return EscapeResult(curve, hit.s, hit.point, "escaped", radius)


def bidirectional_escape_length(f: PlanarField, p0: Point2, radius: float = 1.0,
                                max_length: Optional[float] = None, **kwargs) -> EscapeResult:
    """The shorter of the forward and the time-reversed escape."""
    fwd = escape_length(f, p0, radius, max_length, **kwargs)
    bwd = escape_length(f.reversed(), p0, radius, max_length, **kwargs)
    ranked = sorted([fwd, bwd], key=lambda r: (not r.escaped, r.escape_length if r.escaped else math.inf))
    return ranked[0]
