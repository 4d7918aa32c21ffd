"""Executable checks of the escape-length bounds.

Every check returns a ``TheoremReport`` with the measured quantities, the
bound, the margin and a verdict.  ``pass`` means the measured value is within
``bound * (1 + tol)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import fieldexpr
from .errors import HypothesisViolated
from .fieldcore import (
    Disk,
    PlanarField,
    Point2,
    const_field,
    curl,
    curl_integral,
    disk_samples,
    estimate_bounds,
    perpendicular,
    unit_disk,
    vn_field,
    zigzag_field,
)
from .flow import bidirectional_escape_length, escape_length
from .planner import PLAN_TOL, plan_escape
from .serialize import csv_row, dumps
from .stream import coarea_check, compute_stream_function

BOUND_TOL = 0.05
COAREA_TOL = 0.03
CSV_HEADER = ("theorem", "field", "params", "measured", "bound", "margin", "verdict")


@dataclass(frozen=True)
class TheoremReport:
    theorem_id: str
    field_name: str
    measured: dict
    bound: float
    margin: float
    verdict: str
    notes: str = ""
    params: dict = field(default_factory=dict)
    primary: str = ""  # key of the headline entry in ``measured``

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem_id,
            "field": self.field_name,
            "params": dict(self.params),
            "measured": dict(self.measured),
            "bound": self.bound,
            "margin": self.margin,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def csv_row(self) -> str:
        params = ";".join(f"{k}={v:.12g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in sorted(self.params.items()))
        value = self.measured.get(self.primary, math.nan)
        return csv_row([self.theorem_id, self.field_name, params, value, self.bound, self.margin,
                        self.verdict])


def _verdict(measured: float, bound: float, tol: float) -> str:
    return "pass" if measured <= bound * (1 + tol) else "fail"


def _bounds_or_raise(f: PlanarField, d: Disk):
    b = estimate_bounds(f, d)
    if b.violates_hypothesis:
        raise HypothesisViolated(f"field {f.name!r} has c1 = {b.c1:.3g} on the disk around {d.center}")
    return b


def verify_theorem1(f: PlanarField, p0: Point2 = (0.0, 0.0), tol: float = PLAN_TOL,
                    h: float = 1 / 256, mode: str = "unsigned") -> TheoremReport:
    """Two-leg plan length against ``sqrt(4 pi c2/c1)``."""
    p0 = (float(p0[0]), float(p0[1]))
    bounds = _bounds_or_raise(f, Disk(p0, 1.0))
    plan = plan_escape(f, p0, mode, h=h, bounds=bounds, plan_tol=tol)
    measured = {
        "total_length": plan.total_length,
        "s_leg": plan.s_leg.length,
        "t_leg": plan.t_leg.length,
        "t0": plan.t0,
        "level_length": plan.level_length,
        "c1": bounds.c1,
        "c2": bounds.c2,
    }
    return TheoremReport("thm1", f.name, measured, plan.bound, plan.bound - plan.total_length,
                         "pass" if plan.satisfied else "fail",
                         f"mode={mode}", dict(f.params), "total_length")


def start_grid(n: int, center: Point2 = (0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """Nodes of an ``n x n`` grid on the bounding square that lie in the disk."""
    if n < 2:
        raise ValueError("grid size must be at least 2")
    s = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(s, s, indexing="ij")
    keep = np.hypot(X, Y) <= radius * (1 + 1e-12)
    return np.column_stack([center[0] + X[keep], center[1] + Y[keep]])


def verify_theorem2(f: PlanarField, grid_n: int = 17, tol: float = BOUND_TOL,
                    restricted_time: bool = False) -> TheoremReport:
    """Sampled uniform escape length against the bound for ``v_perp``.

    ``L_hat`` is the smallest escape length of ``f`` over the start grid;
    the measured quantity is the escape length of ``v_perp`` from the origin.
    Bidirectional lengths are used unless ``restricted_time`` is set, in
    which case forward lengths are reported without a verdict.  Speed bounds
    are taken on the disk of radius 2, where the flows from the start grid
    live.
    """
    bounds = _bounds_or_raise(f, Disk((0.0, 0.0), 2.0))
    budget = 100 * bounds.c2 / bounds.c1
    run = escape_length if restricted_time else bidirectional_escape_length
    lengths = []
    for x, y in start_grid(grid_n):
        r = run(f, (float(x), float(y)), 1.0, max_length=budget)
        lengths.append(r.escape_length if r.escaped else math.inf)
    lengths = np.array(lengths)
    worst = int(np.argmin(lengths))
    l_hat = float(lengths[worst])
    perp = run(perpendicular(f), (0.0, 0.0), 1.0, max_length=budget)
    measured_len = perp.escape_length if perp.escaped else math.inf
    bound = math.pi * (bounds.c2 / bounds.c1) / l_hat
    measured = {
        "perp_escape": measured_len,
        "L_hat": l_hat,
        "starts": int(lengths.size),
        "c1": bounds.c1,
        "c2": bounds.c2,
    }
    if restricted_time:
        verdict = "inconclusive"
        notes = "forward-time variant: the constant is not specified, no verdict"
    elif measured_len <= bound * (1 + tol):
        verdict = "pass"
        notes = "L_hat is an upper estimate of the uniform escape length"
    else:
        verdict = "inconclusive"
        notes = "sampled bound violated; sampling overestimates the uniform escape length"
    return TheoremReport("thm2", f.name, measured, bound, bound - measured_len, verdict, notes,
                         dict(f.params, grid=grid_n), "perp_escape")


def verify_theorem3(f: PlanarField, p0: Point2 = (0.0, 0.0), tol: float = BOUND_TOL,
                    curl_resolution: int = 256) -> TheoremReport:
    """Escape length against ``pi c2/c1 + (1/c1) * integral |curl v|``."""
    p0 = (float(p0[0]), float(p0[1]))
    d = Disk(p0, 1.0)
    bounds = _bounds_or_raise(f, d)
    mass = curl_integral(f, d, curl_resolution)
    bound = math.pi * bounds.c2 / bounds.c1 + mass / bounds.c1
    r = escape_length(f, p0, 1.0, max_length=2 * bound * (1 + tol))
    ell = r.escape_length if r.escaped else math.inf
    measured = {"escape_length": ell, "curl_integral": mass, "c1": bounds.c1, "c2": bounds.c2}
    return TheoremReport("thm3", f.name, measured, bound, bound - ell, _verdict(ell, bound, tol),
                         "", dict(f.params), "escape_length")


def _as_gradient(a: Union[str, fieldexpr.Expr, PlanarField], params) -> PlanarField:
    if isinstance(a, PlanarField):
        return a
    return fieldexpr.gradient_field(a, params)


def verify_irrotational_bound(a: Union[str, fieldexpr.Expr, PlanarField], p0: Point2 = (0.0, 0.0),
                              params: Optional[dict] = None, tol: float = BOUND_TOL,
                              lower: Optional[float] = None) -> TheoremReport:
    """Escape length of a gradient field ``grad A`` against ``c2/c1``.

    ``a`` is a potential (text or AST) or an already built gradient field.
    With ``lower`` the length must also reach that value.
    """
    f = _as_gradient(a, params)
    p0 = (float(p0[0]), float(p0[1]))
    d = Disk(p0, 1.0)
    pts = disk_samples(d, 256)
    rot = np.abs(np.asarray(curl(f, (pts[:, 0], pts[:, 1]))))
    if float(rot.max()) > 1e-6 * max(1.0, float(np.max(f.speed(pts[:, 0], pts[:, 1])))):
        raise HypothesisViolated(f"field {f.name!r} is not a gradient (curl up to {rot.max():.3g})")
    bounds = _bounds_or_raise(f, d)
    bound = bounds.c2 / bounds.c1
    r = escape_length(f, p0, 1.0, max_length=2 * bound * (1 + tol))
    ell = r.escape_length if r.escaped else math.inf
    verdict = _verdict(ell, bound, tol)
    measured = {"escape_length": ell, "c1": bounds.c1, "c2": bounds.c2}
    notes = ""
    if lower is not None:
        measured["lower"] = float(lower)
        if ell < lower:
            verdict = "fail"
        notes = f"also checked escape_length >= {lower:.6g}"
    return TheoremReport("irrotational", f.name, measured, bound, bound - ell, verdict, notes,
                         dict(f.params), "escape_length")


def verify_vn_scaling(n_list: Sequence[float] = (8, 16, 32, 64),
                      slope_range: tuple[float, float] = (0.125, 4.0)) -> TheoremReport:
    """Direct escape of ``v_N`` from the origin: ``ell >= N/8`` and a linear trend."""
    ns = [float(n) for n in n_list]
    if not ns or min(ns) < 2:
        raise ValueError("vn scaling needs N values >= 2")
    ells = []
    for n in ns:
        r = escape_length(vn_field(n), (0.0, 0.0))
        ells.append(r.escape_length if r.escaped else math.inf)
    measured = {f"ell_N{n:g}": e for n, e in zip(ns, ells)}
    margin = min(e - n / 8 for n, e in zip(ns, ells))
    ok = margin >= 0
    if len(ns) >= 2 and all(math.isfinite(e) for e in ells):
        slope = float(np.polyfit(ns, ells, 1)[0])
        measured["slope"] = slope
        ok = ok and slope_range[0] <= slope <= slope_range[1]
    measured["min_ratio"] = min(e / (n / 8) for n, e in zip(ns, ells))
    return TheoremReport("vn_scaling", "vn", measured, slope_range[1], margin,
                         "pass" if ok else "fail",
                         f"ell >= N/8 for every N and slope in [{slope_range[0]:g}, {slope_range[1]:g}]",
                         {"N": ",".join(f"{n:g}" for n in ns)}, "min_ratio")


def verify_coarea(f: PlanarField, d: Optional[Disk] = None, h: float = 1 / 256,
                  n_levels: int = 256, tol: float = COAREA_TOL) -> TheoremReport:
    """Level-length integral against the gradient mass of the stream function."""
    d = unit_disk() if d is None else d
    grid = compute_stream_function(f, d, h)
    res = coarea_check(grid, d, n_levels)
    measured = {"lhs": res.lhs, "rhs": res.rhs, "rel_err": res.rel_err}
    return TheoremReport("coarea", f.name, measured, tol, tol - res.rel_err,
                         "pass" if res.rel_err <= tol else "fail",
                         f"h={h:g}, levels={n_levels}", dict(f.params), "rel_err")


# ---------------------------------------------------------------------------
# test suites


def random_stream_fields(count: int = 20, seed: int = 0, modes: int = 3) -> list[PlanarField]:
    """Band-limited stream functions ``y + sum a sin(k x + l y + phi)``.

    The amplitudes satisfy ``sum a |(k, l)| <= 0.9``, so ``|v| >= 0.1``.
    Each field is built from its expression text.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        terms = []
        waves = []
        while len(waves) < modes:
            k, l = (int(v) for v in rng.integers(-4, 5, size=2))
            if k or l:
                waves.append((k, l))
        share = rng.dirichlet(np.ones(modes)) * rng.uniform(0.3, 0.9)
        for (k, l), s in zip(waves, share):
            a = s / math.hypot(k, l)
            phi = rng.uniform(0, 2 * math.pi)
            terms.append(f"{a:.6f}*sin({k}*x + {l}*y + {phi:.6f})")
        text = "y + " + " + ".join(terms)
        f = fieldexpr.field_from_stream_function(text, name=f"random{i}")
        out.append(f)
    return out


def _compressible(a1, k1, l1, p1, a2, k2, l2, p2, name) -> PlanarField:
    def func(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 1 + a1 * np.sin(k1 * x + l1 * y + p1), a2 * np.sin(k2 * x + l2 * y + p2)

    def point(x, y):
        return 1 + a1 * math.sin(k1 * x + l1 * y + p1), a2 * math.sin(k2 * x + l2 * y + p2)

    def rot(x, y):
        return a2 * k2 * np.cos(k2 * np.asarray(x) + l2 * np.asarray(y) + p2) \
            - a1 * l1 * np.cos(k1 * np.asarray(x) + l1 * np.asarray(y) + p1)

    def div(x, y):
        return a1 * k1 * np.cos(k1 * np.asarray(x) + l1 * np.asarray(y) + p1) \
            + a2 * l2 * np.cos(k2 * np.asarray(x) + l2 * np.asarray(y) + p2)

    params = {"a1": a1, "k1": k1, "l1": l1, "phi1": p1, "a2": a2, "k2": k2, "l2": l2, "phi2": p2}
    return PlanarField(name, func, params, analytic_curl=rot, analytic_div=div, point_func=point)


def compressible_fields(count: int = 10, seed: int = 1) -> list[PlanarField]:
    """Fields ``(1 + a1 sin(.), a2 sin(.))`` with ``a1 < 1``, so ``c1 >= 1 - a1 > 0``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        a1 = float(rng.uniform(0.05, 0.6))
        a2 = float(rng.uniform(0.05, 1.0))
        k1, l1, k2, l2 = (int(v) for v in rng.integers(-3, 4, size=4))
        p1, p2 = (float(v) for v in rng.uniform(0, 2 * math.pi, size=2))
        out.append(_compressible(a1, k1, l1, p1, a2, k2, l2, p2, f"compressible{i}"))
    return out


def builtin_incompressible_fields() -> list[PlanarField]:
    """Constant, ``v_N`` for N = 4..64 and the zigzag for N = 4, 8, 16."""
    fields = [const_field(1.0, 0.0)]
    fields += [vn_field(n) for n in (4, 8, 16, 32, 64)]
    fields += [zigzag_field(n) for n in (4, 8, 16)]
    return fields


def incompressible_suite(seed: int = 0) -> list[PlanarField]:
    return builtin_incompressible_fields() + random_stream_fields(20, seed)


def run_reports(check, fields: Iterable[PlanarField], **kwargs) -> list[TheoremReport]:
    return [check(f, **kwargs) for f in fields]


def reports_csv(reports: Iterable[TheoremReport]) -> str:
    lines = [",".join(CSV_HEADER)] + [r.csv_row() for r in reports]
    return "\n".join(lines) + "\n"
