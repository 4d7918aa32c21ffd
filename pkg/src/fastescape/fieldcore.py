"""Planar vector fields, differential operators and speed bounds.

Fields are evaluated with numpy broadcasting: ``f(x, y)`` accepts floats or
arrays and returns the pair ``(u, v)``.  All objects here are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import _zigzag
from .errors import DomainError

Point2 = tuple[float, float]

# relative margin applied to sampled speed extrema
SAMPLED_SAFETY = 0.01
# c1 below this fraction of c2 counts as a stagnation point in the disk
STAGNATION_RATIO = 1e-6


@dataclass(frozen=True)
class Disk:
    center: Point2
    radius: float

    def __post_init__(self):
        cx, cy = self.center
        if not (math.isfinite(cx) and math.isfinite(cy)):
            raise ValueError(f"disk center must be finite, got {self.center}")
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(cx), float(cy)))
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, x, y, slack=0.0):
        cx, cy = self.center
        return np.hypot(np.asarray(x) - cx, np.asarray(y) - cy) <= self.radius + slack


def unit_disk(center: Point2 = (0.0, 0.0)) -> Disk:
    return Disk(center, 1.0)


@dataclass(frozen=True)
class FieldBounds:
    c1: float
    c2: float
    method: str  # "analytic" | "sampled"
    sample_count: int
    domain: Disk

    @property
    def ratio(self) -> float:
        return self.c2 / self.c1 if self.c1 > 0 else math.inf

    @property
    def violates_hypothesis(self) -> bool:
        """True when the field (nearly) stagnates somewhere in the disk."""
        return not self.c1 > STAGNATION_RATIO * self.c2


@dataclass(frozen=True)
class PlanarField:
    """A 2D vector field.

    ``func`` is the raw vectorised evaluator; ``orientation_sign`` flips the
    field for reverse-time flow and is applied by ``__call__``.  The optional
    ``analytic_curl`` / ``analytic_div`` refer to the raw field as well.
    ``speed_bounds`` maps a disk to closed-form ``(c1, c2)`` when known.
    """

    name: str
    func: Callable
    params: Mapping[str, float] = field(default_factory=dict)
    analytic_curl: Optional[Callable] = None
    analytic_div: Optional[Callable] = None
    orientation_sign: int = 1
    speed_bounds: Optional[Callable[[Disk], tuple[float, float]]] = None
    point_func: Optional[Callable] = None

    def __call__(self, x, y):
        u, v = self.func(x, y)
        if self.orientation_sign == 1:
            return u, v
        return -u, -v

    def at(self, x: float, y: float) -> tuple[float, float]:
        """Fast scalar evaluation, used by the integrator."""
        if self.point_func is not None:
            u, v = self.point_func(x, y)
        else:
            u, v = self.func(x, y)
        s = self.orientation_sign
        return s * float(u), s * float(v)

    def speed(self, x, y):
        u, v = self(x, y)
        return np.hypot(u, v)

    def reversed(self) -> PlanarField:
        return replace(self, orientation_sign=-self.orientation_sign)


def _broadcast(value, like):
    return np.full(np.broadcast(like).shape, value, dtype=float) if np.ndim(like) else float(value)


def _checked(f: PlanarField, x, y):
    u, v = f(x, y)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise DomainError(f"field {f.name!r} is not finite at the requested points")
    return u, v


def perpendicular(f: PlanarField) -> PlanarField:
    """Rotate ``f`` by +90 degrees: ``(u, v) -> (-v, u)``."""

    def func(x, y):
        u, v = f(x, y)
        return -v, u

    point = None
    if f.point_func is not None:
        def point(x, y):
            u, v = f.at(x, y)
            return -v, u

    sign = f.orientation_sign
    curl = div = None
    # curl(v_perp) = div(v), div(v_perp) = -curl(v)
    if f.analytic_div is not None:
        curl = lambda x, y: sign * f.analytic_div(x, y)  # noqa: E731
    if f.analytic_curl is not None:
        div = lambda x, y: -sign * f.analytic_curl(x, y)  # noqa: E731
    return PlanarField(
        name=f.name + "_perp",
        func=func,
        params=dict(f.params),
        analytic_curl=curl,
        analytic_div=div,
        speed_bounds=f.speed_bounds,
        point_func=point,
    )


def scaled(f: PlanarField, factor: float) -> PlanarField:
    """Multiply a field by a positive constant (a time rescaling)."""
    if not factor > 0:
        raise ValueError("scale factor must be positive")

    def func(x, y):
        u, v = f.func(x, y)
        return factor * u, factor * v

    point = None
    if f.point_func is not None:
        def point(x, y):
            u, v = f.point_func(x, y)
            return factor * u, factor * v

    def times(g):
        return None if g is None else (lambda x, y: factor * g(x, y))

    bounds = None
    if f.speed_bounds is not None:
        def bounds(d):
            c1, c2 = f.speed_bounds(d)
            return factor * c1, factor * c2

    return replace(
        f,
        name=f"{f.name}_x{factor:g}",
        func=func,
        point_func=point,
        analytic_curl=times(f.analytic_curl),
        analytic_div=times(f.analytic_div),
        speed_bounds=bounds,
    )


def divergence(f: PlanarField, p: Point2, h: float = 1e-4):
    """Divergence at ``p`` (scalar or array coordinates)."""
    if not h > 0:
        raise ValueError("h must be positive")
    x, y = p
    if f.analytic_div is not None:
        out = f.orientation_sign * f.analytic_div(x, y)
        return _broadcast(out, x) if np.isscalar(out) else out
    up, _ = _checked(f, x + h, y)
    um, _ = _checked(f, x - h, y)
    _, vp = _checked(f, x, y + h)
    _, vm = _checked(f, x, y - h)
    return (up - um) / (2 * h) + (vp - vm) / (2 * h)


def curl(f: PlanarField, p: Point2, h: float = 1e-4):
    """Scalar curl ``dv/dx - du/dy`` at ``p``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x, y = p
    if f.analytic_curl is not None:
        out = f.orientation_sign * f.analytic_curl(x, y)
        return _broadcast(out, x) if np.isscalar(out) else out
    _, vp = _checked(f, x + h, y)
    _, vm = _checked(f, x - h, y)
    up, _ = _checked(f, x, y + h)
    um, _ = _checked(f, x, y - h)
    return (vp - vm) / (2 * h) - (up - um) / (2 * h)


def disk_samples(d: Disk, n: int) -> np.ndarray:
    """Deterministic low-discrepancy points filling ``d`` (area-uniform)."""
    u = qmc.Halton(d=2, scramble=False).random(n + 1)[1:]
    r = d.radius * np.sqrt(u[:, 0])
    theta = 2 * np.pi * u[:, 1]
    cx, cy = d.center
    return np.column_stack([cx + r * np.cos(theta), cy + r * np.sin(theta)])


def _polish(f: PlanarField, d: Disk, start: np.ndarray, sign: float) -> float:
    """Locally minimise ``sign * |f|`` from ``start``, staying inside ``d``."""
    cx, cy = d.center

    def project(q):
        dx, dy = q[0] - cx, q[1] - cy
        r = math.hypot(dx, dy)
        if r > d.radius:
            dx, dy = dx * d.radius / r, dy * d.radius / r
        return cx + dx, cy + dy

    def objective(q):
        x, y = project(q)
        u, v = f.at(x, y)
        return sign * math.hypot(u, v)

    res = minimize(objective, start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
    return sign * float(min(res.fun, objective(start)))


def estimate_bounds(f: PlanarField, d: Disk, n: int = 10_000, polish: int = 4) -> FieldBounds:
    """Speed bounds ``c1 <= |f| <= c2`` on the disk ``d``.

    Closed-form bounds are returned when the field carries them.  Otherwise
    the speed is sampled on ``n`` Halton points, the ``polish`` most extreme
    samples are refined by a local search, and the extrema are widened by
    ``SAMPLED_SAFETY``.
    """
    if n < 100:
        raise ValueError("estimate_bounds needs n >= 100")
    if f.speed_bounds is not None:
        c1, c2 = f.speed_bounds(d)
        return FieldBounds(float(c1), float(c2), "analytic", 0, d)
    pts = disk_samples(d, n)
    u, v = _checked(f, pts[:, 0], pts[:, 1])
    speed = np.hypot(u, v)
    lo, hi = float(speed.min()), float(speed.max())
    order = np.argsort(speed)
    for i in order[:polish]:
        lo = min(lo, _polish(f, d, pts[i], 1.0))
    for i in order[::-1][:polish]:
        hi = max(hi, _polish(f, d, pts[i], -1.0))
    return FieldBounds(float(lo * (1 - SAMPLED_SAFETY)), float(hi * (1 + SAMPLED_SAFETY)), "sampled", n, d)


def disk_cell_weights(xe: np.ndarray, ye: np.ndarray, d: Disk, sub: int = 8) -> np.ndarray:
    """Fraction of each rectangular cell (edges ``xe`` x ``ye``) inside ``d``.

    Cells fully inside or outside are exact; cells cut by the circle are
    estimated on a ``sub`` x ``sub`` midpoint lattice.
    """
    cx, cy = d.center
    X0, Y0 = np.meshgrid(xe[:-1] - cx, ye[:-1] - cy, indexing="ij")
    X1, Y1 = np.meshgrid(xe[1:] - cx, ye[1:] - cy, indexing="ij")
    # farthest and nearest distances from the centre to each cell
    far = np.hypot(np.maximum(np.abs(X0), np.abs(X1)), np.maximum(np.abs(Y0), np.abs(Y1)))
    nx_ = np.where((X0 <= 0) & (X1 >= 0), 0.0, np.minimum(np.abs(X0), np.abs(X1)))
    ny_ = np.where((Y0 <= 0) & (Y1 >= 0), 0.0, np.minimum(np.abs(Y0), np.abs(Y1)))
    near = np.hypot(nx_, ny_)
    w = np.where(far <= d.radius, 1.0, 0.0)
    cut = (near < d.radius) & (far > d.radius)
    if np.any(cut):
        frac = (np.arange(sub) + 0.5) / sub
        ii, jj = np.nonzero(cut)
        x0, x1 = X0[ii, jj], X1[ii, jj]
        y0, y1 = Y0[ii, jj], Y1[ii, jj]
        xs = x0[:, None, None] + (x1 - x0)[:, None, None] * frac[None, :, None]
        ys = y0[:, None, None] + (y1 - y0)[:, None, None] * frac[None, None, :]
        inside = (xs**2 + ys**2) <= d.radius**2
        w[ii, jj] = inside.mean(axis=(1, 2))
    return w


def curl_integral(f: PlanarField, d: Disk, resolution: int = 256, h: float = 1e-4) -> float:
    """Midpoint-rule integral of ``|curl f|`` over the disk."""
    if resolution < 64:
        raise ValueError("curl_integral needs resolution >= 64")
    cx, cy = d.center
    r = d.radius
    xe = np.linspace(cx - r, cx + r, resolution + 1)
    ye = np.linspace(cy - r, cy + r, resolution + 1)
    w = disk_cell_weights(xe, ye, d)
    xm = 0.5 * (xe[:-1] + xe[1:])
    ym = 0.5 * (ye[:-1] + ye[1:])
    X, Y = np.meshgrid(xm, ym, indexing="ij")
    mask = w > 0
    c = curl(f, (X[mask], Y[mask]), h)
    cell = (xe[1] - xe[0]) * (ye[1] - ye[0])
    return float(np.sum(np.abs(c) * w[mask]) * cell)


# ---------------------------------------------------------------------------
# built-in fields


def const_field(u: float = 1.0, v: float = 0.0) -> PlanarField:
    u, v = float(u), float(v)
    speed = math.hypot(u, v)
    return PlanarField(
        name="const",
        func=lambda x, y: (_broadcast(u, x), _broadcast(v, x)),
        params={"u": u, "v": v},
        analytic_curl=lambda x, y: _broadcast(0.0, x),
        analytic_div=lambda x, y: _broadcast(0.0, x),
        speed_bounds=lambda d: (speed, speed),
        point_func=lambda x, y: (u, v),
    )


def rotation() -> PlanarField:
    """Counter-clockwise rotation ``(-y, x)``; stagnates at the origin."""
    return PlanarField(
        name="rotation",
        func=lambda x, y: (-np.asarray(y, dtype=float), np.asarray(x, dtype=float)),
        analytic_curl=lambda x, y: _broadcast(2.0, x),
        analytic_div=lambda x, y: _broadcast(0.0, x),
        point_func=lambda x, y: (-y, x),
    )


def linear_field(a: float = 1.0, b: float = 0.0, c: float = 0.0, d: float = 1.0) -> PlanarField:
    """Linear field ``(a x + b y, c x + d y)``; the default is compressible."""
    return PlanarField(
        name="linear",
        func=lambda x, y: (a * np.asarray(x) + b * np.asarray(y), c * np.asarray(x) + d * np.asarray(y)),
        params={"a": a, "b": b, "c": c, "d": d},
        analytic_curl=lambda x, y: _broadcast(c - b, x),
        analytic_div=lambda x, y: _broadcast(a + d, x),
        point_func=lambda x, y: (a * x + b * y, c * x + d * y),
    )


def vn_field(N: float) -> PlanarField:
    """The oscillating field ``(1, N/2 cos(N x))`` with ``1 <= |v| <= sqrt(N^2/4 + 1)``."""
    N = float(N)
    half = N / 2
    c2 = math.sqrt(N * N / 4 + 1)

    def func(x, y):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x) if x.ndim else 1.0, half * np.cos(N * x)

    return PlanarField(
        name="vn",
        func=func,
        params={"N": N},
        analytic_curl=lambda x, y: -half * N * np.sin(N * np.asarray(x, dtype=float)),
        analytic_div=lambda x, y: _broadcast(0.0, x),
        speed_bounds=lambda d: (1.0, c2),
        point_func=lambda x, y: (1.0, half * math.cos(N * x)),
    )


def vn_stream_function(N: float):
    """Closed-form potential ``A = y - sin(N x)/2`` of ``vn_field(N)`` (``grad A = v_perp``)."""
    return lambda x, y: np.asarray(y) - 0.5 * np.sin(N * np.asarray(x))


def default_zigzag_eps(N: float) -> float:
    return 0.25 / N


def _zigzag_eval(N, eps, amp):
    n = float(N)
    xs, weights, dt = _zigzag.sample_table(n, amp, eps)

    def arrays(x, y):
        xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        flat_x = np.ascontiguousarray(xb).ravel()
        flat_y = np.ascontiguousarray(yb).ravel()
        out = _zigzag.zigzag_kernel(flat_x, flat_y, n, xs, weights, dt, eps)
        shape = xb.shape
        return tuple(o.reshape(shape) if shape else float(o[0]) for o in out)

    def point(x, y):
        return _zigzag.zigzag_gradient_point(float(x), float(y), n, xs, weights, dt, eps)

    return arrays, point


def zigzag_potential(N: float, eps: Optional[float] = None, amp: float = 1.0) -> Callable:
    """Smoothed zigzag potential ``N y - 2N dist((x, y), (amp sin(N t), t))``."""
    eps = default_zigzag_eps(N) if eps is None else float(eps)
    ev, _ = _zigzag_eval(N, eps, float(amp))
    return lambda x, y: ev(x, y)[0]


def zigzag_curve_distance(N: float, amp: float = 1.0) -> Callable:
    """Exact (unsmoothed) distance to the curve ``(amp sin(N t), t)``."""
    def dist(x, y):
        xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = _zigzag.curve_distance(np.ascontiguousarray(xb).ravel(),
                                     np.ascontiguousarray(yb).ravel(), float(N), float(amp))
        return out.reshape(xb.shape) if xb.shape else float(out[0])
    return dist


def zigzag_gradient(N: float, eps: Optional[float] = None, amp: float = 1.0) -> PlanarField:
    """Gradient of the smoothed zigzag potential (an irrotational field)."""
    eps = default_zigzag_eps(N) if eps is None else float(eps)
    amp = float(amp)
    ev, point = _zigzag_eval(N, eps, amp)
    return PlanarField(
        name="zigzag_grad",
        func=lambda x, y: ev(x, y)[1:3],
        params={"N": float(N), "eps": eps, "amp": amp},
        analytic_curl=lambda x, y: _broadcast(0.0, x),
        point_func=point,
    )


def zigzag_field(N: float, eps: Optional[float] = None, amp: float = 1.0) -> PlanarField:
    """Divergence-free field whose perpendicular is ``zigzag_gradient``.

    ``v = (dA/dy, -dA/dx)`` so that ``v_perp = grad A``; it flows along the
    level sets of the zigzag potential.
    """
    eps = default_zigzag_eps(N) if eps is None else float(eps)
    amp = float(amp)
    ev, grad_point = _zigzag_eval(N, eps, amp)

    def func(x, y):
        _, gx, gy = ev(x, y)
        return gy, -gx

    def point(x, y):
        gx, gy = grad_point(x, y)
        return gy, -gx

    return PlanarField(
        name="zigzag",
        func=func,
        params={"N": float(N), "eps": eps, "amp": amp},
        analytic_div=lambda x, y: _broadcast(0.0, x),
        point_func=point,
    )


def _param(params, key, default=None):
    if key in params:
        return float(params[key])
    if default is None:
        raise KeyError(f"missing parameter {key!r}")
    return default


FIELD_REGISTRY = {
    "const": lambda p: const_field(_param(p, "u", 1.0), _param(p, "v", 0.0)),
    "rotation": lambda p: rotation(),
    "vn": lambda p: vn_field(_param(p, "N")),
    "zigzag": lambda p: zigzag_field(_param(p, "N"), p.get("eps"), _param(p, "amp", 1.0)),
    "zigzag-grad": lambda p: zigzag_gradient(_param(p, "N"), p.get("eps"), _param(p, "amp", 1.0)),
    "linear": lambda p: linear_field(_param(p, "a", 1.0), _param(p, "b", 0.0),
                                     _param(p, "c", 0.0), _param(p, "d", 1.0)),
}


def make_field(name: str, params: Optional[Mapping[str, float]] = None) -> PlanarField:
    """Build a registered field by name, e.g. ``make_field("vn", {"N": 8})``."""
    try:
        builder = FIELD_REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown field {name!r}; known: {', '.join(sorted(FIELD_REGISTRY))}") from None
    return builder(dict(params or {}))
