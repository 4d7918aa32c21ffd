"""Stream functions on grids, level sets and the coarea identity.

For an incompressible field ``v`` the perpendicular field is a gradient,
``v_perp = grad A``.  ``compute_stream_function`` recovers ``A`` by Simpson
line integrals along axis-aligned staircase paths.  Level sets are traced
with marching squares and clipped exactly against a disk.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import minimize_scalar

from .errors import DegenerateLevelError, IncompressibilityError
from .fieldcore import Disk, FieldBounds, PlanarField, Point2, disk_cell_weights, disk_samples, divergence

# closure_error above CLOSURE_FACTOR * c2 * radius rejects the field
CLOSURE_FACTOR = 1e-4
DIVERGENCE_TOL = 1e-6
SCAN_LEVELS = 512
_PAIR_CHUNK = 2_000_000


@dataclass(frozen=True)
class ScalarGrid:
    """Node values ``values[i, j] = A(origin + (i h, j h))``."""

    origin: Point2
    h: float
    nx: int
    ny: int
    values: np.ndarray = field(repr=False)
    base_point: Point2
    closure_error: float

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @cached_property
    def _spline(self):
        return RectBivariateSpline(self.xs, self.ys, self.values, kx=3, ky=3, s=0)

    def __call__(self, x, y):
        """Bicubic interpolation of the node values."""
        out = self._spline.ev(x, y)
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """Central-difference gradient at the nodes (one-sided at the rim)."""
        gx, gy = np.gradient(self.values, self.h, self.h)
        return gx, gy

    def gradient_check(self, f: PlanarField, margin: int = 2) -> tuple[float, float]:
        """Max deviation of the interior FD gradient from ``v_perp``, and ``C = err / h^2``."""
        gx, gy = self.gradient()
        X, Y = np.meshgrid(self.xs, self.ys, indexing="ij")
        u, v = f(X, Y)
        sl = (slice(margin, -margin), slice(margin, -margin))
        err = max(np.max(np.abs(gx[sl] + v[sl])), np.max(np.abs(gy[sl] - u[sl])))
        return float(err), float(err / self.h**2)

    def to_text(self) -> str:
        """Serialise as ``streamgrid v1 nx ny h ox oy`` followed by one line per grid row (fixed y)."""
        buf = io.StringIO()
        ox, oy = self.origin
        buf.write(f"streamgrid v1 {self.nx} {self.ny} {self.h!r} {ox!r} {oy!r}\n")
        for j in range(self.ny):
            buf.write(" ".join(repr(float(v)) for v in self.values[:, j]))
            buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str, base_point: Point2 = (math.nan, math.nan)) -> "ScalarGrid":
        lines = text.strip().splitlines()
        head = lines[0].split()
        if head[:2] != ["streamgrid", "v1"]:
            raise ValueError("not a streamgrid v1 snapshot")
        nx, ny = int(head[2]), int(head[3])
        h, ox, oy = float(head[4]), float(head[5]), float(head[6])
        rows = np.array([[float(t) for t in line.split()] for line in lines[1:1 + ny]])
        if rows.shape != (ny, nx):
            raise ValueError(f"expected {ny} rows of {nx} values, got {rows.shape}")
        return cls((ox, oy), h, nx, ny, rows.T.copy(), base_point, math.nan)


@dataclass(frozen=True)
class LevelSet:
    level: float
    polylines: list
    clip_domain: Disk
    hausdorff_length: float


def _aligned_axis(base: float, lo: float, hi: float, h: float) -> tuple[float, int, int]:
    """Grid axis through ``base`` covering ``[lo, hi]``: (origin, n, base index)."""
    below = int(math.ceil((base - lo) / h - 1e-9))
    above = int(math.ceil((hi - base) / h - 1e-9))
    return base - below * h, below + above + 1, below


def _check_divergence(f: PlanarField, d: Disk, n: int = 64):
    pts = disk_samples(d, n)
    div = np.asarray(divergence(f, (pts[:, 0], pts[:, 1])))
    worst = float(np.max(np.abs(div)))
    if worst > DIVERGENCE_TOL:
        raise IncompressibilityError(f"field {f.name!r} has divergence up to {worst:.3g} on the disk")


def compute_stream_function(f: PlanarField, d: Disk, h: float, base: Optional[Point2] = None,
                            check_divergence: bool = True) -> ScalarGrid:
    """Potential ``A`` with ``grad A = v_perp`` and ``A(base) = 0`` on a grid covering ``d``.

    ``A`` at each node is the Simpson line integral of ``v_perp`` along the
    two staircase paths from ``base`` (row first and column first); the
    result is their average and the largest discrepancy is stored as
    ``closure_error``.
    """
    base = d.center if base is None else (float(base[0]), float(base[1]))
    if not d.contains(*base, slack=1e-12):
        raise ValueError(f"base point {base} lies outside the disk")
    if not 0 < h <= d.radius / 32:
        raise ValueError(f"grid spacing must satisfy 0 < h <= radius/32, got {h}")
    if check_divergence:
        _check_divergence(f, d)
    cx, cy = d.center
    pad = d.radius + 2 * h
    ox, nx, ib = _aligned_axis(base[0], cx - pad, cx + pad, h)
    oy, ny, jb = _aligned_axis(base[1], cy - pad, cy + pad, h)
    xs = ox + h * np.arange(nx)
    ys = oy + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    u, v = f(X, Y)
    # v_perp = (-v, u)
    p_node, q_node = -np.asarray(v, dtype=float), np.asarray(u, dtype=float)
    Xm, Ym = np.meshgrid(xs[:-1] + h / 2, ys, indexing="ij")
    _, vm = f(Xm, Ym)
    Xn, Yn = np.meshgrid(xs, ys[:-1] + h / 2, indexing="ij")
    un, _ = f(Xn, Yn)
    if not all(np.all(np.isfinite(a)) for a in (p_node, q_node, vm, un)):
        raise IncompressibilityError(f"field {f.name!r} is not finite on the grid")

    sx = h / 6 * (p_node[:-1, :] - 4 * np.asarray(vm) + p_node[1:, :])
    sy = h / 6 * (q_node[:, :-1] + 4 * np.asarray(un) + q_node[:, 1:])
    cxs = np.zeros((nx, ny))
    cxs[1:, :] = np.cumsum(sx, axis=0)
    cys = np.zeros((nx, ny))
    cys[:, 1:] = np.cumsum(sy, axis=1)

    row_first = (cxs[:, jb] - cxs[ib, jb])[:, None] + (cys - cys[:, jb][:, None])
    col_first = (cys[ib, :] - cys[ib, jb])[None, :] + (cxs - cxs[ib, :][None, :])
    values = 0.5 * (row_first + col_first)
    values[ib, jb] = 0.0
    closure = float(np.max(np.abs(row_first - col_first)))

    c2 = float(np.max(np.hypot(p_node, q_node)))
    limit = CLOSURE_FACTOR * c2 * d.radius
    if closure > limit:
        raise IncompressibilityError(
            f"stream function does not close: closure error {closure:.3g} > {limit:.3g}"
        )
    return ScalarGrid((float(ox), float(oy)), float(h), nx, ny, values, base, closure)


# ---------------------------------------------------------------------------
# marching squares

# edge endpoints in cell-local corner order: 0=(0,0) 1=(1,0) 2=(1,1) 3=(0,1)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


def _cells_near(grid: ScalarGrid, clip: Disk) -> tuple[np.ndarray, np.ndarray]:
    """Indices of cells whose square meets the clip disk."""
    cx, cy = clip.center
    xs, ys = grid.xs, grid.ys
    x0, x1 = xs[:-1] - cx, xs[1:] - cx
    y0, y1 = ys[:-1] - cy, ys[1:] - cy
    nxd = np.where((x0 <= 0) & (x1 >= 0), 0.0, np.minimum(np.abs(x0), np.abs(x1)))
    nyd = np.where((y0 <= 0) & (y1 >= 0), 0.0, np.minimum(np.abs(y0), np.abs(y1)))
    near = np.hypot(nxd[:, None], nyd[None, :]) <= clip.radius
    return np.nonzero(near)


def _cell_segments(corners: np.ndarray, t: np.ndarray):
    """Marching-squares segments for (cell, level) pairs.

    ``corners`` has shape (m, 4) in local order; returns ``(pair, ea, fa, eb, fb)``
    arrays, one row per segment: the pair index, the two crossed edges and
    the fractional positions along them.
    """
    high = corners >= t[:, None]
    case = high[:, 0] * 1 + high[:, 1] * 2 + high[:, 2] * 4 + high[:, 3] * 8
    ca = corners[:, [a for a, _ in _EDGE_CORNERS]]
    cb = corners[:, [b for _, b in _EDGE_CORNERS]]
    crossed = (ca >= t[:, None]) != (cb >= t[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.clip((t[:, None] - ca) / (cb - ca), 0.0, 1.0)
    frac = np.where(crossed, frac, 0.0)

    saddle = (case == 5) | (case == 10)
    plain = ~saddle & (crossed.sum(axis=1) == 2)
    idx = np.nonzero(plain)[0]
    order = np.argsort(~crossed[idx], axis=1, kind="stable")
    ea, eb = order[:, 0], order[:, 1]
    pairs = [idx]
    e_a = [ea]
    e_b = [eb]

    sidx = np.nonzero(saddle)[0]
    if sidx.size:
        center_high = corners[sidx].mean(axis=1) >= t[sidx]
        # pairing (0,1),(2,3) isolates corners 1 and 3; (3,0),(1,2) isolates 0 and 2
        first = np.where(case[sidx] == 5, center_high, ~center_high)
        p1a = np.where(first, 0, 3)
        p1b = np.where(first, 1, 0)
        p2a = np.where(first, 2, 1)
        p2b = np.where(first, 3, 2)
        pairs += [sidx, sidx]
        e_a += [p1a, p2a]
        e_b += [p1b, p2b]

    pair = np.concatenate(pairs)
    ea = np.concatenate(e_a)
    eb = np.concatenate(e_b)
    return pair, ea, frac[pair, ea], eb, frac[pair, eb]


_EDGE_XY = np.array([[0.0, 0.0, 1.0, 0.0],   # bottom: frac along +x at y=0
                     [1.0, 0.0, 0.0, 1.0],   # right: x=1, frac along +y
                     [0.0, 1.0, 1.0, 0.0],   # top: frac along +x at y=1
                     [0.0, 0.0, 0.0, 1.0]])  # left: x=0, frac along +y


def _edge_point(edge, frac):
    e = _EDGE_XY[edge]
    return e[:, 0] + e[:, 2] * frac, e[:, 1] + e[:, 3] * frac


def _clip_to_disk(p, q, clip: Disk):
    """Clip segments ``p -> q`` (arrays (m, 2)) to the disk: (lo, hi) parameters."""
    c = np.asarray(clip.center)
    dvec = q - p
    rel = p - c
    a = np.einsum("ij,ij->i", dvec, dvec)
    b = 2 * np.einsum("ij,ij->i", rel, dvec)
    cc = np.einsum("ij,ij->i", rel, rel) - clip.radius**2
    disc = b * b - 4 * a * cc
    ok = (disc > 0) & (a > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        u1 = np.where(ok, (-b - sq) / (2 * a), 1.0)
        u2 = np.where(ok, (-b + sq) / (2 * a), 0.0)
    lo = np.clip(u1, 0.0, 1.0)
    hi = np.clip(u2, 0.0, 1.0)
    # zero-length segments count as inside when their point is
    degenerate = a <= 0
    inside_pt = cc <= 0
    lo = np.where(degenerate, 0.0, lo)
    hi = np.where(degenerate, np.where(inside_pt, 1.0, 0.0), hi)
    return lo, np.maximum(hi, lo)


def _segments_for(grid: ScalarGrid, ci, cj, t):
    v = grid.values
    corners = np.stack([v[ci, cj], v[ci + 1, cj], v[ci + 1, cj + 1], v[ci, cj + 1]], axis=1)
    pair, ea, fa, eb, fb = _cell_segments(corners, t)
    ax, ay = _edge_point(ea, fa)
    bx, by = _edge_point(eb, fb)
    x0 = grid.origin[0] + grid.h * ci[pair]
    y0 = grid.origin[1] + grid.h * cj[pair]
    p = np.column_stack([x0 + grid.h * ax, y0 + grid.h * ay])
    q = np.column_stack([x0 + grid.h * bx, y0 + grid.h * by])
    return pair, ea, eb, p, q


def level_lengths(grid: ScalarGrid, levels, clip: Disk) -> np.ndarray:
    """Clipped contour length for each level in ``levels`` (any order)."""
    levels = np.asarray(levels, dtype=float)
    order = np.argsort(levels)
    sorted_levels = levels[order]
    ci, cj = _cells_near(grid, clip)
    v = grid.values
    quad = np.stack([v[ci, cj], v[ci + 1, cj], v[ci + 1, cj + 1], v[ci, cj + 1]], axis=1)
    vmin, vmax = quad.min(axis=1), quad.max(axis=1)
    # a cell carries level t iff vmin < t <= vmax
    k_lo = np.searchsorted(sorted_levels, vmin, side="right")
    k_hi = np.searchsorted(sorted_levels, vmax, side="right")
    counts = k_hi - k_lo
    total = np.zeros(levels.size)
    if counts.sum() == 0:
        return total
    cells = np.repeat(np.arange(ci.size), counts)
    starts = np.repeat(k_lo - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    kidx = starts + np.arange(cells.size)
    for lo in range(0, cells.size, _PAIR_CHUNK):
        c = cells[lo:lo + _PAIR_CHUNK]
        k = kidx[lo:lo + _PAIR_CHUNK]
        pair, _, _, p, q = _segments_for(grid, ci[c], cj[c], sorted_levels[k])
        a, b = _clip_to_disk(p, q, clip)
        seg_len = (b - a) * np.hypot(*(q - p).T)
        total += np.bincount(k[pair], weights=seg_len, minlength=levels.size)
    out = np.empty_like(total)
    out[order] = total
    return out


def _chain(p, q, key_a, key_b):
    """Join segments sharing edge keys (-1 = free end) into polylines."""
    n = len(p)
    ends = {}
    for s in range(n):
        for end, key in ((0, key_a[s]), (1, key_b[s])):
            if key >= 0:
                ends.setdefault(key, []).append((s, end))
    used = np.zeros(n, dtype=bool)

    def other(key, seg):
        for s, end in ends.get(key, ()):
            if s != seg and not used[s]:
                return s, end
        return None

    def walk(seg, from_end):
        # traverse starting at segment `seg` entering through `from_end`
        pts = [p[seg] if from_end == 0 else q[seg]]
        while True:
            used[seg] = True
            exit_pt = q[seg] if from_end == 0 else p[seg]
            pts.append(exit_pt)
            key = key_b[seg] if from_end == 0 else key_a[seg]
            nxt = other(key, seg) if key >= 0 else None
            if nxt is None:
                return pts
            seg, from_end = nxt

    lines = []
    # open chains first: start at segments with a free or unmatched end
    for s in range(n):
        if used[s]:
            continue
        for end, key in ((0, key_a[s]), (1, key_b[s])):
            if key < 0 or len(ends.get(key, ())) == 1:
                lines.append(np.array(walk(s, end)))
                break
    for s in range(n):
        if not used[s]:
            lines.append(np.array(walk(s, 0)))
    return lines


def extract_level_set(grid: ScalarGrid, t: float, clip: Disk) -> LevelSet:
    """Polylines of ``A = t`` inside ``clip`` and their total length."""
    ci, cj = _cells_near(grid, clip)
    v = grid.values
    quad = np.stack([v[ci, cj], v[ci + 1, cj], v[ci + 1, cj + 1], v[ci, cj + 1]], axis=1)
    sel = (quad.min(axis=1) < t) & (t <= quad.max(axis=1))
    ci, cj = ci[sel], cj[sel]
    if ci.size == 0:
        return LevelSet(float(t), [], clip, 0.0)
    pair, ea, eb, p, q = _segments_for(grid, ci, cj, np.full(ci.size, float(t)))
    lo, hi = _clip_to_disk(p, q, clip)
    keep = hi > lo
    if not np.any(keep):
        return LevelSet(float(t), [], clip, 0.0)
    ny = grid.ny

    def key(edge, i, j):
        # horizontal edges 0/2, vertical edges 1/3, both keyed by their lower-left node
        ii = np.where(edge == 1, i + 1, i)
        jj = np.where(edge == 2, j + 1, j)
        vertical = (edge == 1) | (edge == 3)
        return (ii * ny + jj) * 2 + vertical

    pi_, pj = ci[pair], cj[pair]
    ka = np.where(lo > 0, -1, key(ea, pi_, pj))
    kb = np.where(hi < 1, -1, key(eb, pi_, pj))
    d = q - p
    p2 = p + lo[:, None] * d
    q2 = p + hi[:, None] * d
    p2, q2, ka, kb = p2[keep], q2[keep], ka[keep], kb[keep]
    lines = _chain(p2, q2, ka, kb)
    length = float(np.sum(np.hypot(*(q2 - p2).T)))
    return LevelSet(float(t), lines, clip, length)


# ---------------------------------------------------------------------------
# coarea and the short level


@dataclass(frozen=True)
class CoareaResult:
    lhs: float
    rhs: float
    rel_err: float

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.rel_err))


def gradient_mass(grid: ScalarGrid, clip: Disk) -> float:
    """Quadrature of ``|grad A|`` over ``clip`` with central differences."""
    gx, gy = grid.gradient()
    xe = np.concatenate([grid.xs - grid.h / 2, [grid.xs[-1] + grid.h / 2]])
    ye = np.concatenate([grid.ys - grid.h / 2, [grid.ys[-1] + grid.h / 2]])
    w = disk_cell_weights(xe, ye, clip)
    return float(np.sum(np.hypot(gx, gy) * w) * grid.h**2)


def coarea_check(grid: ScalarGrid, clip: Disk, n_levels: int = 256) -> CoareaResult:
    """Compare ``∫ H1(A = t) dt`` (trapezoid over levels) with ``∫ |grad A|``."""
    if n_levels < 32:
        raise ValueError("coarea_check needs n_levels >= 32")
    ci, cj = _cells_near(grid, clip)
    v = grid.values
    vals = np.concatenate([v[ci, cj], v[ci + 1, cj + 1]])
    levels = np.linspace(vals.min(), vals.max(), n_levels)
    lengths = level_lengths(grid, levels, clip)
    lhs = float(np.trapezoid(lengths, levels))
    rhs = gradient_mass(grid, clip)
    return CoareaResult(lhs, rhs, abs(lhs - rhs) / rhs)


@dataclass(frozen=True)
class ShortLevel:
    t0: float
    length: float
    scan_levels: np.ndarray = field(repr=False)
    scan_lengths: np.ndarray = field(repr=False)

    def __iter__(self):
        return iter((self.t0, self.length))


def level_scan_range(bounds: FieldBounds, signed: bool) -> tuple[float, float]:
    z = math.sqrt(math.pi * bounds.c1 * bounds.c2)
    return (-z / 2, z / 2) if signed else (0.0, z)


def find_short_level(grid: ScalarGrid, bounds: FieldBounds, clip: Disk, signed: bool = False,
                     n_levels: int = SCAN_LEVELS, exclude=()) -> ShortLevel:
    """Level ``t0`` whose clipped level set is shortest.

    Unsigned: ``t`` in ``(0, sqrt(pi c1 c2)]``; signed: ``[-z/2, z/2]``.  The
    best mesh level is refined with a bounded Brent search on its two
    neighbouring intervals.  Ties go to the level closest to zero.  Levels
    within one mesh spacing of any value in ``exclude`` are skipped.
    """
    lo, hi = level_scan_range(bounds, signed)
    if signed:
        levels = np.linspace(lo, hi, n_levels)
    else:
        levels = hi * np.arange(1, n_levels + 1) / n_levels
    lengths = level_lengths(grid, levels, clip)
    if not np.all(np.isfinite(lengths)):
        raise DegenerateLevelError("level lengths are not finite")
    step = levels[1] - levels[0]
    allowed = np.ones(levels.size, dtype=bool)
    for t in exclude:
        allowed &= np.abs(levels - t) > step
    if not np.any(allowed):
        raise DegenerateLevelError("every scanned level was excluded")
    cand = np.where(allowed, lengths, np.inf)
    best = cand.min()
    ties = np.nonzero(cand <= best)[0]
    k = ties[np.argmin(np.abs(levels[ties]))]
    t0, length = float(levels[k]), float(lengths[k])
    if length > 0:
        a = levels[max(k - 1, 0)]
        b = levels[min(k + 1, levels.size - 1)]
        if not signed:
            a = max(a, 1e-12 * hi)
        res = minimize_scalar(lambda t: level_lengths(grid, [t], clip)[0], bounds=(a, b),
                              method="bounded", options={"xatol": step * 1e-3, "maxiter": 25})
        if res.fun < length and all(abs(res.x - e) > step for e in exclude):
            t0, length = float(res.x), float(res.fun)
    return ShortLevel(t0, length, levels, lengths)
