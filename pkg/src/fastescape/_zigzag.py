"""Compiled kernels for the smoothed zigzag potential.

The potential is ``N*y - 2*N*dist((x, y), curve)`` for the curve
``t -> (amp*sin(N t), t)``.  The distance is replaced by a soft minimum over
a fixed, dense set of curve samples ``c_j``::

    D(p) = -eps * log( sum_j w_j * exp(-s_j(p) / eps) ),
    s_j(p) = sqrt(|p - c_j|**2 + eps**2),

with ``w_j`` the arclength element of sample ``j`` divided by
``sqrt(2 pi) eps``, which makes ``D`` close to ``sqrt(dist**2 + eps**2)``
near the curve.  Each ``s_j`` is smooth, so ``D`` is smooth everywhere: the
ridge on the curve and the medial axes between sweeps are both rounded at
scale ``eps``.  The potential is ``N*y - 2*N*(D - eps)`` and its gradient is
the weighted mean of the ``(p - c_j) / s_j``, so no finite differences are
involved.

Samples are spaced at most ``eps`` apart in arclength, which keeps the
discrete sum within ``exp(-20)`` of the continuous one.  Samples more than
``_CUTOFF * eps`` above the minimum are dropped.

The exact distance to the curve (for diagnostics) is computed per monotone
sweep (half period) with a safeguarded Newton search.
"""

import math

import numpy as np
from numba import njit

_SAMPLES_PER_SWEEP = 32
_CUTOFF = 16.0


def sample_table(n, amp, eps):
    """Curve samples over one period: ``(xs, weights, dt)`` with ``t_j = j * dt``."""
    top_speed = math.hypot(amp * n, 1.0)
    m = int(math.ceil(2.0 * math.pi * top_speed / (n * eps)))
    dt = 2.0 * math.pi / (n * m)
    t = dt * np.arange(m)
    xs = amp * np.sin(n * t)
    speed = np.hypot(amp * n * np.cos(n * t), 1.0)
    weights = speed * dt / (math.sqrt(2.0 * math.pi) * eps)
    return xs, weights, dt


@njit(cache=True)
def _point(x, y, xs, weights, dt, half_period, eps):
    m = xs.size
    # any window of half a period in t meets every x in [-amp, amp]
    j0 = int(math.ceil((y - half_period) / dt))
    j1 = int(math.floor((y + half_period) / dt))
    e2 = eps * eps
    best = np.inf
    for j in range(j0, j1 + 1):
        dx = x - xs[j % m]
        dy = y - j * dt
        s2 = dx * dx + dy * dy + e2
        if s2 < best:
            best = s2
    best = math.sqrt(best)
    reach = best + _CUTOFF * eps
    j0 = int(math.ceil((y - reach) / dt))
    j1 = int(math.floor((y + reach) / dt))
    total = 0.0
    sx = 0.0
    sy = 0.0
    r2 = reach * reach
    for j in range(j0, j1 + 1):
        k = j % m
        dx = x - xs[k]
        dy = y - j * dt
        s2 = dx * dx + dy * dy + e2
        if s2 > r2:
            continue
        sj = math.sqrt(s2)
        w = weights[k] * math.exp((best - sj) / eps)
        total += w
        sx += w * dx / sj
        sy += w * dy / sj
    big_d = best - eps * math.log(total)
    return big_d, sx / total, sy / total


@njit(cache=True)
def zigzag_kernel(px, py, n, xs, weights, dt, eps):
    """Potential and gradient on flat arrays."""
    size = px.size
    pot = np.empty(size)
    gx = np.empty(size)
    gy = np.empty(size)
    half = math.pi / n
    for i in range(size):
        d, ux, uy = _point(px[i], py[i], xs, weights, dt, half, eps)
        pot[i] = n * py[i] - 2.0 * n * (d - eps)
        gx[i] = -2.0 * n * ux
        gy[i] = n - 2.0 * n * uy
    return pot, gx, gy


@njit(cache=True)
def zigzag_gradient_point(x, y, n, xs, weights, dt, eps):
    _, ux, uy = _point(x, y, xs, weights, dt, math.pi / n, eps)
    return -2.0 * n * ux, n - 2.0 * n * uy


@njit(cache=True)
def _dphi(x, y, t, n, amp):
    s = math.sin(n * t)
    c = math.cos(n * t)
    dx = x - amp * s
    dy = y - t
    # half of d/dt |p - curve(t)|^2
    return -amp * n * c * dx - dy


@njit(cache=True)
def _refine(x, y, a, b, n, amp):
    """Safeguarded Newton for the root of _dphi in [a, b] (sign - to +)."""
    t = 0.5 * (a + b)
    for _ in range(60):
        s = math.sin(n * t)
        c = math.cos(n * t)
        dx = x - amp * s
        g = -amp * n * c * dx - (y - t)
        if g < 0.0:
            a = t
        else:
            b = t
        hss = amp * amp * n * n * c * c + amp * n * n * s * dx + 1.0
        tn = t - g / hss if hss > 0.0 else 0.5 * (a + b)
        if not (a < tn < b):
            tn = 0.5 * (a + b)
        if abs(tn - t) < 1e-15 or b - a < 1e-15:
            return tn
        t = tn
    return t


@njit(cache=True)
def _sweep_foot(x, y, k, n, amp):
    """Closest parameter on sweep k and the squared distance.

    Every sample interval where the derivative of the squared distance
    changes sign from - to + is refined, so a shallow interior minimum is
    not lost to a nearby endpoint.  Samples cluster at the sweep ends where
    the curve folds.
    """
    lo = (k - 0.5) * math.pi / n
    hi = (k + 0.5) * math.pi / n
    m = _SAMPLES_PER_SWEEP
    best_t = lo
    dx = x - amp * math.sin(n * lo)
    dy = y - lo
    best = dx * dx + dy * dy
    dx = x - amp * math.sin(n * hi)
    dy = y - hi
    ph = dx * dx + dy * dy
    if ph < best:
        best = ph
        best_t = hi
    t_prev = lo
    g_prev = _dphi(x, y, lo, n, amp)
    for i in range(1, m + 1):
        # Chebyshev spacing: the sharp folds sit at the sweep ends
        t = lo + (hi - lo) * 0.5 * (1.0 - math.cos(math.pi * i / m))
        g = _dphi(x, y, t, n, amp)
        if g_prev < 0.0 <= g:
            tr = _refine(x, y, t_prev, t, n, amp)
            dx = x - amp * math.sin(n * tr)
            dy = y - tr
            ph = dx * dx + dy * dy
            if ph < best:
                best = ph
                best_t = tr
        t_prev = t
        g_prev = g
    return best_t, best


@njit(cache=True)
def curve_distance(px, py, n, amp):
    """Exact distance from each point to the curve ``(amp sin(n t), t)``."""
    out = np.empty(px.size)
    for i in range(px.size):
        x = px[i]
        y = py[i]
        k0 = int(math.floor(y * n / math.pi + 0.5))
        best = np.inf
        for direction in (0, 1, -1):
            step = 0
            while True:
                if direction == 0:
                    k = k0
                else:
                    step += 1
                    k = k0 + direction * step
                lo = (k - 0.5) * math.pi / n
                hi = (k + 0.5) * math.pi / n
                gap = max(0.0, lo - y, y - hi)
                if direction != 0 and gap * gap > best:
                    break
                _, ph = _sweep_foot(x, y, k, n, amp)
                if ph < best:
                    best = ph
                if direction == 0:
                    break
        out[i] = math.sqrt(best)
    return out
