import math

import numpy as np
import pytest

from fastescape.errors import StagnationError
from fastescape.fieldcore import const_field, linear_field, perpendicular, rotation, vn_field
from fastescape.flow import (
    Event,
    bidirectional_escape_length,
    default_budget,
    escape_length,
    integrate_unit_speed,
)

# exit abscissa solves x^2 + sin(Nx)^2/4 = 1 (brentq); length is the arclength
# of y = sin(Nx)/2 on [0, x] by scipy.integrate.quad at 1e-13
VN_ORACLE = {
    4: (0.9513611927104826, 1.667677373577182),
    8: (0.9087965286926301, 2.6391448993894784),
    16: (0.871408054464445, 4.623212676269826),
    32: (0.9133183740357456, 9.490223325926165),
    64: (0.9001034362894331, 18.48303786577063),
}


def test_constant_field_is_exact():
    r = escape_length(const_field(), (0.0, 0.0))
    assert r.escaped
    assert r.escape_length == pytest.approx(1.0, abs=1e-9)
    assert r.exit_point == pytest.approx((1.0, 0.0), abs=1e-9)


def test_constant_field_other_disk():
    r = escape_length(const_field(), (2.0, -1.0), radius=0.5)
    assert r.escape_length == pytest.approx(0.5, abs=1e-9)


def test_rotation_orbit_touches_at_half_turn():
    # the orbit is the circle |p| = 1/2; it reaches distance 1 from (1/2, 0)
    # only tangentially, at the antipode, after a half turn
    r = escape_length(rotation(), (0.5, 0.0))
    assert r.escaped
    assert r.escape_length == pytest.approx(math.pi / 2, abs=1e-4)
    assert r.exit_point == pytest.approx((-0.5, 0.0), abs=1e-4)


def test_rotation_orbit_stays_on_circle():
    r = escape_length(rotation(), (0.5, 0.0))
    radii = np.hypot(r.curve.points[:, 0], r.curve.points[:, 1])
    assert np.max(np.abs(radii - 0.5)) < 1e-8


@pytest.mark.parametrize("n", sorted(VN_ORACLE))
def test_vn_escape_matches_oracle(n):
    x_exit, length = VN_ORACLE[n]
    r = escape_length(vn_field(n), (0.0, 0.0))
    assert r.escaped
    assert r.escape_length == pytest.approx(length, abs=1e-7)
    assert r.exit_point[0] == pytest.approx(x_exit, abs=1e-7)
    assert r.escape_length >= n / 8


@pytest.mark.parametrize("n", [8, 32])
def test_vn_orbit_follows_the_graph(n):
    pts = escape_length(vn_field(n), (0.0, 0.0)).curve.points
    assert np.max(np.abs(pts[:, 1] - 0.5 * np.sin(n * pts[:, 0]))) < 1e-7


def test_stagnation_point_is_a_hypothesis_violation():
    r = escape_length(rotation(), (0.0, 0.0))
    assert r.status == "hypothesis_violated"
    assert math.isnan(r.escape_length)
    with pytest.raises(StagnationError):
        integrate_unit_speed(rotation(), (0.0, 0.0), 1.0)


def test_budget_exhaustion():
    r = escape_length(rotation(), (0.5, 0.0), radius=2.0, max_length=3.0)
    assert r.status == "budget_exhausted"
    assert not r.escaped
    assert r.escape_length == pytest.approx(3.0)


def test_default_budget():
    assert default_budget(vn_field(8)) == pytest.approx(100 * math.sqrt(17))
    assert default_budget(const_field()) == pytest.approx(100.0)


def test_custom_event():
    curve, hit = integrate_unit_speed(const_field(), (0.0, 0.0), 5.0, [Event("wall", lambda x, y: x - 0.3)])
    assert hit.name == "wall"
    assert hit.s == pytest.approx(0.3, abs=1e-9)
    assert curve.length == pytest.approx(0.3, abs=1e-9)


def test_no_event_runs_to_max_length():
    curve, hit = integrate_unit_speed(rotation(), (0.5, 0.0), 1.0)
    assert hit is None
    assert curve.length == pytest.approx(1.0)
    assert curve.s[0] == 0.0 and np.all(np.diff(curve.s) > 0)


def test_bidirectional_picks_the_shorter_side():
    # flow along (x, -y) from (0.1, 0.2): forward is faster toward +x,
    # backward heads the same distance along +y first
    f = linear_field(1.0, 0.0, 0.0, -1.0)
    fwd = escape_length(f, (0.1, 0.2))
    bwd = escape_length(f.reversed(), (0.1, 0.2))
    both = bidirectional_escape_length(f, (0.1, 0.2))
    assert both.escape_length == pytest.approx(min(fwd.escape_length, bwd.escape_length))
    assert fwd.escape_length != pytest.approx(bwd.escape_length)


def test_perpendicular_flow_of_vn_is_short():
    r = escape_length(perpendicular(vn_field(64)), (0.0, 0.0))
    assert r.escaped and r.escape_length < 1.5


def test_reversed_curve_direction_label():
    r = escape_length(vn_field(4).reversed(), (0.0, 0.0))
    assert r.curve.direction == "backward"
    assert r.escape_length == pytest.approx(VN_ORACLE[4][1], abs=1e-7)
