"""The zigzag field: long along v, and what the two-leg plan does.

The zigzag generating field v has stream function A whose level sets hug
the curve x = sin(N y); its perpendicular is the gradient of A.  The plan
scans levels of A for a short one.  From the origin the shortest level in
the scan range is empty, so the plan is the gradient leg alone: it climbs
A until it leaves the disk.  That leg has length about N/3, which is well
under sqrt(4 pi c2/c1) for every N this lab can resolve (the two cross
near N = 340).  The signed variant picks a nonempty level and uses both
legs.  SVG figures of both plans are written next to this script.

    python3 demos/zigzag_plan.py [N]
"""

import sys
from pathlib import Path

from fastescape.fieldcore import estimate_bounds, unit_disk, zigzag_field
from fastescape.planner import compare_strategies, plan_escape
from fastescape.stream import compute_stream_function, extract_level_set
from fastescape.svg import Curve, render_svg


def main(n=8):
    f = zigzag_field(n)
    rep = compare_strategies(f)
    print(f"zigzag N={n}: c1={rep.c1:.3f} c2={rep.c2:.3f}")
    print(f"  along v        {rep.direct:.4f}")
    print(f"  along v_perp   {rep.perpendicular:.4f}")

    grid = compute_stream_function(f, unit_disk(), 1 / 256)
    bounds = estimate_bounds(f, unit_disk())
    for mode in ("unsigned", "signed"):
        plan = plan_escape(f, mode=mode, grid=grid, bounds=bounds)
        level = extract_level_set(grid, plan.t0, unit_disk())
        print(f"  {mode:8s} plan {plan.total_length:.4f} = {plan.s_leg.length:.4f} + {plan.t_leg.length:.4f}"
              f"  (bound {plan.bound:.3f}, level A={plan.t0:.4f} of length {level.hausdorff_length:.4f})")
        curves = [Curve(p, "level", "#999999", dashed=True) for p in level.polylines]
        curves += [Curve(plan.s_leg.points, "s_leg", "#d62728"), Curve(plan.t_leg.points, "t_leg", "#1f77b4")]
        out = Path(__file__).with_name(f"zigzag{n}_{mode}.svg")
        out.write_text(render_svg(curves, unit_disk(), f"zigzag N={n}, {mode}"))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 8)
