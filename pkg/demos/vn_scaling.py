"""Direct, perpendicular and two-leg escapes of v_N as N grows.

The direct flow follows the graph y = sin(Nx)/2 and needs length of order N.
The perpendicular flow leaves almost straight.  The two-leg plan stays below
sqrt(4 pi c2/c1), which grows only like sqrt(N).

    python3 demos/vn_scaling.py
"""

from fastescape.fieldcore import vn_field
from fastescape.planner import compare_strategies


def main():
    print(f"{'N':>4} {'direct':>9} {'N/8':>6} {'perp':>7} {'plan':>7} {'bound':>7}")
    for n in (4, 8, 16, 32, 64):
        rep = compare_strategies(vn_field(n))
        print(f"{n:4d} {rep.direct:9.4f} {n / 8:6.2f} {rep.perpendicular:7.4f} "
              f"{rep.plan:7.4f} {rep.plan_bound:7.3f}")


if __name__ == "__main__":
    main()
