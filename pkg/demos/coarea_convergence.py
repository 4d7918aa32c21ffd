"""Coarea identity on the stream-function grid as the spacing shrinks.

Integrating level-set lengths over all levels must give the integral of
|grad A| = |v| over the disk.  Both sides are computed independently:
marching squares for the left, grid quadrature for the right.

    python3 demos/coarea_convergence.py
"""

from fastescape.fieldcore import unit_disk, vn_field
from fastescape.fieldexpr import field_from_stream_function
from fastescape.stream import coarea_check, compute_stream_function

FIELDS = [vn_field(4), vn_field(8), field_from_stream_function("y + 0.3*sin(2*x + y)", name="wavy")]


def main():
    for f in FIELDS:
        for h in (1 / 64, 1 / 128, 1 / 256):
            grid = compute_stream_function(f, unit_disk(), h)
            lhs, rhs, rel = coarea_check(grid, unit_disk(), 256)
            label = f.name + "".join(f"{v:g}" for v in f.params.values())
            print(f"{label:6s} h=1/{round(1 / h):<4d} levels {lhs:9.5f}  mass {rhs:9.5f}  rel {rel:.2e}")


if __name__ == "__main__":
    main()
