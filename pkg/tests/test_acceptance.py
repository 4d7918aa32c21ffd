"""Acceptance criteria, each at its stated tolerance.

Every check records one pass/fail line, printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from fastescape import fieldexpr as fx
from fastescape.cli import main
from fastescape.fieldcore import (
    const_field,
    perpendicular,
    rotation,
    unit_disk,
    vn_field,
    zigzag_field,
)
from fastescape.fieldexpr import Binary, Unary
from fastescape.flow import escape_length
from fastescape.stream import coarea_check, compute_stream_function
from fastescape.verify import (
    compressible_fields,
    incompressible_suite,
    random_stream_fields,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
)

from test_fieldexpr import PARAMS, PRODUCTIONS


def test_c1_vn_lower_bound(criterion):
    with criterion(1, "v_N direct escape >= N/8, N in {8,16,32,64}, < 10 s") as out:
        t0 = time.perf_counter()
        lengths = {n: escape_length(vn_field(n), (0.0, 0.0)) for n in (8, 16, 32, 64)}
        elapsed = time.perf_counter() - t0
        for n, r in lengths.items():
            assert r.escaped and r.escape_length >= n / 8, f"N={n}: {r.escape_length}"
        assert elapsed < 10, f"took {elapsed:.1f}s"
        out.append(", ".join(f"N={n}: {r.escape_length:.4f}" for n, r in lengths.items()))


def test_c2_theorem1_suite(criterion):
    with criterion(2, "plan length <= sqrt(4 pi c2/c1) * 1.05 on 29 incompressible fields, < 60 s") as out:
        t0 = time.perf_counter()
        fields = incompressible_suite()
        reports = [verify_theorem1(f) for f in fields]
        elapsed = time.perf_counter() - t0
        assert len(fields) == 29
        bad = [r for r in reports if r.measured["total_length"] > r.bound * 1.05]
        assert not bad, f"over the bound: {[r.field_name for r in bad]}"
        assert elapsed < 60, f"took {elapsed:.1f}s"
        worst = max(r.measured["total_length"] / r.bound for r in reports)
        out.append(f"worst length/bound {worst:.3f}")


def test_c3_theorem3_suite(criterion):
    with criterion(3, "escape <= pi c2/c1 + int|curl|/c1 + 5% on 39 fields, < 60 s") as out:
        t0 = time.perf_counter()
        fields = incompressible_suite() + compressible_fields()
        reports = [verify_theorem3(f) for f in fields]
        elapsed = time.perf_counter() - t0
        assert len(fields) == 39
        bad = [r for r in reports if not r.measured["escape_length"] <= r.bound * 1.05]
        assert not bad, f"over the bound: {[r.field_name for r in bad]}"
        assert elapsed < 60, f"took {elapsed:.1f}s"
        worst = max(r.measured["escape_length"] / r.bound for r in reports)
        out.append(f"worst length/bound {worst:.3f}")


def test_c4_coarea(criterion):
    with criterion(4, "coarea: const within 2% of pi; v_4 at h=1/512 rel_err <= 3%") as out:
        grid = compute_stream_function(const_field(), unit_disk(), 1 / 256)
        lhs, rhs, _ = coarea_check(grid, unit_disk(), 256)
        assert abs(lhs - math.pi) <= 0.02 * math.pi, lhs
        assert abs(rhs - math.pi) <= 0.02 * math.pi, rhs
        grid = compute_stream_function(vn_field(4), unit_disk(), 1 / 512)
        res = coarea_check(grid, unit_disk(), 256)
        assert res.rel_err <= 0.03, res.rel_err
        out.append(f"const lhs {lhs:.5f} rhs {rhs:.5f}; v_4 rel_err {res.rel_err:.2e}")


def test_c5_stream_function(criterion):
    with criterion(5, "v_8 stream grid within 1e-6 at h=1/512; FD gradient O(h^2)") as out:
        h = 1 / 512
        grid = compute_stream_function(vn_field(8), unit_disk(), h)
        X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
        node_err = float(np.max(np.abs(grid.values - (Y - 0.5 * np.sin(8 * X)))))
        assert node_err <= 1e-6, node_err
        err, c = grid.gradient_check(vn_field(8))
        # central differences miss h^2/6 * max|A'''| = h^2 * 8^3/12
        assert c == pytest.approx(8**3 / 12, rel=0.01), c
        coarse_err, coarse_c = compute_stream_function(vn_field(8), unit_disk(), 2 * h).gradient_check(vn_field(8))
        assert coarse_err / err > 3.5, "gradient error is not second order"
        out.append(f"node err {node_err:.2e}; FD err {err:.2e} = C h^2 with C = {c:.2f} (C at 2h {coarse_c:.2f})")


def test_c6_trivial_cases(criterion):
    with criterion(6, "const escape 1 +- 1e-6; rotation pi/2 +- 1e-4; perp invariants on 1e4 samples") as out:
        r = escape_length(const_field(), (0.0, 0.0))
        assert abs(r.escape_length - 1) <= 1e-6, r.escape_length
        rot = escape_length(rotation(), (0.5, 0.0))
        assert abs(rot.escape_length - math.pi / 2) <= 1e-4, rot.escape_length
        rng = np.random.default_rng(0)
        pts = rng.uniform(-1, 1, size=(10_000, 2))
        fields = [vn_field(8), zigzag_field(8), rotation(), random_stream_fields(1)[0]]
        for f in fields:
            u, v = f(pts[:, 0], pts[:, 1])
            pu, pv = perpendicular(f)(pts[:, 0], pts[:, 1])
            assert np.array_equal(pu, -v) and np.array_equal(pv, u)
            assert np.all(u * pu + v * pv == 0.0)
            assert np.array_equal(np.hypot(u, v), np.hypot(pu, pv))
        out.append(f"const {r.escape_length:.12f}; rotation error {abs(rot.escape_length - math.pi / 2):.1e}")


def test_c7_theorem2(criterion):
    with criterion(7, "thm2 pass/inconclusive on v_16 and zigzag(8); zigzag perp <= 3, L_hat >= N/8") as out:
        rep_vn = verify_theorem2(vn_field(16), grid_n=17)
        rep_zz = verify_theorem2(zigzag_field(8), grid_n=17)
        for rep in (rep_vn, rep_zz):
            assert rep.verdict in ("pass", "inconclusive"), rep.to_dict()
        assert rep_zz.measured["perp_escape"] <= 3, rep_zz.measured
        assert rep_zz.measured["L_hat"] >= 8 / 8, rep_zz.measured
        out.append(f"v_16 {rep_vn.verdict} (perp {rep_vn.measured['perp_escape']:.3f} <= {rep_vn.bound:.2f}); "
                   f"zigzag {rep_zz.verdict} (perp {rep_zz.measured['perp_escape']:.3f}, "
                   f"L_hat {rep_zz.measured['L_hat']:.4f})")


def _node_kinds(node, acc):
    if isinstance(node, Binary):
        acc.add(("binary", node.op))
        _node_kinds(node.left, acc)
        _node_kinds(node.right, acc)
    elif isinstance(node, Unary):
        acc.add(("unary", node.op))
        _node_kinds(node.arg, acc)
    else:
        acc.add((type(node).__name__.lower(), None))
    return acc


GRAMMAR = {("binary", op) for op in "+-*/^"} | {("unary", op) for op in ("neg", "sin", "cos", "exp", "sqrt", "abs")} \
    | {("const", None), ("var", None), ("param", None)}


def test_c8_parser(criterion):
    with criterion(8, "parser: all productions round-trip; derivatives vs FD 1e-6; v_8 reproduced to 1e-12") as out:
        seen = set()
        for text in PRODUCTIONS.values():
            tree = fx.parse(text)
            assert fx.parse(fx.to_text(tree)) == tree, text
            _node_kinds(tree, seen)
        assert seen == GRAMMAR, GRAMMAR ^ seen
        worst = 0.0
        step = 1e-5
        for i, name in enumerate(sorted(PRODUCTIONS)):
            if name == "abs":
                continue
            tree = fx.parse(PRODUCTIONS[name])
            f = fx.compile_expr(tree, PARAMS)
            pts = np.random.default_rng(100 + i).uniform(-0.9, 0.9, size=(100, 2))
            x, y = pts[:, 0], pts[:, 1]
            for var, dx, dy in (("x", step, 0.0), ("y", 0.0, step)):
                exact = fx.compile_expr(fx.differentiate(tree, var), PARAMS)(x, y) + 0 * x
                fd = (f(x + dx, y + dy) - f(x - dx, y - dy)) / (2 * step)
                worst = max(worst, float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact)))))
        assert worst <= 1e-6, worst
        g, ref = fx.field_from_stream_function("y - 0.5*sin(8*x)"), vn_field(8)
        pts = np.random.default_rng(8).uniform(-1, 1, size=(100, 2))
        du = np.abs(np.subtract(g(pts[:, 0], pts[:, 1]), ref(pts[:, 0], pts[:, 1])))
        assert du.max() <= 1e-12, du.max()
        out.append(f"{len(seen)} node kinds, worst derivative rel err {worst:.1e}, v_8 err {du.max():.1e}")


def test_c9_determinism(criterion, tmp_path, capsys):
    with criterion(9, "two identical sweep/plan runs give byte-identical CSV/JSON") as out:
        blobs = {}
        for k in range(2):
            csv = tmp_path / f"sweep{k}.csv"
            js = tmp_path / f"plan{k}.json"
            assert main(["sweep", "--field", "vn", "--N", "4,8,16,32,64", "--out", str(csv)]) == 0
            assert main(["plan", "--field", "zigzag", "--param", "N=8", "--out", str(js)]) == 0
            assert main(["verify", "thm3", "--field", "random", "--param", "index=2",
                         "--out", str(tmp_path / f"thm3_{k}.json")]) == 0
            blobs[k] = [csv.read_bytes(), js.read_bytes(), (tmp_path / f"thm3_{k}.json").read_bytes()]
        capsys.readouterr()
        assert blobs[0] == blobs[1]
        out.append(f"sweep {len(blobs[0][0])} bytes, plan {len(blobs[0][1])} bytes, report {len(blobs[0][2])} bytes")


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_c1_vn_lower_bound_each(n):
    assert escape_length(vn_field(n), (0.0, 0.0)).escape_length >= n / 8
