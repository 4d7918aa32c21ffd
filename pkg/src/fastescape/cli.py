"""Command-line interface.

Machine-readable output (JSON, CSV) goes to stdout or ``--out``; a short
human summary goes to stderr.  Exit codes: 0 ok/pass, 1 fail, 2 config
error, 3 hypothesis violated, 4 numerical failure, 5 inconclusive.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .errors import ExpressionError, HypothesisViolated, NumericalFailure
from .fieldcore import FIELD_REGISTRY, Disk, estimate_bounds, make_field, perpendicular
from .fieldexpr import field_from_stream_function, gradient_field
from .flow import MAX_STEP, bidirectional_escape_length, escape_length
from .planner import compare_strategies, plan_escape
from .serialize import csv_row, dumps
from .stream import compute_stream_function, extract_level_set
from .svg import Curve, render_svg
from .verify import (
    random_stream_fields,
    verify_coarea,
    verify_irrotational_bound,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
    verify_vn_scaling,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERICAL, EXIT_INCONCLUSIVE = range(6)
VERDICT_EXIT = {"pass": EXIT_OK, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}
FIELD_PARAMS = {
    "const": {"u": 1.0, "v": 0.0},
    "rotation": {},
    "vn": {"N": None},
    "zigzag": {"N": None, "eps": "0.25/N", "amp": 1.0},
    "zigzag-grad": {"N": None, "eps": "0.25/N", "amp": 1.0},
    "linear": {"a": 1.0, "b": 0.0, "c": 0.0, "d": 1.0},
    "random": {"index": 0},
}
SWEEP_HEADER = ("N", "c1", "c2", "ell_direct", "ell_perp", "plan_length", "thm1_bound")


class ConfigError(Exception):
    pass


def _point(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y but got {text!r}") from None
    return x, y


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected K=V but got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a number, got {value!r}") from None


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _n_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("the N list is empty")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad N list {text!r}") from None


def _common(p: argparse.ArgumentParser, start=True):
    p.add_argument("--field", help="built-in field name (see list-fields)")
    p.add_argument("--expr", help="stream-function expression A(x, y); the field is (A_y, -A_x)")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="K=V")
    if start:
        p.add_argument("--start", type=_point, default=(0.0, 0.0), metavar="X,Y")
    p.add_argument("--radius", type=_positive, default=1.0)
    p.add_argument("--h", type=_positive, default=1 / 256, help="stream grid spacing")
    p.add_argument("--max-length", type=_positive, default=None)
    p.add_argument("--seed", type=int, default=0, help="seed for the random field family")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--svg", help="write an SVG figure here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastescape", description="Escape lengths of planar incompressible flows.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("escape", help="escape length of the flow from a start point")
    _common(p)
    p.add_argument("--bidirectional", action="store_true", help="shorter of forward and backward")
    p.add_argument("--perp", action="store_true", help="flow along the perpendicular field")

    p = sub.add_parser("plan", help="two-leg escape plan (v_perp then v)")
    _common(p)
    p.add_argument("--signed", action="store_true", help="experimental signed-level variant")

    p = sub.add_parser("verify", help="check a bound and report a verdict")
    p.add_argument("theorem", choices=["thm1", "thm2", "thm3", "irrot", "coarea", "vn-scaling"])
    _common(p)
    p.add_argument("--grid", type=int, default=17, help="start grid size for thm2")
    p.add_argument("--restricted-time", action="store_true", help="thm2 with forward lengths only")
    p.add_argument("--signed", action="store_true")
    p.add_argument("--levels", type=int, default=256, help="number of levels for coarea")
    p.add_argument("--N", type=_n_list, default=None, help="comma list for vn-scaling")
    p.add_argument("--lower", type=float, default=None, help="irrot: required minimum length")

    p = sub.add_parser("sweep", help="CSV of escape lengths and plan bounds over N")
    _common(p)
    p.add_argument("--N", type=_n_list, required=True, help="comma-separated N values")

    p = sub.add_parser("render", help="SVG of the direct, perpendicular and planned escapes")
    _common(p)

    sub.add_parser("list-fields", help="built-in field names and their parameters")
    return parser


def resolve_field(args):
    params = dict(args.param)
    if bool(args.field) == bool(args.expr):
        raise ConfigError("give exactly one of --field and --expr")
    if args.expr:
        f = field_from_stream_function(args.expr, params)
        _warn_step(f)
        return f
    if args.field == "random":
        index = int(params.get("index", 0))
        if index < 0:
            raise ConfigError("random field index must be >= 0")
        return random_stream_fields(index + 1, args.seed)[index]
    if args.field not in FIELD_REGISTRY:
        raise ConfigError(f"unknown field {args.field!r}; known: {', '.join(sorted(FIELD_PARAMS))}")
    try:
        f = make_field(args.field, params)
    except KeyError as e:
        raise ConfigError(f"field {args.field!r}: {e.args[0]}") from None
    _warn_step(f)
    return f


def _warn_step(f):
    # the field oscillates at wavelength 2 pi / N; only step control keeps the largest step safe
    n = f.params.get("N")
    if n is not None and n > 60 and MAX_STEP > 0.1 / n:
        print(f"warning: N = {n:g} oscillates faster than the maximum step {MAX_STEP:g} resolves"
              f" without error control (0.1/N = {0.1 / n:.3g}); compare against a smaller step"
              " before trusting digits beyond 1e-7", file=sys.stderr)


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_svg(path: Optional[str], curves, disk: Disk, title: str):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_svg(curves, disk, title))


def _unit_radius(args, what: str):
    if args.radius != 1.0:
        raise ConfigError(f"{what} works on the unit disk; --radius must be 1")


def cmd_escape(args) -> int:
    f = resolve_field(args)
    if args.perp:
        f = perpendicular(f)
    run = bidirectional_escape_length if args.bidirectional else escape_length
    r = run(f, args.start, args.radius, args.max_length)
    report = {
        "field": f.name,
        "params": dict(f.params),
        "start": list(args.start),
        "radius": args.radius,
        "escape_length": r.escape_length,
        "exit_point": list(r.exit_point),
        "status": r.status,
        "direction": r.curve.direction,
        "samples": len(r.curve),
    }
    _emit(args, dumps(report) + "\n")
    _write_svg(args.svg, [Curve(r.curve.points, "flow")], Disk(args.start, args.radius), f.name)
    print(f"{f.name}: {r.status}, length {r.escape_length:.9g}", file=sys.stderr)
    if r.status == "hypothesis_violated":
        return EXIT_HYPOTHESIS
    return EXIT_OK if r.escaped else EXIT_NUMERICAL


def _plan_curves(plan, grid, disk):
    curves = [Curve(line, "level", "#999999", dashed=True)
              for line in extract_level_set(grid, plan.t0, disk).polylines]
    curves.append(Curve(plan.s_leg.points, "s_leg", "#d62728"))
    curves.append(Curve(plan.t_leg.points, "t_leg", "#1f77b4"))
    return curves


def cmd_plan(args) -> int:
    _unit_radius(args, "plan")
    f = resolve_field(args)
    disk = Disk(args.start, 1.0)
    bounds = estimate_bounds(f, disk)
    if bounds.violates_hypothesis:
        raise HypothesisViolated(f"field {f.name!r} has c1 = {bounds.c1:.3g} on the disk")
    grid = compute_stream_function(f, disk, args.h, base=args.start)
    plan = plan_escape(f, args.start, "signed" if args.signed else "unsigned",
                       h=args.h, bounds=bounds, grid=grid)
    data = dict(plan.to_dict(), field=f.name, params=dict(f.params))
    _emit(args, dumps(data) + "\n")
    _write_svg(args.svg, _plan_curves(plan, grid, disk), disk, f"{f.name} plan")
    print(f"{f.name}: total {plan.total_length:.6g} vs bound {plan.bound:.6g}"
          f" ({'satisfied' if plan.satisfied else 'NOT satisfied'})", file=sys.stderr)
    return EXIT_OK if plan.satisfied else EXIT_FAIL


def cmd_verify(args) -> int:
    kind = args.theorem
    if kind == "vn-scaling":
        report = verify_vn_scaling(args.N or (8, 16, 32, 64))
    elif kind == "irrot":
        params = dict(args.param)
        if args.expr:
            if args.field:
                raise ConfigError("give exactly one of --field and --expr")
            f = gradient_field(args.expr, params)
        else:
            f = resolve_field(args)
        report = verify_irrotational_bound(f, args.start, lower=args.lower)
    else:
        f = resolve_field(args)
        if kind == "thm1":
            _unit_radius(args, "thm1")
            report = verify_theorem1(f, args.start, h=args.h,
                                     mode="signed" if args.signed else "unsigned")
        elif kind == "thm2":
            if args.grid < 2:
                raise ConfigError("--grid must be at least 2")
            report = verify_theorem2(f, args.grid, restricted_time=args.restricted_time)
        elif kind == "thm3":
            report = verify_theorem3(f, args.start)
        else:
            if args.levels < 32:
                raise ConfigError("--levels must be at least 32")
            report = verify_coarea(f, Disk(args.start, args.radius), args.h, args.levels)
    _emit(args, report.to_json() + "\n")
    print(f"{report.theorem_id} on {report.field_name}: {report.verdict}"
          f" (bound {report.bound:.6g}, margin {report.margin:.6g})", file=sys.stderr)
    return VERDICT_EXIT[report.verdict]


def cmd_sweep(args) -> int:
    _unit_radius(args, "sweep")
    if args.expr:
        raise ConfigError("sweep needs a built-in field with an N parameter")
    rows = [",".join(SWEEP_HEADER)]
    for n in args.N:
        args_n = argparse.Namespace(**vars(args))
        args_n.param = [p for p in args.param if p[0] != "N"] + [("N", n)]
        f = resolve_field(args_n)
        rep = compare_strategies(f, args.start, h=args.h)
        rows.append(csv_row([n, rep.c1, rep.c2, rep.direct, rep.perpendicular, rep.plan,
                             rep.plan_bound]))
        print(f"N={n:g}: direct {rep.direct:.4g}, perp {rep.perpendicular:.4g},"
              f" plan {rep.plan:.4g} <= {rep.plan_bound:.4g}", file=sys.stderr)
    _emit(args, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_render(args) -> int:
    _unit_radius(args, "render")
    if not (args.svg or args.out):
        raise ConfigError("render needs --svg PATH")
    f = resolve_field(args)
    disk = Disk(args.start, 1.0)
    bounds = estimate_bounds(f, disk)
    budget = args.max_length or 100 * bounds.c2 / max(bounds.c1, 1e-12)
    direct = escape_length(f, args.start, 1.0, budget)
    perp = escape_length(perpendicular(f), args.start, 1.0, budget)
    curves = [Curve(direct.curve.points, "direct", "#2ca02c"),
              Curve(perp.curve.points, "perp", "#9467bd")]
    summary = {"field": f.name, "direct": direct.escape_length, "perp": perp.escape_length}
    if not bounds.violates_hypothesis:
        grid = compute_stream_function(f, disk, args.h, base=args.start)
        plan = plan_escape(f, args.start, h=args.h, bounds=bounds, grid=grid)
        curves += _plan_curves(plan, grid, disk)
        summary["plan"] = plan.total_length
    path = args.svg or args.out
    _write_svg(path, curves, disk, f.name)
    summary["svg"] = path
    summary["curves"] = len(curves)
    sys.stdout.write(dumps(summary) + "\n")
    return EXIT_OK


def cmd_list_fields(args) -> int:
    sys.stdout.write(dumps(FIELD_PARAMS) + "\n")
    return EXIT_OK


COMMANDS = {
    "escape": cmd_escape,
    "plan": cmd_plan,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "render": cmd_render,
    "list-fields": cmd_list_fields,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ExpressionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolated as e:
        print(f"hypothesis violated: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
