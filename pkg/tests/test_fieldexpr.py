import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastescape import fieldexpr as fx
from fastescape.errors import NonDifferentiableError, ParseError, UnknownIdentifierError
from fastescape.fieldcore import divergence, vn_field
from fastescape.fieldexpr import Binary, Const, Param, Unary, Var

# one expression per grammar production (and per function / operator)
PRODUCTIONS = {
    "number": "2.5",
    "number_exp": "1e-3*x",
    "var_x": "x",
    "var_y": "y",
    "param": "N*x",
    "add": "x + y",
    "sub": "x - y",
    "mul": "x*y",
    "div": "x/(2 + y)",
    "power_int": "x^2",
    "power_real": "(x + 3)^1.5",
    "power_neg": "(x + 3)^-2",
    "unary_minus_base": "-x",
    "unary_minus_power": "-x^2",
    "unary_minus_number": "-2*y",
    "nested_minus": "--x",
    "paren": "(x + y)*x",
    "sin": "sin(x)",
    "cos": "cos(y)",
    "exp": "exp(x*y)",
    "sqrt": "sqrt(2 + x)",
    "abs": "abs(x)",
    "left_assoc_sub": "x - y - 1",
    "left_assoc_div": "x/2/(y + 3)",
    "mixed": "y - 0.5*sin(N*x) + cos(x)^3/(2 + y^2)",
}
PARAMS = {"N": 3.0}


def _rand_points(n=100, seed=0, lo=-0.9, hi=0.9):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n, 2))


def test_parse_example_tree():
    tree = fx.parse("y - 0.5*sin(8*x)")
    assert tree == Binary("-", Var("y"), Binary("*", Const(0.5), Unary("sin", Binary("*", Const(8.0), Var("x")))))


def test_power_has_constant_exponent():
    tree = fx.parse("x^2 + y^2")
    assert tree == Binary("+", Binary("^", Var("x"), Const(2.0)), Binary("^", Var("y"), Const(2.0)))


def test_precedence_power_over_unary_minus():
    assert fx.parse("-x^2") == Unary("neg", Binary("^", Var("x"), Const(2.0)))
    assert fx.parse("-2^2") == Unary("neg", Binary("^", Const(2.0), Const(2.0)))
    assert fx.compile_expr(fx.parse("-2^2"))(0.0, 0.0) == -4.0


def test_left_associativity():
    assert fx.parse("x - y - 1") == Binary("-", Binary("-", Var("x"), Var("y")), Const(1.0))
    f = fx.compile_expr(fx.parse("8/4/2"))
    assert f(0.0, 0.0) == 1.0


def test_whitespace_insensitive():
    assert fx.parse(" y-0.5 *  sin( 8*x ) ") == fx.parse("y - 0.5*sin(8*x)")


@pytest.mark.parametrize("text, offset", [("sin(", 4), ("x +", 3), ("(x", 2), ("x*)", 2), ("", 0)])
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ParseError) as err:
        fx.parse(text)
    assert err.value.offset == offset
    assert err.value.expected


def test_sin_open_expects_expression():
    with pytest.raises(ParseError) as err:
        fx.parse("sin(")
    assert err.value.offset == 4
    assert "expression" in err.value.expected


def test_unknown_identifiers():
    with pytest.raises(UnknownIdentifierError):
        fx.parse("tan(x)")
    with pytest.raises(UnknownIdentifierError) as err:
        fx.parse("y + M*x", {"N": 1.0})
    assert err.value.offset == 4


def test_exponent_must_be_number():
    with pytest.raises(ParseError):
        fx.parse("x^y")


@pytest.mark.parametrize("name", sorted(PRODUCTIONS))
def test_round_trip_every_production(name):
    tree = fx.parse(PRODUCTIONS[name])
    assert fx.parse(fx.to_text(tree)) == tree


@pytest.mark.parametrize("name", sorted(set(PRODUCTIONS) - {"abs"}))
def test_derivatives_match_central_differences(name):
    tree = fx.parse(PRODUCTIONS[name])
    f = fx.compile_expr(tree, PARAMS)
    step = 1e-5
    for var in ("x", "y"):
        df = fx.compile_expr(fx.differentiate(tree, var), PARAMS)
        pts = _rand_points(seed=sorted(PRODUCTIONS).index(name))
        x, y = pts[:, 0], pts[:, 1]
        if var == "x":
            fd = (f(x + step, y) - f(x - step, y)) / (2 * step)
        else:
            fd = (f(x, y + step) - f(x, y - step)) / (2 * step)
        exact = df(x, y) + 0 * x
        scale = np.maximum(1.0, np.abs(exact))
        assert np.max(np.abs(fd - exact) / scale) < 1e-6


def test_derivative_examples():
    a = fx.parse("y - 0.5*sin(8*x)")
    dx = fx.compile_expr(fx.differentiate(a, "x"))
    pts = _rand_points()
    np.testing.assert_allclose(dx(pts[:, 0], pts[:, 1]), -4 * np.cos(8 * pts[:, 0]), atol=1e-12)
    assert fx.differentiate(a, "y") == Const(1.0)
    assert abs(fx.compile_expr(fx.differentiate(fx.parse("x^2"), "x"))(3.0, 0.0) - 6.0) < 1e-12


def test_abs_is_not_differentiable():
    with pytest.raises(NonDifferentiableError):
        fx.differentiate(fx.parse("y + abs(x)"), "x")
    with pytest.raises(NonDifferentiableError):
        fx.field_from_stream_function("abs(y)")


def test_stream_function_reproduces_vn():
    f = fx.field_from_stream_function("y - 0.5*sin(N*x)", {"N": 8})
    g = vn_field(8)
    pts = _rand_points(seed=3, lo=-1, hi=1)
    u1, v1 = f(pts[:, 0], pts[:, 1])
    u2, v2 = g(pts[:, 0], pts[:, 1])
    assert np.max(np.abs(u1 - u2)) <= 1e-12
    assert np.max(np.abs(v1 - v2)) <= 1e-12
    for x, y in pts[:10]:
        assert np.allclose(f.at(x, y), g.at(x, y), atol=1e-12)


def test_stream_function_simple_fields():
    f = fx.field_from_stream_function("y")
    assert f.at(0.3, -0.2) == (1.0, 0.0)
    rot = fx.field_from_stream_function("(x^2 + y^2)/2")
    u, v = rot.at(0.3, -0.2)
    assert math.isclose(u, -0.2) and math.isclose(v, -0.3)


def test_stream_function_is_divergence_free_and_curl_is_minus_laplacian():
    f = fx.field_from_stream_function("y + 0.3*sin(2*x + y) + 0.1*x^2*y")
    pts = _rand_points(seed=5)
    x, y = pts[:, 0], pts[:, 1]
    assert np.all(divergence(f, (x, y)) == 0.0)
    step = 1e-5
    du = (f(x + step, y)[0] - f(x - step, y)[0]) / (2 * step)
    dv = (f(x, y + step)[1] - f(x, y - step)[1]) / (2 * step)
    assert np.max(np.abs(du + dv)) < 1e-9
    lap = -0.3 * 5 * np.sin(2 * x + y) + 0.2 * y
    np.testing.assert_allclose(f.analytic_curl(x, y), -lap, atol=1e-12)


def test_gradient_field():
    g = fx.gradient_field("x + 0.1*sin(3*y)")
    u, v = g.at(0.2, 0.4)
    assert u == 1.0 and math.isclose(v, 0.3 * math.cos(1.2))


def test_parameters_and_missing_binding():
    tree = fx.parse("N*x + M")
    assert fx.parameters(tree) == {"N", "M"}
    with pytest.raises(UnknownIdentifierError):
        fx.compile_expr(tree, {"N": 1.0})


def test_invalid_points_give_nan():
    f = fx.field_from_stream_function("sqrt(x)*y")
    u, v = f.at(-1.0, 0.5)
    assert math.isnan(u) and math.isnan(v)


# random trees for the round-trip property
_leaf = st.one_of(
    st.floats(min_value=0, max_value=100, allow_nan=False).map(lambda v: Const(round(v, 3))),
    st.sampled_from([Var("x"), Var("y"), Param("N")]),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "exp", "sqrt", "abs"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(lambda b, e: Binary("^", b, Const(e)), children,
                  st.sampled_from([2.0, 3.0, 0.5, -1.0, -2.5])),
    )


_trees = st.recursive(_leaf, _extend, max_leaves=12)


def _canon(node):
    """Parsing turns ``neg`` of a plain number into a negative constant."""
    if isinstance(node, Unary):
        arg = _canon(node.arg)
        if node.op == "neg" and isinstance(arg, Const) and arg.value >= 0 and not math.copysign(1, arg.value) < 0:
            return Const(-arg.value)
        return Unary(node.op, arg)
    if isinstance(node, Binary):
        return Binary(node.op, _canon(node.left), _canon(node.right))
    return node


@settings(max_examples=300, deadline=None)
@given(_trees)
def test_print_parse_round_trip_property(tree):
    text = fx.to_text(tree)
    again = fx.parse(text)
    assert fx.to_text(again) == fx.to_text(fx.parse(fx.to_text(again)))
    assert _canon(again) == _canon(tree)
