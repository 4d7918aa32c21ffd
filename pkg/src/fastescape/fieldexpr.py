"""Stream-function expressions.

A small recursive-descent parser for scalar potentials ``A(x, y)``,
symbolic differentiation with literal constant folding, and construction of
exactly divergence-free fields ``v = (dA/dy, -dA/dx)`` (so ``v_perp = grad A``).

Grammar (whitespace-insensitive)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' ['-'] number)?
    base   := number | 'x' | 'y' | ident | ident '(' expr ')' | '(' expr ')'

Unary minus sits between ``^`` and ``*``: ``-x^2`` is ``-(x^2)``.  A minus
sign directly in front of a bare number literal produces a negative
constant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .errors import NonDifferentiableError, ParseError, UnknownIdentifierError
from .fieldcore import PlanarField

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")
VARIABLES = ("x", "y")
_RESERVED = set(FUNCTIONS) | set(VARIABLES) | {"np"}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "y"


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Param, Unary, Binary]


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # number | ident | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    raw = text.encode()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            offset = len(text[:pos].encode())
            raise ParseError(f"unexpected character {text[pos]!r}", offset,
                             ("number", "identifier", "operator"))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, text: str, params: Optional[set]):
        self.toks = _tokenize(text)
        self.i = 0
        self.params = params

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k=1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        if self.tok.kind == "op" and self.tok.text == op:
            return self.advance()
        raise ParseError(f"unexpected {self._describe()}", self.tok.offset, (repr(op),))

    def _describe(self):
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def _is_op(self, *ops):
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self._describe()}", self.tok.offset,
                             ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self._is_op("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self._is_op("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self._is_op("-"):
            self.advance()
            nxt = self.peek()
            if self.tok.kind == "number" and not (nxt.kind == "op" and nxt.text == "^"):
                return Const(-float(self.advance().text))
            return Unary("neg", self.factor())
        node = self.base()
        if self._is_op("^"):
            self.advance()
            sign = 1.0
            if self._is_op("-"):
                self.advance()
                sign = -1.0
            if self.tok.kind != "number":
                raise ParseError(f"unexpected {self._describe()}", self.tok.offset, ("number",))
            node = Binary("^", node, Const(sign * float(self.advance().text)))
        return node

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text in VARIABLES:
                return Var(tok.text)
            if self._is_op("("):
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(tok.text, tok.offset)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Unary(tok.text, arg)
            if tok.text in FUNCTIONS:
                raise ParseError(f"function {tok.text!r} needs an argument", self.tok.offset, ("'('",))
            if self.params is not None and tok.text not in self.params:
                raise UnknownIdentifierError(tok.text, tok.offset)
            if tok.text == "np":
                raise UnknownIdentifierError(tok.text, tok.offset)
            return Param(tok.text)
        if self._is_op("("):
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {self._describe()}", tok.offset,
                         ("expression",))


def parse(text: str, params: Optional[Mapping] = None) -> Expr:
    """Parse ``text`` into an expression tree.

    When ``params`` is given, identifiers that are neither variables,
    functions nor keys of ``params`` raise ``UnknownIdentifierError``.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0, ("expression",))
    return _Parser(text, None if params is None else set(params)).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return _PREC["neg"]
    if isinstance(node, Const) and node.value < 0:
        return _PREC["neg"]
    return 5


def _fmt_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(node: Expr) -> str:
    """Print ``node`` so that ``parse(to_text(node)) == node``."""
    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            arg = node.arg
            inner = to_text(arg)
            # "-4" would read back as a negative literal, so shield numbers
            if isinstance(arg, Const) or _prec(arg) < _PREC["^"]:
                inner = f"({inner})"
            return "-" + inner
        return f"{node.op}({to_text(node.arg)})"
    op = node.op
    left, right = to_text(node.left), to_text(node.right)
    if op == "^":
        if _prec(node.left) <= _PREC["^"]:
            left = f"({left})"
        return f"{left}^{right}"
    if _prec(node.left) < _PREC[op]:
        left = f"({left})"
    if _prec(node.right) <= _PREC[op]:
        right = f"({right})"
    return f"{left} {op} {right}"


# ---------------------------------------------------------------------------
# differentiation with literal constant folding

def _is(node: Expr, value: float) -> bool:
    return isinstance(node, Const) and node.value == value


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    return Binary("-", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    return Unary("neg", a)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return Const(0.0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0):
        return Const(0.0)
    if _is(b, 1):
        return a
    return Binary("/", a, b)


def power(a: Expr, n: float) -> Expr:
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    if isinstance(a, Const):
        try:
            return Const(float(a.value**n))
        except (OverflowError, ZeroDivisionError):
            pass
    return Binary("^", a, Const(float(n)))


def contains_abs(node: Expr) -> bool:
    if isinstance(node, Unary):
        return node.op == "abs" or contains_abs(node.arg)
    if isinstance(node, Binary):
        return contains_abs(node.left) or contains_abs(node.right)
    return False


def _d(node: Expr, var: str) -> Expr:
    if isinstance(node, Const) or isinstance(node, Param):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if isinstance(node, Unary):
        a = node.arg
        da = _d(a, var)
        if node.op == "neg":
            return neg(da)
        if node.op == "sin":
            return mul(Unary("cos", a), da)
        if node.op == "cos":
            return mul(neg(Unary("sin", a)), da)
        if node.op == "exp":
            return mul(Unary("exp", a), da)
        if node.op == "sqrt":
            return div(da, mul(Const(2.0), Unary("sqrt", a)))
        raise NonDifferentiableError(f"cannot differentiate {node.op}()")
    a, b = node.left, node.right
    if node.op == "+":
        return add(_d(a, var), _d(b, var))
    if node.op == "-":
        return sub(_d(a, var), _d(b, var))
    if node.op == "*":
        return add(mul(_d(a, var), b), mul(a, _d(b, var)))
    if node.op == "/":
        return div(sub(mul(_d(a, var), b), mul(a, _d(b, var))), power(b, 2))
    n = b.value
    return mul(mul(Const(n), power(a, n - 1)), _d(a, var))


def differentiate(node: Expr, var: str) -> Expr:
    """Symbolic partial derivative with respect to ``"x"`` or ``"y"``."""
    if var not in VARIABLES:
        raise ValueError(f"can only differentiate with respect to x or y, got {var!r}")
    if contains_abs(node):
        raise NonDifferentiableError("expression contains abs(), which is not differentiable")
    return _d(node, var)


# ---------------------------------------------------------------------------
# evaluation

def parameters(node: Expr) -> set:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, Unary):
        return parameters(node.arg)
    if isinstance(node, Binary):
        return parameters(node.left) | parameters(node.right)
    return set()


def _py(node: Expr) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Param):
        return "p_" + node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{_py(node.arg)})"
        return f"np.{'abs' if node.op == 'abs' else node.op}({_py(node.arg)})"
    op = "**" if node.op == "^" else node.op
    return f"({_py(node.left)} {op} {_py(node.right)})"


def compile_expr(node: Expr, params: Optional[Mapping[str, float]] = None):
    """Compile ``node`` into a vectorised ``f(x, y)`` with parameters bound."""
    params = dict(params or {})
    missing = parameters(node) - set(params)
    if missing:
        raise UnknownIdentifierError(sorted(missing)[0])
    env = {"np": np}
    env.update({"p_" + k: float(v) for k, v in params.items()})
    body = _py(node)
    fn = eval(f"lambda x, y: {body}", env)  # noqa: S307 - body is generated from the AST
    fn.__doc__ = to_text(node)
    return fn


def _math_compile(node: Expr, params: Mapping[str, float]):
    # scalar twin of compile_expr using the math module (faster per call)
    src = _py(node).replace("np.", "_m.")
    env = {"_m": _MathShim}
    env.update({"p_" + k: float(v) for k, v in params.items()})
    return eval(f"lambda x, y: {src}", env)  # noqa: S307


class _MathShim:
    sin = staticmethod(math.sin)
    cos = staticmethod(math.cos)
    exp = staticmethod(math.exp)
    abs = staticmethod(abs)

    @staticmethod
    def sqrt(v):
        return math.sqrt(v) if v >= 0 else math.nan


def _as_expr(a: Union[str, Expr]) -> Expr:
    return parse(a) if isinstance(a, str) else a


def _zeros(x, y):
    return 0.0 * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float))


def _safe_point(fu, fv):
    def point(x, y):
        try:
            u, v = fu(x, y), fv(x, y)
        except (ValueError, ZeroDivisionError, OverflowError):
            return math.nan, math.nan
        if isinstance(u, complex) or isinstance(v, complex):
            return math.nan, math.nan
        return u, v

    return point


def field_from_stream_function(a: Union[str, Expr], params: Optional[Mapping[str, float]] = None,
                               name: Optional[str] = None) -> PlanarField:
    """Divergence-free field ``(dA/dy, -dA/dx)`` generated by the potential ``A``."""
    a = _as_expr(a)
    params = dict(params or {})
    ax, ay = differentiate(a, "x"), differentiate(a, "y")
    laplacian = add(differentiate(ax, "x"), differentiate(ay, "y"))
    fu = compile_expr(ay, params)
    fv = compile_expr(neg(ax), params)
    lap = compile_expr(laplacian, params)

    def func(x, y):
        zero = _zeros(x, y)
        return fu(x, y) + zero, fv(x, y) + zero

    return PlanarField(
        name=name or "expr",
        func=func,
        params=params,
        analytic_div=_zeros,
        analytic_curl=lambda x, y: -(lap(x, y) + _zeros(x, y)),
        point_func=_safe_point(_math_compile(ay, params), _math_compile(neg(ax), params)),
    )


def gradient_field(a: Union[str, Expr], params: Optional[Mapping[str, float]] = None,
                   name: Optional[str] = None) -> PlanarField:
    """Irrotational field ``grad A``."""
    a = _as_expr(a)
    params = dict(params or {})
    ax, ay = differentiate(a, "x"), differentiate(a, "y")
    laplacian = add(differentiate(ax, "x"), differentiate(ay, "y"))
    fx, fy = compile_expr(ax, params), compile_expr(ay, params)
    lap = compile_expr(laplacian, params)

    def func(x, y):
        zero = _zeros(x, y)
        return fx(x, y) + zero, fy(x, y) + zero

    return PlanarField(
        name=name or "grad_expr",
        func=func,
        params=params,
        analytic_curl=_zeros,
        analytic_div=lambda x, y: lap(x, y) + _zeros(x, y),
        point_func=_safe_point(_math_compile(ax, params), _math_compile(ay, params)),
    )
