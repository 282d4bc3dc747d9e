"""Expression trees over a deliberately small grammar.

The grammar covers constants, ``pi``, the variable ``x``, arithmetic with
constant divisors, ``sin``/``cos``/``abs``, and piecewise-linear tables
declared as point lists.  Everything in it is Lipschitz on a bounded
interval, which is what keeps the certified bounds in
:mod:`fifdim.analysis` tractable.

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := number | 'pi' | 'x' | '(' expr ')'
            | ('sin'|'cos'|'abs') '(' expr ')' | '-' factor

Parsed functions are immutable; evaluation accepts scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpressionError

__all__ = [
    "Expr",
    "Num",
    "Pi",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Call",
    "Pwl",
    "ExprFunction",
    "parse_expr",
    "piecewise_linear",
    "to_source",
    "substitute",
    "is_constant",
]


class Expr:
    """Base class for expression nodes (all frozen dataclasses)."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str  # "sin" | "cos" | "abs"
    arg: Expr


@dataclass(frozen=True)
class Pwl(Expr):
    """Piecewise-linear table; xs strictly increasing."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]


_FUNCTIONS = ("sin", "cos", "abs")


# ---------------------------------------------------------------------------
# tokenizer / parser


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ExpressionError(f"malformed number {text!r}", i) from None
            tokens.append(_Token("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("name", source[i:j], i))
            i = j
            continue
        if ch in "+-*/()":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise ExpressionError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ExpressionError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected trailing input {tok.text!r}", tok.pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next()
            rhs = self.term()
            node = Add(node, rhs) if op.text == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.next()
            rhs = self.factor()
            if op.text == "*":
                node = Mul(node, rhs)
            else:
                if not is_constant(rhs):
                    raise ExpressionError("division requires a constant divisor", op.pos)
                if evaluate(rhs, 0.0) == 0.0:
                    raise ExpressionError("division by zero", op.pos)
                node = Div(node, rhs)
        return node

    def factor(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            if tok.text == "pi":
                return Pi()
            if tok.text == "x":
                return Var()
            if tok.text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            raise ExpressionError(f"unknown identifier {tok.text!r}", tok.pos)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.text == "-":
            return Neg(self.factor())
        raise ExpressionError(
            f"expected a value, found {tok.text or 'end of input'!r}", tok.pos
        )


# ---------------------------------------------------------------------------
# core operations on trees


def evaluate(node: Expr, x):
    """Evaluate at ``x`` (float or ndarray); returns float or ndarray."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -evaluate(node.arg, x)
    if isinstance(node, Add):
        return evaluate(node.left, x) + evaluate(node.right, x)
    if isinstance(node, Sub):
        return evaluate(node.left, x) - evaluate(node.right, x)
    if isinstance(node, Mul):
        return evaluate(node.left, x) * evaluate(node.right, x)
    if isinstance(node, Div):
        return evaluate(node.left, x) / evaluate(node.right, x)
    if isinstance(node, Call):
        v = evaluate(node.arg, x)
        if node.fn == "sin":
            return np.sin(v)
        if node.fn == "cos":
            return np.cos(v)
        return np.abs(v)
    if isinstance(node, Pwl):
        return np.interp(x, node.xs, node.ys)
    raise TypeError(f"not an expression node: {node!r}")


def is_constant(node: Expr) -> bool:
    """True when the expression contains neither ``x`` nor a table."""
    if isinstance(node, (Num, Pi)):
        return True
    if isinstance(node, (Var, Pwl)):
        return False
    if isinstance(node, Neg):
        return is_constant(node.arg)
    if isinstance(node, (Add, Sub, Mul, Div)):
        return is_constant(node.left) and is_constant(node.right)
    if isinstance(node, Call):
        return is_constant(node.arg)
    raise TypeError(f"not an expression node: {node!r}")


def substitute(node: Expr, replacement: Expr) -> Expr:
    """Replace every occurrence of ``x`` with ``replacement``."""
    if isinstance(node, (Num, Pi, Pwl)):
        return node
    if isinstance(node, Var):
        return replacement
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, replacement))
    if isinstance(node, Add):
        return Add(substitute(node.left, replacement), substitute(node.right, replacement))
    if isinstance(node, Sub):
        return Sub(substitute(node.left, replacement), substitute(node.right, replacement))
    if isinstance(node, Mul):
        return Mul(substitute(node.left, replacement), substitute(node.right, replacement))
    if isinstance(node, Div):
        return Div(substitute(node.left, replacement), substitute(node.right, replacement))
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, replacement))
    raise TypeError(f"not an expression node: {node!r}")


def _format_number(v: float) -> str:
    # repr round-trips exactly; strip a pointless trailing ".0" for ints
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def to_source(node: Expr) -> str:
    """Render with minimal parentheses; parsing the result rebuilds the tree."""
    return _render(node, 0)


# precedence levels: 0 add/sub, 1 mul/div, 2 unary/atoms
def _render(node: Expr, context: int) -> str:
    if isinstance(node, Num):
        if node.value < 0:
            text = f"-{_format_number(-node.value)}"
            return f"({text})" if context >= 2 else text
        return _format_number(node.value)
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        text = f"-{_render(node.arg, 2)}"
        return f"({text})" if context >= 2 else text
    if isinstance(node, (Add, Sub)):
        op = "+" if isinstance(node, Add) else "-"
        text = f"{_render(node.left, 0)} {op} {_render(node.right, 1)}"
        return f"({text})" if context >= 1 else text
    if isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        text = f"{_render(node.left, 1)}{op}{_render(node.right, 2)}"
        return f"({text})" if context >= 2 else text
    if isinstance(node, Call):
        return f"{node.fn}({_render(node.arg, 0)})"
    if isinstance(node, Pwl):
        pts = ", ".join(f"({_format_number(a)}, {_format_number(b)})" for a, b in zip(node.xs, node.ys))
        return f"pwl[{pts}]"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# public wrapper


@dataclass(frozen=True)
class ExprFunction:
    """An evaluable function on a closed interval.

    Instances are immutable after construction and safe to share across
    workers; every operation on them is pure.
    """

    ast: Expr
    domain: tuple[float, float] = (0.0, 1.0)
    source: str = field(default="", compare=False)

    def __post_init__(self):
        a, b = self.domain
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ExpressionError(f"invalid domain [{a}, {b}]")
        if not self.source:
            object.__setattr__(self, "source", to_source(self.ast))

    def __call__(self, x):
        out = evaluate(self.ast, x)
        if isinstance(x, np.ndarray):
            return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy() \
                if np.ndim(out) == 0 else out
        return float(out)

    def with_domain(self, a: float, b: float) -> "ExprFunction":
        return ExprFunction(self.ast, (float(a), float(b)), self.source)

    def __str__(self) -> str:
        return self.source


def parse_expr(source: str, domain: tuple[float, float] = (0.0, 1.0)) -> ExprFunction:
    """Parse expression text; raises :class:`ExpressionError` with a position."""
    ast = _Parser(_tokenize(source)).parse()
    return ExprFunction(ast, (float(domain[0]), float(domain[1])), source.strip())


def piecewise_linear(
    points, domain: tuple[float, float] | None = None
) -> ExprFunction:
    """Build a piecewise-linear function from (x, y) pairs.

    The abscissae must be strictly increasing and must cover the domain
    (defaults to the table's own span).
    """
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < 2:
        raise ExpressionError("piecewise-linear table needs at least two points")
    xs = tuple(p[0] for p in pts)
    ys = tuple(p[1] for p in pts)
    if any(xs[i] >= xs[i + 1] for i in range(len(xs) - 1)):
        raise ExpressionError("piecewise-linear abscissae must be strictly increasing")
    if domain is None:
        domain = (xs[0], xs[-1])
    if domain[0] < xs[0] or domain[1] > xs[-1]:
        raise ExpressionError(
            f"piecewise-linear table [{xs[0]}, {xs[-1]}] does not cover domain {list(domain)}"
        )
    return ExprFunction(Pwl(xs, ys), (float(domain[0]), float(domain[1])))
