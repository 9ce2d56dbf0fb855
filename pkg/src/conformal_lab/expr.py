"""A small arithmetic expression language evaluated with Taylor jets.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

Function identifiers are ``sin cos exp log sqrt``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, ExpressionSyntaxError, OrderTooLarge, UnknownIdentifier
from .jets import DEFAULT_MAX_ORDER, Jet2

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # add, sub, mul, div, pow
    left: "Node"
    right: "Node"


Node = Union[Const, Var, Unary, Binary]

_SYMBOL_OPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "^": "pow"}
_OP_SYMBOLS = {v: k for k, v in _SYMBOL_OPS.items()}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, var_names):
        self.tokens = _tokenize(text)
        self.i = 0
        self.var_names = tuple(var_names)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(_SYMBOL_OPS[op], node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(_SYMBOL_OPS[op], node, self.factor())
        return node

    def factor(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Unary("neg", self.factor())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = Binary("pow", node, self.factor())
        return node

    def atom(self):
        kind, val, pos = self.take()
        if kind == "number":
            return Const(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if val in self.var_names:
                return Var(val)
            raise UnknownIdentifier(val, pos)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {found}", pos)


@dataclass(frozen=True)
class Expression:
    """Parsed expression together with its declared variable names."""

    root: Node
    var_names: tuple

    def __str__(self):
        return pretty(self.root)

    def evaluate(self, env):
        """Evaluate with ``env`` mapping each variable name to a :class:`Jet2`."""
        return _eval(self.root, env)

    def __call__(self, *values):
        """Plain (order-0) evaluation, vectorized over array arguments."""
        arrays = np.broadcast_arrays(*[np.asarray(v, float) for v in values])
        env = {name: Jet2(a[None], 0) for name, a in zip(self.var_names, arrays)}
        return self.evaluate(env).value


def parse(text, var_names=("x", "y")):
    """Parse ``text`` into an :class:`Expression` over ``var_names``."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    for name in var_names:
        if name in FUNCTIONS:
            raise ValueError(f"variable name {name!r} collides with a function")
    return Expression(_Parser(text, var_names).parse(), tuple(var_names))


def pretty(node):
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if text.startswith("-") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{pretty(node.arg)})"
        return f"{node.op}({pretty(node.arg)})"
    return f"({pretty(node.left)} {_OP_SYMBOLS[node.op]} {pretty(node.right)})"


def _eval(node, env):
    try:
        return _eval_node(node, env)
    except DomainError as exc:
        if getattr(exc, "node", None) is None:
            wrapped = DomainError(f"in {pretty(node)}: {exc}")
            wrapped.node = node
            raise wrapped from exc
        raise


def _eval_node(node, env):
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Const):
        template = next(iter(env.values()))
        return template.constant_like(node.value)
    if isinstance(node, Unary):
        arg = _eval(node.arg, env)
        if node.op == "neg":
            return -arg
        return getattr(arg, node.op)()
    if node.op == "pow" and isinstance(node.right, Const):
        base = _eval(node.left, env)
        p = node.right.value
        if float(p).is_integer():
            return base.int_pow(int(p))
        return (base.log() * p).exp()
    left = _eval(node.left, env)
    right = _eval(node.right, env)
    if node.op == "add":
        return left + right
    if node.op == "sub":
        return left - right
    if node.op == "mul":
        return left * right
    if node.op == "div":
        return left * right.reciprocal()
    return (left.log() * right).exp()


def eval_jet(e, x0, y0, order, max_order=DEFAULT_MAX_ORDER):
    """Jet of ``e`` at ``(x0, y0)``: entry ``(i, j)`` is ``∂x^i ∂y^j e``.

    ``x0`` and ``y0`` may be arrays; the jet then carries their broadcast shape
    as batch dimensions.
    """
    if order > max_order:
        raise OrderTooLarge(f"order {order} exceeds the configured maximum {max_order}")
    if order < 0:
        raise ValueError("order must be non-negative")
    if len(e.var_names) != 2:
        raise ValueError("eval_jet needs a two-variable expression")
    xv = Jet2.variable(0, x0, y0, order)
    yv = Jet2.variable(1, x0, y0, order)
    return e.evaluate({e.var_names[0]: xv, e.var_names[1]: yv})
