"""
A small arithmetic expression language for vector fields.

Grammar, loosest binding first::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | primary
    primary := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Whitespace (newlines included) is insignificant. Evaluation works on floats
and, element-wise, on numpy arrays, which is how whole sample grids are
evaluated in one pass.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from smio.errors import DimensionError, EvaluationError, ExpressionError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
    |(?P<name>[A-Za-z_][A-Za-z_0-9]*)
    |(?P<op>[-+*/(),])
    |(?P<space>[ \t\r\n]+)
    """,
    re.VERBOSE,
)

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class Number:
    value: float
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Variable:
    name: str
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expression
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expression
    right: Expression
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expression
    line: int = field(default=1, compare=False)
    column: int = field(default=1, compare=False)


Expression = Union[Number, Variable, Unary, Binary, Call]


def tokenize(source):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ExpressionError(f"unexpected character {source[pos]!r}", line, col)
        text = match.group()
        if match.lastgroup != "space":
            tokens.append(Token(match.lastgroup, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = match.end()
    tokens.append(Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source, declared):
        self.tokens = tokenize(source)
        self.pos = 0
        self.declared = set(declared)

    @property
    def current(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.current
        if tok.text != text:
            found = repr(tok.text) if tok.text else "end of input"
            raise ExpressionError(f"expected {text!r}, found {found}", tok.line, tok.column)
        return self.advance()

    def parse(self):
        if self.current.kind == "end":
            raise ExpressionError("empty expression", self.current.line, self.current.column)
        node = self.expr()
        tok = self.current
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", tok.line, tok.column)
        return node

    def expr(self):
        node = self.term()
        while self.current.text in ("+", "-"):
            tok = self.advance()
            node = Binary(tok.text, node, self.term(), tok.line, tok.column)
        return node

    def term(self):
        node = self.unary()
        while self.current.text in ("*", "/"):
            tok = self.advance()
            node = Binary(tok.text, node, self.unary(), tok.line, tok.column)
        return node

    def unary(self):
        if self.current.text in ("-", "+"):
            tok = self.advance()
            return Unary(tok.text, self.unary(), tok.line, tok.column)
        return self.primary()

    def primary(self):
        tok = self.current
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExpressionError(f"number {tok.text} is out of range", tok.line, tok.column)
            return Number(value, tok.line, tok.column)
        if tok.kind == "name":
            self.advance()
            if self.current.text == "(":
                if tok.text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {tok.text!r}", tok.line, tok.column)
                self.advance()
                arg = self.expr()
                if self.current.text == ",":
                    raise ExpressionError(
                        f"{tok.text}() takes exactly one argument",
                        self.current.line,
                        self.current.column,
                    )
                self.expect(")")
                return Call(tok.text, arg, tok.line, tok.column)
            if tok.text in FUNCTIONS:
                raise ExpressionError(f"{tok.text}() needs an argument", tok.line, tok.column)
            if tok.text not in self.declared:
                raise ExpressionError(f"unknown identifier {tok.text!r}", tok.line, tok.column)
            return Variable(tok.text, tok.line, tok.column)
        if tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = repr(tok.text) if tok.text else "end of input"
        raise ExpressionError(f"unexpected {found}", tok.line, tok.column)


def parse(source, declared_vars):
    """Parses ``source``, which may only reference ``declared_vars``"""
    return _Parser(source, declared_vars).parse()


def evaluate(expr, bindings):
    """Evaluates an expression; ``bindings`` maps names to floats or arrays"""
    with np.errstate(all="ignore"):
        value = _eval(expr, bindings)
    if np.ndim(value) == 0:
        return float(value)
    return value


def _eval(node, bindings):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Variable):
        try:
            return bindings[node.name]
        except KeyError:
            raise EvaluationError(f"no value bound to {node.name!r}", node.line, node.column) from None
    if isinstance(node, Unary):
        operand = _eval(node.operand, bindings)
        return -operand if node.op == "-" else operand
    if isinstance(node, Binary):
        left = _eval(node.left, bindings)
        right = _eval(node.right, bindings)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if np.any(np.asarray(right) == 0):
            raise EvaluationError("division by zero", node.line, node.column)
        return np.true_divide(left, right)
    if isinstance(node, Call):
        arg = _eval(node.arg, bindings)
        if node.func == "sqrt" and np.any(np.asarray(arg) < 0):
            raise EvaluationError("square root of a negative number", node.line, node.column)
        return FUNCTIONS[node.func](arg)
    raise TypeError(f"not an expression node: {node!r}")


def to_source(node):
    """Prints an expression with the fewest parentheses that re-parse to it"""
    if isinstance(node, Number):
        return repr(node.value)
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Unary):
        inner = to_source(node.operand)
        if isinstance(node.operand, Binary):
            inner = f"({inner})"
        return f"{node.op}{inner}"
    prec = _PRECEDENCE[node.op]
    left = to_source(node.left)
    right = to_source(node.right)
    if isinstance(node.left, Binary) and _PRECEDENCE[node.left.op] < prec:
        left = f"({left})"
    if isinstance(node.right, Binary) and _PRECEDENCE[node.right.op] <= prec:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def variable_names(prefix, count):
    return [f"{prefix}{i + 1}" for i in range(count)]


class ExpressionField:
    """A vector field given by one expression per output component.

    :param sources: the expression texts
    :param names: the argument's coordinate names, in order
    """

    def __init__(self, sources, names):
        self.names = list(names)
        self.sources = list(sources)
        self.exprs = [parse(src, self.names) for src in self.sources]

    @property
    def outputs(self):
        return len(self.exprs)

    def batch(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != len(self.names):
            raise DimensionError(
                f"points have {points.shape[1]} coordinates, expected {len(self.names)}"
            )
        bindings = {name: points[:, i] for i, name in enumerate(self.names)}
        out = np.empty((points.shape[0], self.outputs))
        for j, expr in enumerate(self.exprs):
            out[:, j] = evaluate(expr, bindings)
        if np.isnan(out).any():
            raise EvaluationError("expression evaluated to NaN")
        return out

    def __call__(self, point):
        return self.batch(np.asarray(point, dtype=float).reshape(1, -1))[0]

    def __repr__(self):
        return f"ExpressionField({self.sources!r})"
