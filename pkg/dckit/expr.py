"""
Expressions in the variables x and y.

Grammar (usual precedence, ``^`` binds tightest and takes a nonnegative
integer literal):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" INT)?
    atom   := NUMBER | "x" | "y" | "pi" | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := "exp" | "sin" | "cos" | "log"
"""

import math
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet

from dckit.errors import DomainError, InvalidParameter, ParseError

FUNCTIONS = ("exp", "sin", "cos", "log")
VARIABLES = ("x", "y")


class Expr:
    """Immutable AST node."""


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


def render(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    match e:
        case Const(value):
            return repr(value) if value >= 0 else f"({value!r})"
        case Var(name):
            return name
        case Neg(arg):
            return f"(-{render(arg)})"
        case BinOp(op, left, right):
            return f"({render(left)}{op}{render(right)})"
        case Call(func, arg):
            return f"{func}({render(arg)})"
        case Pow(base, exponent):
            return f"({render(base)}^{exponent})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> FrozenSet[str]:
    match e:
        case Var(name):
            return frozenset({name})
        case Const():
            return frozenset()
        case Neg(arg) | Call(_, arg) | Pow(arg, _):
            return variables(arg)
        case BinOp(_, left, right):
            return variables(left) | variables(right)
    raise TypeError(f"not an expression node: {e!r}")


def substitute(e: Expr, var: str, replacement: Expr) -> Expr:
    """Replace every occurrence of ``var`` by ``replacement`` (composition)."""
    match e:
        case Var(name):
            return replacement if name == var else e
        case Const():
            return e
        case Neg(arg):
            return Neg(substitute(arg, var, replacement))
        case BinOp(op, left, right):
            return BinOp(op, substitute(left, var, replacement), substitute(right, var, replacement))
        case Call(func, arg):
            return Call(func, substitute(arg, var, replacement))
        case Pow(base, exponent):
            return Pow(substitute(base, var, replacement), exponent)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, env: Dict[str, float]) -> float:
    """Point value; DomainError outside the domain of / and log."""
    match e:
        case Const(value):
            return value
        case Var(name):
            if name not in env:
                raise InvalidParameter(f"no value bound for variable {name}")
            return float(env[name])
        case Neg(arg):
            return -evaluate(arg, env)
        case BinOp(op, left, right):
            a, b = evaluate(left, env), evaluate(right, env)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise DomainError("division by zero")
            return a / b
        case Call(func, arg):
            a = evaluate(arg, env)
            if func == "log" and a <= 0:
                raise DomainError(f"log of nonpositive value {a!r}")
            try:
                value = getattr(math, func)(a)
            except OverflowError:
                raise DomainError(f"{func}({a!r}) overflows")
            return value
        case Pow(base, exponent):
            return evaluate(base, env) ** exponent
    raise TypeError(f"not an expression node: {e!r}")


# Parser

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[a-z]+)|(?P<op>[-+*/^()]))")


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            match = _TOKEN.match(text, pos)
            if not match:
                bad = len(text) - len(text[pos:].lstrip())
                raise ParseError(text, bad, "number, name or operator")
            kind = match.lastgroup
            start = match.start(kind)
            self.tokens.append((kind, match.group(kind), start))
            pos = match.end()
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", len(self.text))

    def error(self, expected: str) -> ParseError:
        return ParseError(self.text, self.peek()[2], expected)

    def accept(self, value: str) -> bool:
        if self.peek()[1] == value and self.peek()[0] != "end":
            self.i += 1
            return True
        return False

    def expect(self, value: str) -> None:
        if not self.accept(value):
            raise self.error(repr(value))

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error("end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.peek()[1]
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.peek()[1]
            self.i += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.accept("^"):
            kind, text, _ = self.peek()
            if kind != "num" or not text.isdigit():
                raise self.error("nonnegative integer exponent")
            self.i += 1
            return Pow(base, int(text))
        return base

    def atom(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "num":
            self.i += 1
            return Const(float(text))
        if kind == "name":
            if text in VARIABLES:
                self.i += 1
                return Var(text)
            if text == "pi":
                self.i += 1
                return Const(math.pi)
            if text in FUNCTIONS:
                self.i += 1
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise self.error("x, y, pi or one of " + ", ".join(FUNCTIONS))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error("number, variable, function or '('")


def parse_expr(text: str) -> Expr:
    return _ExprParser(text).parse()
