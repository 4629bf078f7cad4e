"""A small arithmetic expression language evaluated over reals and jets.

Grammar (loosest binding first)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' exponent)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

The exponent of ``^`` must fold to a rational constant, so ``x^2``,
``x^(1/2)`` and ``x^-1`` are accepted while ``x^y`` is not.  ``-x^2`` parses
as ``-(x^2)``.  There is no implicit multiplication.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Tuple, Union

import numpy as np

from .jets import ELEMENTARY, Jet3, JetDomainError, check_domain, jet_apply, jet_pow, power_scalar

__all__ = [
    "ExprSyntaxError",
    "ExprDomainError",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Power",
    "parse",
    "eval_scalar",
    "eval_jet",
    "to_text",
    "FUNCTIONS",
]

FUNCTIONS = tuple(sorted(ELEMENTARY))
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(ValueError):
    """Malformed expression; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ValueError):
    """Evaluation left the domain of an operation (log, sqrt, division...)."""

    def __init__(self, message: str, node=None):
        where = f" in '{to_text(node)}'" if node is not None else ""
        super().__init__(message + where)
        self.node = node


# ------------------------------------------------------------------- AST
@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    fn: str  # 'neg' or an elementary function name
    child: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Power:
    child: "Node"
    exponent: Fraction


Node = Union[Const, Var, Unary, Binary, Power]


# ----------------------------------------------------------------- lexer
_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    out.append(("end", "", _byte_offset(text, len(text))))
    return out


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


# ---------------------------------------------------------------- parser
class _Parser:
    def __init__(self, text: str, variables: Iterable[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.take()
        if text != value:
            found = text or "end of input"
            raise ExprSyntaxError(f"expected {value!r}, found {found!r}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            off = self.take()[2]
            return Power(base, self.exponent(off))
        return base

    def exponent(self, off: int) -> Fraction:
        # exponent operand: optional sign then an atom, itself possibly raised
        sign = 1
        while self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
            if self.take()[1] == "-":
                sign = -sign
        node = self.power()
        value = _fold_rational(node)
        if value is None:
            raise ExprSyntaxError("exponent must be a rational constant", off)
        return sign * value

    def atom(self) -> Node:
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in ELEMENTARY:
                    raise ExprSyntaxError(f"unknown function {text!r}", off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text in self.variables:
                return Var(text)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            if text in ELEMENTARY:
                raise ExprSyntaxError(f"function {text!r} needs an argument", off)
            raise ExprSyntaxError(f"undeclared variable {text!r}", off)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = text or "end of input"
        raise ExprSyntaxError(f"unexpected token {found!r}", off)


def _fold_rational(node: Node):
    """Exact rational value of a constant subtree, or None."""
    if isinstance(node, Const):
        return Fraction(repr(node.value)) if math.isfinite(node.value) else None
    if isinstance(node, Unary) and node.fn == "neg":
        v = _fold_rational(node.child)
        return None if v is None else -v
    if isinstance(node, Binary):
        a, b = _fold_rational(node.left), _fold_rational(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0:
            return None
        return a / b
    if isinstance(node, Power):
        a = _fold_rational(node.child)
        if a is None or node.exponent.denominator != 1:
            return None
        if a == 0 and node.exponent < 0:
            return None
        return a ** int(node.exponent)
    return None


def parse(text: str, variables: Sequence[str] = ("x", "y")) -> Node:
    """Parse ``text`` into an immutable expression tree.

    Raises
    ------
    ExprSyntaxError
        On malformed input, unknown functions or undeclared variables; the
        exception carries the byte offset of the offending token.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, variables).parse()


def variables_of(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, (Unary, Power)):
        return variables_of(node.child)
    return variables_of(node.left) | variables_of(node.right)


def is_constant(node: Node) -> bool:
    return not variables_of(node)


# ---------------------------------------------------------------- printer
def _fmt_num(v: float) -> str:
    return repr(float(v))


def _fmt_frac(q: Fraction) -> str:
    if q.denominator == 1:
        return f"({q.numerator})" if q < 0 else str(q.numerator)
    return f"({q.numerator}/{q.denominator})"


def to_text(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Const):
        s = _fmt_num(node.value)
        return f"({s})" if node.value < 0 or s in ("inf", "nan") else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.fn == "neg":
            return f"(-{to_text(node.child)})"
        return f"{node.fn}({to_text(node.child)})"
    if isinstance(node, Binary):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, Power):
        return f"({to_text(node.child)}^{_fmt_frac(node.exponent)})"
    raise TypeError(f"not an expression node: {node!r}")


# -------------------------------------------------------------- evaluation
def _scalar_fn(fn: str, x, node):
    try:
        check_domain(fn, x)
    except JetDomainError as exc:
        raise ExprDomainError(str(exc), node) from None
    return ELEMENTARY[fn](x)[0]


def eval_scalar(node: Node, env: Mapping[str, float]):
    """Evaluate with IEEE doubles; ``env`` values may be floats or arrays."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprDomainError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Unary):
        x = eval_scalar(node.child, env)
        if node.fn == "neg":
            return -x
        return _scalar_fn(node.fn, x, node)
    if isinstance(node, Binary):
        a = eval_scalar(node.left, env)
        b = eval_scalar(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise ExprDomainError("division by zero", node)
        return a / b
    if isinstance(node, Power):
        x = eval_scalar(node.child, env)
        try:
            return power_scalar(x, node.exponent)
        except JetDomainError as exc:
            raise ExprDomainError(str(exc), node) from None
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet(node: Node, env: Mapping[str, Jet3]) -> Jet3:
    """Evaluate the tree with jet arithmetic.

    The value slot of the result equals :func:`eval_scalar` on the value
    slots of ``env`` bit for bit.
    """
    if isinstance(node, Const):
        return Jet3(node.value)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise ExprDomainError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Unary):
        a = eval_jet(node.child, env)
        if node.fn == "neg":
            return -a
        try:
            return jet_apply(node.fn, a)
        except JetDomainError as exc:
            raise ExprDomainError(str(exc), node) from None
    if isinstance(node, Binary):
        a = eval_jet(node.left, env)
        b = eval_jet(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        try:
            return a / b
        except ZeroDivisionError:
            raise ExprDomainError("division by zero", node) from None
    if isinstance(node, Power):
        a = eval_jet(node.child, env)
        try:
            return jet_pow(a, node.exponent)
        except JetDomainError as exc:
            raise ExprDomainError(str(exc), node) from None
    raise TypeError(f"not an expression node: {node!r}")


def compile_many(texts: Sequence[str], variables: Sequence[str]) -> Tuple[Node, ...]:
    """Parse several expressions; syntax errors name the offending text."""
    out = []
    for t in texts:
        try:
            out.append(parse(t, variables))
        except ExprSyntaxError as exc:
            err = ExprSyntaxError(f"{exc.args[0].rsplit(' at offset', 1)[0]} in {t!r}", exc.offset)
            raise err from None
    return tuple(out)
