"""Tiny expression language for user-supplied height functions.

Grammar (``^`` and ``**`` are right associative and bind tighter than unary
minus, so ``-x1^2`` is ``-(x1^2)``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are the coordinates ``x1 .. xn`` (``x``, ``y``, ``z`` alias the first
three), the constants ``pi`` and ``e``, and any bound parameter.  Functions
are ``exp log sin cos sqrt``.  A parsed expression evaluates on floats and on
:class:`~biconservative.jets.Jet` values alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Optional

from . import jets as J

FUNCTIONS = {"exp": J.exp, "log": J.log, "sin": J.sin, "cos": J.cos, "sqrt": J.sqrt}
CONSTANTS = {"pi": math.pi, "e": math.e}
ALIASES = {"x": 1, "y": 2, "z": 3}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


class ExprError(ValueError):
    """Parse or evaluation error; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str  # num | name | op | end
    text: str
    offset: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


# nodes are plain tuples: ("num", v) ("var", i) ("par", name) ("neg", a)
# ("bin", op, a, b) ("call", fname, a)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.tok
        if t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExprError(f"expected {text!r}, found {found}", t.offset)
        self.take()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.take().text
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.take().text
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.tok.text == "-":
            self.take()
            return ("neg", self.unary())
        if self.tok.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text in ("^", "**"):
            self.take()
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return ("num", float(t.text))
        if t.kind == "name":
            self.take()
            if self.tok.text == "(":
                if t.text not in FUNCTIONS:
                    raise ExprError(f"unsupported primitive {t.text!r}", t.offset)
                self.take()
                arg = self.expr()
                self.expect(")")
                return ("call", t.text, arg)
            return self._name(t)
        if t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprError(f"expected a number, name or '(', found {found}", t.offset)

    def _name(self, t: Token):
        name = t.text
        if name in CONSTANTS:
            return ("num", CONSTANTS[name])
        if name in ALIASES:
            return ("var", ALIASES[name] - 1, t.offset)
        m = re.fullmatch(r"x(\d+)", name)
        if m and int(m.group(1)) >= 1:
            return ("var", int(m.group(1)) - 1, t.offset)
        if name in FUNCTIONS:
            raise ExprError(f"function {name!r} needs an argument", t.offset)
        return ("par", name, t.offset)


def _variables(node, acc):
    kind = node[0]
    if kind == "var":
        acc.add(node[1])
    elif kind == "neg" or kind == "call":
        _variables(node[-1], acc)
    elif kind == "bin":
        _variables(node[2], acc)
        _variables(node[3], acc)
    return acc


def _params(node, acc):
    kind = node[0]
    if kind == "par":
        acc[node[1]] = node[2]
    elif kind == "neg" or kind == "call":
        _params(node[-1], acc)
    elif kind == "bin":
        _params(node[2], acc)
        _params(node[3], acc)
    return acc


def _pow(a, b):
    if not isinstance(b, J.Jet):
        if float(b).is_integer() and 0 <= b <= 8:
            return a ** int(b)
        if isinstance(a, J.Jet):
            return a.power(float(b))
        return float(a) ** float(b)
    return J.exp(b * J.log(a))


class Expression:
    """Parsed expression bound to a dimension and parameter values."""

    def __init__(self, text: str, n: Optional[int] = None, params: Optional[Mapping[str, float]] = None):
        self.text = text
        self.tree = _Parser(text).parse()
        used = _variables(self.tree, set())
        self.n = n if n is not None else (max(used) + 1 if used else 1)
        if used and max(used) >= self.n:
            raise ExprError(f"variable x{max(used) + 1} exceeds dimension {self.n}", self._var_offset(max(used)))
        self.params = dict(params or {})
        for name, offset in _params(self.tree, {}).items():
            if name not in self.params:
                raise ExprError(f"unbound name {name!r}", offset)

    def _var_offset(self, idx):
        def walk(node):
            if node[0] == "var" and node[1] == idx:
                return node[2]
            for child in node[2:] if node[0] == "bin" else node[-1:] if node[0] in ("neg", "call") else ():
                r = walk(child)
                if r is not None:
                    return r
            return None

        return walk(self.tree) or 0

    def __call__(self, xs):
        return self._eval(self.tree, xs)

    def _eval(self, node, xs):
        kind = node[0]
        if kind == "num":
            return node[1]
        if kind == "var":
            return xs[node[1]]
        if kind == "par":
            return self.params[node[1]]
        if kind == "neg":
            return -self._eval(node[1], xs)
        if kind == "call":
            return FUNCTIONS[node[1]](self._eval(node[2], xs))
        op, a, b = node[1], self._eval(node[2], xs), self._eval(node[3], xs)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        return _pow(a, b)

    def __repr__(self):
        return f"Expression({self.text!r}, n={self.n})"


def parse(text: str, n: Optional[int] = None, params: Optional[Mapping[str, float]] = None) -> Expression:
    return Expression(text, n, params)
