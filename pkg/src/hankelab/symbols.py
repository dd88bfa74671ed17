"""Symbols and the small expression language used to name them in configs.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '·' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') INT)?
    atom   := NUMBER | NUMBER 'i' | 'i' | 'pi' | VAR | FUNC '(' args ')' | '(' expr ')' | '|' expr '|'

Variables are ``z`` (alias ``z1``) and, in two variables, ``w`` (alias ``z2``).
Functions: ``conj``, ``abs``, ``bump(center, radius)`` (C-infinity radial bump
in ``z``, equal to 1 at the centre) and ``shell(eps, center, radius)`` (the
shell weight ``exp(2 rho) - 1`` with ``rho = (|z - p|^2 - r^2) / eps``).

Every node carries both Wirtinger derivatives so the dbar data of a C^1
symbol comes for free. ``abs`` has no derivative; expressions using it are
tagged as merely continuous.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError


class Regularity(str, enum.Enum):
    CONTINUOUS = "ContinuousOnClosure"
    C1 = "C1OnClosure"


class NotDifferentiable(Exception):
    pass


# ---------------------------------------------------------------- AST nodes

class Node:
    def value(self, X):
        raise NotImplementedError

    def d(self, X, v):
        raise NotImplementedError

    def dbar(self, X, v):
        raise NotImplementedError

    def constant(self):
        return None

    def smooth(self) -> bool:
        return True


@dataclass
class Const(Node):
    c: complex

    def value(self, X):
        return np.full(X.shape[0], self.c, dtype=complex)

    def d(self, X, v):
        return np.zeros(X.shape[0], dtype=complex)

    dbar = d

    def constant(self):
        return self.c


@dataclass
class Var(Node):
    index: int

    def value(self, X):
        return X[:, self.index].astype(complex)

    def d(self, X, v):
        return np.full(X.shape[0], 1.0 if v == self.index else 0.0, dtype=complex)

    def dbar(self, X, v):
        return np.zeros(X.shape[0], dtype=complex)


@dataclass
class Conj(Node):
    a: Node

    def value(self, X):
        return np.conj(self.a.value(X))

    def d(self, X, v):
        return np.conj(self.a.dbar(X, v))

    def dbar(self, X, v):
        return np.conj(self.a.d(X, v))

    def constant(self):
        c = self.a.constant()
        return None if c is None else np.conj(c)

    def smooth(self):
        return self.a.smooth()


@dataclass
class Abs(Node):
    a: Node

    def value(self, X):
        return np.abs(self.a.value(X)).astype(complex)

    def d(self, X, v):
        raise NotDifferentiable("abs")

    dbar = d

    def constant(self):
        c = self.a.constant()
        return None if c is None else abs(c)

    def smooth(self):
        return False


@dataclass
class Add(Node):
    a: Node
    b: Node
    sign: int = 1

    def value(self, X):
        return self.a.value(X) + self.sign * self.b.value(X)

    def d(self, X, v):
        return self.a.d(X, v) + self.sign * self.b.d(X, v)

    def dbar(self, X, v):
        return self.a.dbar(X, v) + self.sign * self.b.dbar(X, v)

    def constant(self):
        ca, cb = self.a.constant(), self.b.constant()
        return None if ca is None or cb is None else ca + self.sign * cb

    def smooth(self):
        return self.a.smooth() and self.b.smooth()


@dataclass
class Mul(Node):
    a: Node
    b: Node

    def value(self, X):
        return self.a.value(X) * self.b.value(X)

    def d(self, X, v):
        return self.a.d(X, v) * self.b.value(X) + self.a.value(X) * self.b.d(X, v)

    def dbar(self, X, v):
        return self.a.dbar(X, v) * self.b.value(X) + self.a.value(X) * self.b.dbar(X, v)

    def constant(self):
        ca, cb = self.a.constant(), self.b.constant()
        return None if ca is None or cb is None else ca * cb

    def smooth(self):
        return self.a.smooth() and self.b.smooth()


@dataclass
class Div(Node):
    a: Node
    b: Node

    def value(self, X):
        return self.a.value(X) / self.b.value(X)

    def _rule(self, da, db, X):
        g = self.b.value(X)
        return (da * g - self.a.value(X) * db) / g**2

    def d(self, X, v):
        return self._rule(self.a.d(X, v), self.b.d(X, v), X)

    def dbar(self, X, v):
        return self._rule(self.a.dbar(X, v), self.b.dbar(X, v), X)

    def constant(self):
        ca, cb = self.a.constant(), self.b.constant()
        return None if ca is None or cb is None else ca / cb

    def smooth(self):
        return self.a.smooth() and self.b.smooth()


@dataclass
class Pow(Node):
    a: Node
    n: int

    def value(self, X):
        return self.a.value(X) ** self.n

    def d(self, X, v):
        if self.n == 0:
            return np.zeros(X.shape[0], dtype=complex)
        return self.n * self.a.value(X) ** (self.n - 1) * self.a.d(X, v)

    def dbar(self, X, v):
        if self.n == 0:
            return np.zeros(X.shape[0], dtype=complex)
        return self.n * self.a.value(X) ** (self.n - 1) * self.a.dbar(X, v)

    def constant(self):
        c = self.a.constant()
        return None if c is None else c**self.n

    def smooth(self):
        return self.a.smooth()


@dataclass
class Bump(Node):
    center: complex
    radius: float

    def _t(self, X):
        u = X[:, 0] - self.center
        return u, np.abs(u) ** 2 / self.radius**2

    def value(self, X):
        _, t = self._t(X)
        out = np.zeros(X.shape[0])
        m = t < 1
        out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m]))
        return out.astype(complex)

    def _dt(self, X):
        _, t = self._t(X)
        out = np.zeros(X.shape[0])
        m = t < 1
        out[m] = -np.exp(1.0 - 1.0 / (1.0 - t[m])) / (1.0 - t[m]) ** 2
        return out

    def d(self, X, v):
        if v != 0:
            return np.zeros(X.shape[0], dtype=complex)
        u, _ = self._t(X)
        return self._dt(X) * np.conj(u) / self.radius**2

    def dbar(self, X, v):
        if v != 0:
            return np.zeros(X.shape[0], dtype=complex)
        u, _ = self._t(X)
        return self._dt(X) * u / self.radius**2


@dataclass
class Shell(Node):
    eps: float
    center: complex
    radius: float

    def _e(self, X):
        u = X[:, 0] - self.center
        rho = (np.abs(u) ** 2 - self.radius**2) / self.eps
        with np.errstate(over="ignore"):
            return u, np.exp(2 * rho)

    def value(self, X):
        _, e = self._e(X)
        return (e - 1.0).astype(complex)

    def d(self, X, v):
        if v != 0:
            return np.zeros(X.shape[0], dtype=complex)
        u, e = self._e(X)
        return 2 * e * np.conj(u) / self.eps

    def dbar(self, X, v):
        if v != 0:
            return np.zeros(X.shape[0], dtype=complex)
        u, e = self._e(X)
        return 2 * e * u / self.eps


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|(\*\*|[-+*/^(),|·])|([A-Za-z_][A-Za-z_0-9]*))")
_IMAG = re.compile(r"i(?![A-Za-z_0-9])")
_FUNCS = {"conj": 1, "abs": 1, "bump": 2, "shell": 3}


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse symbol expression {text!r} near position {pos}")
        num, op, name = m.groups()
        pos = m.end()
        if num and _IMAG.match(text, pos):
            # imaginary literal such as 0.5i
            out.append(("num", complex(0, float(num))))
            pos += 1
            continue
        out.append(("num", float(num)) if num else ("op", op) if op else ("name", name))
    return out


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.dimension = dimension

    def error(self, msg):
        return ConfigError(f"symbol expression {self.text!r}: {msg}")

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, val=None):
        k, v = self.peek()
        if k is None or (kind and k != kind) or (val is not None and v != val):
            raise self.error(f"expected {val or kind}, found {v!r}")
        self.i += 1
        return v

    def parse(self) -> Node:
        node = self.expr()
        if self.i != len(self.toks):
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()
            node = Add(node, self.term(), 1 if op == "+" else -1)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "·"), ("op", "/")):
            op = self.take()
            rhs = self.unary()
            node = Div(node, rhs) if op == "/" else Mul(node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return Mul(Const(-1.0), self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek() in (("op", "^"), ("op", "**")):
            self.take()
            e = self.unary().constant()
            if e is None or np.imag(e) != 0 or np.real(e) < 0 or np.real(e) != int(np.real(e)):
                raise self.error("exponents must be non-negative integer constants")
            node = Pow(node, int(np.real(e)))
        return node

    def const_arg(self, node, what):
        c = node.constant()
        if c is None:
            raise self.error(f"{what} must be a constant")
        return c

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return Const(val)
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if (kind, val) == ("op", "|"):
            self.take()
            node = self.expr()
            self.take("op", "|")
            return Abs(node)
        if kind != "name":
            raise self.error(f"unexpected {val!r}")
        self.take()
        if val == "i":
            return Const(1j)
        if val == "pi":
            return Const(np.pi)
        if val in ("z", "z1"):
            return Var(0)
        if val in ("w", "z2"):
            if self.dimension < 2:
                raise self.error("variable w needs a two-dimensional domain")
            return Var(1)
        if val in _FUNCS:
            self.take("op", "(")
            args = [self.expr()]
            while self.peek() == ("op", ","):
                self.take()
                args.append(self.expr())
            self.take("op", ")")
            if len(args) != _FUNCS[val]:
                raise self.error(f"{val} takes {_FUNCS[val]} argument(s)")
            if val == "conj":
                return Conj(args[0])
            if val == "abs":
                return Abs(args[0])
            if val == "bump":
                r = self.const_arg(args[1], "bump radius")
                if np.real(r) <= 0:
                    raise self.error("bump radius must be positive")
                return Bump(complex(self.const_arg(args[0], "bump center")), float(np.real(r)))
            eps, p, r = (self.const_arg(a, "shell parameter") for a in args)
            if np.real(eps) <= 0 or np.real(r) <= 0:
                raise self.error("shell eps and radius must be positive")
            return Shell(float(np.real(eps)), complex(p), float(np.real(r)))
        raise self.error(f"unknown name {val!r}")


def parse_expression(text: str, dimension: int = 1) -> Node:
    if not text or not text.strip():
        raise ConfigError("empty symbol expression")
    return _Parser(text, dimension).parse()


# ---------------------------------------------------------------- Symbol

def _as_points(points, dimension):
    X = np.asarray(points, dtype=complex)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1 and dimension == 1:
        X = X[:, None]
    elif X.ndim == 1:
        X = X.reshape(-1, dimension)
    return X


@dataclass(frozen=True)
class Symbol:
    """A multiplier ``phi`` with optional (0,1)-derivative data.

    ``dbar_evaluator(points)`` returns shape ``(n, dimension)``: column ``j``
    holds ``d phi / d conj(z_j)``. ``domain`` records where the symbol is being
    evaluated; restriction only swaps it.
    """

    evaluator: Callable
    dimension: int = 1
    dbar_evaluator: Optional[Callable] = None
    regularity: Regularity = Regularity.CONTINUOUS
    expression: Optional[str] = None
    domain: object = field(default=None, compare=False)

    def __call__(self, points):
        X = _as_points(points, self.dimension)
        return np.asarray(self.evaluator(X), dtype=complex).reshape(X.shape[0])

    def dbar(self, points):
        if self.dbar_evaluator is None:
            raise ValueError(f"symbol {self.expression or ''} carries no dbar data")
        X = _as_points(points, self.dimension)
        return np.asarray(self.dbar_evaluator(X), dtype=complex).reshape(X.shape[0], self.dimension)

    def scaled(self, alpha: complex) -> "Symbol":
        dbar = None
        if self.dbar_evaluator is not None:
            dbar = lambda X, f=self.dbar_evaluator: alpha * f(X)
        expr = f"({alpha})*({self.expression})" if self.expression else None
        return replace(self, evaluator=lambda X, f=self.evaluator: alpha * f(X),
                       dbar_evaluator=dbar, expression=expr)

    def sup_norm(self, points) -> float:
        v = self(points)
        return float(np.max(np.abs(v))) if v.size else 0.0

    def metadata(self) -> dict:
        return {"expression": self.expression, "regularity": self.regularity.value,
                "has_dbar": self.dbar_evaluator is not None}


def from_expression(text: str, dimension: int = 1) -> Symbol:
    node = parse_expression(text, dimension)
    dbar = None
    regularity = Regularity.CONTINUOUS
    if node.smooth():
        regularity = Regularity.C1
        dbar = lambda X: np.stack([node.dbar(X, v) for v in range(dimension)], axis=1)
    return Symbol(node.value, dimension, dbar, regularity, text.strip())


def polynomial_symbol(coefficients) -> Symbol:
    """Holomorphic polynomial ``sum_n c_n z^n`` in one variable."""
    c = np.asarray(coefficients, dtype=complex)
    ev = lambda X: np.polynomial.polynomial.polyval(X[:, 0], c)
    dbar = lambda X: np.zeros((X.shape[0], 1), dtype=complex)
    return Symbol(ev, 1, dbar, Regularity.C1, "poly(" + ",".join(f"{x:g}" for x in c) + ")")
