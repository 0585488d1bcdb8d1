"""Small infix expression language compiled to jet-aware closures.

Grammar: numbers, named variables, ``+ - * / ** ^``, unary minus and the
functions sqrt, exp, log, sin, cos, pow. Constants ``pi`` and ``e`` are
predefined. Parsing goes through :mod:`ast` with a node whitelist; nothing
is ever passed to ``eval``.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Mapping, Sequence

from . import derivkit as dk
from .errors import ParseError

FUNCTIONS: dict[str, tuple[Callable, int]] = {
    "sqrt": (dk.sqrt, 1),
    "exp": (dk.exp, 1),
    "log": (dk.log, 1),
    "sin": (dk.sin, 1),
    "cos": (dk.cos, 1),
    "pow": (dk.power, 2),
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS: dict[type, Callable] = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: dk.power,
}


class Expression:
    """A parsed expression over a fixed, ordered tuple of variable names."""

    def __init__(self, text: str, variables: Sequence[str]):
        self.text = str(text).strip()
        self.variables = tuple(variables)
        self.names: set[str] = set()
        if not self.text:
            raise ParseError("empty expression")
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"cannot parse {self.text!r}: {exc.msg}") from None
        self._fn = self._compile(tree.body)

    def _compile(self, node) -> Callable[[Mapping], object]:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParseError(f"unsupported literal {node.value!r} in {self.text!r}")
            val = float(node.value)
            return lambda env: val
        if isinstance(node, ast.Name):
            name = node.id
            if name in self.variables:
                self.names.add(name)
                return lambda env: env[name]
            if name in CONSTANTS:
                val = CONSTANTS[name]
                return lambda env: val
            raise ParseError(f"unknown name {name!r} in {self.text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = self._compile(node.left), self._compile(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ParseError(f"unsupported function call in {self.text!r}")
            if node.keywords:
                raise ParseError(f"keyword arguments not allowed in {self.text!r}")
            fn, arity = FUNCTIONS[node.func.id]
            if len(node.args) != arity:
                raise ParseError(f"{node.func.id} takes {arity} argument(s) in {self.text!r}")
            args = [self._compile(a) for a in node.args]
            return lambda env: fn(*(a(env) for a in args))
        raise ParseError(f"unsupported syntax {type(node).__name__} in {self.text!r}")

    def evaluate(self, env: Mapping):
        return self._fn(env)

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments, got {len(args)}")
        return self._fn(dict(zip(self.variables, args)))

    @property
    def is_constant(self) -> bool:
        return not self.names

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"


def chart_variables(n: int) -> tuple[str, ...]:
    """Variable names x1..xn, u1..un used for chart-local fields."""
    return tuple(f"x{i + 1}" for i in range(n)) + tuple(f"u{i + 1}" for i in range(n))


def parse(text, variables: Sequence[str]) -> Expression:
    return Expression(text, variables)


def chart_field(text, n: int) -> Callable:
    """Compile an expression in x1..xn, u1..un to a function ``f(x, u)``.

    ``x`` and ``u`` may be arrays or vector jets.
    """
    e = Expression(text, chart_variables(n))

    def field(x, u):
        env = {f"x{i + 1}": x[i] for i in range(n)}
        env.update({f"u{i + 1}": u[i] for i in range(n)})
        return e.evaluate(env)

    field.expression = e
    return field
