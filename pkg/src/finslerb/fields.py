"""Vector fields on the base chart, sections of the pullback bundle, endomorphisms.

All field callables accept numpy arrays or jets, so the same definition
serves both point evaluation and exact differentiation.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import derivkit as dk
from .expr import Expression, chart_variables


def _base_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


class VectorFieldOnM:
    """xi(x) = xi^i(x) d/dx^i on the chart."""

    def __init__(self, n: int, fn: Callable, label: str = ""):
        self.n = n
        self._fn = fn
        self.label = label

    @classmethod
    def from_expressions(cls, texts: Sequence, label: str = "") -> "VectorFieldOnM":
        n = len(texts)
        exprs = [Expression(str(t), _base_names(n)) for t in texts]

        def fn(x):
            env = {f"x{i + 1}": x[i] for i in range(n)}
            return [e.evaluate(env) for e in exprs]

        return cls(n, fn, label or "(" + ", ".join(e.text for e in exprs) + ")")

    @classmethod
    def linear(cls, A, b=None, label: str = "") -> "VectorFieldOnM":
        """xi(x) = A x + b."""
        A = np.asarray(A, dtype=float)
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
        n = A.shape[0]

        def fn(x):
            return [sum(A[k, i] * x[i] for i in range(n)) + b[k] for k in range(n)]

        return cls(n, fn, label or "linear")

    @classmethod
    def zero(cls, n: int) -> "VectorFieldOnM":
        return cls(n, lambda x: [0.0] * n, "0")

    def __call__(self, x):
        return self._fn(x)

    def scaled(self, c: float) -> "VectorFieldOnM":
        return VectorFieldOnM(self.n, lambda x: [c * v for v in self._fn(x)], f"{c}*{self.label}")

    def on(self, z: dk.Jet) -> dk.Jet:
        """Components as a vector jet over the stacked variables z = (x, u)."""
        return dk.asjet(list(self._fn(z[: self.n])), z.space)

    def jet(self, x, order: int = 2) -> dk.Jet:
        zx = dk.Jet.variables(x, order)
        return dk.asjet(list(self._fn(zx)), zx.space)

    def value(self, x) -> np.ndarray:
        return np.array([float(dk.value_of(v)) for v in self._fn(np.asarray(x, dtype=float))])

    def jacobian(self, x) -> np.ndarray:
        """[k, i] = d xi^k / dx^i."""
        return self.jet(x, 1).jacobian().value

    def hessian(self, x) -> np.ndarray:
        """[k, i, j] = d^2 xi^k / dx^i dx^j."""
        return self.jet(x, 2).jacobian().jacobian().value


class Section:
    """A section s(x, u) of the pullback bundle."""

    def __init__(self, n: int, fn: Callable, label: str = ""):
        self.n = n
        self._fn = fn
        self.label = label

    @classmethod
    def from_expressions(cls, texts: Sequence, label: str = "") -> "Section":
        n = len(texts)
        exprs = [Expression(str(t), chart_variables(n)) for t in texts]

        def fn(x, u):
            env = {f"x{i + 1}": x[i] for i in range(n)}
            env.update({f"u{i + 1}": u[i] for i in range(n)})
            return [e.evaluate(env) for e in exprs]

        return cls(n, fn, label)

    @classmethod
    def of_field(cls, xi: VectorFieldOnM) -> "Section":
        return cls(xi.n, lambda x, u: xi(x), xi.label)

    @classmethod
    def constant(cls, v) -> "Section":
        v = np.asarray(v, dtype=float)
        return cls(v.size, lambda x, u: list(v), "const")

    @classmethod
    def canonical(cls, n: int) -> "Section":
        """The canonical section U(x, u) = u."""
        return cls(n, lambda x, u: [u[i] for i in range(n)], "U")

    def __call__(self, x, u):
        return self._fn(x, u)

    def on(self, z: dk.Jet) -> dk.Jet:
        return dk.asjet(list(self._fn(z[: self.n], z[self.n :])), z.space)


class EndoSection:
    """A (1,1)-tensor section P^i_j(x, u); ``P(x, u)`` returns rows i, columns j."""

    def __init__(self, n: int, fn: Callable, label: str = ""):
        self.n = n
        self._fn = fn
        self.label = label

    @classmethod
    def from_expressions(cls, rows: Sequence[Sequence], label: str = "") -> "EndoSection":
        n = len(rows)
        exprs = [[Expression(str(t), chart_variables(n)) for t in row] for row in rows]

        def fn(x, u):
            env = {f"x{i + 1}": x[i] for i in range(n)}
            env.update({f"u{i + 1}": u[i] for i in range(n)})
            return [[e.evaluate(env) for e in row] for row in exprs]

        return cls(n, fn, label)

    @classmethod
    def constant(cls, P, label: str = "") -> "EndoSection":
        P = np.asarray(P, dtype=float)
        return cls(P.shape[0], lambda x, u: [list(r) for r in P], label or "const")

    @classmethod
    def identity(cls, n: int) -> "EndoSection":
        return cls.constant(np.eye(n), "I")

    def __call__(self, x, u):
        return self._fn(x, u)

    def on(self, z: dk.Jet) -> dk.Jet:
        return dk.asjet([list(r) for r in self._fn(z[: self.n], z[self.n :])], z.space)

    def value(self, x, u) -> np.ndarray:
        return np.array(
            [[float(dk.value_of(v)) for v in row] for row in self._fn(np.asarray(x), np.asarray(u))]
        )

    def scaled(self, c: float) -> "EndoSection":
        return EndoSection(
            self.n, lambda x, u: [[c * v for v in row] for row in self._fn(x, u)], f"{c}*{self.label}"
        )
