"""Finsler structures on a chart: energy, fundamental tensor and Cartan tensor.

A model is defined by its energy F^2(x, u). All tensors are obtained from a
single jet of F^2 in the 2n chart variables (x, u), so derivatives are exact
up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import derivkit as dk
from .errors import DomainError, NotPositiveDefinite, ValidationError
from .expr import Expression, chart_field

DEFAULT_ORDER = 4
PD_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class BundlePoint:
    """A point (x, u) of the slit tangent bundle in chart coordinates."""

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        if x.shape != u.shape:
            raise ValueError("x and u must have the same dimension")
        if not np.linalg.norm(u) > 1e-12:
            raise DomainError("u = 0 is outside the slit tangent bundle")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    def key(self) -> bytes:
        return self.z.tobytes()

    def scaled(self, lam: float) -> "BundlePoint":
        return BundlePoint(self.x, lam * self.u)


@dataclass(frozen=True)
class TensorValue:
    """Dense component array at a point with its declared index symmetries."""

    data: np.ndarray
    symmetric: tuple[tuple[int, ...], ...] = ()

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


@dataclass(frozen=True)
class MetricValue:
    g: np.ndarray
    ginv: np.ndarray
    r2: float


def _matrix_field(spec, n: int) -> Callable:
    """Normalise a matrix field: callable x -> entries, or nested expressions."""
    if callable(spec):
        return spec
    rows = [[Expression(str(e), [f"x{i + 1}" for i in range(n)]) for e in row] for row in spec]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValidationError("model.a", f"expected a {n}x{n} matrix")

    def a(x):
        env = {f"x{i + 1}": x[i] for i in range(n)}
        return [[e.evaluate(env) for e in row] for row in rows]

    return a


def _vector_field(spec, n: int) -> Callable:
    if callable(spec):
        return spec
    comps = [Expression(str(e), [f"x{i + 1}" for i in range(n)]) for e in spec]
    if len(comps) != n:
        raise ValidationError("model.b", f"expected {n} components")

    def b(x):
        env = {f"x{i + 1}": x[i] for i in range(n)}
        return [e.evaluate(env) for e in comps]

    return b


def _numeric(entries) -> np.ndarray:
    return np.array([[float(dk.value_of(e)) for e in row] for row in entries])


class FinslerModel:
    """An energy function F^2(x, u) on an n-dimensional chart.

    Use the constructors :meth:`euclidean`, :meth:`riemannian`,
    :meth:`randers` or :meth:`custom` rather than calling this directly.
    """

    def __init__(
        self,
        n: int,
        F2: Callable,
        family: str = "custom",
        params: dict | None = None,
        check: Callable | None = None,
    ):
        self.n = int(n)
        self._F2 = F2
        self.family = family
        self.params = dict(params or {})
        self._check = check
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"FinslerModel(n={self.n}, family={self.family!r})"

    # constructors -------------------------------------------------------
    @classmethod
    def euclidean(cls, n: int) -> "FinslerModel":
        def F2(x, u):
            return sum(u[i] * u[i] for i in range(n))

        return cls(n, F2, "riemannian", {"a": "identity"})

    @classmethod
    def riemannian(cls, a, n: int | None = None) -> "FinslerModel":
        """Quadratic energy a_ij(x) u^i u^j from a matrix field ``a``."""
        if n is None:
            n = len(a)
        afun = _matrix_field(a, n)

        def F2(x, u):
            m = afun(x)
            return sum(m[i][j] * u[i] * u[j] for i in range(n) for j in range(n))

        return cls(n, F2, "riemannian", {"a": a})

    @classmethod
    def randers(cls, a, b, n: int | None = None, box: float = 2.0, seed: int = 0) -> "FinslerModel":
        """F = sqrt(a(u, u)) + b(u); admissibility ||b||_a < 1 is checked on a grid."""
        if n is None:
            n = len(b)
        afun, bfun = _matrix_field(a, n), _vector_field(b, n)

        def F2(x, u):
            m, w = afun(x), bfun(x)
            q = sum(m[i][j] * u[i] * u[j] for i in range(n) for j in range(n))
            lin = sum(w[i] * u[i] for i in range(n))
            return (dk.sqrt(q) + lin) ** 2

        def bnorm2(x):
            m = _numeric(afun(x))
            w = np.array([float(dk.value_of(e)) for e in bfun(x)])
            return float(w @ np.linalg.solve(m, w))

        def check(x):
            if not bnorm2(x) < 1.0:
                raise DomainError(f"Randers condition ||b||_a < 1 fails at x={x}")

        rng = np.random.default_rng(seed)
        grid = [np.zeros(n)] + list(box * (2 * rng.random((64, n)) - 1))
        grid += [box * (np.array(s, dtype=float) - 1) for s in np.ndindex(*(3,) * n)]
        sup = max(bnorm2(g) for g in grid)
        if not sup < 1.0:
            raise ValidationError("model.b", f"Randers condition violated: sup ||b||_a^2 = {sup:.3g}")
        return cls(n, F2, "randers", {"a": a, "b": b, "box": box}, check)

    @classmethod
    def custom(cls, n: int, text: str) -> "FinslerModel":
        """Energy given directly as an expression in x1..xn, u1..un."""
        return cls(n, chart_field(text, n), "custom", {"F2": text})

    # evaluation ---------------------------------------------------------
    def check_point(self, p: BundlePoint) -> None:
        if p.n != self.n:
            raise ValueError(f"point has dimension {p.n}, model has {self.n}")
        if self._check is not None:
            self._check(p.x)

    def F2(self, x, u):
        return self._F2(x, u)

    def F2_z(self, z):
        """F^2 as a function of the stacked variables z = (x, u)."""
        return self._F2(z[: self.n], z[self.n :])

    def energy_jet(self, p: BundlePoint, order: int = DEFAULT_ORDER) -> dk.Jet:
        key = ("F2", p.key(), order)
        if key not in self._cache:
            self.check_point(p)
            self._cache[key] = dk.taylor_jet(self.F2_z, p.z, order)
        return self._cache[key]

    def cached(self, key, build: Callable):
        """Per-model memo used by the downstream geometry pipeline."""
        if key not in self._cache:
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[key] = build()
        return self._cache[key]


# ---------------------------------------------------------------------------
# metric jets
# ---------------------------------------------------------------------------


@dataclass
class MetricJets:
    """Jets of F^2, its Hessian blocks and the fundamental tensor at a point."""

    F2: dk.Jet
    grad: dk.Jet
    hess: dk.Jet
    g: dk.Jet
    ginv: dk.Jet
    dg: dk.Jet = field(repr=False)


def metric_jets(model: FinslerModel, p: BundlePoint, order: int = DEFAULT_ORDER) -> MetricJets:
    def build():
        n = model.n
        F2 = model.energy_jet(p, order)
        grad = F2.jacobian()
        hess = grad.jacobian()
        g = 0.5 * hess[n:, n:]
        _cholesky_check(g.value)
        ginv = dk.inv(g)
        dg = g.jacobian() if g.order >= 1 else None
        return MetricJets(F2, grad, hess, g, ginv, dg)

    return model.cached(("metric", p.key(), order), build)


def _cholesky_check(g: np.ndarray) -> None:
    try:
        low = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("fundamental tensor is not positive definite") from None
    if np.min(np.diag(low)) ** 2 <= PD_THRESHOLD:
        raise NotPositiveDefinite("fundamental tensor has a pivot below 1e-10")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def energy(model: FinslerModel, p: BundlePoint) -> float:
    """r^2 = F^2(x, u)."""
    model.check_point(p)
    val = float(dk.value_of(model.F2(p.x, p.u)))
    if not val > 0:
        raise DomainError(f"F^2 = {val} is not positive at {p}")
    return val


def fundamental_tensor(model: FinslerModel, p: BundlePoint) -> MetricValue:
    """g_ij = 1/2 d^2 F^2 / du^i du^j, with its inverse and r^2."""
    mj = metric_jets(model, p)
    return MetricValue(mj.g.value.copy(), mj.ginv.value.copy(), float(mj.F2.value))


def cartan_tensor(model: FinslerModel, p: BundlePoint) -> TensorValue:
    """C_ijk = 1/4 d^3 F^2 / du^i du^j du^k (totally symmetric)."""
    mj = metric_jets(model, p)
    n = model.n
    return TensorValue(0.5 * mj.dg.value[:, :, n:], ((0, 1, 2),))


def contracted_cartan(model: FinslerModel, p: BundlePoint) -> TensorValue:
    """Cbar^k_ij = g^{kl} C_lij, stored as [k, i, j]."""
    mj = metric_jets(model, p)
    C = cartan_tensor(model, p).data
    return TensorValue(np.einsum("kl,lij->kij", mj.ginv.value, C), ((1, 2),))


def sample_points(
    model: FinslerModel,
    count: int,
    rng: np.random.Generator,
    box: float = 1.0,
    shells: Sequence[float] = (0.5, 2.0),
    extra_radii: int = 8,
) -> list[BundlePoint]:
    """Random bundle points with |u| drawn from fixed shells plus random radii.

    Points failing the model's domain check are redrawn.
    """
    radii = list(shells) + list(np.exp(rng.uniform(np.log(0.1), np.log(3.0), extra_radii)))
    pts: list[BundlePoint] = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > 100 * count:
            raise DomainError("could not sample enough in-domain points")
        x = box * (2 * rng.random(model.n) - 1)
        d = rng.normal(size=model.n)
        d /= np.linalg.norm(d)
        u = radii[len(pts) % len(radii)] * d
        p = BundlePoint(x, u)
        try:
            model.check_point(p)
        except DomainError:
            continue
        pts.append(p)
    return pts
