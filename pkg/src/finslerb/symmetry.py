"""Lie derivatives of an F-natural metric along lifted fields, and the
conformal / homothetic / Killing verdicts built on them.

Fields on the slit tangent bundle handled here:

    xi^h = h{xi},  xi^v = v{xi},  xi^c = xi^h + v{nabla_zeta xi},
    iota P = v{P(U)},  tau P = h{P(U)}.

Every closed form returns a :class:`LieValue` (blocks in the lifted frame
delta_i, d/du^i).  :func:`lie_numeric_oracle` computes the same object from
the coordinate matrix of G by differentiating it directly, and is what the
closed forms are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import derivkit as dk
from .chern import LocalGeometry, delta_jet, horizontal_lift_jet, local_geometry, vertical_lift_jet, z_variables
from .errors import DegenerateMetric, NotKKType
from .fields import EndoSection, VectorFieldOnM
from .finsler import BundlePoint, FinslerModel, sample_points
from .gnat import FNaturalSpec, ProfileValues, cheeger_gromoll, lifted_blocks, metric_jet, require_nondegenerate, sasaki

CONDITION_TOL = 1e-6
LIOUVILLE_TOL = 1e-7
MIN_SPEED = 0.1


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LieValue:
    """(L_W G)(A, B) on the lifted frame, split into n x n blocks."""

    hh: np.ndarray
    hv: np.ndarray
    vv: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.hh, self.hv], [self.hv.T, self.vv]])

    @classmethod
    def from_full(cls, M: np.ndarray) -> "LieValue":
        n = M.shape[0] // 2
        return cls(M[:n, :n].copy(), M[:n, n:].copy(), M[n:, n:].copy())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.full)))

    def deviation(self, other: "LieValue") -> float:
        return float(np.max(np.abs(self.full - other.full)))


@dataclass
class ConformalVerdict:
    """kind is one of killing, homothetic, conformal, none.

    ``theta0`` is set for homothetic verdicts, ``theta`` (a function of a
    BundlePoint) for conformal ones.
    """

    kind: str
    residuals: dict[str, float]
    witness: BundlePoint | None = None
    theta0: float | None = None
    theta: Callable[[BundlePoint], float] | None = None
    details: dict = field(default_factory=dict)

    @property
    def worst(self) -> tuple[str, float]:
        if not self.residuals:
            return ("", 0.0)
        key = max(self.residuals, key=lambda k: self.residuals[k])
        return key, self.residuals[key]


# ---------------------------------------------------------------------------
# lifted fields as coordinate jets
# ---------------------------------------------------------------------------


def _z(geo: LocalGeometry, order: int = 1) -> dk.Jet:
    return z_variables(geo, order)


def _pu_jet(geo: LocalGeometry, P: EndoSection) -> dk.Jet:
    z = _z(geo, 1)
    return dk.einsum("ij,j->i", P.on(z), z[geo.n :])


def horizontal_lift_field(xi: VectorFieldOnM) -> Callable[[LocalGeometry], dk.Jet]:
    return lambda geo: horizontal_lift_jet(geo, xi.on(_z(geo, 1)))


def vertical_lift_field(xi: VectorFieldOnM) -> Callable[[LocalGeometry], dk.Jet]:
    return lambda geo: vertical_lift_jet(xi.on(_z(geo, 1)))


def complete_lift_field(xi: VectorFieldOnM) -> Callable[[LocalGeometry], dk.Jet]:
    """xi^c = xi^i d/dx^i + u^j d_j xi^i d/du^i."""

    def build(geo):
        n = geo.n
        z = _z(geo, 2)
        xj = xi.on(z)
        J = xj.jacobian()[:, :n]
        return dk.concatenate([xj.truncate(1), dk.einsum("ij,j->i", J, z[n:].truncate(1))])

    return build


def iota_field(P: EndoSection) -> Callable[[LocalGeometry], dk.Jet]:
    return lambda geo: vertical_lift_jet(_pu_jet(geo, P))


def tau_field(P: EndoSection) -> Callable[[LocalGeometry], dk.Jet]:
    return lambda geo: horizontal_lift_jet(geo, _pu_jet(geo, P))


# ---------------------------------------------------------------------------
# numeric oracle
# ---------------------------------------------------------------------------


def _lifted_frame_matrix(N: np.ndarray) -> np.ndarray:
    """Columns are the coordinate components of delta_i and d/du^i."""
    n = N.shape[0]
    E = np.eye(2 * n)
    E[n:, :n] = -N
    return E


def coordinate_to_lifted(N: np.ndarray, M: np.ndarray) -> np.ndarray:
    E = _lifted_frame_matrix(N)
    return E.T @ M @ E


def lifted_to_coordinate(N: np.ndarray, M: np.ndarray) -> np.ndarray:
    Einv = np.linalg.inv(_lifted_frame_matrix(N))
    return Einv.T @ M @ Einv


def lie_numeric_oracle(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, W) -> LieValue:
    """(L_W G)_AB = W^C d_C G_AB + G_CB d_A W^C + G_AC d_B W^C, then moved to the lifted frame.

    ``W`` maps a LocalGeometry to the coordinate components of the field as a
    jet over z = (x, u) of order >= 1 (see the ``*_field`` builders), or is a
    plain callable ``W(z)`` on a z-jet.
    """
    geo = local_geometry(model, p)
    require_nondegenerate(spec.at(geo.r2, 0))
    Wj = _field_jet(geo, W)
    M = metric_jet(spec, geo)
    Mv, dM = M.value, M.jacobian().value
    Wv, dW = Wj.value, Wj.jacobian().value
    Lc = np.einsum("abc,c->ab", dM, Wv) + dW.T @ Mv + Mv @ dW
    return LieValue.from_full(coordinate_to_lifted(geo.N, Lc))


def _field_jet(geo: LocalGeometry, W) -> dk.Jet:
    try:
        out = W(geo)
    except (TypeError, AttributeError):
        out = W(_z(geo, 1))
    z = _z(geo, 1)
    if not isinstance(out, dk.Jet):
        out = dk.asjet(list(out), z.space)
    if out.order < 1:
        raise ValueError("the field must carry at least one derivative order")
    return out.truncate(1)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


class _Pointwise:
    """Tensor helpers at one point, evaluated on basis vectors."""

    def __init__(self, spec: FNaturalSpec, geo: LocalGeometry):
        self.geo = geo
        self.pv: ProfileValues = spec.at(geo.r2, 2)
        require_nondegenerate(self.pv)
        self.n = geo.n
        self.u = geo.u
        self.w = geo.g @ geo.u
        self.E = np.eye(geo.n)

    def g(self, a, b):
        return float(a @ self.geo.g @ b)

    def gU(self, a):
        return float(self.w @ a)

    def R4(self, a, b, c, d):
        return self.geo.curv4(a, b, c, d)

    def RU(self, a, b):
        return self.geo.curv(a, b, self.u)

    def C(self, a, b, c):
        return self.geo.cartan(a, b, c)

    def L(self, a, b, c):
        return self.geo.landsberg(a, b, c)

    def B(self, a, b, c, d):
        return self.geo.berwald(a, b, c, d)

    def blocks(self, hh, hv, vv) -> LieValue:
        n, E = self.n, self.E
        out = [np.empty((n, n)) for _ in range(3)]
        for i in range(n):
            for j in range(n):
                for k, fn in enumerate((hh, hv, vv)):
                    out[k][i, j] = fn(E[i], E[j])
        return LieValue(*out)


def _cov_matrix(geo: LocalGeometry, s: dk.Jet) -> np.ndarray:
    """[k, i] = (nabla_{delta_i} s)^k for a section jet s over z."""
    return delta_jet(geo, s) + np.einsum("kij,j->ki", geo.Gamma, s.value)


def covariant_jacobian(geo: LocalGeometry, xi: VectorFieldOnM) -> np.ndarray:
    """[k, i] = (nabla_{e_i^h} xi)^k."""
    return _cov_matrix(geo, xi.on(_z(geo, 1)))


def covariant_hessian(geo: LocalGeometry, xi: VectorFieldOnM) -> np.ndarray:
    """H[k, a, b] = (nabla_{e_b^h} nabla xi)(e_a)^k, horizontal second covariant derivative."""
    n = geo.n
    z = _z(geo, 2)
    xj = xi.on(z)
    J = xj.jacobian()[:, :n]
    T = J + dk.einsum("kam,m->ka", geo.Gamma_jet.truncate(1), xj.truncate(1))
    Tv = T.value
    dT = delta_jet(geo, T)  # [k, a, b]
    G = geo.Gamma
    return dT + np.einsum("kbm,ma->kab", G, Tv) - np.einsum("mba,km->kab", G, Tv)


def endo_vertical(geo: LocalGeometry, P: EndoSection) -> np.ndarray:
    """[k, j] = d(P(U))^k / du^j, i.e. P(e_j) + (d_{e_j} P)(U); equals P when P does not depend on u."""
    return _pu_jet(geo, P).jacobian().value[:, geo.n :]


def endo_derivative(geo: LocalGeometry, P: EndoSection) -> np.ndarray:
    """[k, i] = ((nabla_{e_i^h} P)(U))^k; equals nabla_{e_i^h}(P(U)) since nabla_h U = 0."""
    return _cov_matrix(geo, _pu_jet(geo, P))


def lie_horizontal(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, xi: VectorFieldOnM) -> LieValue:
    geo = local_geometry(model, p)
    t = _Pointwise(spec, geo)
    pv, u = t.pv, t.u
    D = covariant_jacobian(geo, xi)
    x = xi.value(p.x)

    def hh(X, Y):
        return (
            pv.A * (t.g(D @ X, Y) + t.g(D @ Y, X))
            + pv.Bh * (t.gU(D @ X) * t.gU(Y) + t.gU(D @ Y) * t.gU(X))
            - pv.a2 * (t.R4(X, u, x, Y) + t.R4(Y, u, x, X) - 2 * t.C(X, t.RU(u, x), Y))
        )

    def hv(X, Y):
        return (
            pv.a2 * (t.g(D @ X, Y) - t.L(X, Y, x))
            + pv.b2 * t.gU(D @ X) * t.gU(Y)
            + pv.a1 * (t.R4(u, Y, x, X) + t.B(Y, x, u, X) - t.B(X, Y, u, x) - t.B(X, x, u, Y))
        )

    def vv(X, Y):
        return -2 * pv.a1 * t.L(X, Y, x)

    return t.blocks(hh, hv, vv)


def lie_vertical(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, xi: VectorFieldOnM) -> LieValue:
    geo = local_geometry(model, p)
    t = _Pointwise(spec, geo)
    pv, u = t.pv, t.u
    D = covariant_jacobian(geo, xi)
    x = xi.value(p.x)
    xu = t.gU(x)

    def hh(X, Y):
        return (
            pv.a2 * (t.g(D @ X, Y) + t.g(D @ Y, X) + 2 * t.L(X, Y, x))
            + pv.b2 * (t.gU(D @ X) * t.gU(Y) + t.gU(D @ Y) * t.gU(X))
            + 2 * pv.d.Bh * t.gU(X) * t.gU(Y) * xu
            + 2 * pv.d.A * t.g(X, Y) * xu
            + 2 * pv.A * t.C(X, Y, x)
            + pv.Bh * (t.g(X, x) * t.gU(Y) + t.g(Y, x) * t.gU(X))
        )

    def hv(X, Y):
        return (
            pv.a1 * (t.g(D @ X, Y) + t.L(X, Y, x))
            + pv.b1 * t.gU(D @ X) * t.gU(Y)
            + 2 * pv.d.a2 * t.g(X, Y) * xu
            + pv.b2 * (t.g(Y, x) * t.gU(X) + t.g(X, x) * t.gU(Y))
            + 2 * pv.a2 * t.C(X, Y, x)
            + 2 * pv.d.b2 * t.gU(X) * t.gU(Y) * xu
        )

    def vv(X, Y):
        return (
            2 * pv.d.a1 * t.g(X, Y) * xu
            + 2 * pv.a1 * t.C(X, Y, x)
            + pv.b1 * (t.g(X, x) * t.gU(Y) + t.g(Y, x) * t.gU(X))
            + 2 * pv.d.b1 * t.gU(X) * t.gU(Y) * xu
        )

    return t.blocks(hh, hv, vv)


def lie_complete(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, xi: VectorFieldOnM) -> LieValue:
    geo = local_geometry(model, p)
    t = _Pointwise(spec, geo)
    pv, u = t.pv, t.u
    D = covariant_jacobian(geo, xi)
    H = covariant_hessian(geo, xi)
    x = xi.value(p.x)
    nz = D @ u
    nzu = t.gU(nz)

    def h2(X):  # nabla^2 xi(zeta, X^h) = nabla_{X^h} nabla_zeta xi - nabla_{nabla_{X^h} zeta} xi
        return np.einsum("kab,a,b->k", H, u, X)

    def sym(X, Y):
        return t.g(D @ X, Y) + t.g(D @ Y, X) + 2 * t.C(X, Y, nz)

    def radial(X, Y):
        return (
            t.gU(D @ X) * t.gU(Y) + t.gU(D @ Y) * t.gU(X) + t.g(X, nz) * t.gU(Y) + t.g(Y, nz) * t.gU(X)
        )

    def hh(X, Y):
        return (
            pv.A * sym(X, Y)
            + pv.Bh * radial(X, Y)
            + pv.a2 * (t.R4(u, X, x, Y) + t.R4(u, Y, x, X) - 2 * t.B(X, Y, u, x))
            + pv.a2 * (t.g(h2(X), Y) + t.g(h2(Y), X) + 2 * t.L(X, Y, nz))
            + pv.b2 * (t.gU(X) * t.gU(h2(Y)) + t.gU(Y) * t.gU(h2(X)))
            + 2 * (pv.d.A * t.g(X, Y) + pv.d.Bh * t.gU(X) * t.gU(Y)) * nzu
        )

    def hv(X, Y):
        return (
            pv.a2 * sym(X, Y)
            + pv.b2 * radial(X, Y)
            + pv.a1
            * (
                t.R4(u, Y, x, X)
                + t.B(Y, x, u, X)
                - t.B(X, Y, u, x)
                - t.B(X, x, u, Y)
                + t.L(X, Y, nz)
                + t.g(h2(X), Y)
            )
            + pv.b1 * t.gU(Y) * t.gU(h2(X))
            + 2 * (pv.d.a2 * t.g(X, Y) + pv.d.b2 * t.gU(X) * t.gU(Y)) * nzu
        )

    def vv(X, Y):
        return (
            pv.a1 * sym(X, Y)
            + pv.b1 * radial(X, Y)
            + 2 * (pv.d.a1 * t.g(X, Y) + pv.d.b1 * t.gU(X) * t.gU(Y)) * nzu
        )

    return t.blocks(hh, hv, vv)


def lie_iota(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, P: EndoSection) -> LieValue:
    geo = local_geometry(model, p)
    t = _Pointwise(spec, geo)
    pv, u = t.pv, t.u
    D = endo_derivative(geo, P)
    Pm = endo_vertical(geo, P)
    pu = P.value(p.x, p.u) @ u
    puu = t.gU(pu)

    def hh(X, Y):
        return (
            pv.a2 * (t.g(D @ X, Y) + t.g(D @ Y, X) + 2 * t.L(X, Y, pu))
            + pv.b2 * (t.gU(X) * t.gU(D @ Y) + t.gU(Y) * t.gU(D @ X))
            + 2 * pv.d.Bh * t.gU(X) * t.gU(Y) * puu
            + 2 * pv.d.A * t.g(X, Y) * puu
            + 2 * pv.A * t.C(X, Y, pu)
            + pv.Bh * (t.g(X, pu) * t.gU(Y) + t.g(Y, pu) * t.gU(X))
        )

    def hv(X, Y):
        return (
            pv.a1 * (t.g(D @ X, Y) + t.L(X, Y, pu))
            + pv.b1 * t.gU(Y) * t.gU(D @ X)
            + 2 * pv.d.a2 * t.g(X, Y) * puu
            + pv.b2 * (t.gU(X) * (t.g(Y, pu) + t.gU(Pm @ Y)) + t.g(X, pu) * t.gU(Y))
            + pv.a2 * (2 * t.C(X, Y, pu) + t.g(Pm @ Y, X))
            + 2 * pv.d.b2 * t.gU(X) * t.gU(Y) * puu
        )

    def vv(X, Y):
        return (
            2 * pv.d.a1 * t.g(X, Y) * puu
            + 2 * pv.d.b1 * t.gU(X) * t.gU(Y) * puu
            + pv.a1 * (2 * t.C(X, Y, pu) + t.g(Pm @ X, Y) + t.g(Pm @ Y, X))
            + pv.b1 * ((t.g(X, pu) + t.gU(Pm @ X)) * t.gU(Y) + (t.g(Y, pu) + t.gU(Pm @ Y)) * t.gU(X))
        )

    return t.blocks(hh, hv, vv)


def lie_tau(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, P: EndoSection) -> LieValue:
    geo = local_geometry(model, p)
    t = _Pointwise(spec, geo)
    pv, u = t.pv, t.u
    D = endo_derivative(geo, P)
    Pm = endo_vertical(geo, P)
    pu = P.value(p.x, p.u) @ u

    def hh(X, Y):
        return (
            pv.A * (t.g(D @ X, Y) + t.g(D @ Y, X))
            + pv.Bh * (t.gU(D @ X) * t.gU(Y) + t.gU(D @ Y) * t.gU(X))
            - pv.a2 * (t.R4(X, u, pu, Y) + t.R4(Y, u, pu, X) - 2 * t.C(X, t.RU(u, pu), Y))
        )

    def hv(X, Y):
        return (
            pv.a2 * (t.g(D @ X, Y) - t.L(X, Y, pu))
            + pv.b2 * t.gU(D @ X) * t.gU(Y)
            + pv.a1 * (t.R4(u, Y, pu, X) + t.B(Y, pu, u, X) - t.B(X, Y, u, pu) - t.B(X, pu, u, Y))
            + pv.A * t.g(X, Pm @ Y)
            + pv.Bh * t.gU(Pm @ Y) * t.gU(X)
        )

    def vv(X, Y):
        return (
            pv.a2 * (t.g(Pm @ X, Y) + t.g(X, Pm @ Y))
            - 2 * pv.a1 * t.L(X, Y, pu)
            + pv.b2 * (t.gU(Pm @ X) * t.gU(Y) + t.gU(Pm @ Y) * t.gU(X))
        )

    return t.blocks(hh, hv, vv)


# ---------------------------------------------------------------------------
# verdict machinery
# ---------------------------------------------------------------------------


def default_samples(model: FinslerModel, count: int = 40, seed: int = 0) -> list[BundlePoint]:
    return sample_points(model, count, np.random.default_rng(seed))


class _Tracker:
    """Running max of each residual with the point where it was attained."""

    def __init__(self):
        self.res: dict[str, float] = {}
        self.where: dict[str, BundlePoint] = {}

    def add(self, name: str, value: float, p: BundlePoint) -> None:
        value = float(value)
        if name not in self.res or value > self.res[name]:
            self.res[name] = value
            self.where[name] = p

    def worst(self, keys=None) -> tuple[str | None, BundlePoint | None]:
        keys = [k for k in (keys or self.res) if k in self.res]
        if not keys:
            return None, None
        k = max(keys, key=lambda name: self.res[name])
        return k, self.where[k]

    def passed(self, keys, tol: float) -> bool:
        return all(self.res.get(k, 0.0) < tol for k in keys)


def _bilinear(fn, n: int) -> np.ndarray:
    E = np.eye(n)
    return np.array([[fn(E[i], E[j]) for j in range(n)] for i in range(n)])


def _metric_lifted(spec: FNaturalSpec, geo: LocalGeometry) -> LieValue:
    return LieValue(*lifted_blocks(spec.at(geo.r2, 0), geo.g, geo.u))


def _gap(lie: LieValue, G: LieValue, theta: float) -> float:
    return float(np.max(np.abs(lie.full - 2 * theta * G.full)))


def _classify_theta(thetas: Sequence[float], tol: float) -> tuple[str, float | None]:
    th = np.asarray(thetas, dtype=float)
    if th.size == 0 or np.max(np.abs(th)) < tol:
        return "killing", None
    if np.max(th) - np.min(th) < tol:
        return "homothetic", float(np.mean(th))
    return "conformal", None


def _finish(
    tracker: _Tracker,
    decide: Sequence[str],
    tol: float,
    thetas: Sequence[float],
    theta_fn=None,
    details: dict | None = None,
    allow_proper: bool = True,
) -> ConformalVerdict:
    details = dict(details or {})
    details["decisive"] = list(decide)
    if not tracker.passed(decide, tol):
        _, wp = tracker.worst(decide)
        return ConformalVerdict("none", dict(tracker.res), wp, details=details)
    kind, th0 = _classify_theta(thetas, tol)
    if kind != "killing" and not allow_proper:
        _, wp = tracker.worst(decide)
        details["theta_max"] = float(np.max(np.abs(thetas)))
        return ConformalVerdict("none", dict(tracker.res), wp, details=details)
    _, wp = tracker.worst(decide)
    if kind == "homothetic":
        return ConformalVerdict(kind, dict(tracker.res), wp, theta0=th0, theta=theta_fn, details=details)
    if kind == "conformal":
        return ConformalVerdict(kind, dict(tracker.res), wp, theta=theta_fn, details=details)
    return ConformalVerdict(kind, dict(tracker.res), wp, theta0=0.0, details=details)


def _require_kk(spec: FNaturalSpec) -> None:
    if not spec.is_kk_type:
        raise NotKKType(f"{spec.name}: alpha2 and beta2 must vanish")


def _samples(model, samples):
    return default_samples(model) if samples is None else list(samples)


# ---------------------------------------------------------------------------
# horizontal lifts
# ---------------------------------------------------------------------------


def verdict_horizontal(
    spec: FNaturalSpec, model: FinslerModel, xi: VectorFieldOnM, samples=None, tol: float = CONDITION_TOL
) -> ConformalVerdict:
    """Killing test for xi^h under a Kaluza-Klein type metric (conformal forces Killing).

    (i)   g(nabla_{X^h} xi, Y) + g(nabla_{Y^h} xi, X) = 0
    (ii)  g(R(xi, X) U, Y) = 0, the hv block of the Lie derivative
    (iii) L(xi, ., .) = 0
    """
    _require_kk(spec)
    tr = _Tracker()
    for p in _samples(model, samples):
        geo = local_geometry(model, p)
        D = covariant_jacobian(geo, xi)
        x = xi.value(p.x)
        gD = geo.g @ D  # [Y, X] = g(nabla_X xi, Y)
        tr.add("i", np.max(np.abs(gD + gD.T)), p)
        tr.add("ii", np.max(np.abs(np.einsum("ijkl,i,k->jl", geo.Rm, x, geo.u))), p)
        tr.add("iii", np.max(np.abs(np.einsum("ijk,i->jk", geo.Llow, x))), p)
        tr.add("lie", lie_horizontal(spec, model, p, xi).max_abs(), p)
    return _finish(tr, ["i", "ii", "iii", "lie"], tol, [0.0])


# ---------------------------------------------------------------------------
# vertical lifts
# ---------------------------------------------------------------------------


def vertical_theta(spec: FNaturalSpec, model: FinslerModel, xi: VectorFieldOnM) -> Callable[[BundlePoint], float]:
    """theta = (alpha1'/alpha1)(r^2) g(xi, U)."""

    def theta(p: BundlePoint) -> float:
        geo = local_geometry(model, p)
        pv = spec.at(geo.r2, 1)
        return pv.d.a1 / pv.a1 * float(xi.value(p.x) @ geo.g @ geo.u)

    return theta


def verdict_vertical(
    spec: FNaturalSpec, model: FinslerModel, xi: VectorFieldOnM, samples=None, tol: float = CONDITION_TOL
) -> ConformalVerdict:
    """Conformal test for xi^v under a Kaluza-Klein type metric.

    (i)   beta1 = 0 and alpha1 + alpha3 = lambda alpha1 for a constant lambda
    (ii)  C(xi, ., .) = 0
    (iii) g(nabla_{X^h} xi, Y) + L(X, Y, xi) = 0
    (iv)  the Berwald combination 2B(X,Y,U,xi) - B(X,xi,Y,U) - B(Y,xi,X,U); it
          does not enter the Lie derivative and is reported only.
    """
    _require_kk(spec)
    pts = _samples(model, samples)
    theta = vertical_theta(spec, model, xi)
    tr = _Tracker()
    ratios, thetas = [], []
    for p in pts:
        geo = local_geometry(model, p)
        pv = spec.at(geo.r2, 1)
        ratios.append((geo.r2, pv.a1, pv.A, pv.b1, p))
        x = xi.value(p.x)
        D = covariant_jacobian(geo, xi)
        tr.add("ii", np.max(np.abs(np.einsum("ijk,i->jk", geo.C, x))), p)
        tr.add("iii", np.max(np.abs((geo.g @ D).T + np.einsum("ijk,k->ij", geo.Llow, x))), p)
        u = geo.u
        tr.add(
            "iv",
            np.max(
                np.abs(
                    2 * np.einsum("abcd,c,d->ab", geo.B, u, x)
                    - np.einsum("acbd,c,d->ab", geo.B, x, u)
                    - np.einsum("bcad,c,d->ab", geo.B, x, u)
                )
            ),
            p,
        )
        th = theta(p)
        thetas.append(th)
        tr.add("lie", _gap(lie_vertical(spec, model, p, xi), _metric_lifted(spec, geo), th), p)
    a1 = np.array([r[1] for r in ratios])
    A = np.array([r[2] for r in ratios])
    lam = float(a1 @ A / (a1 @ a1))
    for (_, a, Av, b1, p) in ratios:
        tr.add("i", max(abs(b1), abs(Av - lam * a)), p)
    return _finish(tr, ["i", "ii", "iii", "lie"], tol, thetas, theta, {"lambda": lam})


# ---------------------------------------------------------------------------
# complete lifts
# ---------------------------------------------------------------------------


def complete_theta(model: FinslerModel, xi: VectorFieldOnM) -> Callable[[BundlePoint], float]:
    """theta = g(nabla_zeta xi, U) / r^2."""

    def theta(p: BundlePoint) -> float:
        geo = local_geometry(model, p)
        nz = covariant_jacobian(geo, xi) @ geo.u
        return float(nz @ geo.g @ geo.u) / geo.r2

    return theta


def _complete_conditions(tr: _Tracker, geo: LocalGeometry, xi: VectorFieldOnM, theta: float, p: BundlePoint):
    """Residuals shared by the Sasaki and Cheeger-Gromoll engines."""
    u, g = geo.u, geo.g
    D = covariant_jacobian(geo, xi)
    H = covariant_hessian(geo, xi)
    x = xi.value(p.x)
    nz = D @ u
    gD = g @ D
    sym = gD + gD.T + 2 * np.einsum("ijk,k->ij", geo.C, nz)
    tr.add("conformal_base", np.max(np.abs(sym - 2 * theta * g)), p)
    h2 = np.einsum("kab,a->kb", H, u)  # [k, X]
    Bc = geo.B
    hvp = (
        np.einsum("ijkl,i,k->lj", geo.Rm, u, x)  # R(U, Y, xi, X) as [X, Y]
        + np.einsum("ybux,b,u->xy", Bc, x, u)
        - np.einsum("xyuc,u,c->xy", Bc, u, x)
        - np.einsum("xbuy,b,u->xy", Bc, x, u)
        + np.einsum("xyk,k->xy", geo.Llow, nz)
        + (g @ h2).T
    )
    tr.add("hv", np.max(np.abs(hvp)), p)
    tr.add("L_xi", np.max(np.abs(np.einsum("ijk,i->jk", geo.Llow, x))), p)
    tr.add(
        "berwald_nz",
        np.max(
            np.abs(
                2 * np.einsum("abcd,c,d->ab", Bc, u, nz)
                - np.einsum("acbd,c,d->ab", Bc, nz, u)
                - np.einsum("bcad,c,d->ab", Bc, nz, u)
            )
        ),
        p,
    )
    return D, h2, nz


def verdict_complete_sasaki(
    model: FinslerModel, xi: VectorFieldOnM, samples=None, tol: float = CONDITION_TOL
) -> ConformalVerdict:
    """xi^c against the Sasaki metric.

    Decisive conditions: xi is conformal on the base with theta = g(nabla_zeta xi, U)/r^2
    (the symmetric form g(nabla_X xi, Y) + g(nabla_Y xi, X) + 2C(X, Y, nabla_zeta xi) equals
    2 theta g), and the hv block vanishes.  L(xi, ., .) and the Berwald combination in
    nabla_zeta xi are reported but do not enter the Lie derivative.
    """
    spec = sasaki()
    theta = complete_theta(model, xi)
    tr = _Tracker()
    thetas = []
    for p in _samples(model, samples):
        geo = local_geometry(model, p)
        if np.sqrt(geo.r2) < MIN_SPEED:
            continue
        th = theta(p)
        thetas.append(th)
        _complete_conditions(tr, geo, xi, th, p)
        tr.add("lie", _gap(lie_complete(spec, model, p, xi), _metric_lifted(spec, geo), th), p)
    return _finish(tr, ["conformal_base", "hv", "lie"], tol, thetas, theta)


def verdict_complete_cg(
    model: FinslerModel, xi: VectorFieldOnM, samples=None, tol: float = CONDITION_TOL
) -> ConformalVerdict:
    """xi^c against the Cheeger-Gromoll metric, conditions (i)-(vii) with theta from (i).

    (ii) base conformality, (iv) hv block without its radial part, (v) g(nabla^2 xi(zeta, X^h), U) = 0,
    (vi) the radial identity, (vii) [2/(1+r^2) g - 2/(r^2 (1+r^2)) g(., U) g(., U)] g(nabla_zeta xi, U) = 0.
    (iii) is the Berwald combination in nabla_zeta xi, reported only.
    """
    spec = cheeger_gromoll()
    theta = complete_theta(model, xi)
    tr = _Tracker()
    thetas = []
    for p in _samples(model, samples):
        geo = local_geometry(model, p)
        if np.sqrt(geo.r2) < MIN_SPEED:
            continue
        th = theta(p)
        thetas.append(th)
        D, h2, nz = _complete_conditions(tr, geo, xi, th, p)
        g, u, t = geo.g, geo.u, geo.r2
        w = g @ u
        nzu = float(w @ nz)
        tr.add("v", np.max(np.abs(w @ h2)), p)
        a = w @ D + g @ nz  # g(nabla_X xi, U) + g(X, nabla_zeta xi)
        vi = np.outer(a, w) + np.outer(w, a) - 4 / t * np.outer(w, w) * nzu
        tr.add("vi", np.max(np.abs(vi)), p)
        vii = (2 / (1 + t) * g - 2 / (t * (1 + t)) * np.outer(w, w)) * nzu
        tr.add("vii", np.max(np.abs(vii)), p)
        tr.add("lie", _gap(lie_complete(spec, model, p, xi), _metric_lifted(spec, geo), th), p)
    tr.res["iv"] = tr.res.pop("hv")
    tr.where["iv"] = tr.where.pop("hv")
    return _finish(tr, ["conformal_base", "iv", "v", "vi", "vii", "lie"], tol, thetas, theta)


# ---------------------------------------------------------------------------
# iota P
# ---------------------------------------------------------------------------


def verdict_iota(
    model: FinslerModel, P: EndoSection, metric: str = "sasaki", samples=None, tol: float = CONDITION_TOL
) -> ConformalVerdict:
    """iota P against the Sasaki or Cheeger-Gromoll metric (conformal forces Killing).

    (i)   P is g-skew
    (iii) g((nabla_{X^h} P)(U), Y) + L(X, Y, P(U)) = 0
    (iv)  C(P(U), ., .) = 0
    (ii), the Berwald combination in P(U), is reported only.
    """
    specs = {"sasaki": sasaki, "cheeger_gromoll": cheeger_gromoll}
    if metric not in specs:
        raise ValueError(f"metric must be one of {sorted(specs)}")
    spec = specs[metric]()
    tr = _Tracker()
    for p in _samples(model, samples):
        geo = local_geometry(model, p)
        g, u = geo.g, geo.u
        Pm = endo_vertical(geo, P)
        pu = P.value(p.x, p.u) @ u
        gP = g @ Pm  # [Y, X] = g(P X, Y)
        tr.add("i", np.max(np.abs(gP + gP.T)), p)
        D = endo_derivative(geo, P)
        tr.add("iii", np.max(np.abs((g @ D).T + np.einsum("ijk,k->ij", geo.Llow, pu))), p)
        tr.add("iv", np.max(np.abs(np.einsum("ijk,i->jk", geo.C, pu))), p)
        Bc = geo.B
        tr.add(
            "ii",
            np.max(
                np.abs(
                    2 * np.einsum("abcd,c,d->ab", Bc, u, pu)
                    - np.einsum("acbd,c,d->ab", Bc, pu, u)
                    - np.einsum("bcad,c,d->ab", Bc, pu, u)
                )
            ),
            p,
        )
        tr.add("lie", lie_iota(spec, model, p, P).max_abs(), p)
    return _finish(tr, ["i", "iii", "iv", "lie"], tol, [0.0])


# ---------------------------------------------------------------------------
# Liouville field
# ---------------------------------------------------------------------------

# Power of t multiplying lambda in each profile of the conformal family:
# a1 = c lambda, a2 = c sqrt(t) lambda, a1 + a3 = c t lambda,
# b1 = c lambda / t, b2 = c lambda / sqrt(t), b1 + b3 = c lambda.
LIOUVILLE_POWERS = {"a1": 0.0, "a2": 0.5, "A": 1.0, "b1": -1.0, "b2": -0.5, "Bh": 0.0}
LIOUVILLE_CONSTANTS = {"a1": "a1", "a2": "a2", "A": "a3", "b1": "b1", "b2": "b2", "Bh": "b3"}


@dataclass
class LiouvilleVerdict:
    """Classification of the Liouville field iota(I) for one spec.

    ``constants`` are the fitted a1..b3 of the conformal family, ``theta`` maps
    t = r^2 to the potential 1 + t lambda'(t)/lambda(t).
    """

    kind: str
    constants: dict[str, float]
    residuals: dict[str, float]
    lam_source: str
    theta0: float | None = None
    theta: Callable[[float], float] | None = None
    witness_t: float | None = None


def _liouville_lambda(spec: FNaturalSpec, ts: np.ndarray, tol: float) -> tuple[str, np.ndarray, np.ndarray]:
    vals = [spec.at(t, 1) for t in ts]
    a1 = np.array([v.a1 for v in vals])
    if np.min(np.abs(a1)) > tol:
        return "a1", a1, np.array([v.d.a1 for v in vals])
    a2 = np.array([v.a2 for v in vals])
    if np.min(np.abs(a2)) > tol:
        # lambda = a2 / sqrt(t)
        da2 = np.array([v.d.a2 for v in vals])
        lam = a2 / np.sqrt(ts)
        return "a2", lam, da2 / np.sqrt(ts) - 0.5 * a2 / ts**1.5
    raise DegenerateMetric("alpha1 and alpha2 both vanish somewhere on the samples")


def classify_liouville(
    spec: FNaturalSpec, t_samples: Sequence[float] | None = None, tol: float = LIOUVILLE_TOL
) -> LiouvilleVerdict:
    """Fit the spec to the conformal Liouville family and read off theta."""
    _require_kk(spec)
    ts = np.asarray(t_samples if t_samples is not None else np.geomspace(0.05, 20.0, 41), dtype=float)
    for t in ts:
        require_nondegenerate(spec.at(t, 0))
    source, lam, dlam = _liouville_lambda(spec, ts, tol)
    vals = [spec.at(t, 0) for t in ts]
    constants, residuals = {}, {}
    worst_t, worst = None, -1.0
    for prof, power in LIOUVILLE_POWERS.items():
        y = np.array([getattr(v, prof) for v in vals])
        basis = ts**power * lam
        c = float(basis @ y / (basis @ basis))
        err = np.abs(y - c * basis)
        constants[LIOUVILLE_CONSTANTS[prof]] = c
        residuals[prof] = float(np.max(err))
        if residuals[prof] > worst:
            worst, worst_t = residuals[prof], float(ts[int(np.argmax(err))])
    k = constants
    residuals["nondeg_a"] = -abs(k["a1"] * k["a3"] - k["a2"] ** 2)
    residuals["nondeg_b"] = -abs((k["a1"] + k["b1"]) * (k["a3"] + k["b3"]) - (k["a2"] + k["b2"]) ** 2)
    proportional = all(residuals[p] < tol for p in LIOUVILLE_POWERS)
    nondeg = residuals["nondeg_a"] < -tol and residuals["nondeg_b"] < -tol
    if not (proportional and nondeg):
        return LiouvilleVerdict("none", constants, residuals, source, witness_t=worst_t)

    def theta(t: float) -> float:
        s, lv, dv = _liouville_lambda(spec, np.array([float(t)]), 0.0)
        return float(1.0 + t * dv[0] / lv[0])

    th = 1.0 + ts * dlam / lam
    residuals["theta_spread"] = float(np.max(th) - np.min(th))
    if residuals["theta_spread"] < tol:
        th0 = float(np.mean(th))
        if abs(th0) < tol:
            return LiouvilleVerdict("killing", constants, residuals, source, theta0=0.0, theta=theta)
        return LiouvilleVerdict("homothetic", constants, residuals, source, theta0=th0, theta=theta)
    return LiouvilleVerdict("conformal", constants, residuals, source, theta=theta)


# ---------------------------------------------------------------------------
# geodesic field and tau P
# ---------------------------------------------------------------------------


def geodesic_system(pv: ProfileValues) -> dict:
    """Best theta for {theta F13 = 0, 2 theta phi2 = F13, theta phi1 = phi2} and its residual.

    The three equations are linear in theta, so the least-squares theta is
    explicit; a positive minimum residual certifies that no theta exists.
    """
    a = np.array([pv.F13, 2 * pv.f2, pv.f1])
    b = np.array([0.0, pv.F13, pv.f2])
    theta = float(a @ b / (a @ a)) if a @ a > 0 else 0.0
    res = a * theta - b
    k = int(np.argmax(np.abs(res)))
    names = ["theta*(phi1+phi3) = 0", "2*theta*phi2 = phi1+phi3", "theta*phi1 = phi2"]
    return {
        "t": pv.t,
        "phi1": pv.f1,
        "phi2": pv.f2,
        "phi1+phi3": pv.F13,
        "theta": theta,
        "residual": float(np.linalg.norm(res)),
        "violated": names[k],
        "violation": float(abs(res[k])),
    }


def geodesic_conformal_check(
    spec: FNaturalSpec,
    model: FinslerModel,
    samples=None,
    P: EndoSection | None = None,
    tol: float = CONDITION_TOL,
) -> ConformalVerdict:
    """The geodesic field zeta = tau(I) is never conformal; return the certificate.

    ``residuals['system']`` is the smallest residual of the three-equation system
    over the samples, ``residuals['direct']`` the smallest min_theta |L_zeta G - 2 theta G|.
    With ``P`` given and a Kaluza-Klein type spec, the tau P argument is run too:
    the hv block of L_{tau P} G at Y = U must vanish, which needs P(u) = 0.
    """
    pts = _samples(model, samples)
    ident = EndoSection.identity(model.n)
    best_sys, best_direct = None, None
    for p in pts:
        geo = local_geometry(model, p)
        if np.sqrt(geo.r2) < MIN_SPEED:
            continue
        pv = spec.at(geo.r2, 0)
        require_nondegenerate(pv)
        sysw = geodesic_system(pv)
        if best_sys is None or sysw["residual"] < best_sys[0]["residual"]:
            best_sys = (sysw, p)
        lie = lie_tau(spec, model, p, ident).full
        G = _metric_lifted(spec, geo).full
        th = float(np.sum(lie * G) / (2 * np.sum(G * G)))
        gap = float(np.max(np.abs(lie - 2 * th * G)))
        if best_direct is None or gap < best_direct[0]:
            best_direct = (gap, p, th)
    residuals = {"system": best_sys[0]["residual"], "direct": best_direct[0]}
    details = {"system": best_sys[0], "direct_theta": best_direct[2]}
    witness = best_sys[1]
    if P is not None:
        _require_kk(spec)
        worst = None
        for p in pts:
            geo = local_geometry(model, p)
            pu = endo_vertical(geo, P) @ geo.u
            val = float(np.max(np.abs(geo.g @ pu)))  # max_X |g(X, P(u))|
            hv = lie_tau(spec, model, p, P).hv
            # KK: G_hv = 0, so the hv block must vanish for any theta
            block = float(np.max(np.abs(hv)))
            if worst is None or val > worst[0]:
                worst = (val, p, block)
        residuals["tau_gPu"] = worst[0]
        residuals["tau_hv"] = worst[2]
        details["tau_witness"] = {"x": worst[1].x.tolist(), "u": worst[1].u.tolist()}
    return ConformalVerdict("none", residuals, witness, details=details)
