"""F-natural metrics on the slit tangent bundle.

An F-natural metric is fixed by six radial profiles a1, a2, a3, b1, b2, b3
evaluated at t = r^2 = F^2:

    G(X^h, Y^h) = (a1 + a3) g(X, Y) + (b1 + b3) g(X, U) g(Y, U)
    G(X^h, Y^v) = a2 g(X, Y) + b2 g(X, U) g(Y, U)
    G(X^v, Y^v) = a1 g(X, Y) + b1 g(X, U) g(Y, U)

Derived functions: phi_i = a_i + t b_i, alpha = a1 (a1 + a3) - a2^2 and
phi = phi1 (phi1 + phi3) - phi2^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import derivkit as dk
from .chern import LocalGeometry, local_geometry
from .errors import DegenerateMetric, ProfileDomainError, ValidationError
from .expr import Expression
from .finsler import BundlePoint, FinslerModel

PROFILE_NAMES = ("a1", "a2", "a3", "b1", "b2", "b3")
DEGENERACY_TOL = 1e-10


def default_t_samples(count: int = 64) -> np.ndarray:
    return np.logspace(-3, 3, count)


class ScalarProfile:
    """A function of t > 0 with exact derivatives when built from an expression.

    ``fn`` must accept floats and jets. Opaque numeric profiles
    (``opaque=True``) are differentiated by finite differences instead.
    """

    def __init__(self, fn: Callable, label: str = "", opaque: bool = False, zero: bool = False):
        self._fn = fn
        self.label = label
        self.opaque = opaque
        self.is_zero = zero

    @classmethod
    def from_expression(cls, text) -> "ScalarProfile":
        e = Expression(str(text), ("t",))
        zero = e.is_constant and float(e(1.0)) == 0.0
        return cls(e, e.text, zero=zero)

    @classmethod
    def constant(cls, c: float) -> "ScalarProfile":
        c = float(c)
        return cls(lambda t: c + 0.0 * t, repr(c), zero=(c == 0.0))

    @classmethod
    def coerce(cls, obj) -> "ScalarProfile":
        if isinstance(obj, ScalarProfile):
            return obj
        if isinstance(obj, (int, float)):
            return cls.constant(obj)
        if isinstance(obj, str):
            return cls.from_expression(obj)
        if callable(obj):
            return cls(obj, getattr(obj, "__name__", "fn"))
        raise TypeError(f"cannot build a profile from {obj!r}")

    def __repr__(self) -> str:
        return f"ScalarProfile({self.label!r})"

    def _guard(self, t):
        if np.any(np.asarray(dk.value_of(t)) <= 0):
            raise ProfileDomainError(f"profile {self.label!r} evaluated at t <= 0")

    def __call__(self, t):
        self._guard(t)
        return self._fn(t)

    def derivs(self, t: float, k: int = 2) -> np.ndarray:
        """[f(t), f'(t), ..., f^(k)(t)]."""
        self._guard(t)
        if self.opaque:
            vals = [float(self._fn(t))]
            for j in range(1, k + 1):
                vals.append(dk.partial_fd(lambda s: self._fn(s), t, (0,) * j))
            return np.array(vals)
        jet = dk.taylor_jet(self._fn, float(t), k)
        return np.array([float(jet.partial((0,) * j)) for j in range(k + 1)])

    def d1(self, t: float) -> float:
        return float(self.derivs(t, 1)[1])

    def d2(self, t: float) -> float:
        return float(self.derivs(t, 2)[2])

    def compose(self, tj: dk.Jet) -> dk.Jet:
        """f(t(z)) as a jet, for a scalar jet ``tj``."""
        self._guard(tj)
        return dk._compose(tj, list(self.derivs(float(tj.value), tj.order)))


class ProfileValues:
    """Profiles and derived quantities at one t, with first and second derivatives.

    ``v.a1`` is the value, ``v.d.a1`` the first derivative and ``v.dd.a1`` the
    second. Derived names: A = a1 + a3, Bh = b1 + b3, f1, f2, f3 (phi_i),
    F13 = f1 + f3, alpha, phi.
    """

    def __init__(self, t: float, raw: dict[str, np.ndarray]):
        self.t = t
        k = len(next(iter(raw.values())))
        data = {name: np.asarray(raw[name], dtype=float) for name in PROFILE_NAMES}
        data["A"] = data["a1"] + data["a3"]
        data["Bh"] = data["b1"] + data["b3"]
        tser = np.zeros(k)
        tser[0] = t
        if k > 1:
            tser[1] = 1.0
        for i in (1, 2, 3):
            a, b = data[f"a{i}"], data[f"b{i}"]
            data[f"f{i}"] = a + _leibniz(tser, b)
        data["F13"] = data["f1"] + data["f3"]
        data["alpha"] = _leibniz(data["a1"], data["A"]) - _leibniz(data["a2"], data["a2"])
        data["phi"] = _leibniz(data["f1"], data["F13"]) - _leibniz(data["f2"], data["f2"])
        self._data = data
        self.d = _Deriv(data, 1)
        self.dd = _Deriv(data, 2)

    def __getattr__(self, name):
        data = self.__dict__.get("_data")
        if data is not None and name in data:
            return float(data[name][0])
        raise AttributeError(name)

    def series(self, name: str) -> np.ndarray:
        return self._data[name]


class _Deriv:
    def __init__(self, data, k):
        self._data, self._k = data, k

    def __getattr__(self, name):
        s = self._data[name]
        return float(s[self._k]) if len(s) > self._k else float("nan")


def _leibniz(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Derivative series of a product from the series of its factors."""
    from math import comb

    k = len(a)
    return np.array([sum(comb(m, j) * a[j] * b[m - j] for j in range(m + 1)) for m in range(k)])


@dataclass
class FNaturalSpec:
    a1: ScalarProfile
    a2: ScalarProfile
    a3: ScalarProfile
    b1: ScalarProfile
    b2: ScalarProfile
    b3: ScalarProfile
    name: str = "custom"

    def __post_init__(self):
        for nm in PROFILE_NAMES:
            setattr(self, nm, ScalarProfile.coerce(getattr(self, nm)))

    @classmethod
    def from_profiles(cls, name: str = "custom", **profiles) -> "FNaturalSpec":
        unknown = set(profiles) - set(PROFILE_NAMES)
        if unknown:
            raise ValidationError("metric", f"unknown profiles {sorted(unknown)}")
        return cls(**{nm: profiles.get(nm, 0.0) for nm in PROFILE_NAMES}, name=name)

    def profiles(self) -> dict[str, ScalarProfile]:
        return {nm: getattr(self, nm) for nm in PROFILE_NAMES}

    def at(self, t: float, k: int = 2) -> ProfileValues:
        return ProfileValues(float(t), {nm: getattr(self, nm).derivs(t, k) for nm in PROFILE_NAMES})

    @property
    def is_kk_type(self) -> bool:
        """a2 = b2 = 0, decided symbolically for expression profiles, else on samples."""
        return all(self._vanishes(getattr(self, nm)) for nm in ("a2", "b2"))

    @property
    def is_kaluza_klein(self) -> bool:
        if not self.is_kk_type:
            return False
        ts = default_t_samples(16)
        return all(abs(float(self.b1(t)) + float(self.b3(t))) < 1e-14 for t in ts)

    @staticmethod
    def _vanishes(prof: ScalarProfile) -> bool:
        if prof.is_zero:
            return True
        return all(abs(float(prof(t))) < 1e-14 for t in default_t_samples(16))

    def describe(self) -> dict[str, str]:
        return {nm: getattr(self, nm).label for nm in PROFILE_NAMES}


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def sasaki() -> FNaturalSpec:
    return FNaturalSpec.from_profiles("sasaki", a1=1.0)


def cheeger_gromoll() -> FNaturalSpec:
    return FNaturalSpec.from_profiles(
        "cheeger_gromoll", a1="1/(1+t)", a3="t/(1+t)", b1="1/(1+t)", b3="-1/(1+t)"
    )


def kaluza_klein(a1, a3, b1=0.0) -> FNaturalSpec:
    """a2 = b2 = 0 and b1 + b3 = 0."""
    b1p = ScalarProfile.coerce(b1)
    b3 = ScalarProfile(lambda t: -b1p._fn(t), f"-({b1p.label})", zero=b1p.is_zero)
    return FNaturalSpec.from_profiles("kaluza_klein", a1=a1, a3=a3, b1=b1p, b3=b3)


def kk_type(a1, a3, b1=0.0, b3=0.0) -> FNaturalSpec:
    return FNaturalSpec.from_profiles("kk_type", a1=a1, a3=a3, b1=b1, b3=b3)


PRESETS = {
    "sasaki": sasaki,
    "cheeger_gromoll": cheeger_gromoll,
    "kaluza_klein": kaluza_klein,
    "kk_type": kk_type,
}


def preset(name: str, *args, **kwargs) -> FNaturalSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValidationError("metric.preset", f"unknown preset {name!r}") from None
    return factory(*args, **kwargs)


def random_kk_spec(rng: np.random.Generator, kaluza_klein_only: bool = False) -> FNaturalSpec:
    """A random Riemannian Kaluza-Klein type spec built from expression strings.

    Profiles are c0 + c1 exp(-c2 t) or c0 + c1/(1 + c2 t) with positive
    leading terms so that a1, a1 + a3, phi1 and phi1 + phi3 stay positive.
    """

    def pos():
        c0, c1, c2 = rng.uniform(0.5, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(0.2, 1.5)
        if rng.random() < 0.5:
            return f"{c0:.4f} + {c1:.4f}*exp(-{c2:.4f}*t)"
        return f"{c0:.4f} + {c1:.4f}/(1 + {c2:.4f}*t)"

    def small():
        c0, c1 = rng.uniform(0.0, 0.4), rng.uniform(0.2, 2.0)
        return f"{c0:.4f}/(1 + {c1:.4f}*t)"

    a1 = pos()
    A = pos()
    a3 = f"({A}) - ({a1})"
    b1 = small()
    if kaluza_klein_only:
        return kaluza_klein(a1, a3, b1)
    b3 = f"({small()}) - ({b1})"
    return kk_type(a1, a3, b1, b3)


def random_spec(rng: np.random.Generator) -> FNaturalSpec:
    """A random general spec (a2, b2 nonzero), resampled until it is Riemannian."""
    while True:
        a1, A = rng.uniform(0.8, 1.5, 2)
        c = rng.uniform(0.2, 1.5, 4)
        a2 = rng.uniform(-0.4, 0.4)
        b1, b2, b3 = rng.uniform(0.0, 0.3), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.3)
        spec = FNaturalSpec.from_profiles(
            "random",
            a1=f"{a1:.4f} + 0.1*exp(-{c[0]:.4f}*t)",
            a2=f"{a2:.4f}/(1 + {c[1]:.4f}*t)",
            a3=f"{A - a1:.4f} + 0.05*sin({c[2]:.4f}*t)",
            b1=f"{b1:.4f}/(1 + t)",
            b2=f"{b2:.4f}*exp(-{c[3]:.4f}*t)",
            b3=f"{b3:.4f}/(1 + t*t)",
        )
        if classify_regularity(spec).kind == "riemannian":
            return spec


# ---------------------------------------------------------------------------
# metric evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BundleMetricValue:
    Ghh: np.ndarray
    Ghv: np.ndarray
    Gvv: np.ndarray
    M2n: np.ndarray

    @property
    def lifted(self) -> np.ndarray:
        """Full 2n x 2n matrix in the lifted frame."""
        return np.block([[self.Ghh, self.Ghv], [self.Ghv.T, self.Gvv]])


def lifted_blocks(pv: ProfileValues, g: np.ndarray, u: np.ndarray):
    gu = g @ u
    uu = np.outer(gu, gu)
    Ghh = pv.A * g + pv.Bh * uu
    Ghv = pv.a2 * g + pv.b2 * uu
    Gvv = pv.a1 * g + pv.b1 * uu
    return Ghh, Ghv, Gvv


def coordinate_matrix(Ghh, Ghv, Gvv, N):
    """Coordinate-frame matrix from lifted blocks, using d/dx^i = delta_i + N^k_i d/du^k."""
    if isinstance(N, dk.Jet) or isinstance(Ghh, dk.Jet):
        mm = lambda a, b: dk.einsum("ij,jk->ik", a, b)
        tr = lambda a: dk.einsum("ij->ji", a)
    else:
        mm, tr = (lambda a, b: a @ b), (lambda a: a.T)
    GN = mm(Ghv, N)
    Mxx = Ghh + GN + tr(GN) + mm(tr(N), mm(Gvv, N))
    Mxu = Ghv + mm(tr(N), Gvv)
    if isinstance(Mxx, dk.Jet):
        return dk.block([[Mxx, Mxu], [tr(Mxu), Gvv]])
    return np.block([[Mxx, Mxu], [Mxu.T, Gvv]])


def evaluate_G(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint) -> BundleMetricValue:
    geo = local_geometry(model, p)
    pv = spec.at(geo.r2, 0)
    Ghh, Ghv, Gvv = lifted_blocks(pv, geo.g, geo.u)
    return BundleMetricValue(Ghh, Ghv, Gvv, coordinate_matrix(Ghh, Ghv, Gvv, geo.N))


def metric_jet(spec: FNaturalSpec, geo: LocalGeometry) -> dk.Jet:
    """Coordinate matrix of G as an order-1 jet over z = (x, u)."""
    n = geo.n
    z = dk.Jet.variables(geo.p.z, 1)
    g = geo.g_jet.truncate(1)
    t = geo.F2_jet.truncate(1)
    u = z[n:]
    gu = dk.einsum("ij,j->i", g, u)
    uu = dk.einsum("i,j->ij", gu, gu)
    prof = {nm: getattr(spec, nm).compose(t) for nm in PROFILE_NAMES}
    Ghh = (prof["a1"] + prof["a3"]) * g + (prof["b1"] + prof["b3"]) * uu
    Ghv = prof["a2"] * g + prof["b2"] * uu
    Gvv = prof["a1"] * g + prof["b1"] * uu
    return coordinate_matrix(Ghh, Ghv, Gvv, geo.N_jet.truncate(1))


# ---------------------------------------------------------------------------
# regularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regularity:
    kind: str  # degenerate | pseudo_riemannian | riemannian
    witness_t: float | None
    reason: str = ""

    @property
    def nondegenerate(self) -> bool:
        return self.kind != "degenerate"


def classify_regularity(spec: FNaturalSpec, t_samples: Sequence[float] | None = None) -> Regularity:
    """Sample-based classification.

    Nondegenerate iff alpha and phi stay away from zero (and keep their sign)
    on the samples; Riemannian iff additionally a1, alpha, phi1, phi > 0.
    """
    ts = default_t_samples() if t_samples is None else np.asarray(t_samples, dtype=float)
    vals = [spec.at(t, 0) for t in ts]
    for key in ("alpha", "phi"):
        series = np.array([getattr(v, key) for v in vals])
        bad = np.flatnonzero(np.abs(series) <= DEGENERACY_TOL)
        if bad.size:
            return Regularity("degenerate", float(ts[bad[0]]), f"{key} vanishes")
        flips = np.flatnonzero(np.sign(series[1:]) != np.sign(series[:-1]))
        if flips.size:
            return Regularity("degenerate", float(ts[flips[0] + 1]), f"{key} changes sign")
    for v, t in zip(vals, ts):
        if not (v.a1 > 0 and v.alpha > 0 and v.f1 > 0 and v.phi > 0):
            return Regularity("pseudo_riemannian", float(t), "not positive definite")
    return Regularity("riemannian", None)


def require_nondegenerate(pv: ProfileValues) -> None:
    if abs(pv.alpha) < DEGENERACY_TOL or abs(pv.phi) < DEGENERACY_TOL:
        raise DegenerateMetric(f"alpha={pv.alpha:.3g}, phi={pv.phi:.3g} at t={pv.t:.6g}")


def determinant_consistency(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint) -> bool:
    """|det| of the row-equilibrated coordinate matrix agrees with the classification at r^2."""
    bm = evaluate_G(spec, model, p)
    M = bm.M2n
    scale = np.max(np.abs(M), axis=1)
    scale[scale == 0] = 1.0
    det = np.linalg.det(M / scale[:, None])
    r2 = local_geometry(model, p).r2
    nondeg = classify_regularity(spec, [r2]).nondegenerate
    return (abs(det) > 1e-10) == nondeg
