"""Chern connection and its curvature data for a Finsler model.

Construction (chart-local, all from one jet of F^2 in (x, u)):

    G^i       = 1/4 g^{il} (u^k d^2F^2/du^l dx^k - dF^2/dx^l)
    N^i_j     = dG^i/du^j
    delta_i   = d/dx^i - N^j_i d/du^j
    Gamma^l_jk = 1/2 g^{li} (delta_k g_ij + delta_j g_ik - delta_i g_jk)
    R^l_kij   = delta_i Gamma^l_jk - delta_j Gamma^l_ik
                + Gamma^l_is Gamma^s_jk - Gamma^l_js Gamma^s_ik

Array conventions used throughout the package:

* ``Gamma[k, i, j]`` is Gamma^k_ij, ``N[i, j]`` is N^i_j.
* ``R[l, k, i, j]`` is R^l_kij, so (R(s1, s2) s3)^l = R[l, k, i, j] s1^i s2^j s3^k.
* ``Rm[i, j, k, l]`` is the lowered curvature R(s1, s2, s3, s4) = g(R(s1, s2) s3, s4)
  with arguments in that order.
* ``L[k, i, j]`` is L^k_ij and ``Llow[i, j, k]`` is L_ijk.
* ``B[a, b, c, d]`` = B(s1, s2, s3, s4) and ``Bbar[m, a, b]`` its (1,2) companion.

Tangent vectors of the slit tangent bundle are 2n arrays either in the
coordinate frame {d/dx, d/du} or in the lifted frame {delta/dx, d/du};
:func:`to_coordinates` and :func:`to_lifted` convert between the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import derivkit as dk
from .fields import Section, VectorFieldOnM
from .finsler import DEFAULT_ORDER, BundlePoint, FinslerModel, metric_jets


@dataclass(frozen=True)
class ConnectionValue:
    spray: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray


@dataclass(frozen=True)
class CurvatureValue:
    R: np.ndarray
    Rlow: np.ndarray


@dataclass(frozen=True)
class LandsbergValue:
    Lup: np.ndarray
    Llow: np.ndarray


@dataclass(frozen=True)
class BerwaldValue:
    B: np.ndarray
    Bbar: np.ndarray


@dataclass
class LocalGeometry:
    """Every Chern-connection quantity at one bundle point.

    ``*_jet`` attributes are jets over z = (x, u) centred at the point and
    keep enough order for one further differentiation.
    """

    model: FinslerModel
    p: BundlePoint
    n: int
    r2: float
    g: np.ndarray
    ginv: np.ndarray
    C: np.ndarray
    Cbar: np.ndarray
    spray: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray
    dGamma: np.ndarray
    deltaGamma: np.ndarray
    R: np.ndarray
    Rm: np.ndarray
    L: np.ndarray
    Llow: np.ndarray
    B: np.ndarray
    Bbar: np.ndarray
    g_jet: dk.Jet
    N_jet: dk.Jet
    Gamma_jet: dk.Jet
    F2_jet: dk.Jet

    @property
    def u(self) -> np.ndarray:
        return self.p.u

    @property
    def x(self) -> np.ndarray:
        return self.p.x

    # small tensor helpers -----------------------------------------------
    def gdot(self, a, b) -> float:
        return float(a @ self.g @ b)

    def curv(self, s1, s2, s3) -> np.ndarray:
        """R(s1, s2) s3 as a vector."""
        return np.einsum("lkij,i,j,k->l", self.R, s1, s2, s3)

    def curv4(self, s1, s2, s3, s4) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.Rm, s1, s2, s3, s4))

    def cartan(self, a, b, c) -> float:
        return float(np.einsum("ijk,i,j,k->", self.C, a, b, c))

    def cbar(self, a, b) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.Cbar, a, b)

    def landsberg(self, a, b, c) -> float:
        return float(np.einsum("ijk,i,j,k->", self.Llow, a, b, c))

    def lbar(self, a, b) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.L, a, b)

    def berwald(self, a, b, c, d) -> float:
        return float(np.einsum("abcd,a,b,c,d->", self.B, a, b, c, d))

    def bbar(self, a, b) -> np.ndarray:
        return np.einsum("mab,a,b->m", self.Bbar, a, b)


def local_geometry(model: FinslerModel, p: BundlePoint, order: int = DEFAULT_ORDER) -> LocalGeometry:
    """Compute (and memoise on the model) the Chern data at ``p``."""
    if order < 4:
        raise ValueError("curvature needs jets of F^2 of order at least 4")
    return model.cached(("chern", p.key(), order), lambda: _build(model, p, order))


def _build(model: FinslerModel, p: BundlePoint, order: int) -> LocalGeometry:
    n = model.n
    mj = metric_jets(model, p, order)
    ginv, g = mj.ginv, mj.g
    z = dk.Jet.variables(p.z, order - 2)
    u = z[n:]
    hxu = mj.hess[n:, :n]  # [l, k] = d^2 F^2 / du^l dx^k
    dxF = mj.grad[:n]
    spray = 0.25 * dk.einsum("il,l->i", ginv, dk.einsum("lk,k->l", hxu, u) - dxF)
    N = spray.jacobian()[:, n:]
    dg = mj.dg
    D = dg[:, :, :n] - dk.einsum("mk,ijm->ijk", N, dg[:, :, n:])  # D[i,j,k] = delta_k g_ij
    S = D + dk.einsum("ikj->ijk", D) - dk.einsum("jki->ijk", D)
    Gamma = 0.5 * dk.einsum("li,ijk->ljk", ginv, S)

    Nv, Gv = N.value, Gamma.value
    dGam = Gamma.jacobian().value  # [l, j, k, A]
    dlt = dGam[..., :n] - np.einsum("mi,ljkm->ljki", Nv, dGam[..., n:])  # delta_i Gamma^l_jk
    R = (
        np.einsum("ljki->lkij", dlt)
        - np.einsum("likj->lkij", dlt)
        + np.einsum("lis,sjk->lkij", Gv, Gv)
        - np.einsum("ljs,sik->lkij", Gv, Gv)
    )
    gv, ginvv = g.value, ginv.value
    Rm = np.einsum("ml,lkij->ijkm", gv, R)
    uu = p.u
    L = np.einsum("l,klji->kij", uu, dGam[..., n:])  # L^k_ij = u^l dGamma^k_lj/du^i
    Llow = np.einsum("kl,lij->ijk", gv, L)
    C = 0.5 * dg.value[:, :, n:]
    Cbar = np.einsum("kl,lij->kij", ginvv, C)
    RU = np.einsum("lkcd,k->lcd", R, uu)  # (R(s3, s4) U)^l
    B = -np.einsum("abl,lcd->abcd", C, RU)
    Bbar = np.einsum("mc,abc->mab", ginvv, -np.einsum("abcd,d->abc", B, uu))
    return LocalGeometry(
        model=model,
        p=p,
        n=n,
        r2=float(mj.F2.value),
        g=gv,
        ginv=ginvv,
        C=C,
        Cbar=Cbar,
        spray=spray.value,
        N=Nv,
        Gamma=Gv,
        dGamma=dGam,
        deltaGamma=dlt,
        R=R,
        Rm=Rm,
        L=L,
        Llow=Llow,
        B=B,
        Bbar=Bbar,
        g_jet=g,
        N_jet=N,
        Gamma_jet=Gamma,
        F2_jet=mj.F2,
    )


# ---------------------------------------------------------------------------
# frames, lifts and brackets
# ---------------------------------------------------------------------------


def to_coordinates(N: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Lifted-frame components -> coordinate components (delta_i = d_i - N^k_i d/du^k)."""
    n = N.shape[0]
    return np.concatenate([w[:n], w[n:] - N @ w[:n]])


def to_lifted(N: np.ndarray, v: np.ndarray) -> np.ndarray:
    n = N.shape[0]
    return np.concatenate([v[:n], v[n:] + N @ v[:n]])


def frame_change(N: np.ndarray) -> np.ndarray:
    """Matrix S with lifted = S @ coordinates."""
    n = N.shape[0]
    S = np.eye(2 * n)
    S[n:, :n] = N
    return S


def z_variables(geo: LocalGeometry, order: int = 1) -> dk.Jet:
    return dk.Jet.variables(geo.p.z, order)


def horizontal_lift_jet(geo: LocalGeometry, X: dk.Jet) -> dk.Jet:
    """Coordinate components of h{X} as a jet, for a section jet X over z."""
    N = geo.N_jet.truncate(X.order)
    return dk.concatenate([X, -dk.einsum("ki,i->k", N, X)])


def vertical_lift_jet(X: dk.Jet) -> dk.Jet:
    return dk.concatenate([np.zeros(X.shape[0]), X])


def bracket(A: dk.Jet, B: dk.Jet) -> np.ndarray:
    """[A, B] at the jet centre from coordinate-component jets of order >= 1."""
    dA, dB = A.jacobian().value, B.jacobian().value
    return dB @ A.value - dA @ B.value


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def spray_and_connection(model: FinslerModel, p: BundlePoint) -> ConnectionValue:
    geo = local_geometry(model, p)
    return ConnectionValue(geo.spray.copy(), geo.N.copy(), geo.Gamma.copy())


def delta_jet(geo: LocalGeometry, f: dk.Jet) -> np.ndarray:
    """delta_i f at the point for a jet f over z; the new axis is last."""
    n = geo.n
    d = f.jacobian().value
    return d[..., :n] - np.einsum("ji,...j->...i", geo.N, d[..., n:])


def delta_derivative(model: FinslerModel, p: BundlePoint, field) -> np.ndarray:
    """delta f / delta x^i for a field ``field(x, u)`` (scalar or tensor valued)."""
    geo = local_geometry(model, p)
    z = z_variables(geo, 1)
    out = field(z[: geo.n], z[geo.n :])
    if not isinstance(out, dk.Jet):
        out = dk.asjet(out, z.space)
    return delta_jet(geo, out)


def hh_curvature(model: FinslerModel, p: BundlePoint, strategy: str = "jet") -> CurvatureValue:
    """hh-curvature R^l_kij; ``strategy='fd'`` differentiates Gamma numerically."""
    geo = local_geometry(model, p)
    if strategy == "jet":
        return CurvatureValue(geo.R.copy(), geo.Rm.copy())
    if strategy != "fd":
        raise ValueError(f"unknown curvature strategy {strategy!r}")
    n = geo.n
    z0 = p.z
    steps = dk.fd_steps(z0, 1, 1e-3)
    dGam = np.empty(geo.Gamma.shape + (2 * n,))

    def gam(z):
        q = BundlePoint(z[:n], z[n:])
        return local_geometry(model, q).Gamma

    for a in range(2 * n):
        e = np.zeros(2 * n)
        e[a] = steps[a]
        d1 = (gam(z0 + e) - gam(z0 - e)) / (2 * steps[a])
        d2 = (gam(z0 + e / 2) - gam(z0 - e / 2)) / steps[a]
        dGam[..., a] = (4 * d2 - d1) / 3
    dlt = dGam[..., :n] - np.einsum("mi,ljkm->ljki", geo.N, dGam[..., n:])
    G = geo.Gamma
    R = (
        np.einsum("ljki->lkij", dlt)
        - np.einsum("likj->lkij", dlt)
        + np.einsum("lis,sjk->lkij", G, G)
        - np.einsum("ljs,sik->lkij", G, G)
    )
    return CurvatureValue(R, np.einsum("ml,lkij->ijkm", geo.g, R))


def landsberg(model: FinslerModel, p: BundlePoint) -> LandsbergValue:
    geo = local_geometry(model, p)
    return LandsbergValue(geo.L.copy(), geo.Llow.copy())


def berwald(model: FinslerModel, p: BundlePoint) -> BerwaldValue:
    geo = local_geometry(model, p)
    return BerwaldValue(geo.B.copy(), geo.Bbar.copy())


def cov_section(geo: LocalGeometry, w: np.ndarray, s: dk.Jet) -> np.ndarray:
    """nabla_W s for a lifted-frame vector ``w`` and a section jet ``s`` over z."""
    n = geo.n
    d = s.jacobian().value  # [k, A]
    hor = delta_jet(geo, s) + np.einsum("kij,j->ki", geo.Gamma, s.value)
    return hor @ w[:n] + d[:, n:] @ w[n:]


def _section_jet(geo: LocalGeometry, s, order: int = 1) -> dk.Jet:
    z = z_variables(geo, order)
    if isinstance(s, (Section, VectorFieldOnM)):
        return s.on(z)
    if callable(s):
        return dk.asjet(list(s(z[: geo.n], z[geo.n :])), z.space)
    return dk.Jet.constant(z.space, np.asarray(s, dtype=float))


def covariant_derivative(model: FinslerModel, p: BundlePoint, kind: str, X, s) -> np.ndarray:
    """nabla_{X^h} s or nabla_{X^v} s for a base field X and a section s."""
    geo = local_geometry(model, p)
    Xv = X.value(p.x) if isinstance(X, VectorFieldOnM) else np.asarray(X, dtype=float)
    w = np.zeros(2 * geo.n)
    if kind == "h":
        w[: geo.n] = Xv
    elif kind == "v":
        w[geo.n :] = Xv
    else:
        raise ValueError("kind must be 'h' or 'v'")
    return cov_section(geo, w, _section_jet(geo, s))


def nabla_zeta(geo: LocalGeometry, xi: VectorFieldOnM) -> np.ndarray:
    """nabla_zeta xi, zeta = u^i delta_i."""
    w = np.concatenate([geo.u, np.zeros(geo.n)])
    return cov_section(geo, w, xi.on(z_variables(geo, 1)))


def second_covariant_derivative(
    model: FinslerModel, p: BundlePoint, xi: VectorFieldOnM, V: np.ndarray, W: np.ndarray
) -> np.ndarray:
    """nabla^2 xi(V, W) = nabla_W nabla_V xi - nabla_{h{nabla_W rho(V)}} xi.

    V and W are lifted-frame vectors, extended with constant lifted components.
    """
    geo = local_geometry(model, p)
    n = geo.n
    V, W = np.asarray(V, dtype=float), np.asarray(W, dtype=float)
    z = z_variables(geo, 2)
    xj = xi.on(z)  # order 2 over z
    dxi = xj.jacobian()[:, :n]  # [k, i] over z, order 1
    Gam = geo.Gamma_jet.truncate(1)
    s = dk.einsum("ki,i->k", dxi, V[:n]) + dk.einsum("kim,i,m->k", Gam, V[:n], xj.truncate(1))
    first = cov_section(geo, W, s)
    corr_dir = np.einsum("kji,j,i->k", geo.Gamma, W[:n], V[:n])
    nab = dxi.value + np.einsum("kjm,m->kj", geo.Gamma, xj.value)  # nabla_{delta_j} xi
    return first - nab @ corr_dir


def chern_axiom_residuals(model: FinslerModel, p: BundlePoint, s1, s2, W) -> tuple[float, float]:
    """Residuals of almost g-compatibility and of torsion-freeness.

    ``s1``, ``s2`` are constant-coefficient sections (vectors); ``W`` is a
    lifted-frame index (0..2n-1) or a lifted-frame vector. Torsion is tested
    between W and every lifted coordinate field.
    """
    geo = local_geometry(model, p)
    n = geo.n
    s1, s2 = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    if np.ndim(W) == 0:
        w = np.zeros(2 * n)
        w[int(W)] = 1.0
    else:
        w = np.asarray(W, dtype=float)
    z = z_variables(geo, 1)
    wc = to_coordinates(geo.N, w)
    gfun = dk.einsum("ij,i,j->", geo.g_jet.truncate(1), s1, s2)
    lhs = float(gfun.jacobian().value @ wc)
    const = lambda v: dk.Jet.constant(z.space, v)
    U = z[n:]
    nab1 = cov_section(geo, w, const(s1))
    nab2 = cov_section(geo, w, const(s2))
    nabU = cov_section(geo, w, U)
    compat = lhs - geo.gdot(nab1, s2) - geo.gdot(s1, nab2) - 2 * geo.cartan(s1, s2, nabU)

    def lifted_field(vec):
        """Coordinate jet of the field with constant lifted components ``vec``."""
        Nj = geo.N_jet.truncate(1)
        hx = dk.Jet.constant(z.space, vec[:n])
        return dk.concatenate([hx, dk.Jet.constant(z.space, vec[n:]) - dk.einsum("ki,i->k", Nj, hx)])

    def rho_cov(a, b):
        """nabla_a rho(b) for constant lifted fields a, b."""
        return cov_section(geo, a, const(b[:n]))

    tors = 0.0
    for A in range(2 * n):
        e = np.zeros(2 * n)
        e[A] = 1.0
        br = bracket(lifted_field(w), lifted_field(e))
        res = rho_cov(w, e) - rho_cov(e, w) - br[:n]
        tors = max(tors, float(np.max(np.abs(res))))
    return abs(compat), tors


# ---------------------------------------------------------------------------
# identity suites
# ---------------------------------------------------------------------------


def lift_derivative_residuals(model: FinslerModel, p: BundlePoint, X: VectorFieldOnM, Y: VectorFieldOnM) -> dict:
    """Covariant derivatives of lifts and of U against their closed values."""
    geo = local_geometry(model, p)
    n = geo.n
    z = z_variables(geo, 1)
    U = z[n:]
    Xv, Yv = X.value(p.x), Y.value(p.x)
    h = lambda v: np.concatenate([v, np.zeros(n)])
    vl = lambda v: np.concatenate([np.zeros(n), v])
    Yj, Xj = Y.on(z), X.on(z)
    nz = nabla_zeta(geo, X)
    Xc = h(Xv) + vl(nz)
    XY = Y.jacobian(p.x) @ Xv - X.jacobian(p.x) @ Yv  # [X, Y]
    out = {
        "1": np.abs(cov_section(geo, vl(Xv), Yj)).max(),
        "2": np.abs(cov_section(geo, h(Xv), U)).max(),
        "3": np.abs(cov_section(geo, vl(Xv), U) - Xv).max(),
        "4": np.abs(cov_section(geo, Xc, Yj) - cov_section(geo, h(Xv), Yj)).max(),
        "5": np.abs(cov_section(geo, Xc, U) - nz).max(),
        "6": np.abs(XY - (cov_section(geo, h(Xv), Yj) - cov_section(geo, h(Yv), Xj))).max(),
    }
    return {k: float(v) for k, v in out.items()}


def contraction_derivative_residuals(
    model: FinslerModel, p: BundlePoint, X: VectorFieldOnM, s1: Section, s2: Section, f=None
) -> dict:
    """Derivatives of g-contractions and of f(r^2) along X^h and X^v."""
    geo = local_geometry(model, p)
    n = geo.n
    z = z_variables(geo, 1)
    U = z[n:]
    g1 = geo.g_jet.truncate(1)
    F2 = geo.F2_jet.truncate(1)
    f = f or (lambda t: dk.exp(-t) if isinstance(t, dk.Jet) else np.exp(-t))
    fp = dk.taylor_jet(f, geo.r2, 1).partial((0,))
    Xv = X.value(p.x)
    wh = np.concatenate([Xv, np.zeros(n)])
    wv = np.concatenate([np.zeros(n), Xv])
    S1, S2 = s1.on(z), s2.on(z)
    Yb = Section.of_field(X)  # a base field for the "in particular" clause

    def along(w, fun):
        return float(fun.jacobian().value @ to_coordinates(geo.N, w))

    fr = f(F2)
    gs1U = dk.einsum("ij,i,j->", g1, S1, U)
    gs12 = dk.einsum("ij,i,j->", g1, S1, S2)
    nh1, nh2 = cov_section(geo, wh, S1), cov_section(geo, wh, S2)
    nv1, nv2 = cov_section(geo, wv, S1), cov_section(geo, wv, S2)
    Yj = Yb.on(z)
    gYY = dk.einsum("ij,i,j->", g1, Yj, Yj)
    out = {
        "1": along(wh, fr),
        "2": along(wv, fr) - 2 * fp * geo.gdot(Xv, geo.u),
        "3": along(wh, gs1U) - geo.gdot(nh1, geo.u),
        "4": along(wv, dk.einsum("ij,i,j->", g1, Yj, U)) - geo.gdot(Yj.value, Xv),
        "5": along(wh, gs12) - geo.gdot(nh1, S2.value) - geo.gdot(S1.value, nh2),
        "6": along(wv, gs12)
        - geo.gdot(nv1, S2.value)
        - geo.gdot(S1.value, nv2)
        - 2 * geo.cartan(Xv, S1.value, S2.value),
        "6b": along(wv, gYY) - 2 * geo.cartan(Xv, Yj.value, Yj.value),
    }
    return {k: abs(float(v)) for k, v in out.items()}


def lift_bracket_residuals(model: FinslerModel, p: BundlePoint, X: VectorFieldOnM, Y: VectorFieldOnM) -> dict:
    """Bracket identities of lifts, checked against coordinate brackets."""
    geo = local_geometry(model, p)
    n = geo.n
    z = z_variables(geo, 1)
    Xj, Yj = X.on(z), Y.on(z)
    Xh, Yh = horizontal_lift_jet(geo, Xj), horizontal_lift_jet(geo, Yj)
    Xv_, Yv_ = vertical_lift_jet(Xj), vertical_lift_jet(Yj)
    Xv, Yv = Xj.value, Yj.value
    XY = Y.jacobian(p.x) @ Xv - X.jacobian(p.x) @ Yv
    hl = lambda v: to_coordinates(geo.N, np.concatenate([v, np.zeros(n)]))
    vl = lambda v: np.concatenate([np.zeros(n), v])
    RU = geo.curv(Xv, Yv, geo.u)
    nabXY = cov_section(geo, np.concatenate([Xv, np.zeros(n)]), Yj)
    out = {
        "1": np.abs(bracket(Xh, Yh) - (hl(XY) - vl(RU))).max(),
        "2": np.abs(bracket(Xh, Yv_) - vl(nabXY + geo.lbar(Xv, Yv))).max(),
        "3": np.abs(bracket(Xv_, Yv_)).max(),
    }
    return {k: float(v) for k, v in out.items()}


def curvature_identity_residuals(geo: LocalGeometry, s1, s2, s3, s4) -> dict:
    """Curvature identities for vectors s1..s4 at the point of ``geo``.

    Item 3 is the skew identity g(R(s1,s2)s3,s4) + g(R(s1,s2)s4,s3)
    + 2 C(s3, s4, R(s1,s2)U) = 0. Item 5 is the pair-symmetry defect
    g(R(s1,s2)s3,s4) - g(R(s3,s4)s1,s2) = -(sum of six C-terms below).
    """
    U = geo.u
    R4, C = geo.curv4, geo.cartan
    RU = lambda a, b: geo.curv(a, b, U)
    i5_lhs = R4(s1, s2, s3, s4) - R4(s3, s4, s1, s2)
    i5_rhs = (
        C(s3, s4, RU(s1, s2))
        - C(s1, s2, RU(s3, s4))
        + C(s3, s2, RU(s4, s1))
        + C(s4, s1, RU(s3, s2))
        + C(s2, s4, RU(s1, s3))
        + C(s1, s3, RU(s2, s4))
    )
    out = {
        "1": geo.gdot(RU(s1, s2), U),
        "2": geo.gdot(geo.curv(U, s1, U), s2) - geo.gdot(geo.curv(U, s2, U), s1),
        "3": R4(s1, s2, s3, s4) + R4(s1, s2, s4, s3) + 2 * C(s3, s4, RU(s1, s2)),
        "4": np.abs(geo.curv(s1, s2, s3) + geo.curv(s2, s3, s1) + geo.curv(s3, s1, s2)).max(),
        "5": i5_lhs + i5_rhs,
    }
    return {k: abs(float(v)) for k, v in out.items()}


def riemannian_reduction_residuals(model: FinslerModel, p: BundlePoint) -> dict:
    """Compare the Chern data of a quadratic F^2 with Levi-Civita data of g(x).

    The Levi-Civita side is built from the u-Hessian of F^2 alone, without
    the spray, so it is an independent path.
    """
    geo = local_geometry(model, p)
    n = geo.n
    z = dk.Jet.variables(p.z, 4)
    g = 0.5 * model.F2_z(z).jacobian().jacobian()[n:, n:]  # order 2
    dg = g.jacobian()[:, :, :n]  # dg[i, j, k] = d_k g_ij, order 1
    ginv = dk.inv(g.truncate(1))
    S = dk.einsum("ilj->ijl", dg) + dk.einsum("jli->ijl", dg) - dg  # [i, j, l]
    lc = 0.5 * dk.einsum("ml,ijl->mij", ginv, S)  # Gamma^m_ij
    G, dG = lc.value, lc.jacobian().value[..., :n]
    R = (
        np.einsum("ljki->lkij", dG)
        - np.einsum("likj->lkij", dG)
        + np.einsum("lis,sjk->lkij", G, G)
        - np.einsum("ljs,sik->lkij", G, G)
    )
    return {
        "cartan": float(np.max(np.abs(geo.C))),
        "landsberg": float(np.max(np.abs(geo.L))),
        "christoffel": float(np.max(np.abs(geo.Gamma - G))),
        "riemann": float(np.max(np.abs(geo.R - R))),
    }
