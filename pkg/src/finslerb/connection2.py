"""Levi-Civita connection of an F-natural metric and its consequences.

The connector tensors P_hh, Q_hh, P_hv, Q_hv, P_vv, Q_vv give the
Levi-Civita connection of G on lifts of base fields:

    nabla_{X^h} Y^h = h{nabla_{X^h} Y + P_hh(X, Y)} + v{Q_hh(X, Y)}
    nabla_{X^h} Y^v = h{P_hv(X, Y)} + v{nabla_{X^h} Y + Lbar(X, Y) + Q_hv(X, Y)}
    nabla_{X^v} Y^h = h{P_hv(Y, X)} + v{Q_hv(Y, X)}
    nabla_{X^v} Y^v = h{P_vv(X, Y)} + v{Q_vv(X, Y)}

Every closed form is cross-checked by :func:`koszul_oracle`, which solves for
the connection from the coordinate matrix of G alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import derivkit as dk
from .chern import LocalGeometry, bracket, horizontal_lift_jet, local_geometry, to_coordinates, to_lifted
from .errors import DegenerateMetric, SingularSystem
from .finsler import BundlePoint, FinslerModel
from .gnat import (
    FNaturalSpec,
    ProfileValues,
    default_t_samples,
    evaluate_G,
    metric_jet,
    require_nondegenerate,
)

CONNECTOR_NAMES = ("Phh", "Qhh", "Phv", "Qhv", "Pvv", "Qvv")


@dataclass(frozen=True)
class ConnectorValue:
    Phh: np.ndarray
    Qhh: np.ndarray
    Phv: np.ndarray
    Qhv: np.ndarray
    Pvv: np.ndarray
    Qvv: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {nm: getattr(self, nm) for nm in CONNECTOR_NAMES}


@dataclass(frozen=True)
class KoszulValue:
    """nabla_A B in the coordinate frame (``coords``) and in the lifted frame (``lifted``)."""

    coords: np.ndarray
    lifted: np.ndarray


def _solve_blocks(pv: ProfileValues, geo: LocalGeometry, th: np.ndarray, tv: np.ndarray):
    """Solve G(P^h + Q^v, Z^h) = th(Z), G(P^h + Q^v, Z^v) = tv(Z) for P, Q.

    Along U the system is the 2x2 block [[phi1+phi3, phi2], [phi2, phi1]] / phi,
    on the g-orthogonal complement it is [[a1+a3, a2], [a2, a1]] / alpha.
    """
    U = geo.u
    A, Bh, a1, a2, b1, b2 = pv.A, pv.Bh, pv.a1, pv.a2, pv.b1, pv.b2
    f1, f2, F13 = pv.f1, pv.f2, pv.F13
    thU, tvU = th @ U, tv @ U
    pU = (f1 * thU - f2 * tvU) / pv.phi
    qU = (F13 * tvU - f2 * thU) / pv.phi
    Th = geo.ginv @ th - (Bh * pU + b2 * qU) * U
    Tv = geo.ginv @ tv - (b2 * pU + b1 * qU) * U
    return (a1 * Th - a2 * Tv) / pv.alpha, (A * Tv - a2 * Th) / pv.alpha


def derived_connector_vectors(pv: ProfileValues, geo: LocalGeometry, s1, s2) -> ConnectorValue:
    """Connector vectors from the Koszul covectors of the lifted fields.

    The covectors are written with R, C and L only and then pushed through
    the explicit block inverse of G. This is an independent route to the
    same tensors as :func:`connector_vectors`.
    """
    X, Y = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    g, U = geo.g, geo.u
    w = g @ U
    wX, wY, gXY = w @ X, w @ Y, X @ g @ Y
    gX, gY = g @ X, g @ Y
    CXY = np.einsum("ijk,i,j->k", geo.C, X, Y)
    LXY = np.einsum("ijk,i,j->k", geo.Llow, X, Y)
    Rm = geo.Rm
    a1, a2, A, Bh, b1, b2 = pv.a1, pv.a2, pv.A, pv.Bh, pv.b1, pv.b2
    d = pv.d

    # nabla_{X^h} Y^h
    th = 0.5 * a2 * (
        -np.einsum("ijkl,i,j,k->l", Rm, X, Y, U)
        + np.einsum("ijkl,i,k,l->j", Rm, Y, U, X)
        - np.einsum("ijkl,j,k,l->i", Rm, X, U, Y)
    )
    tv = (
        -(d.A * gXY + d.Bh * wX * wY) * w
        - A * CXY
        - 0.5 * Bh * (wY * gX + wX * gY)
        - 0.5 * a1 * np.einsum("ijkl,i,j,k->l", Rm, X, Y, U)
        - a2 * LXY
    )
    Phh, Qhh = _solve_blocks(pv, geo, th, tv)

    # nabla_{X^h} Y^v
    th = (
        wY * (d.A * gX + d.Bh * wX * w)
        + A * CXY
        + 0.5 * Bh * (wX * gY + gXY * w)
        + a2 * LXY
        - 0.5 * a1 * np.einsum("ijkl,j,k,l->i", Rm, X, U, Y)
    )
    tv = (d.a2 - 0.5 * b2) * (wY * gX - gXY * w)
    Phv, Qhv = _solve_blocks(pv, geo, th, tv)
    Qhv = Qhv - geo.ginv @ LXY  # Q_hv is normalised on nabla_{X^v} Y^h

    # nabla_{X^v} Y^v
    th = (
        (d.a2 + 0.5 * b2) * (wX * gY + wY * gX)
        + 2 * d.b2 * wX * wY * w
        + 2 * a2 * CXY
        + b2 * gXY * w
        + a1 * LXY
    )
    tv = d.a1 * (wX * gY + wY * gX - gXY * w) + d.b1 * wX * wY * w + a1 * CXY + b1 * gXY * w
    Pvv, Qvv = _solve_blocks(pv, geo, th, tv)
    return ConnectorValue(Phh, Qhh, Phv, Qhv, Pvv, Qvv)


def connector_vectors(pv: ProfileValues, geo: LocalGeometry, s1, s2) -> ConnectorValue:
    """The six connector vectors P(s1, s2), Q(s1, s2) at one point."""
    a1, a2, a3, b1, b2, b3 = pv.a1, pv.a2, pv.a3, pv.b1, pv.b2, pv.b3
    A, Bh, f1, f2, F13 = pv.A, pv.Bh, pv.f1, pv.f2, pv.F13
    al, ph = pv.alpha, pv.phi
    a1p, a2p, Ap, Bhp, b1p, b2p = pv.d.a1, pv.d.a2, pv.d.A, pv.d.Bh, pv.d.b1, pv.d.b2
    s1, s2 = np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
    U = geo.u
    g12, g1u, g2u = geo.gdot(s1, s2), geo.gdot(s1, U), geo.gdot(s2, U)
    R1U2 = geo.curv(s1, U, s2)
    R2U1 = geo.curv(s2, U, s1)
    R12U = geo.curv(s1, s2, U)
    CbR1 = geo.cbar(s2, geo.curv(U, s1, U))  # Cbar(s2, R(U, s1) U)
    CbR2 = geo.cbar(s1, geo.curv(U, s2, U))  # Cbar(s1, R(U, s2) U)
    Bb, Cb, Lb = geo.bbar(s1, s2), geo.cbar(s1, s2), geo.lbar(s1, s2)
    Rs12 = geo.gdot(R1U2, U)  # R(s1, U, s2, U)
    Rs21 = geo.gdot(R2U1, U)  # R(s2, U, s1, U)
    sym = g2u * s1 + g1u * s2
    uu = g1u * g2u
    k = 1.0 / (al * ph)
    c2 = a2p - b2 / 2

    Phh = (
        -(a1 * a2) / (2 * al) * (R1U2 + R2U1 - 2 * Bb - 2 * CbR1 - 2 * CbR2)
        + a2 * Bh / (2 * al) * sym
        + k
        * (
            a2 * (a1 * (f1 * Bh - f2 * b2) + a2 * (b1 * a2 - b2 * a1)) * Rs12
            + f2 * al * Ap * g12
            + (al * f2 * Bhp + Bh * (a2 * (f2 * b2 - f1 * Bh) + A * (a1 * b2 - a2 * b1))) * uu
        )
        * U
        + a2 * A / al * Cb
        + a2**2 / al * Lb
    )
    Qhh = (
        a2**2 / al * (R1U2 - Bb - CbR1 - CbR2)
        - a1 * A / (2 * al) * R12U
        - A * Bh / (2 * al) * sym
        + k
        * (
            a2 * (a2 * (f2 * b2 - f1 * Bh) + A * (b2 * a1 - b1 * a2)) * Rs12
            - al * F13 * Ap * g12
            + (-al * F13 * Bhp + Bh * (A * (F13 * b1 - f2 * b2) + a2 * (a2 * Bh - A * b2))) * uu
        )
        * U
        - A**2 / al * Cb
        - a2 * A / al * Lb
    )
    Phv = (
        -(a1**2) / (2 * al) * (R2U1 - Bb - CbR2 - CbR1)
        + a1 * Bh / (2 * al) * g1u * s2
        + (a1 * Ap - a2 * c2) / al * g2u * s1
        + k
        * (
            a1 / 2 * (a2 * (a2 * b1 - a1 * b2) + a1 * (f1 * Bh - f2 * b2)) * Rs21
            + al * (f1 / 2 * Bh + f2 * c2) * g12
            + (
                al * f1 * Bhp
                + (a2 * (a1 * b2 - a2 * b1) + a1 * (f2 * b2 - Bh * f1)) * (Ap + Bh / 2)
                + (a2 * (b1 * F13 - b2 * f2) - a1 * (b2 * A - a2 * Bh)) * c2
            )
            * uu
        )
        * U
        + a1 * A / al * Cb
        + a1 * a2 / al * Lb
    )
    Qhv = (
        (1 / al)
        * (
            a1 * a2 / 2 * (R2U1 - Bb - CbR2 - CbR1)
            - a2 * Bh / 2 * g1u * s2
            + (-a2 * Ap + A * c2) * g2u * s1
        )
        + k
        * (
            a1 / 2 * (A * (a1 * b2 - a2 * b1) + a2 * (f2 * b2 - f1 * Bh)) * Rs12
            - al * (f2 / 2 * Bh + F13 * c2) * g12
            + (
                -al * f2 * Bhp
                + (A * (a2 * b1 - a1 * b2) + a2 * (f1 * Bh - f2 * b2)) * (Ap + Bh / 2)
                + (A * (b2 * f2 - b1 * F13) + a2 * (b2 * A - a2 * Bh)) * c2
            )
            * uu
        )
        * U
        - a2 * A / al * Cb
        - a1 * A / al * Lb
    )
    Pvv = (
        (a1 * (a2p + b2 / 2) - a2 * a1p) / al * sym
        + k
        * (
            al * (f1 * b2 - f2 * (b1 - a1p)) * g12
            + (
                al * (2 * f1 * b2p - f2 * b1p)
                + 2 * a1p * (a1 * (a2 * Bh - b2 * A) + a2 * (b1 * F13 - b2 * f2))
                + (2 * a2p + b2) * (a1 * (f2 * b2 - f1 * Bh) + a2 * (a1 * b2 - a2 * b1))
            )
            * uu
        )
        * U
        + a1 * a2 / al * Cb
        + a1**2 / al * Lb
    )
    Qvv = (
        (-a2 * (a2p + b2 / 2) + A * a1p) / al * sym
        + k
        * (
            al * (F13 * (b1 - a1p) - f2 * b2) * g12
            + (
                al * (F13 * b1p - 2 * f2 * b2p)
                + 2 * a1p * (a2 * (b2 * A - a2 * Bh) + A * (b2 * f2 - b1 * F13))
                + (2 * a2p + b2) * (a2 * (f1 * Bh - f2 * b2) + A * (a2 * b1 - a1 * b2))
            )
            * uu
        )
        * U
        + (al - a2**2) / al * Cb
        - a1 * a2 / al * Lb
    )
    return ConnectorValue(Phh, Qhh, Phv, Qhv, Pvv, Qvv)


def _profile_values(spec: FNaturalSpec, geo: LocalGeometry) -> ProfileValues:
    pv = spec.at(geo.r2, 2)
    require_nondegenerate(pv)
    return pv


def pq_tensors(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, s1, s2) -> ConnectorValue:
    geo = local_geometry(model, p)
    return connector_vectors(_profile_values(spec, geo), geo, s1, s2)


def pq_arrays(spec: FNaturalSpec, geo: LocalGeometry) -> dict[str, np.ndarray]:
    """All connectors on basis pairs: out[name][k, i, j] = name(e_i, e_j)^k."""
    pv = _profile_values(spec, geo)
    n = geo.n
    E = np.eye(n)
    out = {nm: np.zeros((n, n, n)) for nm in CONNECTOR_NAMES}
    for i in range(n):
        for j in range(n):
            cv = connector_vectors(pv, geo, E[i], E[j])
            for nm in CONNECTOR_NAMES:
                out[nm][:, i, j] = getattr(cv, nm)
    return out


def closed_form_connection(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint) -> np.ndarray:
    """nabla_{E_a} E_b in the lifted frame, as an array [c, a, b] of size 2n.

    E_a = delta_a for a < n and d/du^(a-n) otherwise (lifts of coordinate fields).
    """
    geo = local_geometry(model, p)
    T = pq_arrays(spec, geo)
    n = geo.n
    Gam = geo.Gamma
    out = np.zeros((2 * n, 2 * n, 2 * n))
    out[:n, :n, :n] = Gam + T["Phh"]
    out[n:, :n, :n] = T["Qhh"]
    out[:n, :n, n:] = T["Phv"]
    out[n:, :n, n:] = Gam + geo.L + T["Qhv"]
    out[:n, n:, :n] = np.einsum("kji->kij", T["Phv"])
    out[n:, n:, :n] = np.einsum("kji->kij", T["Qhv"])
    out[:n, n:, n:] = T["Pvv"]
    out[n:, n:, n:] = T["Qvv"]
    return out


# ---------------------------------------------------------------------------
# Koszul oracle
# ---------------------------------------------------------------------------


def _solve_christoffel(M: np.ndarray, dM: np.ndarray) -> np.ndarray:
    """Gamma[C, A, B] from M and dM[D, B, A] = d_A M_DB, via a checked linear solve."""
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularSystem(f"coordinate metric condition number {cond:.3g}")
    # Koszul with commuting coordinate fields: 2 G(nabla_A d_B, d_D) = d_A M_DB + d_B M_DA - d_D M_AB
    rhs = 0.5 * (dM + np.einsum("dab->dba", dM) - np.einsum("abd->dab", dM))
    m = M.shape[0]
    return np.linalg.solve(M, rhs.reshape(m, m * m)).reshape(m, m, m)


def coordinate_christoffel(
    spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, method: str = "jet"
) -> np.ndarray:
    """Christoffel symbols [C, A, B] of G in the coordinate frame of the bundle.

    ``method='jet'`` differentiates the coordinate matrix exactly; ``'fd'``
    uses central differences with one Richardson level.
    """
    geo = local_geometry(model, p)
    if method == "jet":
        Mj = metric_jet(spec, geo)
        M = Mj.value
        dM = Mj.jacobian().value  # [D, B, A]
    elif method == "fd":
        n = geo.n
        z0 = p.z
        M = evaluate_G(spec, model, p).M2n
        steps = dk.fd_steps(z0, 1, 1e-3)
        dM = np.empty(M.shape + (2 * n,))

        def Mat(z):
            return evaluate_G(spec, model, BundlePoint(z[:n], z[n:])).M2n

        for a in range(2 * n):
            e = np.zeros(2 * n)
            e[a] = steps[a]
            d1 = (Mat(z0 + e) - Mat(z0 - e)) / (2 * steps[a])
            d2 = (Mat(z0 + e / 2) - Mat(z0 - e / 2)) / steps[a]
            dM[..., a] = (4 * d2 - d1) / 3
    else:
        raise ValueError(f"unknown method {method!r}")
    return _solve_christoffel(M, dM)


def lifted_frame_jets(geo: LocalGeometry) -> list[dk.Jet]:
    """Coordinate components of the lifted frame fields delta_i, d/du^i as jets."""
    n = geo.n
    z = dk.Jet.variables(geo.p.z, 1)
    frames = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        frames.append(horizontal_lift_jet(geo, dk.Jet.constant(z.space, e)))
    for i in range(n):
        e = np.zeros(2 * n)
        e[n + i] = 1.0
        frames.append(dk.Jet.constant(z.space, e))
    return frames


def koszul_connection(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, method: str = "jet") -> np.ndarray:
    """Oracle counterpart of :func:`closed_form_connection`: [c, a, b] in the lifted frame."""
    geo = local_geometry(model, p)
    Gam = coordinate_christoffel(spec, model, p, method)
    frames = lifted_frame_jets(geo)
    n2 = 2 * geo.n
    out = np.zeros((n2, n2, n2))
    for a, Ea in enumerate(frames):
        for b, Eb in enumerate(frames):
            ea, eb = Ea.value, Eb.value
            v = Eb.jacobian().value @ ea + np.einsum("cad,a,d->c", Gam, ea, eb)
            out[:, a, b] = to_lifted(geo.N, v)
    return out


def koszul_oracle(
    spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, A: int, B: int, method: str = "jet"
) -> KoszulValue:
    """nabla_{E_A} E_B for lifted frame indices A, B."""
    geo = local_geometry(model, p)
    lifted = koszul_connection(spec, model, p, method)[:, A, B]
    return KoszulValue(to_coordinates(geo.N, lifted), lifted)


def connection_residuals(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, conn: np.ndarray) -> dict:
    """Metric-compatibility and torsion residuals of a lifted-frame connection array."""
    geo = local_geometry(model, p)
    frames = lifted_frame_jets(geo)
    F = dk.concatenate_axis([f.reshape(1, f.shape[0]) for f in frames], 0)
    Glift = dk.einsum("ai,ij,bj->ab", F, metric_jet(spec, geo), F)
    dG = Glift.jacobian().value  # [b, c, A]
    Gv = Glift.value
    n2 = 2 * geo.n
    compat = 0.0
    for a in range(n2):
        along = dG @ frames[a].value  # E_a(G(E_b, E_c))
        lhs = conn[:, a, :].T @ Gv + Gv @ conn[:, a, :]
        compat = max(compat, float(np.max(np.abs(along - lhs))))
    tors = 0.0
    for a in range(n2):
        for b in range(n2):
            br = to_lifted(geo.N, bracket(frames[a], frames[b]))
            tors = max(tors, float(np.max(np.abs(conn[:, a, b] - conn[:, b, a] - br))))
    return {"compat": compat, "torsion": tors}


# ---------------------------------------------------------------------------
# divergence of the geodesic field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceValue:
    trace: float
    density: float


def divergence_geodesic(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint) -> DivergenceValue:
    """div_G zeta by the connector trace and by the density formula.

    trace:   sum_i [P_hh(U, e_i) + Q_hv(U, e_i)]^i
    density: d_A zeta^A + zeta^A d_A log sqrt|det M|
    """
    geo = local_geometry(model, p)
    pv = _profile_values(spec, geo)
    n = geo.n
    E = np.eye(n)
    tr = 0.0
    for i in range(n):
        cv = connector_vectors(pv, geo, geo.u, E[i])
        tr += cv.Phh[i] + cv.Qhv[i]
    Mj = metric_jet(spec, geo)
    M, dM = Mj.value, Mj.jacobian().value
    z = dk.Jet.variables(p.z, 1)
    zeta = horizontal_lift_jet(geo, z[n:])
    div = np.trace(zeta.jacobian().value)
    dlogdet = 0.5 * np.einsum("ij,jiA->A", np.linalg.inv(M), dM)
    return DivergenceValue(float(tr), float(div + zeta.value @ dlogdet))


def geodesic_trace_vector(pv: ProfileValues, geo: LocalGeometry, X) -> np.ndarray:
    """The common value P_hh(U, X) = -Q_hv(U, X) in reduced form.

    (1/2alpha) {-a1 a2 R(X, U) U + a2 B r^2 X
                + [-a2 B + (2 alpha phi2 / phi)(A' + B + B' r^2)] g(X, U) U}
    with A = a1 + a3 and B = b1 + b3.
    """
    X = np.asarray(X, dtype=float)
    U, t = geo.u, geo.r2
    coef = -pv.a2 * pv.Bh + 2 * pv.alpha * pv.f2 / pv.phi * (pv.d.A + pv.Bh + pv.d.Bh * t)
    out = -pv.a1 * pv.a2 * geo.curv(X, U, U) + pv.a2 * pv.Bh * t * X + coef * geo.gdot(X, U) * U
    return out / (2 * pv.alpha)


def geodesic_trace_terms(spec: FNaturalSpec, model: FinslerModel, p: BundlePoint, X) -> tuple[np.ndarray, np.ndarray]:
    """(P_hh(U, X), Q_hv(U, X)); the two cancel for every X."""
    geo = local_geometry(model, p)
    cv = connector_vectors(_profile_values(spec, geo), geo, geo.u, X)
    return cv.Phh, cv.Qhv


# ---------------------------------------------------------------------------
# totally geodesic fibres
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberVerdict:
    kind: str  # totally_geodesic | violated
    witness: BundlePoint | None
    direct_residual: float
    landsberg_residual: float
    fit_residual: float
    c: float
    agree: bool


def fiber_fit(spec: FNaturalSpec, t_samples: Sequence[float]) -> tuple[float, float]:
    """Least-squares c for a2 = c (t a1' + a1)/sqrt|phi1|, b2 = c (b1 - a1')/sqrt|phi1|."""
    rows, rhs = [], []
    for t in t_samples:
        pv = spec.at(t, 1)
        s = np.sqrt(abs(pv.f1))
        rows += [(t * pv.d.a1 + pv.a1) / s, (pv.b1 - pv.d.a1) / s]
        rhs += [pv.a2, pv.b2]
    a, b = np.array(rows), np.array(rhs)
    c = float(a @ b / (a @ a)) if a @ a > 0 else 0.0
    return c, float(np.max(np.abs(a * c - b)))


def fiber_geodesic_check(
    spec: FNaturalSpec,
    model: FinslerModel,
    points: Sequence[BundlePoint],
    t_samples: Sequence[float] | None = None,
    rng: np.random.Generator | None = None,
    tol_direct: float = 1e-8,
    tol_cond: float = 1e-7,
) -> FiberVerdict:
    """Totally geodesic fibres: P_vv(X, X) = 0 versus the two closed conditions."""
    rng = rng or np.random.default_rng(0)
    direct, worst_p = 0.0, None
    lands, worst_l = 0.0, None
    radii = []
    for p in points:
        geo = local_geometry(model, p)
        pv = _profile_values(spec, geo)
        radii.append(geo.r2)
        for X in list(np.eye(geo.n)) + [rng.normal(size=geo.n) for _ in range(3)]:
            r = float(np.max(np.abs(connector_vectors(pv, geo, X, X).Pvv)))
            if r > direct:
                direct, worst_p = r, p
        if pv.a1 == 0:
            raise DegenerateMetric("a1 vanishes; the Landsberg condition is undefined")
        r = float(np.max(np.abs(geo.L + pv.a2 / pv.a1 * geo.Cbar)))
        if r > lands:
            lands, worst_l = r, p
    ts = np.concatenate([default_t_samples(32), radii]) if t_samples is None else np.asarray(t_samples)
    c, fit = fiber_fit(spec, ts)
    direct_ok = direct < tol_direct
    cond_ok = lands < tol_cond and fit < tol_cond
    kind = "totally_geodesic" if direct_ok else "violated"
    witness = None if direct_ok else worst_p
    if witness is None and not cond_ok:
        witness = worst_l or (points[0] if points else None)
    return FiberVerdict(kind, witness, direct, lands, fit, c, direct_ok == cond_ok)
