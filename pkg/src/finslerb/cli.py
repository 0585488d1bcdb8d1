"""Command line front end: config loading, verification suites and reports.

Usage::

    finslerb <suite> --config run.ini [--seed N] [--format json|text] [--out PATH]

Report schema (JSON)::

    {
      "environment": {"seed": int, "suite": str, "model": str, "metric": str,
                      "tolerances": {check_id: float}, "versions": {...}},
      "records": [
        {"id": str, "anchor": str, "samples": int, "residual": float | null,
         "tol": float | null, "verdict": "pass" | "fail" | "none",
         "result": str | null, "witness": {"x": [...], "u": [...]} | null}
      ],
      "summary": {"pass": int, "fail": int, "none": int}
    }

``verdict`` is pass/fail for residual checks and ``none`` for informational
classification records, whose outcome is in ``result``. The exit status is 1
iff some record failed, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, chern, connection2, gnat, symmetry
from .errors import FinslerError, NotKKType, ParseError, ValidationError
from .expr import Expression
from .fields import EndoSection, VectorFieldOnM
from .finsler import BundlePoint, FinslerModel, sample_points

SUITES = ("tensors", "axioms", "levi_civita", "incompressibility", "fibers", "symmetry", "liouville")
FAMILIES = ("euclidean", "riemannian", "randers", "custom")
PROFILE_KEYS = {
    "alpha1": "a1", "alpha2": "a2", "alpha3": "a3",
    "beta1": "b1", "beta2": "b2", "beta3": "b3",
    "a1": "a1", "a2": "a2", "a3": "a3", "b1": "b1", "b2": "b2", "b3": "b3",
}

DEFAULT_TOLS = {
    "tensors.symmetric": 1e-10,
    "tensors.homogeneity": 1e-9,
    "tensors.cartan_radial": 1e-9,
    "tensors.positive": 0.0,
    "axioms.compatibility": 1e-6,
    "axioms.torsion": 1e-6,
    "axioms.curvature_identities": 1e-6,
    "axioms.riemannian_reduction": 1e-8,
    "levi_civita.koszul": 1e-5,
    "levi_civita.compatibility": 1e-6,
    "incompressibility.trace": 1e-7,
    "incompressibility.density": 1e-7,
    "fibers.agreement": 0.0,
    "symmetry.oracle": 1e-5,
    "symmetry.geodesic": symmetry.CONDITION_TOL,
    "liouville.oracle": 1e-6,
}

ANCHORS = {
    "tensors": "is called the \\emph{fundamental tensor}",
    "tensors.cartan": "known as the \\emph{Cartan tensor}",
    "tensors.homogeneity": "positively 1-homogeneous",
    "axioms.compatibility": "almost compatibility with $g$",
    "axioms.torsion": "Torsion-free",
    "axioms.curvature_identities": "$g(\\mathcal{R}(\\sigma_1,\\sigma_2)\\mathcal{U},\\mathcal{U})=0$",
    "levi_civita": "Then the Levi-Civita connection",
    "incompressibility": "always incompressible with respect to $G$",
    "fibers": "are totally geodesic if and only if",
    "lie.horizontal": "The Lie derivative of $G$ along $\\xi ^{h}$",
    "lie.vertical": "The Lie derivative of $G$ along $\\xi ^{v}$",
    "lie.complete": "The Lie derivative of $G$ along $\\xi ^{c}$",
    "lie.iota": "The Lie derivative of $G$ along $\\iota P$",
    "lie.tau": "The Lie derivative of $G$ along $\\tau P$",
    "verdict.horizontal": "is a killing vector field",
    "verdict.vertical": "$C(\\xi ,.,.)=0$",
    "verdict.complete_sasaki": "$\\xi$ is a Killing vector field on $(M,F,g)$",
    "verdict.complete_cg": "$\\theta=\\frac{1}{r^2}g(\\nabla_\\zeta \\xi,\\mathcal{U})$",
    "verdict.iota": "$P$ is skew-symmetric with respect to $g$",
    "geodesic": "the geodesic vector field $\\zeta$ can not be a conformal vector field",
    "liouville": "which is everywhere non zero",
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    model: FinslerModel
    spec: gnat.FNaturalSpec
    vector_fields: dict[str, VectorFieldOnM] = field(default_factory=dict)
    endo_sections: dict[str, EndoSection] = field(default_factory=dict)
    seed: int = 0
    points: int = 20
    shells: tuple[float, ...] = (0.5, 2.0)
    extra_radii: int = 8
    box: float = 1.0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLS))
    format: str = "json"
    out: str | None = None
    source: str = ""

    @property
    def n(self) -> int:
        return self.model.n

    def rng(self, salt: int = 0) -> np.random.Generator:
        """PCG64 stream for one suite; ``salt`` separates suites."""
        return np.random.Generator(np.random.PCG64([self.seed, salt]))

    def samples(self, salt: int = 0, count: int | None = None) -> list[BundlePoint]:
        return sample_points(
            self.model, count or self.points, self.rng(salt), self.box, self.shells, self.extra_radii
        )


def _rows(text: str, key: str) -> list[list[str]]:
    """'a, b; c, d' -> [['a', 'b'], ['c', 'd']]."""
    rows = [[c.strip() for c in r.split(",")] for r in text.split(";") if r.strip()]
    if not rows or any(not c for r in rows for c in r):
        raise ValidationError(key, f"cannot read matrix/vector {text!r}")
    return rows


def _square(text: str, n: int, key: str) -> list[list[str]]:
    rows = _rows(text, key)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValidationError(key, f"expected a {n}x{n} matrix, got {text!r}")
    return rows


def _vector(text: str, n: int, key: str) -> list[str]:
    rows = _rows(text, key)
    if len(rows) != 1 or len(rows[0]) != n:
        raise ValidationError(key, f"expected {n} comma separated components, got {text!r}")
    return rows[0]


def _check_exprs(texts, variables, key: str) -> None:
    for t in texts:
        try:
            Expression(t, variables)
        except ParseError as exc:
            raise ValidationError(key, str(exc)) from None


def _int(sec, name: str, key: str, default=None) -> int:
    raw = sec.get(name) if sec is not None else None
    if raw is None:
        if default is None:
            raise ValidationError(key, "missing")
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(key, f"not an integer: {raw!r}") from None


def _float(raw: str, key: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise ValidationError(key, f"not a number: {raw!r}") from None
    if not math.isfinite(val):
        raise ValidationError(key, f"not finite: {raw!r}")
    return val


def _build_model(sec) -> FinslerModel:
    if sec is None:
        raise ValidationError("model", "missing section")
    family = sec.get("family", "").strip().lower()
    if family not in FAMILIES:
        raise ValidationError("model.family", f"unknown family {family!r}; expected one of {FAMILIES}")
    n = _int(sec, "dimension", "model.dimension")
    if n < 1:
        raise ValidationError("model.dimension", "must be positive")
    xs = [f"x{i + 1}" for i in range(n)]
    if family == "euclidean":
        return FinslerModel.euclidean(n)
    if family == "custom":
        text = sec.get("f2")
        if text is None:
            raise ValidationError("model.F2", "custom family needs an F2 expression")
        _check_exprs([text], xs + [f"u{i + 1}" for i in range(n)], "model.F2")
        return FinslerModel.custom(n, text)
    if "conformal" in sec and "a" in sec:
        raise ValidationError("model.a", "give either 'a' or 'conformal', not both")
    if "conformal" in sec:
        c = sec["conformal"].strip()
        _check_exprs([c], xs, "model.conformal")
        a = [[c if i == j else "0" for j in range(n)] for i in range(n)]
    else:
        a = _square(sec.get("a", ";".join(",".join("1" if i == j else "0" for j in range(n)) for i in range(n))), n, "model.a")
        _check_exprs([e for r in a for e in r], xs, "model.a")
    if family == "riemannian":
        return FinslerModel.riemannian(a, n)
    if "b" not in sec:
        raise ValidationError("model.b", "randers family needs a one-form b")
    b = _vector(sec["b"], n, "model.b")
    _check_exprs(b, xs, "model.b")
    return FinslerModel.randers(a, b, n)


def _build_spec(sec) -> gnat.FNaturalSpec:
    if sec is None:
        raise ValidationError("metric", "missing section")
    keys = {k.lower() for k in sec}
    profiles = {}
    for k in sorted(keys - {"preset"}):
        if k not in PROFILE_KEYS:
            raise ValidationError(f"metric.{k}", "unknown profile name")
        text = sec[k].strip()
        _check_exprs([text], ["t"], f"metric.{k}")
        profiles[PROFILE_KEYS[k]] = text
    if "preset" in keys:
        if profiles:
            raise ValidationError("metric.preset", "give either a preset or profile expressions")
        return gnat.preset(sec["preset"].strip())
    if not profiles:
        raise ValidationError("metric", "need a preset or at least one profile")
    return gnat.FNaturalSpec.from_profiles("custom", **profiles)


def _build_fields(sec, n: int):
    vfs, endos = {}, {}
    if sec is None:
        return vfs, endos
    xs = [f"x{i + 1}" for i in range(n)]
    for key in sec:
        kind, _, name = key.partition(".")
        path = f"fields.{key}"
        if not name:
            raise ValidationError(path, "field keys are 'xi.<name>' or 'P.<name>'")
        if kind == "xi":
            comps = _vector(sec[key], n, path)
            _check_exprs(comps, xs, path)
            vfs[name] = VectorFieldOnM.from_expressions(comps, name)
        elif kind == "P":
            rows = _square(sec[key], n, path)
            _check_exprs([e for r in rows for e in r], xs + [f"u{i + 1}" for i in range(n)], path)
            endos[name] = EndoSection.from_expressions(rows, name)
        else:
            raise ValidationError(path, f"unknown field kind {kind!r}")
    return vfs, endos


def load_config(path) -> RunConfig:
    """Read and validate an INI run configuration."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ParseError(f"malformed config {path}: {exc.message}") from None
    known = {"model", "metric", "fields", "sampling", "report"}
    for s in cp.sections():
        if s not in known:
            raise ValidationError(s, "unknown section")

    def section(name, lower=True):
        if not cp.has_section(name):
            return None
        return {(k.lower() if lower else k): v for k, v in cp[name].items()}

    model = _build_model(section("model"))
    spec = _build_spec(section("metric"))
    vfs, endos = _build_fields(section("fields", lower=False), model.n)
    cfg = RunConfig(model, spec, vfs, endos, source=str(path))
    s = section("sampling")
    if s is not None:
        cfg.seed = _int(s, "seed", "sampling.seed", 0)
        cfg.points = _int(s, "points", "sampling.points", cfg.points)
        cfg.extra_radii = _int(s, "extra_radii", "sampling.extra_radii", cfg.extra_radii)
        if cfg.points < 1:
            raise ValidationError("sampling.points", "must be positive")
        if "box" in s:
            cfg.box = _float(s["box"], "sampling.box")
        if "shells" in s:
            cfg.shells = tuple(_float(v.strip(), "sampling.shells") for v in s["shells"].split(","))
            if any(r <= 0 for r in cfg.shells):
                raise ValidationError("sampling.shells", "radii must be positive")
        for k, v in s.items():
            if k.startswith("tol."):
                check = k[4:]
                if check not in DEFAULT_TOLS:
                    raise ValidationError(f"sampling.{k}", "unknown check id")
                cfg.tolerances[check] = _float(v, f"sampling.{k}")
            elif k not in {"seed", "points", "extra_radii", "box", "shells"}:
                raise ValidationError(f"sampling.{k}", "unknown key")
    r = section("report")
    if r is not None:
        cfg.format = r.get("format", "json").strip()
        if cfg.format not in ("json", "text"):
            raise ValidationError("report.format", f"expected json or text, got {cfg.format!r}")
        cfg.out = r.get("out")
    return cfg


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class Record:
    id: str
    anchor: str
    samples: int
    residual: float | None
    tol: float | None
    verdict: str
    result: str | None = None
    witness: dict | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "samples": self.samples,
            "residual": self.residual,
            "tol": self.tol,
            "verdict": self.verdict,
            "result": self.result,
            "witness": self.witness,
        }


@dataclass
class Report:
    environment: dict
    records: list[Record] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(r.verdict == "fail" for r in self.records)

    def summary(self) -> dict:
        return {k: sum(r.verdict == k for r in self.records) for k in ("pass", "fail", "none")}

    def as_dict(self) -> dict:
        return {
            "environment": self.environment,
            "records": [r.as_dict() for r in self.records],
            "summary": self.summary(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        return cls(d["environment"], [Record(**r) for r in d["records"]])


def _witness(p: BundlePoint | None) -> dict | None:
    if p is None:
        return None
    return {"x": [float(v) for v in p.x], "u": [float(v) for v in p.u]}


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def emit_report(report: Report, fmt: str = "json") -> bytes:
    """Serialise with a fixed key order; JSON output round-trips byte for byte."""
    if fmt == "json":
        return (json.dumps(report.as_dict(), indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    env = report.environment
    lines = [f"finslerb report  suite={env.get('suite')}  seed={env.get('seed')}"]
    lines.append(f"model: {env.get('model')}   metric: {env.get('metric')}")
    for r in report.records:
        res = "-" if r.residual is None else f"{r.residual:.3e}"
        tol = "-" if r.tol is None else f"{r.tol:.1e}"
        extra = f"  [{r.result}]" if r.result else ""
        lines.append(f"{r.verdict.upper():5s} {r.id:45s} residual={res} tol={tol}{extra}")
        lines.append(f"      anchor: {r.anchor}")
        if r.witness is not None and (r.verdict == "fail" or (r.result or "").startswith("none")):
            lines.append(f"      witness: x={r.witness['x']} u={r.witness['u']}")
    s = report.summary()
    lines.append(f"summary: {s['pass']} pass, {s['fail']} fail, {s['none']} informational")
    return ("\n".join(lines) + "\n").encode("utf-8")


class _Max:
    """Running max with argmax; a deterministic ordered reduction."""

    def __init__(self):
        self.value, self.at, self.count = 0.0, None, 0

    def add(self, v: float, p: BundlePoint) -> None:
        self.count += 1
        v = float(v)
        if not math.isfinite(v):
            v = math.inf
        if self.at is None or v > self.value:
            self.value, self.at = v, p


class _Suite:
    def __init__(self, cfg: RunConfig, report: Report):
        self.cfg, self.report = cfg, report

    def check(self, cid: str, anchor: str, agg: _Max) -> None:
        tol = self.cfg.tolerances[cid.split(":")[0]]
        ok = agg.value <= tol if tol == 0.0 else agg.value < tol
        self.report.records.append(
            Record(cid, anchor, agg.count, _clean(agg.value), tol, "pass" if ok else "fail",
                   None, None if ok else _witness(agg.at))
        )

    def info(self, cid: str, anchor: str, result: str, samples: int, residual=None, witness=None) -> None:
        self.report.records.append(Record(cid, anchor, samples, _clean(residual), None, "none", result, _witness(witness)))

    def guarded(self, cid: str, anchor: str, fn: Callable[[], None]) -> None:
        """Run ``fn``; a module error becomes a failing record instead of aborting."""
        try:
            fn()
        except NotKKType as exc:
            self.info(cid, anchor, f"not applicable: {exc}", 0)
        except (FinslerError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            self.report.records.append(
                Record(cid, anchor, 0, None, None, "fail", f"error: {type(exc).__name__}: {exc}", None)
            )


# suites --------------------------------------------------------------------


def _suite_tensors(s: _Suite) -> None:
    cfg = s.cfg
    pts = cfg.samples(1)

    def run():
        sym, hom, rad, pos = _Max(), _Max(), _Max(), _Max()
        for p in pts:
            geo = chern.local_geometry(cfg.model, p)
            C = geo.C
            sym.add(max(np.abs(geo.g - geo.g.T).max(), np.abs(C - C.transpose(1, 0, 2)).max(),
                        np.abs(C - C.transpose(0, 2, 1)).max()), p)
            hom.add(abs(geo.gdot(geo.u, geo.u) - geo.r2), p)
            rad.add(np.abs(np.einsum("ijk,i->jk", C, geo.u)).max(), p)
            pos.add(max(0.0, -float(np.linalg.eigvalsh(geo.g).min())), p)
        s.check("tensors.symmetric", ANCHORS["tensors"], sym)
        s.check("tensors.homogeneity", ANCHORS["tensors.homogeneity"], hom)
        s.check("tensors.cartan_radial", ANCHORS["tensors.cartan"], rad)
        s.check("tensors.positive", ANCHORS["tensors"], pos)

    s.guarded("tensors", ANCHORS["tensors"], run)


def _suite_axioms(s: _Suite) -> None:
    cfg = s.cfg
    n = cfg.n
    pts = cfg.samples(2)
    rng = cfg.rng(102)

    def run():
        comp, tors, ident = _Max(), _Max(), _Max()
        for p in pts:
            s1, s2 = rng.normal(size=n), rng.normal(size=n)
            W = rng.normal(size=2 * n)
            c, t = chern.chern_axiom_residuals(cfg.model, p, s1, s2, W)
            comp.add(c, p)
            tors.add(t, p)
            geo = chern.local_geometry(cfg.model, p)
            vs = [rng.normal(size=n) for _ in range(4)]
            ident.add(max(chern.curvature_identity_residuals(geo, *vs).values()), p)
        s.check("axioms.compatibility", ANCHORS["axioms.compatibility"], comp)
        s.check("axioms.torsion", ANCHORS["axioms.torsion"], tors)
        s.check("axioms.curvature_identities", ANCHORS["axioms.curvature_identities"], ident)
        if cfg.model.family == "riemannian":
            red = _Max()
            for p in pts:
                red.add(max(chern.riemannian_reduction_residuals(cfg.model, p).values()), p)
            s.check("axioms.riemannian_reduction", ANCHORS["tensors.cartan"], red)

    s.guarded("axioms", ANCHORS["axioms.compatibility"], run)


def _suite_levi_civita(s: _Suite) -> None:
    cfg = s.cfg
    pts = cfg.samples(3)

    def run():
        dev, comp = _Max(), _Max()
        for p in pts:
            closed = connection2.closed_form_connection(cfg.spec, cfg.model, p)
            oracle = connection2.koszul_connection(cfg.spec, cfg.model, p)
            dev.add(np.abs(closed - oracle).max(), p)
            r = connection2.connection_residuals(cfg.spec, cfg.model, p, closed)
            comp.add(max(r.values()), p)
        s.check("levi_civita.koszul", ANCHORS["levi_civita"], dev)
        s.check("levi_civita.compatibility", ANCHORS["levi_civita"], comp)

    s.guarded("levi_civita", ANCHORS["levi_civita"], run)


def _suite_incompressibility(s: _Suite) -> None:
    cfg = s.cfg
    pts = cfg.samples(4)

    def run():
        tr, de = _Max(), _Max()
        for p in pts:
            d = connection2.divergence_geodesic(cfg.spec, cfg.model, p)
            tr.add(abs(d.trace), p)
            de.add(abs(d.density), p)
        s.check("incompressibility.trace", ANCHORS["incompressibility"], tr)
        s.check("incompressibility.density", ANCHORS["incompressibility"], de)

    s.guarded("incompressibility", ANCHORS["incompressibility"], run)


def _suite_fibers(s: _Suite) -> None:
    cfg = s.cfg
    pts = cfg.samples(5)

    def run():
        v = connection2.fiber_geodesic_check(cfg.spec, cfg.model, pts, rng=cfg.rng(105))
        s.info("fibers.verdict", ANCHORS["fibers"], v.kind, len(pts), v.direct_residual, v.witness)
        agg = _Max()
        agg.count = len(pts)
        agg.value, agg.at = (0.0 if v.agree else 1.0), v.witness
        s.check("fibers.agreement", ANCHORS["fibers"], agg)

    s.guarded("fibers", ANCHORS["fibers"], run)


def _kind_label(v) -> str:
    if v.kind == "homothetic":
        return f"homothetic({v.theta0:.12g})"
    return v.kind


def _suite_symmetry(s: _Suite) -> None:
    cfg = s.cfg
    spec, model = cfg.spec, cfg.model
    pts = cfg.samples(6)
    lifts = [
        ("horizontal", symmetry.lie_horizontal, symmetry.horizontal_lift_field),
        ("vertical", symmetry.lie_vertical, symmetry.vertical_lift_field),
        ("complete", symmetry.lie_complete, symmetry.complete_lift_field),
    ]
    for name, xi in sorted(cfg.vector_fields.items()):
        for lname, closed, lifted in lifts:
            cid = f"symmetry.oracle:{lname}:{name}"

            def run(closed=closed, lifted=lifted, cid=cid, lname=lname):
                agg = _Max()
                W = lifted(xi)
                for p in pts:
                    lv = closed(spec, model, p, xi)
                    agg.add(lv.deviation(symmetry.lie_numeric_oracle(spec, model, p, W)), p)
                s.check(cid, ANCHORS[f"lie.{lname}"], agg)

            s.guarded(cid, ANCHORS[f"lie.{lname}"], run)
        engines = [("horizontal", lambda: symmetry.verdict_horizontal(spec, model, xi, pts)),
                   ("vertical", lambda: symmetry.verdict_vertical(spec, model, xi, pts))]
        if spec.name == "sasaki":
            engines.append(("complete_sasaki", lambda: symmetry.verdict_complete_sasaki(model, xi, pts)))
        if spec.name == "cheeger_gromoll":
            engines.append(("complete_cg", lambda: symmetry.verdict_complete_cg(model, xi, pts)))
        for ename, eng in engines:
            cid = f"symmetry.verdict:{ename}:{name}"

            def run(eng=eng, cid=cid, ename=ename):
                v = eng()
                s.info(cid, ANCHORS[f"verdict.{ename}"], _kind_label(v), len(pts), v.worst[1], v.witness)

            s.guarded(cid, ANCHORS[f"verdict.{ename}"], run)
    for name, P in sorted(cfg.endo_sections.items()):
        for lname, closed, lifted in [("iota", symmetry.lie_iota, symmetry.iota_field),
                                      ("tau", symmetry.lie_tau, symmetry.tau_field)]:
            cid = f"symmetry.oracle:{lname}:{name}"

            def run(closed=closed, lifted=lifted, cid=cid, lname=lname):
                agg = _Max()
                W = lifted(P)
                for p in pts:
                    agg.add(closed(spec, model, p, P).deviation(symmetry.lie_numeric_oracle(spec, model, p, W)), p)
                s.check(cid, ANCHORS[f"lie.{lname}"], agg)

            s.guarded(cid, ANCHORS[f"lie.{lname}"], run)
        if spec.name in ("sasaki", "cheeger_gromoll"):
            cid = f"symmetry.verdict:iota:{name}"

            def run(P=P, cid=cid):
                v = symmetry.verdict_iota(model, P, spec.name, pts)
                s.info(cid, ANCHORS["verdict.iota"], _kind_label(v), len(pts), v.worst[1], v.witness)

            s.guarded(cid, ANCHORS["verdict.iota"], run)

    def geodesic():
        v = symmetry.geodesic_conformal_check(spec, model, pts)
        system = v.details["system"]
        s.info("symmetry.verdict:geodesic", ANCHORS["geodesic"], v.kind, len(pts), system["residual"], v.witness)
        # certificate: the smallest inconsistency must clearly exceed the tolerance
        tol = cfg.tolerances["symmetry.geodesic"]
        worst = min(v.residuals["system"], v.residuals["direct"])
        s.report.records.append(
            Record("symmetry.geodesic_certificate", ANCHORS["geodesic"], len(pts), _clean(worst), 10 * tol,
                   "pass" if worst > 10 * tol else "fail", system["violated"], _witness(v.witness))
        )

    s.guarded("symmetry.verdict:geodesic", ANCHORS["geodesic"], geodesic)


def _suite_liouville(s: _Suite) -> None:
    cfg = s.cfg
    spec, model = cfg.spec, cfg.model

    def run():
        v = symmetry.classify_liouville(spec)
        consts = ", ".join(f"{k}={v.constants[k]:.6g}" for k in ("a1", "a2", "a3", "b1", "b2", "b3"))
        worst = max(v.residuals[k] for k in symmetry.LIOUVILLE_POWERS)
        s.info("liouville.verdict", ANCHORS["liouville"], f"{_kind_label(v)}; lambda={v.lam_source}; {consts}",
               41, worst)
        if v.kind == "none":
            return
        # the closed-form theta must reproduce the Lie derivative of G along iota(I)
        pts = cfg.samples(7)
        ident = EndoSection.identity(model.n)
        agg = _Max()
        for p in pts:
            geo = chern.local_geometry(model, p)
            lie = symmetry.lie_iota(spec, model, p, ident)
            G = symmetry.LieValue.from_full(gnat.evaluate_G(spec, model, p).lifted)
            agg.add(np.abs(lie.full - 2 * v.theta(geo.r2) * G.full).max(), p)
        s.check("liouville.oracle", ANCHORS["liouville"], agg)

    s.guarded("liouville.verdict", ANCHORS["liouville"], run)


SUITE_FUNCS = {
    "tensors": _suite_tensors,
    "axioms": _suite_axioms,
    "levi_civita": _suite_levi_civita,
    "incompressibility": _suite_incompressibility,
    "fibers": _suite_fibers,
    "symmetry": _suite_symmetry,
    "liouville": _suite_liouville,
}


def _describe_model(m: FinslerModel) -> str:
    params = ", ".join(f"{k}={v}" for k, v in sorted(m.params.items()) if k != "box")
    return f"{m.family}(n={m.n}{', ' + params if params else ''})"


def run_suite(cfg: RunConfig, suite: str) -> Report:
    """Run one suite (or ``all``) and collect its records in a fixed order."""
    if suite != "all" and suite not in SUITE_FUNCS:
        raise ValidationError("suite", f"unknown suite {suite!r}")
    names = SUITES if suite == "all" else (suite,)
    env = {
        "seed": cfg.seed,
        "suite": suite,
        "model": _describe_model(cfg.model),
        "metric": cfg.spec.name + " " + json.dumps(cfg.spec.describe(), sort_keys=True),
        "sampling": {"points": cfg.points, "shells": list(cfg.shells), "extra_radii": cfg.extra_radii,
                     "box": cfg.box, "rng": "numpy PCG64 seeded with [seed, suite index]"},
        "tolerances": {},
        "versions": {"finslerb": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }
    report = Report(env)
    s = _Suite(cfg, report)
    for nm in names:
        SUITE_FUNCS[nm](s)
    env["tolerances"] = {k: cfg.tolerances[k] for k in sorted(cfg.tolerances)}
    return report


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="finslerb", description="Verification suites for F-natural metrics.")
    ap.add_argument("suite", choices=SUITES + ("all",))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--seed", type=int, default=None, help="override sampling.seed")
    ap.add_argument("--format", choices=("json", "text"), default=None)
    ap.add_argument("--out", default=None, help="write the report here instead of stdout")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ParseError, ValidationError) as exc:
        print(f"finslerb: config error: {exc}", file=sys.stderr)
        return 2
    except FinslerError as exc:
        print(f"finslerb: config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    fmt = args.format or cfg.format
    out = args.out or cfg.out
    report = run_suite(cfg, args.suite)
    data = emit_report(report, fmt)
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return 1 if report.failed else 0


if __name__ == "__main__":
    sys.exit(main())
