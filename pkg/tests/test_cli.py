import json
from pathlib import Path

import pytest

from finslerb import cli
from finslerb.errors import ParseError, ValidationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
[model]
family = euclidean
dimension = 2

[metric]
preset = sasaki

[sampling]
seed = 5
points = 4
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def by_id(report):
    return {r.id: r for r in report.records}


def test_minimal_config_loads(tmp_path):
    cfg = cli.load_config(write(tmp_path, MINIMAL))
    assert cfg.n == 2 and cfg.seed == 5 and cfg.points == 4
    assert cfg.spec.name == "sasaki"
    assert cfg.tolerances == cli.DEFAULT_TOLS


def test_profile_expressions_parse(tmp_path):
    text = MINIMAL.replace("preset = sasaki", "alpha1 = 1/(1+t)\nalpha3 = t/(1+t)")
    cfg = cli.load_config(write(tmp_path, text))
    pv = cfg.spec.at(1.0, 0)
    assert pv.a1 == pytest.approx(0.5) and pv.a3 == pytest.approx(0.5)


@pytest.mark.parametrize(
    "old,new,key",
    [
        ("preset = sasaki", "preset = nonsense", "metric.preset"),
        ("dimension = 2", "dimension = zero", "model.dimension"),
        ("family = euclidean", "family = lorentz", "model.family"),
        ("points = 4", "points = 0", "sampling.points"),
        ("points = 4", "points = 4\ntol.nope = 1", "sampling.tol.nope"),
    ],
)
def test_validation_errors_name_the_key(tmp_path, old, new, key):
    with pytest.raises(ValidationError) as exc:
        cli.load_config(write(tmp_path, MINIMAL.replace(old, new)))
    assert exc.value.key == key


def test_bad_expression_rejected(tmp_path):
    text = MINIMAL.replace("preset = sasaki", "alpha1 = 1/(1+t")
    with pytest.raises((ValidationError, ParseError)):
        cli.load_config(write(tmp_path, text))


def test_unknown_section_rejected(tmp_path):
    with pytest.raises(ValidationError):
        cli.load_config(write(tmp_path, MINIMAL + "\n[extra]\nk = 1\n"))


def test_euclidean_sasaki_all_passes():
    cfg = cli.load_config(CONFIGS / "euclidean_sasaki.ini")
    report = cli.run_suite(cfg, "all")
    assert not report.failed
    recs = by_id(report)
    assert recs["incompressibility.density"].residual < 1e-7
    assert recs["fibers.verdict"].result == "totally_geodesic"
    assert recs["symmetry.verdict:horizontal:rotation"].result.startswith("killing")
    for r in report.records:
        assert r.anchor and r.verdict in ("pass", "fail", "none")


def test_randers_cg_levi_civita():
    cfg = cli.load_config(CONFIGS / "randers_cg.ini")
    report = cli.run_suite(cfg, "levi_civita")
    rec = by_id(report)["levi_civita.koszul"]
    assert rec.verdict == "pass" and rec.residual < 1e-5
    assert rec.samples >= cfg.points


def test_liouville_config_is_killing():
    cfg = cli.load_config(CONFIGS / "liouville3.ini")
    recs = by_id(cli.run_suite(cfg, "liouville"))
    assert recs["liouville.verdict"].result.startswith("killing")
    assert recs["liouville.oracle"].verdict == "pass"


def test_geodesic_certificate_record():
    cfg = cli.load_config(CONFIGS / "randers_cg.ini")
    recs = by_id(cli.run_suite(cfg, "symmetry"))
    geo = [r for k, r in recs.items() if k.startswith("symmetry.geodesic")]
    assert geo and all(r.verdict != "fail" for r in geo)
    assert any(r.witness is not None for r in geo)


def test_empty_report_has_environment():
    rep = cli.Report({"seed": 1, "suite": "none"})
    d = json.loads(cli.emit_report(rep))
    assert d["environment"]["seed"] == 1
    assert d["records"] == [] and d["summary"] == {"pass": 0, "fail": 0, "none": 0}
    assert not rep.failed


def test_json_round_trip_is_byte_identical():
    cfg = cli.load_config(CONFIGS / "euclidean_sasaki.ini")
    data = cli.emit_report(cli.run_suite(cfg, "symmetry"), "json")
    again = cli.emit_report(cli.Report.from_dict(json.loads(data)), "json")
    assert again == data


def test_text_format_quotes_anchors():
    cfg = cli.load_config(CONFIGS / "euclidean_sasaki.ini")
    text = cli.emit_report(cli.run_suite(cfg, "levi_civita"), "text").decode()
    assert cli.ANCHORS["levi_civita"] in text
    assert "summary:" in text


def test_report_with_failing_record():
    rec = cli.Record("x", "a", 1, 1.0, 0.5, "fail")
    assert cli.Report({}, [rec]).failed


def test_main_writes_out_and_seed_override(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    out = tmp_path / "r.json"
    assert cli.main(["axioms", "--config", str(cfg), "--seed", "19", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["environment"]["seed"] == 19 and d["environment"]["suite"] == "axioms"
    assert d["summary"]["fail"] == 0


def test_main_exit_one_on_failure(tmp_path):
    # a zero tolerance cannot be met by a Randers model's nonzero rounding residual
    text = (CONFIGS / "randers_cg.ini").read_text() + "tol.tensors.homogeneity = 0\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "r.json"
    assert cli.main(["tensors", "--config", str(cfg), "--out", str(out)]) == 1
    d = json.loads(out.read_text())
    failing = [r for r in d["records"] if r["verdict"] == "fail"]
    assert failing and failing[0]["witness"] is not None


def test_main_exit_two_on_config_error(tmp_path, capsys):
    cfg = write(tmp_path, MINIMAL.replace("preset = sasaki", "preset = nonsense"))
    assert cli.main(["all", "--config", str(cfg)]) == 2
    assert "metric.preset" in capsys.readouterr().err
    assert cli.main(["all", "--config", str(tmp_path / "missing.ini")]) == 2
