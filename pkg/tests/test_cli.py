import json
from pathlib import Path

import jsonschema
import pytest

from conicgeom import cli

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report_schema.json").read_text())


def _run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out), "--quiet"])
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    return code, report


# --- configuration --------------------------------------------------------

def test_config_parsing_casts_to_default_types():
    cfg = cli.parse_config_text("# comment\nseed = 11\nbase.tol = 1e-9  # trailing\n\n")
    assert cfg == {"seed": 11, "base.tol": 1e-9}


@pytest.mark.parametrize("text,fragment", [
    ("nope = 1", "unknown key"),
    ("seed 3", "expected"),
    ("seed = three", "cannot read"),
])
def test_config_errors(text, fragment):
    with pytest.raises(cli.CliError, match=fragment):
        cli.parse_config_text(text)


def test_print_config_round_trips(capsys, tmp_path):
    cfgfile = tmp_path / "c.txt"
    cfgfile.write_text("poncelet.lines = 3\n")
    assert cli.main(["--print-config", "--config", str(cfgfile)]) == 0
    printed = capsys.readouterr().out
    parsed = cli.parse_config_text(printed)
    assert parsed["poncelet.lines"] == 3
    assert set(parsed) == set(cli.DEFAULTS)


def test_every_check_needs_an_anchor():
    assert all(v for v in cli.ANCHORS.values())
    rec = cli.Recorder()
    with pytest.raises(KeyError):
        rec.add("no.such.check", [0.0], 1.0)


# --- reports --------------------------------------------------------------

def test_verify_base_report(tmp_path):
    code, rep = _run(tmp_path, "verify", "base", "--points", "3", "--seed", "7")
    assert code == 0 and rep["pass"]
    names = [c["name"] for c in rep["checks"]]
    assert "base.scalar_curvature" in names
    assert rep["stable_hash"] == cli.stable_hash(rep)
    # full-precision decimal strings
    for c in rep["checks"]:
        float(c["max"])
        assert isinstance(c["max"], str)


def test_reports_are_byte_stable_apart_from_the_envelope(tmp_path):
    _, a = _run(tmp_path, "poncelet", "--lines", "3", "--seed", "2", name="a.json")
    _, b = _run(tmp_path, "poncelet", "--lines", "3", "--seed", "2", name="b.json")
    a.pop("envelope")
    b.pop("envelope")
    assert cli.canonical_json(a) == cli.canonical_json(b)
    _, c = _run(tmp_path, "poncelet", "--lines", "3", "--seed", "3", name="c.json")
    assert c["stable_hash"] != a["stable_hash"]


def test_failing_control_exits_one(tmp_path):
    code, rep = _run(tmp_path, "build", "asd", "--solution", "control-trace", "--points", "3")
    assert code == 1 and not rep["pass"]
    failed = {c["name"] for c in rep["checks"] if not c["pass"]}
    assert "asd.closedness" in failed


def test_build_asd_from_spec_file(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"gammas": [0, 1, 0, 0, 0, 1, 0, 0], "dropped": 2}))
    code, rep = _run(tmp_path, "build", "asd", "--spec", str(spec), "--points", "2")
    assert code == 0 and rep["pass"]


# --- structured errors ----------------------------------------------------

def test_zero_function_is_rejected(tmp_path):
    spec = tmp_path / "zero.json"
    spec.write_text(json.dumps({"gammas": [0] * 8}))
    code, rep = _run(tmp_path, "verify", "radon", "--family", "f1", "--spec", str(spec))
    assert code == 2
    assert rep["error"]["type"] == "zero_function"


@pytest.mark.parametrize("argv,kind", [
    (["build", "asd", "--solution", "nonsense"], "unknown_solution"),
    (["examples", "run", "--name", "nonsense"], "unknown_example"),
])
def test_unknown_names(tmp_path, argv, kind):
    code, rep = _run(tmp_path, *argv)
    assert code == 2 and rep["error"]["type"] == kind


def test_unparsable_spec_and_missing_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, rep = _run(tmp_path, "verify", "radon", "--spec", str(bad), name="r1.json")
    assert code == 2 and rep["error"]["type"] == "spec"
    code, rep = _run(tmp_path, "verify", "base", "--config", str(tmp_path / "missing.txt"), name="r2.json")
    assert code == 2 and rep["error"]["type"] == "config"


def test_degenerate_exhaustion_exits_three(tmp_path):
    spec = tmp_path / "deg.json"
    cfg = tmp_path / "c.txt"
    cfg.write_text("asd.points = 1\n")
    spec.write_text(json.dumps({"gammas": [0, 0, 0, 0, 0, 1, 0, 0], "dropped": 0}))
    code, rep = _run(tmp_path, "build", "asd", "--spec", str(spec), "--config", str(cfg))
    # e^{-2a} never vanishes, so the hypersurface is empty
    assert code == 3 and rep["error"]["type"] == "degenerate"


# --- atomic writes --------------------------------------------------------

def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "r.json"
    cli.write_atomic(target, "first")
    cli.write_atomic(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in target.parent.iterdir()] == ["r.json"]
