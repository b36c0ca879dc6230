import csv
import json

import pytest

from id_regret import cli


def _run(tmp_path, *argv):
    out = tmp_path / "result"
    code = cli.main([*argv, "--output", str(out)])
    return code, out


def test_classify_stable_half(tmp_path):
    code, out = _run(tmp_path, "classify", "--model", "stable", "--alpha", "0.5", "--d", "1")
    assert code == 0
    data = json.loads(out.read_text())
    assert data["recurrence"] == "Transient" and data["admissibility"] == "Inadmissible"
    assert (tmp_path / "result.provenance.json").exists()


def test_identity_row(tmp_path):
    code, out = _run(tmp_path, "identity", "--model", "gaussian", "--v", "1", "--prior", "gaussian", "--sigma2", "10")
    assert code == 0
    row = next(csv.DictReader(out.open()))
    assert list(row) == cli.IDENTITY_COLUMNS
    assert float(row["lhs"]) == pytest.approx(0.0232600078, rel=1e-6)
    assert float(row["rhs_spectral"]) == pytest.approx(0.0227272727, rel=1e-8)


def test_uniform_regret_zero(tmp_path):
    code, out = _run(tmp_path, "regret", "--model", "gaussian", "--v", "1", "--prior", "uniform")
    assert code == 0
    assert abs(float(next(csv.DictReader(out.open()))["regret"])) < 1e-10


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# blyth run\nmodel.name = gaussian\ngrid.lower = -50\ngrid.upper = 50\ngrid.n = 256\n"
                   "schedule.n = 1, 2\n")
    code, out = _run(tmp_path, "blyth", "--config", str(cfg), "--set", "schedule.n=1,4")
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["n"] for r in rows] == ["1", "4"]
    prov = json.loads((tmp_path / "result.provenance.json").read_text())
    assert prov["config"]["schedule.n"] == "1,4"


@pytest.mark.parametrize("argv", [
    ["regret", "--model", "gaussian", "--n", "1000"],
    ["classify", "--model", "stable", "--alpha", "2.5"],
    ["regret", "--set", "model.name=levy"],
    ["classify", "--trait", "weird"],
])
def test_configuration_errors_exit_3(tmp_path, argv):
    code, out = _run(tmp_path, *argv)
    assert code == 3
    assert (tmp_path / "result.provenance.json").exists()


def test_unknown_command_exit_3(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 3


def test_capacity_and_catalog(tmp_path):
    code, out = _run(tmp_path, "capacity", "--d", "1", "--alpha", "1", "--beta", "1", "--R", "100,1000")
    assert code == 0
    assert len(list(csv.DictReader(out.open()))) == 2
    code, out = _run(tmp_path, "catalog")
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == cli.VERDICT_COLUMNS
    assert len(rows) == 33


def test_twelve_significant_digits(tmp_path):
    code, out = _run(tmp_path, "identity", "--model", "gaussian", "--prior", "gaussian", "--sigma2", "1",
                     "--format", "json")
    data = json.loads(out.read_text())
    assert len(repr(data["rhs_spectral"]).replace("0.", "").lstrip("0")) <= 12
