"""Tests for report rendering and support dumps."""

import json

import pytest

from src.ensemble import create_support, record_measurement
from src.experiments import run_epr_analysis, run_ideal_analysis
from src.histories import family_to_dict, minimal_family
from src.export import (
    Exporter,
    dump_support_csv,
    dump_support_ndjson,
    render_csv,
    render_json,
    render_text,
    write_family_dump,
    write_support_dump,
)


@pytest.fixture(scope="module")
def ideal_report():
    return run_ideal_analysis(200, 42).to_dict()


def test_render_json_is_stable(ideal_report):
    first = render_json(ideal_report)
    assert first == render_json(json.loads(first))
    assert first.endswith("\n")
    assert json.loads(first)["table_conformance"] is True


def test_render_csv_flattens(ideal_report):
    lines = render_csv(ideal_report).splitlines()
    assert lines[0] == "key,value"
    assert "verdict,simultaneous_EG_reality: all" in lines
    assert any(line.startswith("frequencies.T,Y.1,1,") or line.startswith('"frequencies.T,Y.1,1"') for line in lines)


def test_render_text_ideal(ideal_report):
    text = render_text(ideal_report)
    assert "ideal" in text
    assert "Inferred objective values" in text
    assert "verdict: simultaneous_EG_reality: all" in text


def test_render_text_epr():
    text = render_text(run_epr_analysis(100, 1, "strict").to_dict())
    assert "verdict: simultaneous_PQ_reality: none" in text
    assert "table_conformance" not in text


def test_render_certificates():
    data = {"certificates": [{"name": "x", "passed": True, "value": "deviation 0"},
                             {"name": "y", "passed": False, "value": "deviation 1"}]}
    text = render_text(data)
    assert "PASS  x" in text
    assert "FAIL  y" in text
    assert render_csv(data).splitlines() == ["certificate,passed,value", "x,True,deviation 0", "y,False,deviation 1"]


def test_exporter_writes_file(tmp_path, ideal_report):
    path = tmp_path / "out" / "report.json"
    assert Exporter().export(ideal_report, "json", str(path))
    assert json.loads(path.read_text())["experiment"] == "ideal"


def test_exporter_stdout(capsys, ideal_report):
    assert Exporter().export(ideal_report, "json")
    assert json.loads(capsys.readouterr().out)["n"] == 200


def test_exporter_unknown_format(ideal_report, tmp_path):
    assert not Exporter().export(ideal_report, "pdf", str(tmp_path / "r.pdf"))


def test_exporter_unwritable_path(tmp_path, ideal_report):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert not Exporter().export(ideal_report, "json", str(blocker / "report.json"))


def test_support_dumps(ideal):
    support = create_support(ideal.state, 2, 1, ideal.observables)
    record_measurement(support, 0, {"T": 1, "Y": 0})

    rows = [json.loads(line) for line in dump_support_ndjson(support).splitlines()]
    assert rows[0] == {"id": 0, "measured": {"T": 1, "Y": 0},
                       "objective": {"T": {"value": 1, "via": "T"}, "Y": {"value": 0, "via": "Y"}}}
    assert rows[1] == {"id": 1, "measured": {}, "objective": {}}

    lines = dump_support_csv(support).splitlines()
    assert lines[0] == "id,measured:E,objective:E,measured:G,objective:G,measured:T,objective:T,measured:Y,objective:Y"
    assert lines[1] == "0,,,,,1,1,0,0"
    assert lines[2] == "1,,,,,,,,"


def test_write_support_dump(ideal, tmp_path):
    support = create_support(ideal.state, 3, 1, ideal.observables)
    assert write_support_dump(support, str(tmp_path / "s.ndjson"))
    assert write_support_dump(support, str(tmp_path / "s.csv"))
    assert len((tmp_path / "s.ndjson").read_text().splitlines()) == 3
    assert not write_support_dump(support, str(tmp_path / "s.txt"))


def test_write_family_dump(rho_ideal, ideal_histories, tmp_path):
    families = {"C(h_T)": family_to_dict(minimal_family(ideal_histories["T"]), rho_ideal)}
    path = tmp_path / "families.json"
    assert write_family_dump(families, str(path))
    assert json.loads(path.read_text())["C(h_T)"]["consistent"] is True
    assert not write_family_dump(families, str(tmp_path / "families.csv"))
