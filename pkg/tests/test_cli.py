import json

import pytest
from click.testing import CliRunner

from focksim.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def test_scheme_run_json_report(runner):
    result = runner.invoke(main, ["scheme", "run", "bsg-standard"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["schema_version"] == 1
    assert doc["scheme"] == "bsg-standard"
    assert doc["aggregates"]["p_bell_total"] == pytest.approx(0.1875)
    assert all(c["passed"] for c in doc["target_checks"])
    for c in doc["target_checks"]:
        assert set(c) == {"name", "expected", "measured", "deviation",
                          "tolerance", "passed"}


def test_scheme_run_with_params(runner):
    result = runner.invoke(main, ["scheme", "run", "ghz-generator",
                                  "--params", '{"n": 2}'])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["parameters"] == {"n": 2}
    assert doc["aggregates"]["p_success"] == pytest.approx(0.125)


def test_unknown_scheme_exits_2(runner):
    result = runner.invoke(main, ["scheme", "run", "nonesuch"])
    assert result.exit_code == 2
    assert "unknown scheme" in result.output


def test_scheme_run_csv(runner):
    result = runner.invoke(main, ["--format", "csv", "scheme", "run",
                                  "bsg-standard"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "pattern,probability,classification,correction"
    assert len(lines) > 10


def test_reports_are_byte_stable(runner):
    first = runner.invoke(main, ["scheme", "run", "bsg-with-distillation"])
    second = runner.invoke(main, ["scheme", "run", "bsg-with-distillation"])
    assert first.output == second.output
    a = runner.invoke(main, ["figure5", "--max-stages", "3"])
    b = runner.invoke(main, ["figure5", "--max-stages", "3"])
    assert a.output == b.output


def test_bleed_json_and_csv(runner):
    result = runner.invoke(main, ["bleed", "--stages", "2"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["scheme"] == "bleed"
    assert doc["parameters"]["schedule"] == "equal"
    assert all(c["passed"] for c in doc["target_checks"])
    result = runner.invoke(main, ["--format", "csv", "bleed", "--stages", "2"])
    assert result.output.splitlines()[0] == \
        "step_patterns,status,probability,terminal_class"


def test_bleed_custom_schedule_file(runner, tmp_path):
    path = tmp_path / "rates.txt"
    path.write_text("0.25, 0.5\n")
    result = runner.invoke(main, ["bleed", "--stages", "2",
                                  "--schedule", str(path)])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["parameters"]["rates"] == [0.25, 0.5]
    result = runner.invoke(main, ["bleed", "--stages", "3",
                                  "--schedule", str(path)])
    assert result.exit_code != 0


def test_figure5_curve(runner):
    result = runner.invoke(main, ["figure5", "--max-stages", "5"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "S,p_optimal,p_equal_spread"
    assert len(lines) == 6
    s5 = lines[5].split(",")
    assert float(s5[2]) == pytest.approx(0.358796, abs=1e-6)
    assert float(s5[1]) == pytest.approx(0.370812, abs=2e-4)


def test_resources_table2(runner):
    result = runner.invoke(main, ["resources", "table2"])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert all(c["passed"] for c in doc["target_checks"])
    assert doc["aggregates"]["total_ghz4-direct"] == pytest.approx(1024.0)
    assert any("fusion probability" in note for note in doc["notes"])


def test_verify_subset(runner):
    result = runner.invoke(main, ["verify", "1", "10"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].startswith("[PASS] criterion  1")
    assert "2/2 criteria passed" in result.output
    result = runner.invoke(main, ["verify", "one"])
    assert result.exit_code == 2


def test_out_file_and_overrides(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["--out", str(out), "--seed", "3",
                                  "--tolerance", "1e-3",
                                  "scheme", "run", "bsg-standard"])
    assert result.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc["parameters"]["seed"] == 3
    assert all(c["tolerance"] == 1e-3 for c in doc["target_checks"])
    assert any("seed" in note for note in doc["notes"])
