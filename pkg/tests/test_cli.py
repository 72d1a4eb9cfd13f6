import json

import pytest
import tomli

from sms_handover.cli import OUTPUT_ENV, build_parser, cli_reference, main
from sms_handover.model import default_model_path
from sms_handover.sim.config import default_config_path
from sms_handover.sim.export import SCHEMA_VERSION, csv_columns, read_log_csv


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_run_writes_artifacts(tmp_path, capsys):
    code = main(["run", "--controller", "nmpc", "--duration", "0.3", "--output-dir", str(tmp_path)])
    assert code == 0
    version, cols, data = read_log_csv(tmp_path / "nmpc_log.csv")
    assert version == SCHEMA_VERSION and cols == csv_columns() and data.shape[0] == 31
    doc = json.loads((tmp_path / "nmpc_metrics.json").read_text())
    assert doc["schema_version"] == SCHEMA_VERSION and doc["controller"] == "nmpc"
    assert "log:" in capsys.readouterr().out


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert main(["run", "--controller", "pid", "--duration", "0.1", "--kp", "3", "--rolling-period", "1,2"]) == 0
    assert (tmp_path / "env" / "pid_log.csv").is_file()


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    err = _error(capsys)
    assert err["exit_code"] == 2 and "config not found" in err["message"]


def test_invalid_override_exits_2(capsys):
    assert main(["run", "--duration", "120"]) == 2
    assert "exceeds the schedule" in _error(capsys)["message"]


@pytest.mark.parametrize("argv", [["run", "--bogus"], ["run", "--dt", "-1"], ["run", "--controller", "lqr"],
                                  ["verify", "--suite", "nope"], ["frobnicate"]])
def test_bad_flags_rejected(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_simulation_failure_exits_3(tmp_path, capsys):
    text = default_config_path().read_text().replace("position_tolerance = 0.01", "position_tolerance = 1e-9")
    cfg = tmp_path / "strict.toml"
    cfg.write_text(text)
    code = main(["run", "--config", str(cfg), "--duration", "20.2", "--output-dir", str(tmp_path)])
    assert code == 3
    err = _error(capsys)
    assert err["error"] == "ScenarioFailed" and "grasp by arm A failed" in err["message"]
    assert (tmp_path / "nmpc_metrics.json").is_file()  # artifacts still written for diagnosis


def test_compare_prints_table(tmp_path, capsys):
    assert main(["compare", "--duration", "0.5", "--sequential", "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "OS pid %" in out and "max |torque|" in out and "base drift" in out
    assert (tmp_path / "pid_log.csv").is_file() and (tmp_path / "nmpc_log.csv").is_file()
    assert json.loads((tmp_path / "compare.json").read_text()).keys() == {"pid", "nmpc"}


def test_verify_single_suite(capsys):
    assert main(["verify", "--suite", "oracle"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("pass") and "oracle" in lines[0]


def test_verify_corrupted_model(tmp_path, capsys):
    text = default_model_path().read_text().replace(
        "inertia = [[40.0, 0.0, 0.0], [0.0, 40.0, 0.0], [0.0, 0.0, 40.0]]",
        "inertia = [[40.0, 0.0, 0.0], [0.0, -40.0, 0.0], [0.0, 0.0, 40.0]]")
    bad = tmp_path / "bad.toml"
    bad.write_text(text)
    assert main(["verify", "--model", str(bad), "--json"]) == 1
    results = json.loads(capsys.readouterr().out)
    assert results[0]["suite"] == "validation" and results[0]["status"] == "FAIL"
    assert all(r["status"] == "skip" for r in results[1:]) and len(results) == 7


def test_export_schedule_formats(tmp_path, capsys):
    assert main(["export-schedule"]) == 0
    doc = tomli.loads(capsys.readouterr().out)
    assert len(doc["schedule"]["phases"]) == 3
    out = tmp_path / "s.json"
    assert main(["export-schedule", "--format", "json", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["schedule"]["events"][0] == {"time": 20.0, "action": "grasp", "arm": "A"}


def test_every_flag_is_documented():
    ref = cli_reference()
    for flag in ("--config", "--output-dir", "--controller", "--kp", "--ki", "--kd", "--rolling-period", "--dt",
                 "--duration", "--integrator", "--seed", "--sequential", "--suite", "--model", "--format"):
        assert flag in ref
    assert OUTPUT_ENV in ref


def test_readme_cli_section_is_generated():
    """README carries the exact help text; regenerate with scripts/gen_cli_docs.py."""
    from pathlib import Path

    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    start = readme.index("<!-- cli-reference:start -->")
    end = readme.index("<!-- cli-reference:end -->")
    block = readme[start:end].split("```text\n", 1)[1].rsplit("```", 1)[0]
    assert block == cli_reference()
