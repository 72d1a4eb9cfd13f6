import json

import numpy as np
import pytest

from sms_handover.sim.export import (SCHEMA_VERSION, csv_columns, log_table, read_log_csv, write_log_csv,
                                     write_metrics_json)
from sms_handover.sim.metrics import compute_metrics
from sms_handover.sim import run_scenario


@pytest.fixture(scope="module")
def short_run(model, scenario_config):
    log = run_scenario(scenario_config.with_overrides(duration=0.5), model)
    return log, compute_metrics(log, model.base.mass, model.base.inertia_tensor)


def test_csv_round_trip(short_run, tmp_path):
    log, _ = short_run
    path = write_log_csv(log, tmp_path / "log.csv")
    version, cols, data = read_log_csv(path)
    assert version == SCHEMA_VERSION and cols == csv_columns()
    assert data.shape == (len(log), len(cols))
    assert np.array_equal(data, log_table(log))  # %.17g is lossless
    first = path.read_text().splitlines()[0]
    assert first.startswith("# sms_handover trajectory log, schema 1")


def test_column_schema_is_frozen():
    """Changing the columns requires a schema version bump."""
    cols = csv_columns()
    assert SCHEMA_VERSION == 1
    assert len(cols) == 107 and len(set(cols)) == 107
    assert cols[:6] == ["t", "phase", "rolling_period", "deputy_holder", "q_base_x", "q_base_y"]
    assert cols[-4:] == ["kinetic_energy", "com_x", "com_y", "com_z"]


def test_reader_rejects_foreign_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_log_csv(p)


def test_metrics_json(short_run, tmp_path):
    log, report = short_run
    path = write_metrics_json(report, tmp_path / "m.json", log)
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == SCHEMA_VERSION and doc["kind"] == "sms_handover metrics"
    assert doc["controller"] == "nmpc"
    assert len(doc["metrics"]["overshoot_percent"]) == 14
    assert [p["name"] for p in doc["phases"]] == ["capture", "handover", "demonstration"]
    assert "NaN" not in path.read_text()
