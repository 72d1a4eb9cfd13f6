"""CSV trajectory export and JSON metrics report.

The CSV starts with one comment line carrying the schema version, then a
header row, then one row per logged sample. Column order (schema 1):

    t, phase, rolling_period, deputy_holder,
    q_<name> x20, qd_<name> x20, qdes_<joint> x14, tau_<joint> x14,
    ee_pos_err_a, ee_pos_err_b, ee_ori_err_a, ee_ori_err_b,
    ee_a_{x,y,z,qx,qy,qz,qw}, ee_b_{x,y,z,qx,qy,qz,qw},
    deputy_{x,y,z,qx,qy,qz,qw},
    p_{x,y,z}, l_{x,y,z}, kinetic_energy, com_{x,y,z}

Coordinate names are base_{x,y,z}, base_{roll,pitch,yaw}, a1..a7, b1..b7.
Any change to this list requires bumping SCHEMA_VERSION.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
CSV_MAGIC = "# sms_handover trajectory log"
JSON_KIND = "sms_handover metrics"

BASE_NAMES = ("base_x", "base_y", "base_z", "base_roll", "base_pitch", "base_yaw")
JOINT_NAMES = tuple(f"a{i}" for i in range(1, 8)) + tuple(f"b{i}" for i in range(1, 8))
_POSE = ("x", "y", "z", "qx", "qy", "qz", "qw")


def csv_columns() -> list[str]:
    coords = BASE_NAMES + JOINT_NAMES
    cols = ["t", "phase", "rolling_period", "deputy_holder"]
    cols += [f"q_{c}" for c in coords] + [f"qd_{c}" for c in coords]
    cols += [f"qdes_{j}" for j in JOINT_NAMES] + [f"tau_{j}" for j in JOINT_NAMES]
    cols += ["ee_pos_err_a", "ee_pos_err_b", "ee_ori_err_a", "ee_ori_err_b"]
    cols += [f"ee_a_{s}" for s in _POSE] + [f"ee_b_{s}" for s in _POSE] + [f"deputy_{s}" for s in _POSE]
    cols += ["p_x", "p_y", "p_z", "l_x", "l_y", "l_z", "kinetic_energy", "com_x", "com_y", "com_z"]
    return cols


def log_table(log) -> np.ndarray:
    """Stack a TrajectoryLog into the (N, n_columns) CSV table."""
    n = len(log)
    parts = [
        log.t[:, None], log.phase[:, None], log.rolling_period[:, None], log.deputy_holder[:, None],
        log.q, log.q_dot, log.q_des, log.torque, log.ee_position_error, log.ee_orientation_error,
        log.ee_position[:, 0], log.ee_quaternion[:, 0], log.ee_position[:, 1], log.ee_quaternion[:, 1],
        log.deputy_position, log.deputy_quaternion,
        log.linear_momentum, log.angular_momentum, log.kinetic_energy[:, None], log.com,
    ]
    table = np.hstack([np.asarray(p, float).reshape(n, -1) for p in parts])
    assert table.shape[1] == len(csv_columns())
    return table


def write_log_csv(log, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"{CSV_MAGIC}, schema {SCHEMA_VERSION}, controller {log.controller}\n" + ",".join(csv_columns())
    np.savetxt(path, log_table(log), delimiter=",", fmt="%.17g", header=header, comments="")
    return path


def read_log_csv(path) -> tuple[int, list[str], np.ndarray]:
    """Return (schema version, column names, data) and check the header."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline().strip()
        columns = fh.readline().strip().split(",")
    if not first.startswith(CSV_MAGIC):
        raise ValueError(f"{path}: not a trajectory log")
    try:
        version = int(first.split("schema", 1)[1].split(",")[0])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: missing schema version") from exc
    if version == SCHEMA_VERSION and columns != csv_columns():
        raise ValueError(f"{path}: columns do not match schema {version}")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return version, columns, data


def metrics_document(report, log=None) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "kind": JSON_KIND, "controller": report.controller,
           "metrics": report.to_dict()}
    if log is not None:
        doc["events"] = [vars(e).copy() for e in log.events]
        doc["phases"] = [{"name": n, "start": a, "end": b} for n, (a, b) in zip(log.phase_names, log.phase_bounds)]
    return doc


def write_metrics_json(report, path, log=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(metrics_document(report, log)), indent=2, allow_nan=False) + "\n")
    return path


def _clean(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.generic,)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj
