"""Rotation helpers: intrinsic X-Y-Z Euler angles, DCMs, quaternions.

Quaternions are stored scalar-last ``(x, y, z, w)`` to match
``scipy.spatial.transform.Rotation``.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

#: |cos(pitch)| below this is treated as the Euler representation singularity.
EULER_SINGULARITY_TOL = 1e-6


class EulerSingularityError(ValueError):
    """Raised when pitch is at +/- pi/2 and Euler rates are undefined."""


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_xyz_to_dcm(angles) -> np.ndarray:
    """Body-to-inertial DCM for intrinsic X-Y-Z angles: R = Rx(roll) Ry(pitch) Rz(yaw)."""
    roll, pitch, yaw = angles
    return rot_x(roll) @ rot_y(pitch) @ rot_z(yaw)


def dcm_to_euler_xyz(R: np.ndarray) -> np.ndarray:
    return Rotation.from_matrix(R).as_euler("XYZ")


def euler_rate_matrix(angles, check: bool = True) -> np.ndarray:
    """Matrix E with omega_inertial = E(angles) @ euler_rates.

    Columns are the three rotation axes expressed in the inertial frame:
    x, Rx(roll) y, Rx(roll) Ry(pitch) z.
    """
    roll, pitch, _ = angles
    if check and abs(np.cos(pitch)) < EULER_SINGULARITY_TOL:
        raise EulerSingularityError(f"pitch {pitch:.6f} rad is at the Euler singularity")
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    return np.array([
        [1.0, 0.0, sp],
        [0.0, cr, -sr * cp],
        [0.0, sr, cr * cp],
    ])


def dcm_to_quat(R: np.ndarray) -> np.ndarray:
    q = Rotation.from_matrix(R).as_quat()
    # canonical sign: w >= 0
    return q if q[3] >= 0 else -q


def quat_to_dcm(q) -> np.ndarray:
    return Rotation.from_quat(q).as_matrix()


def rotation_error(R_target: np.ndarray, R_current: np.ndarray) -> np.ndarray:
    """Rotation vector (log map) of R_target @ R_current.T, expressed in the inertial frame."""
    return Rotation.from_matrix(R_target @ R_current.T).as_rotvec()


def skew(v) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
