import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sms_handover.rotations import (EulerSingularityError, dcm_to_euler_xyz, dcm_to_quat, euler_rate_matrix,
                                    euler_xyz_to_dcm, quat_to_dcm, rotation_error, skew)

angle = st.floats(-3.0, 3.0)


@given(angle, st.floats(-1.5, 1.5), angle)
def test_euler_round_trip(r, p, y):
    R = euler_xyz_to_dcm((r, p, y))
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.allclose(euler_xyz_to_dcm(dcm_to_euler_xyz(R)), R, atol=1e-10)


@settings(max_examples=50)
@given(angle, st.floats(-1.4, 1.4), angle, st.tuples(angle, angle, angle))
def test_euler_rate_matrix_matches_finite_difference(r, p, y, rates):
    """omega = E(angles) @ angle_rates, checked on R_dot R^T."""
    a = np.array([r, p, y])
    ad = np.array(rates)
    h = 1e-6
    Rd = (euler_xyz_to_dcm(a + h * ad) - euler_xyz_to_dcm(a - h * ad)) / (2 * h)
    W = Rd @ euler_xyz_to_dcm(a).T
    w_fd = np.array([W[2, 1], W[0, 2], W[1, 0]])
    assert np.allclose(euler_rate_matrix(a) @ ad, w_fd, atol=1e-7)


def test_euler_singularity_raises():
    with pytest.raises(EulerSingularityError):
        euler_rate_matrix((0.1, np.pi / 2, 0.0))
    # unchecked call still returns the (rank-deficient) matrix
    assert np.linalg.matrix_rank(euler_rate_matrix((0.1, np.pi / 2, 0.0), check=False)) == 2


def test_quaternion_conventions():
    R = euler_xyz_to_dcm((0.3, -0.2, 1.1))
    q = dcm_to_quat(R)
    assert q[3] >= 0 and np.isclose(np.linalg.norm(q), 1.0)
    assert np.allclose(quat_to_dcm(q), R)
    assert np.allclose(dcm_to_quat(np.eye(3)), [0, 0, 0, 1])


def test_rotation_error_is_inertial_rotvec():
    R = euler_xyz_to_dcm((0.2, 0.1, -0.4))
    v = np.array([0.01, -0.02, 0.015])
    from scipy.spatial.transform import Rotation
    R_t = Rotation.from_rotvec(v).as_matrix() @ R
    assert np.allclose(rotation_error(R_t, R), v, atol=1e-14)
    assert np.allclose(skew(v) @ np.array([1.0, 2.0, 3.0]), np.cross(v, [1.0, 2.0, 3.0]))
