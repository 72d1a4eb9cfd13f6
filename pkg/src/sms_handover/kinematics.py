"""Inertial poses, geometric Jacobians and system centre of mass."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ARM_NAMES, SystemModel, arm_index
from .rotations import EULER_SINGULARITY_TOL, EulerSingularityError, dcm_to_quat, quat_to_dcm


class StateError(ValueError):
    """Generalized state is malformed or non-finite."""


@dataclass(frozen=True)
class GeneralizedState:
    """q = [base position (3), base Euler XYZ (3), arm A joints, arm B joints] and its rate."""

    q: np.ndarray
    q_dot: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        qd = np.zeros_like(q) if self.q_dot is None else np.array(self.q_dot, dtype=float).ravel()
        if q.shape != qd.shape:
            raise StateError(f"q has {q.size} entries but q_dot has {qd.size}")
        q.flags.writeable = False
        qd.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q_dot", qd)

    @classmethod
    def zeros(cls, n_dof: int = 20) -> "GeneralizedState":
        return cls(np.zeros(n_dof), np.zeros(n_dof))

    @property
    def base_position(self) -> np.ndarray:
        return self.q[0:3]

    @property
    def base_euler(self) -> np.ndarray:
        return self.q[3:6]

    def with_q(self, q=None, q_dot=None) -> "GeneralizedState":
        return GeneralizedState(self.q if q is None else q, self.q_dot if q_dot is None else q_dot)

    def check(self, model: SystemModel) -> None:
        if self.q.size != model.n_dof:
            raise StateError(f"state has {self.q.size} coordinates, model needs {model.n_dof}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.q_dot))):
            raise StateError("state contains non-finite entries")


@dataclass(frozen=True)
class SpatialPose:
    """Frame position and orientation in the inertial frame (unit quaternion, scalar last)."""

    position: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        quat = np.array(self.quaternion, dtype=float).reshape(4)
        norm = np.linalg.norm(quat)
        if not norm > 0:
            raise ValueError("zero quaternion")
        quat = quat / norm
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "quaternion", quat)

    @classmethod
    def from_dcm(cls, position, R) -> "SpatialPose":
        return cls(position, dcm_to_quat(np.asarray(R)))

    @classmethod
    def identity(cls) -> "SpatialPose":
        return cls(np.zeros(3), np.array([0.0, 0.0, 0.0, 1.0]))

    @property
    def dcm(self) -> np.ndarray:
        return quat_to_dcm(self.quaternion)

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.dcm
        T[:3, 3] = self.position
        return T

    @classmethod
    def from_matrix(cls, T) -> "SpatialPose":
        T = np.asarray(T)
        return cls.from_dcm(T[:3, 3], T[:3, :3])

    def compose(self, other: "SpatialPose") -> "SpatialPose":
        """self * other, with ``other`` expressed in this frame."""
        R = self.dcm
        return SpatialPose.from_dcm(self.position + R @ other.position, R @ other.dcm)

    def inverse(self) -> "SpatialPose":
        Rt = self.dcm.T
        return SpatialPose.from_dcm(-Rt @ self.position, Rt)


@dataclass(frozen=True)
class ArmPoses:
    com_positions: np.ndarray  # (n, 3) link CoMs r_i
    joint_positions: np.ndarray  # (n, 3) joint origins p_i
    link_rotations: np.ndarray  # (n, 3, 3)
    end_effector: SpatialPose


@dataclass(frozen=True)
class BodyPoses:
    base: SpatialPose
    arms: dict[str, ArmPoses]

    def __getitem__(self, arm: str) -> ArmPoses:
        return self.arms[arm.upper()]


def _check_euler(q) -> None:
    if abs(np.cos(q[4])) < EULER_SINGULARITY_TOL:
        raise EulerSingularityError(f"base pitch {q[4]:.6f} rad is at the Euler singularity")


def _chain(model: SystemModel, state: GeneralizedState):
    state.check(model)
    return _kernels.chain(state.q, state.q_dot, *model.packed)


def _end_effector(model: SystemModel, k: int, R, c):
    """End-effector position and rotation of arm index ``k`` from chain output."""
    arm_start = model.packed[5]
    last = arm_start[k + 1] - 1
    arm = model.arms[k]
    offset = np.asarray(arm.end_effector_offset) + np.asarray(arm.tool_offset)
    return c[last] + R[last] @ offset, R[last], last


def forward_kinematics(model: SystemModel, state: GeneralizedState) -> BodyPoses:
    R0, _E, _w0, _a0, R, p, c, *_ = _chain(model, state)
    arm_start = model.packed[5]
    arms = {}
    for k, name in enumerate(ARM_NAMES):
        sl = slice(arm_start[k], arm_start[k + 1])
        if arm_start[k + 1] > arm_start[k]:
            pos, rot, _ = _end_effector(model, k, R, c)
        else:
            pos = state.q[0:3] + R0 @ np.asarray(model.arms[k].mount_position)
            rot = R0 @ model.packed[3][k]
        arms[name] = ArmPoses(c[sl].copy(), p[sl].copy(), R[sl].copy(), SpatialPose.from_dcm(pos, rot))
    return BodyPoses(SpatialPose.from_dcm(state.q[0:3], R0), arms)


def end_effector_pose(model: SystemModel, state: GeneralizedState, arm: str) -> SpatialPose:
    return forward_kinematics(model, state)[arm].end_effector


def arm_columns(model: SystemModel, arm: str) -> np.ndarray:
    """Generalized-coordinate indices [base 0..5, this arm's joints] spanned by the arm Jacobian."""
    sl = model.arm_slice(arm)
    return np.r_[0:6, sl.start:sl.stop]


def geometric_jacobian(model: SystemModel, state: GeneralizedState, arm: str) -> np.ndarray:
    """6 x (6 + n) Jacobian mapping [base vel, base Euler rates, arm joint rates] to
    end-effector [linear; angular] inertial velocity."""
    _check_euler(state.q)
    k = arm_index(arm)
    R0, E, _w0, _a0, R, p, c, z, *_ = _chain(model, state)
    x, _rot, last = _end_effector(model, k, R, c)
    J = _kernels.point_jacobian(x, k, last, state.q, E, p, z, model.packed[5])
    return J[:, arm_columns(model, arm)]


def end_effector_velocity(model: SystemModel, state: GeneralizedState, arm: str) -> np.ndarray:
    J = geometric_jacobian(model, state, arm)
    return J @ state.q_dot[arm_columns(model, arm)]


def system_com(model: SystemModel, state: GeneralizedState) -> np.ndarray:
    """Mass-weighted mean of the base and all link CoM positions."""
    state.check(model)
    *_, com = _kernels.energy_momentum(state.q, state.q_dot, *model.packed)
    return com
