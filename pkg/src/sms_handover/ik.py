"""Inverse kinematics with the base held fixed (Levenberg-Marquardt) and
minimum-norm rate IK through the pseudoinverse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import GeneralizedState, SpatialPose
from .model import SystemModel, arm_index
from .rotations import rotation_error


@dataclass(frozen=True)
class IkRequest:
    arm: str
    target: SpatialPose
    initial_guess: GeneralizedState
    position_weight: float = 1.0
    orientation_weight: float = 0.5
    max_iterations: int = 100
    position_tolerance: float = 1e-6
    orientation_tolerance: float = 1e-5
    initial_damping: float = 1e-3

    def __post_init__(self):
        if self.position_weight < 0 or self.orientation_weight < 0:
            raise ValueError("IK weights must be >= 0")
        if self.position_weight == 0 and self.orientation_weight == 0:
            raise ValueError("IK weights cannot both be zero")
        if self.position_tolerance <= 0 or self.orientation_tolerance <= 0:
            raise ValueError("IK tolerances must be > 0")
        arm_index(self.arm)


@dataclass(frozen=True)
class IkResult:
    joint_angles: np.ndarray
    converged: bool
    position_residual: float
    orientation_residual: float
    iterations: int

    @property
    def residual(self) -> tuple[float, float]:
        return self.position_residual, self.orientation_residual


def _pose_and_jacobian(model: SystemModel, q: np.ndarray, k: int):
    packed = model.packed
    _R0, E, _w0, _a0, R, p, c, z, *_ = _kernels.chain(q, np.zeros_like(q), *packed)
    arm_start = packed[5]
    last = arm_start[k + 1] - 1
    arm = model.arms[k]
    x = c[last] + R[last] @ (np.asarray(arm.end_effector_offset) + np.asarray(arm.tool_offset))
    J = _kernels.point_jacobian(x, k, last, q, E, p, z, arm_start)
    return x, R[last], J[:, 6 + arm_start[k]:6 + arm_start[k + 1]]


def solve_ik_lm(model: SystemModel, request: IkRequest) -> IkResult:
    """Damped least squares on the weighted pose error, base coordinates locked.

    Damping starts at ``initial_damping`` and is multiplied by 10 on a
    rejected step and divided by 10 on an accepted one. Joint limits are
    enforced by clamping the candidate before it is evaluated.
    """
    k = arm_index(request.arm)
    sl = model.arm_slice(request.arm)
    limits = model.joint_limits()[sl.start - 6:sl.stop - 6]
    q = np.array(request.initial_guess.q, dtype=float)
    q[sl] = np.clip(q[sl], limits[:, 0], limits[:, 1])
    target_p = request.target.position
    target_R = request.target.dcm
    W = np.r_[np.full(3, request.position_weight), np.full(3, request.orientation_weight)]

    def residual(qv):
        x, R, J = _pose_and_jacobian(model, qv, k)
        err = np.r_[target_p - x, rotation_error(target_R, R)]
        return err, J

    def converged(err):
        return (np.linalg.norm(err[:3]) <= request.position_tolerance
                and np.linalg.norm(err[3:]) <= request.orientation_tolerance)

    err, J = residual(q)
    cost = float(np.sum((W * err) ** 2))
    lam = request.initial_damping
    it = 0
    while not converged(err) and it < request.max_iterations:
        it += 1
        Jw = W[:, None] * J
        A = Jw.T @ Jw
        g = Jw.T @ (W * err)
        accepted = False
        while lam < 1e12:
            step = np.linalg.solve(A + lam * np.eye(A.shape[0]), g)
            q_new = q.copy()
            q_new[sl] = np.clip(q[sl] + step, limits[:, 0], limits[:, 1])
            err_new, J_new = residual(q_new)
            cost_new = float(np.sum((W * err_new) ** 2))
            if cost_new < cost:
                q, err, J, cost = q_new, err_new, J_new, cost_new
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
    return IkResult(
        joint_angles=q[sl].copy(),
        converged=converged(err),
        position_residual=float(np.linalg.norm(err[:3])),
        orientation_residual=float(np.linalg.norm(err[3:])),
        iterations=it,
    )


def rate_ik_pseudoinverse(jacobian, desired_velocity, rcond: float = 1e-8) -> np.ndarray:
    """Minimum-norm rates q_dot = J^+ v; singular values below rcond * s_max are truncated."""
    return np.linalg.pinv(np.asarray(jacobian, dtype=float), rcond=rcond) @ np.asarray(desired_velocity, dtype=float)
