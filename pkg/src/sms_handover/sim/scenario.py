"""Handover scenario runner: events, IK re-solves, control ticks, integration, logging."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..control import NmpcConfig, TrackingError, nmpc_torque, pid_forces, rolling_period_schedule
from ..dynamics import GeneralizedForces
from ..ik import IkRequest, solve_ik_lm
from ..kinematics import GeneralizedState, SpatialPose, forward_kinematics
from ..model import SystemModel
from .. import _kernels
from ..rotations import rotation_error
from .config import ScenarioConfig
from .integrate import IntegrationError, advance
from .schedule import ArmGoal, Phase

log = logging.getLogger(__name__)

ARMS = ("A", "B")


class SimulationError(RuntimeError):
    pass


@dataclass
class DeputyState:
    """Massless target object; kinematically attached to at most one arm."""

    pose: SpatialPose
    holder: str | None = None
    offset: SpatialPose | None = None  # deputy pose in the holder's end-effector frame
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def attach(self, arm: str, ee_pose: SpatialPose) -> None:
        if self.holder is not None:
            raise SimulationError(f"deputy already held by arm {self.holder}; refusing closed chain")
        self.holder = arm
        self.offset = ee_pose.inverse().compose(self.pose)

    def release(self, ee_velocity: np.ndarray) -> None:
        self.holder = None
        self.offset = None
        self.linear_velocity = np.asarray(ee_velocity[:3], float).copy()
        self.angular_velocity = np.asarray(ee_velocity[3:], float).copy()

    def follow(self, ee_pose: SpatialPose) -> None:
        self.pose = ee_pose.compose(self.offset)

    def drift(self, dt: float) -> None:
        """Free motion at constant twist."""
        from scipy.spatial.transform import Rotation

        if not np.any(self.linear_velocity) and not np.any(self.angular_velocity):
            return
        R = Rotation.from_rotvec(self.angular_velocity * dt).as_matrix() @ self.pose.dcm
        self.pose = SpatialPose.from_dcm(self.pose.position + self.linear_velocity * dt, R)


@dataclass
class EventRecord:
    time: float
    action: str
    arm: str
    success: bool
    position_error: float = 0.0
    orientation_error: float = 0.0


@dataclass
class TrajectoryLog:
    """Uniformly sampled record of one run (one row per control tick)."""

    controller: str
    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    q_des: np.ndarray
    torque: np.ndarray
    ee_position_error: np.ndarray  # (N, 2) arms A, B
    ee_orientation_error: np.ndarray  # (N, 2)
    linear_momentum: np.ndarray
    angular_momentum: np.ndarray
    kinetic_energy: np.ndarray
    com: np.ndarray
    phase: np.ndarray
    rolling_period: np.ndarray
    deputy_position: np.ndarray
    deputy_quaternion: np.ndarray
    deputy_holder: np.ndarray  # 0 free, 1 arm A, 2 arm B
    ee_position: np.ndarray  # (N, 2, 3)
    ee_quaternion: np.ndarray  # (N, 2, 4)
    phase_names: list[str] = field(default_factory=list)
    phase_bounds: list[tuple[float, float]] = field(default_factory=list)
    events: list[EventRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failed: bool = False

    def __len__(self) -> int:
        return self.t.size

    @property
    def joint_error(self) -> np.ndarray:
        return self.q[:, 6:] - self.q_des


def _goal_target(model, goal: ArmGoal, arm: str, state: GeneralizedState, deputy: DeputyState,
                 offsets: dict, initial_q: np.ndarray):
    """Return (joint target or None, end-effector pose target or None)."""
    sl = model.arm_slice(arm)
    if goal.kind == "hold":
        return initial_q[sl].copy(), None
    if goal.kind == "joints":
        return np.asarray(goal.joints, float), None
    if goal.kind == "end_effector":
        return None, goal.pose
    # deputy: place the deputy at goal.pose (or meet it where it is) through this arm's grasp
    target = deputy.pose if goal.pose is None else goal.pose
    offset = deputy.offset if deputy.holder == arm else offsets[arm]
    return None, target.compose(offset.inverse())


def _pose_error(a: SpatialPose, b: SpatialPose) -> tuple[float, float]:
    return (float(np.linalg.norm(a.position - b.position)),
            float(np.linalg.norm(rotation_error(a.dcm, b.dcm))))


def _ee_poses(model: SystemModel, state: GeneralizedState) -> dict[str, SpatialPose]:
    fk = forward_kinematics(model, state)
    return {arm: fk[arm].end_effector for arm in ARMS}


def _ee_twist(model: SystemModel, state: GeneralizedState, arm: str) -> np.ndarray:
    from ..kinematics import end_effector_velocity

    return end_effector_velocity(model, state, arm)


def run_scenario(config: ScenarioConfig, model: SystemModel | None = None) -> TrajectoryLog:
    """Run the scheduled handover under the configured controller."""
    model = config.load_model() if model is None else model
    sched = config.schedule
    n_j = model.n_dof - 6
    dt_c = config.control_dt
    n_ticks = int(round(config.duration / dt_c))
    state = GeneralizedState(np.array(config.initial_q, float), np.zeros(model.n_dof))
    state.check(model)
    deputy = DeputyState(config.deputy_pose)
    events = list(sched.events)
    records: list[EventRecord] = []
    warnings: list[str] = []
    failed = False

    q_des = np.array(config.initial_q[6:], float)
    ee_targets: dict[str, SpatialPose | None] = {"A": None, "B": None}
    integral = TrackingError(np.zeros(n_j), np.zeros(n_j))
    last_ik = -np.inf
    current_phase: Phase | None = None

    rows = n_ticks + 1
    buf = {
        "t": np.zeros(rows), "q": np.zeros((rows, model.n_dof)), "q_dot": np.zeros((rows, model.n_dof)),
        "q_des": np.zeros((rows, n_j)), "torque": np.zeros((rows, n_j)),
        "ee_position_error": np.zeros((rows, 2)), "ee_orientation_error": np.zeros((rows, 2)),
        "linear_momentum": np.zeros((rows, 3)), "angular_momentum": np.zeros((rows, 3)),
        "kinetic_energy": np.zeros(rows), "com": np.zeros((rows, 3)), "phase": np.zeros(rows, dtype=int),
        "rolling_period": np.zeros(rows), "deputy_position": np.zeros((rows, 3)),
        "deputy_quaternion": np.zeros((rows, 4)), "deputy_holder": np.zeros(rows, dtype=int),
        "ee_position": np.zeros((rows, 2, 3)), "ee_quaternion": np.zeros((rows, 2, 4)),
    }

    for i in range(rows):
        t = i * dt_c
        ee = _ee_poses(model, state)
        if deputy.holder is not None:
            deputy.follow(ee[deputy.holder])

        while events and events[0].time <= t + 1e-9:
            ev = events.pop(0)
            if ev.action == "release":
                ok = deputy.holder == ev.arm
                if ok:
                    deputy.release(_ee_twist(model, state, ev.arm))
                records.append(EventRecord(t, "release", ev.arm, ok))
                if not ok:
                    warnings.append(f"t={t:.3f}: release by arm {ev.arm} but it does not hold the deputy")
                    failed = True
            else:
                grasp_pose = deputy.pose.compose(config.grasp_offsets[ev.arm].inverse())
                pe, oe = _pose_error(ee[ev.arm], grasp_pose)
                ok = (deputy.holder is None and pe < config.grasp_position_tolerance
                      and oe < config.grasp_orientation_tolerance)
                if ok:
                    deputy.attach(ev.arm, ee[ev.arm])
                else:
                    warnings.append(f"t={t:.3f}: grasp by arm {ev.arm} failed "
                                    f"(position error {pe:.4f} m, orientation error {oe:.4f} rad)")
                    failed = True
                records.append(EventRecord(t, "grasp", ev.arm, ok, pe, oe))

        phase = sched.phase_at(t)
        new_phase = phase is not current_phase
        if new_phase or t - last_ik >= config.ik_period - 1e-9:
            for arm in ARMS:
                sl = model.arm_slice(arm)
                joints, pose = _goal_target(model, phase.goal(arm), arm, state, deputy,
                                            config.grasp_offsets, config.initial_q)
                if pose is not None:
                    guess = state
                    if config.ik_seed == "desired":
                        seeded = state.q.copy()
                        seeded[6:] = q_des
                        guess = GeneralizedState(seeded, state.q_dot)
                    res = solve_ik_lm(model, IkRequest(
                        arm, pose, guess,
                        position_weight=config.ik_position_weight,
                        orientation_weight=config.ik_orientation_weight,
                        max_iterations=config.ik_max_iterations,
                        initial_damping=config.ik_damping))
                    joints = res.joint_angles
                    if new_phase and not res.converged:
                        msg = (f"t={t:.3f}: IK for arm {arm} did not converge at start of phase "
                               f"{phase.name!r} (residual {res.position_residual:.2e} m)")
                        warnings.append(msg)
                        log.warning(msg)
                        failed = True
                    ee_targets[arm] = pose
                else:
                    q_tmp = state.q.copy()
                    q_tmp[sl] = joints
                    ee_targets[arm] = _ee_poses(model, GeneralizedState(q_tmp, None))[arm]
                q_des[sl.start - 6:sl.stop - 6] = joints
            last_ik = t
            current_phase = phase

        err = TrackingError(state.q[6:] - q_des, state.q_dot[6:], integral.integral_e)
        if config.controller == "pid":
            forces = pid_forces(err, config.pid_gains)
            t_r = np.nan
        else:
            t_r = rolling_period_schedule(phase, config.rolling_periods)
            forces = nmpc_torque(model, state, (q_des, np.zeros(n_j), np.zeros(n_j)), NmpcConfig(t_r), err)
        Q = forces.Q
        if config.torque_limit is not None:
            Q = np.r_[np.zeros(6), np.clip(Q[6:], -config.torque_limit, config.torque_limit)]

        T, P, L, com = _kernels.energy_momentum(state.q, state.q_dot, *model.packed)
        buf["t"][i] = t
        buf["q"][i] = state.q
        buf["q_dot"][i] = state.q_dot
        buf["q_des"][i] = q_des
        buf["torque"][i] = Q[6:]
        for k, arm in enumerate(ARMS):
            pe, oe = _pose_error(ee[arm], ee_targets[arm])
            buf["ee_position_error"][i, k] = pe
            buf["ee_orientation_error"][i, k] = oe
            buf["ee_position"][i, k] = ee[arm].position
            buf["ee_quaternion"][i, k] = ee[arm].quaternion
        buf["linear_momentum"][i] = P
        buf["angular_momentum"][i] = L
        buf["kinetic_energy"][i] = T
        buf["com"][i] = com
        buf["phase"][i] = sched.phases.index(phase)
        buf["rolling_period"][i] = t_r
        buf["deputy_position"][i] = deputy.pose.position
        buf["deputy_quaternion"][i] = deputy.pose.quaternion
        buf["deputy_holder"][i] = 0 if deputy.holder is None else 1 + ARMS.index(deputy.holder)

        if i == rows - 1:
            break
        # integral state advances with the held error (caller-owned, clamped)
        integral = TrackingError(err.e, err.e_dot, err.integral_e)
        integral.accumulate(dt_c, config.integral_clamp)
        try:
            state = advance(model, state, Q, dt_c, config.dt, config.integrator, config.rtol, config.atol)
        except IntegrationError as exc:
            raise SimulationError(f"t={t:.3f}: {exc}") from exc
        if deputy.holder is None:
            deputy.drift(dt_c)

    return TrajectoryLog(
        controller=config.controller,
        phase_names=[p.name for p in sched.phases],
        phase_bounds=[(p.start, p.end) for p in sched.phases],
        events=records, warnings=warnings, failed=failed, **buf,
    )
