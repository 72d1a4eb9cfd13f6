"""Joint-space tracking laws over the 14 actuated joints: PID and the closed-form NMPC law.

Sign convention: the error is e = q - q_d. The PID output u = Kp e + Ki int(e) + Kd e_dot
is applied as the restoring torque -u so that a positive error is driven to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import GeneralizedForces, mass_and_bias
from .kinematics import GeneralizedState
from .model import SystemModel

#: Integral anti-windup bound, rad s per joint.
INTEGRAL_CLAMP = 10.0


@dataclass(frozen=True)
class PidGains:
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            arr = np.array(getattr(self, name), dtype=float)
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"PID gain {name} must be finite and >= 0")
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, kp: float = 2.0, ki: float = 1.0, kd: float = 1.5, n: int = 14) -> "PidGains":
        return cls(np.full(n, kp), np.full(n, ki), np.full(n, kd))

    def scaled(self, factor: float) -> "PidGains":
        return PidGains(self.kp * factor, self.ki * factor, self.kd * factor)


@dataclass(frozen=True)
class NmpcConfig:
    rolling_period: float = 1.0

    def __post_init__(self):
        if not self.rolling_period > 0:
            raise ValueError("rolling period must be > 0")

    @property
    def a1(self) -> float:
        """Position gain 10 / (3 Tr^2)."""
        return 10.0 / (3.0 * self.rolling_period**2)

    @property
    def a2(self) -> float:
        """Rate gain 5 / (2 Tr)."""
        return 5.0 / (2.0 * self.rolling_period)

    def gain_matrices(self, n: int = 14) -> tuple[np.ndarray, np.ndarray]:
        return self.a1 * np.eye(n), self.a2 * np.eye(n)


@dataclass
class TrackingError:
    e: np.ndarray
    e_dot: np.ndarray
    integral_e: np.ndarray = field(default=None)

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float)
        self.e_dot = np.asarray(self.e_dot, dtype=float)
        self.integral_e = (np.zeros_like(self.e) if self.integral_e is None
                           else np.asarray(self.integral_e, dtype=float))
        if not all(np.all(np.isfinite(a)) for a in (self.e, self.e_dot, self.integral_e)):
            raise ValueError("tracking error must be finite")

    @classmethod
    def from_state(cls, state: GeneralizedState, q_d, qd_d=None, integral_e=None) -> "TrackingError":
        q_d = np.asarray(q_d, dtype=float)
        qd_d = np.zeros_like(q_d) if qd_d is None else np.asarray(qd_d, dtype=float)
        return cls(state.q[6:] - q_d, state.q_dot[6:] - qd_d, integral_e)

    def accumulate(self, dt: float, clamp: float = INTEGRAL_CLAMP) -> None:
        """Advance the integral by one step (caller-owned state), with anti-windup clamp."""
        self.integral_e = np.clip(self.integral_e + self.e * dt, -clamp, clamp)


def pid_torque(error: TrackingError, gains: PidGains) -> np.ndarray:
    """Restoring joint torque -(Kp e + Ki int(e) + Kd e_dot)."""
    return -(gains.kp * error.e + gains.ki * error.integral_e + gains.kd * error.e_dot)


def nmpc_torque(model: SystemModel, state: GeneralizedState, desired, config: NmpcConfig,
                error: TrackingError | None = None) -> GeneralizedForces:
    """u = -H (A1 e + A2 e_dot) + C(q, qd) qd + H qdd_d on the actuated joints.

    ``desired`` is (q_d, qd_d, qdd_d) over the 14 joints. Errors are embedded
    with zero base entries; the base entries of the acceleration feedforward
    are the free-floating reaction, so the base rows of the full expression
    vanish and are then set to exactly zero.
    """
    q_d, qd_d, qdd_d = (np.asarray(x, dtype=float) for x in desired)
    if error is None:
        error = TrackingError.from_state(state, q_d, qd_d)
    H, bias = mass_and_bias(model, state)
    w_m = qdd_d - config.a1 * error.e - config.a2 * error.e_dot
    # base reaction: H_bb w_b + H_bm w_m + bias_b = 0
    w_b = np.linalg.solve(H[:6, :6], -(H[:6, 6:] @ w_m + bias[:6]))
    u = H @ np.r_[w_b, w_m] + bias
    u[:6] = 0.0
    return GeneralizedForces(u)


def pid_forces(error: TrackingError, gains: PidGains) -> GeneralizedForces:
    return GeneralizedForces(np.r_[np.zeros(6), pid_torque(error, gains)])


def evaluate_tracking_cost(times, errors, horizon: tuple[float, float] | None = None) -> float:
    """1/2 integral of e^T e over the horizon, trapezoidal rule on the samples."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(errors, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    if horizon is not None:
        lo, hi = horizon
        if not hi > lo:
            raise ValueError("empty horizon")
        keep = (t >= lo - 1e-12) & (t <= hi + 1e-12)
        t, e = t[keep], e[keep]
    if t.size < 2:
        raise ValueError("empty horizon")
    return 0.5 * float(np.trapezoid(np.sum(e * e, axis=1), t))


#: Rolling period before and after the deputy is grasped, s.
DEFAULT_ROLLING_SCHEDULE = {"pre_grasp": 1.0, "post_grasp": 2.0}


def rolling_period_schedule(phase, schedule: dict | None = None) -> float:
    """Rolling period for a phase: 1.0 s until the grasp, 2.0 s after, unless overridden.

    ``phase`` may be a phase object with ``post_grasp`` and optional
    ``rolling_period`` attributes, or the keys "pre_grasp"/"post_grasp".
    """
    sched = DEFAULT_ROLLING_SCHEDULE if schedule is None else schedule
    override = getattr(phase, "rolling_period", None)
    if override is not None:
        return float(override)
    if isinstance(phase, str):
        return float(sched[phase])
    return float(sched["post_grasp" if phase.post_grasp else "pre_grasp"])
