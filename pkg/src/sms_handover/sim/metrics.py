"""Post-run metrics: overshoot, settling, tracking cost, torque, base drift, conservation."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..control import evaluate_tracking_cost

#: Settling band as a fraction of the initial error of each step.
SETTLING_FRACTION = 0.02
#: Steps smaller than this (rad) are not scored for overshoot/settling.
MIN_STEP = 0.05
#: Trailing window of each phase over which base drift is measured, s.
DRIFT_WINDOW = 10.0


def step_response_metrics(t, y, target, band_fraction: float = SETTLING_FRACTION) -> tuple[float, float]:
    """Overshoot (%) and settling time (s) of ``y`` moving from y[0] to ``target``.

    Overshoot is the largest excursion past the target, relative to the step
    size. Settling time runs from t[0] to the first sample after which ``y``
    stays within band_fraction * step of the target.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    step = target - y[0]
    if step == 0.0:
        return 0.0, 0.0
    overshoot = max(0.0, float(np.max(np.sign(step) * (y - target)))) / abs(step) * 100.0
    outside = np.nonzero(np.abs(y - target) > band_fraction * abs(step))[0]
    if outside.size == 0:
        return overshoot, 0.0
    last = min(outside[-1] + 1, t.size - 1)
    return overshoot, float(t[last] - t[0])


@dataclass
class MetricsReport:
    controller: str
    overshoot_percent: list[float]  # per joint, worst phase, measured against the phase's final target
    settling_time: list[float]  # per joint, worst phase, s
    phase_overshoot_percent: list[list[float | None]]  # [phase][joint], None if not scored
    phase_settling_time: list[list[float | None]]
    ee_tracking_cost: dict[str, float]  # 1/2 int |e_ee|^2 dt per arm, m^2 s
    joint_tracking_cost: dict[str, float]  # 1/2 int |e_q|^2 dt per arm, rad^2 s
    max_abs_torque: float
    max_abs_torque_per_joint: list[float]
    base_drift: list[float]  # per phase, |delta base pose| over the trailing window
    base_position_drift: list[float]
    base_attitude_drift: list[float]
    final_ee_position_error: list[list[float]]  # [phase][arm] at the end of each phase
    linear_momentum_drift: float
    angular_momentum_drift: float
    linear_momentum_drift_relative: float
    angular_momentum_drift_relative: float
    com_displacement: float
    energy: list[float] = field(repr=False)
    failed: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def max_base_drift(self) -> float:
        return max(self.base_drift) if self.base_drift else 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _base_momentum_scale(log) -> tuple[float, float]:
    """Peak base momentum magnitudes: the momentum exchanged with the arms."""
    from ..rotations import euler_rate_matrix

    return float(np.max(np.linalg.norm(log.q_dot[:, 0:3], axis=1))), float(np.max(
        [np.linalg.norm(euler_rate_matrix(q[3:6], check=False) @ qd[3:6]) for q, qd in zip(log.q, log.q_dot)]))


def compute_metrics(log, base_mass: float | None = None, base_inertia=None) -> MetricsReport:
    t = log.t
    err = log.joint_error
    n_j = err.shape[1]
    n_phase = len(log.phase_bounds)
    ph_os: list[list[float | None]] = []
    ph_ts: list[list[float | None]] = []
    for k in range(n_phase):
        idx = np.nonzero(log.phase == k)[0]
        os_row: list[float | None] = []
        ts_row: list[float | None] = []
        for j in range(n_j):
            q = log.q[idx, 6 + j]
            target = log.q_des[idx[-1], j] if idx.size else 0.0
            if idx.size < 2 or abs(target - q[0]) < MIN_STEP:
                os_row.append(None)
                ts_row.append(None)
                continue
            os_, ts_ = step_response_metrics(t[idx], q, target)
            os_row.append(os_)
            ts_row.append(ts_)
        ph_os.append(os_row)
        ph_ts.append(ts_row)

    def worst(rows, j):
        vals = [r[j] for r in rows if r[j] is not None]
        return max(vals) if vals else 0.0

    drift, drift_p, drift_a, final_err = [], [], [], []
    for k, (start, end) in enumerate(log.phase_bounds):
        idx = np.nonzero(log.phase == k)[0]
        if idx.size == 0:
            continue
        hi = idx[-1]
        lo_t = max(start, t[hi] - DRIFT_WINDOW)
        lo = idx[np.searchsorted(t[idx], lo_t - 1e-12)]
        dp = float(np.linalg.norm(log.q[hi, 0:3] - log.q[lo, 0:3]))
        da = float(np.linalg.norm(log.q[hi, 3:6] - log.q[lo, 3:6]))
        drift_p.append(dp)
        drift_a.append(da)
        drift.append(float(np.hypot(dp, da)))
        final_err.append([float(x) for x in log.ee_position_error[hi]])

    n_a = n_j // 2
    P, L = log.linear_momentum, log.angular_momentum
    dP = float(np.max(np.linalg.norm(P - P[0], axis=1)))
    dL = float(np.max(np.linalg.norm(L - L[0], axis=1)))
    v_scale, w_scale = _base_momentum_scale(log)
    p_ref = (base_mass or 1.0) * v_scale
    l_ref = (float(np.max(np.linalg.eigvalsh(np.asarray(base_inertia)))) if base_inertia is not None else 1.0) * w_scale
    return MetricsReport(
        controller=log.controller,
        overshoot_percent=[worst(ph_os, j) for j in range(n_j)],
        settling_time=[worst(ph_ts, j) for j in range(n_j)],
        phase_overshoot_percent=ph_os,
        phase_settling_time=ph_ts,
        ee_tracking_cost={arm: evaluate_tracking_cost(t, log.ee_position_error[:, k]) for k, arm in enumerate("AB")},
        joint_tracking_cost={"A": evaluate_tracking_cost(t, err[:, :n_a]), "B": evaluate_tracking_cost(t, err[:, n_a:])},
        max_abs_torque=float(np.max(np.abs(log.torque))),
        max_abs_torque_per_joint=[float(x) for x in np.max(np.abs(log.torque), axis=0)],
        base_drift=drift,
        base_position_drift=drift_p,
        base_attitude_drift=drift_a,
        final_ee_position_error=final_err,
        linear_momentum_drift=dP,
        angular_momentum_drift=dL,
        linear_momentum_drift_relative=dP / p_ref if p_ref > 0 else 0.0,
        angular_momentum_drift_relative=dL / l_ref if l_ref > 0 else 0.0,
        com_displacement=float(np.max(np.linalg.norm(log.com - log.com[0], axis=1))),
        energy=[float(x) for x in log.kinetic_energy],
        failed=log.failed,
        warnings=list(log.warnings),
    )
