"""Self-check suites: model validation, Jacobian, inertia structure, symbolic
oracle, conservation, NMPC error dynamics and integrator order.

Each suite returns a SuiteResult; ``run_suites`` runs them in order and skips
everything else when the model fails validation.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .control import NmpcConfig, TrackingError, nmpc_torque
from .dynamics import forward_dynamics, inertia_matrix, mass_and_bias
from .kinematics import GeneralizedState, end_effector_pose, end_effector_velocity
from .model import (ArmParams, JointParams, Link, ModelError, ModelValidationError, RigidBodyParams,
                    SystemModel, load_system_model)
from .rotations import rotation_error

JACOBIAN_TOL = 1e-6
SYMMETRY_TOL = 1e-10
ORACLE_TOL = 1e-8
MOMENTUM_TOL = 1e-8
COM_TOL = 1e-9  # m per 60 s
ENERGY_TOL = 1e-6
NMPC_IDENTITY_TOL = 1e-9
NMPC_CLOSED_LOOP_TOL = 0.05
RK4_RATIO_RANGE = (12.0, 20.0)


@dataclass
class SuiteResult:
    name: str
    passed: bool | None  # None: skipped
    detail: str = ""
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        return "skip" if self.passed is None else ("pass" if self.passed else "FAIL")


def random_state(rng: np.random.Generator, n_dof: int = 20, rate_scale: float = 1.0) -> GeneralizedState:
    """Generic state away from the attitude singularity."""
    q = np.r_[rng.uniform(-0.5, 0.5, 3), rng.uniform(-1.0, 1.0, 3), rng.uniform(-np.pi, np.pi, n_dof - 6)]
    return GeneralizedState(q, rate_scale * rng.uniform(-1.0, 1.0, n_dof))


# -- planar oracle ----------------------------------------------------------

#: Reference parameters of the 3-DOF planar reduced model: base mass and yaw
#: inertia, link mass and yaw inertia, joint-to-CoM distance, arm mount (x, y).
PLANAR_PARAMS = dict(mb=240.0, Ib=40.0, m=3.0, Izz=0.2, l=0.4, mx=0.3, my=0.5)
#: Engine coordinates of (base x, base yaw, joint) in the reduced model.
PLANAR_INDEX = (0, 5, 6)


def planar_model(mb=240.0, Ib=40.0, m=3.0, Izz=0.2, l=0.4, mx=0.3, my=0.5) -> SystemModel:
    """Base plus a single z-axis link on arm A; arm B is empty (7 coordinates)."""
    link = Link("link", RigidBodyParams(m, ((0.1, 0, 0), (0, 0.1, 0), (0, 0, Izz)), (0, 0, 0), (l, 0, 0)),
                JointParams((0.0, 0.0, 1.0)))
    base = RigidBodyParams(mb, ((30.0, 0, 0), (0, 35.0, 0), (0, 0, Ib)))
    return SystemModel("planar", base, ArmParams((link,), (mx, my, 0.0)), ArmParams((), (0.0, 0.0, 0.0)))


def planar_reference(x, psi, phi, xd, psid, phid, mb=240.0, Ib=40.0, m=3.0, Izz=0.2, l=0.4, mx=0.3, my=0.5):
    """Closed-form H and C(q, qd) qd of the planar model in (x, psi, phi).

    Obtained once from the Euler-Lagrange equations with a computer algebra
    system; frozen here as the reference.
    """
    s_fp, c_fp = np.sin(phi + psi), np.cos(phi + psi)
    sp, cp = np.sin(psi), np.cos(psi)
    sf, cf = np.sin(phi), np.cos(phi)
    h01 = -m * (l * s_fp + mx * sp + my * cp)
    h02 = -l * m * s_fp
    h11 = Ib + Izz + l * l * m + 2 * l * m * mx * cf + 2 * l * m * my * sf + m * (mx * mx + my * my)
    h12 = Izz + l * l * m + l * m * mx * cf + l * m * my * sf
    h22 = Izz + l * l * m
    H = np.array([[m + mb, h01, h02], [h01, h11, h12], [h02, h12, h22]])
    k = -mx * sf + my * cf
    b = np.array([
        -m * (l * c_fp * (phid + psid) ** 2 + mx * psid ** 2 * cp - my * psid ** 2 * sp),
        l * m * phid * (phid + 2 * psid) * k,
        -l * m * psid ** 2 * k,
    ])
    return H, b


def _rel(err: float, ref: float) -> float:
    return err / max(ref, 1e-300)


# -- suites -----------------------------------------------------------------

def suite_validation(model_path=None) -> tuple[SuiteResult, SystemModel | None]:
    try:
        model = load_system_model(model_path)
    except ModelValidationError as exc:
        return SuiteResult("validation", False, "; ".join(exc.violations)), None
    except (ModelError, OSError) as exc:
        return SuiteResult("validation", False, str(exc)), None
    return SuiteResult("validation", True, f"model {model.name!r}: {model.n_dof} coordinates"), model


def suite_jacobian(model: SystemModel, n: int = 100, seed: int = 0, h: float = 1e-6) -> SuiteResult:
    """J q_dot against central differences of forward kinematics."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        s = random_state(rng, model.n_dof)
        plus = s.with_q(s.q + h * s.q_dot)
        minus = s.with_q(s.q - h * s.q_dot)
        for arm in ("A", "B"):
            a, b = end_effector_pose(model, plus, arm), end_effector_pose(model, minus, arm)
            fd = np.r_[(a.position - b.position) / (2 * h), rotation_error(a.dcm, b.dcm) / (2 * h)]
            worst = max(worst, _rel(np.linalg.norm(end_effector_velocity(model, s, arm) - fd), np.linalg.norm(fd)))
    return SuiteResult("jacobian", worst < JACOBIAN_TOL, f"max relative error {worst:.2e} over {n} states",
                       {"max_relative_error": worst})


def suite_inertia(model: SystemModel, n: int = 100, seed: int = 1) -> SuiteResult:
    rng = np.random.default_rng(seed)
    asym = cross = 0.0
    min_eig = np.inf
    for _ in range(n):
        Hm = inertia_matrix(model, random_state(rng, model.n_dof))
        asym = max(asym, _rel(np.abs(Hm.H - Hm.H.T).max(), np.abs(Hm.H).max()))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(Hm.H).min()))
        cross = max(cross, float(np.abs(Hm.cross_arm).max()))
    ok = asym < SYMMETRY_TOL and min_eig > 0 and cross == 0.0
    return SuiteResult("inertia", ok, f"asymmetry {asym:.1e}, min eigenvalue {min_eig:.2e}, cross block {cross:g}",
                       {"asymmetry": asym, "min_eigenvalue": min_eig, "cross_block": cross})


def suite_oracle(n: int = 1000, seed: int = 2) -> SuiteResult:
    """Engine H and bias on the planar model against the symbolic closed form."""
    model = planar_model(**PLANAR_PARAMS)
    rng = np.random.default_rng(seed)
    idx = list(PLANAR_INDEX)
    worst_h = worst_b = 0.0
    for _ in range(n):
        x, psi, phi = rng.uniform(-np.pi, np.pi, 3)
        xd, psid, phid = rng.uniform(-2.0, 2.0, 3)
        q = np.zeros(model.n_dof)
        qd = np.zeros(model.n_dof)
        q[idx] = x, psi, phi
        qd[idx] = xd, psid, phid
        H, b = mass_and_bias(model, GeneralizedState(q, qd))
        H_ref, b_ref = planar_reference(x, psi, phi, xd, psid, phid, **PLANAR_PARAMS)
        worst_h = max(worst_h, _rel(np.abs(H[np.ix_(idx, idx)] - H_ref).max(), np.abs(H_ref).max()))
        worst_b = max(worst_b, _rel(np.abs(b[idx] - b_ref).max(), np.abs(b_ref).max()))
    ok = worst_h < ORACLE_TOL and worst_b < ORACLE_TOL
    return SuiteResult("oracle", ok, f"H rel {worst_h:.1e}, bias rel {worst_b:.1e} over {n} samples",
                       {"H_relative_error": worst_h, "bias_relative_error": worst_b})


def torque_profile(t: float, n_joints: int = 14, amplitude: float = 0.25) -> np.ndarray:
    """Smooth, non-trivial internal torque history used by the conservation checks."""
    j = np.arange(n_joints)
    return amplitude * np.sin(0.7 * t * (1 + 0.15 * j) + 0.9 * j) * np.cos(0.23 * t + 0.3 * j)


def conservation_run(model: SystemModel, duration: float = 60.0, dt: float = 1e-3, hold: int = 10,
                     q0=None) -> dict:
    """Integrate from rest under internal torques; return momentum and CoM drift."""
    packed = model.packed
    n = model.n_dof
    q = np.zeros(n) if q0 is None else np.array(q0, float)
    if q0 is None:
        q[6:] = 0.3
    qd = np.zeros(n)
    _T, P0, L0, c0 = _kernels.energy_momentum(q, qd, *packed)
    dP = dL = dc = 0.0
    p_peak = l_peak = 0.0
    base_i = float(np.linalg.eigvalsh(np.asarray(model.base.inertia_tensor)).max())
    steps = int(round(duration / dt))
    Q = np.zeros(n)
    for k in range(steps):
        if k % hold == 0:
            Q[6:] = torque_profile(k * dt, n - 6)
        q, qd, ok = _kernels.rk4_step(q, qd, Q, dt, *packed)
        if not ok:
            raise RuntimeError("inertia matrix lost definiteness")
        if k % hold == hold - 1:
            _T, P, L, c = _kernels.energy_momentum(q, qd, *packed)
            dP = max(dP, float(np.linalg.norm(P - P0)))
            dL = max(dL, float(np.linalg.norm(L - L0)))
            dc = max(dc, float(np.linalg.norm(c - c0)))
            # momentum exchanged between the base and the arms
            p_peak = max(p_peak, model.base.mass * float(np.linalg.norm(qd[0:3])))
            w0 = _kernels.base_frame(q[3:6], qd[3:6])[2]
            l_peak = max(l_peak, base_i * float(np.linalg.norm(w0)))
    return {"linear_drift": dP, "angular_drift": dL, "com_displacement": dc,
            "linear_relative": _rel(dP, p_peak), "angular_relative": _rel(dL, l_peak),
            "linear_peak": p_peak, "angular_peak": l_peak, "duration": duration}


def passive_energy_drift(model: SystemModel, duration: float = 10.0, dt: float = 1e-3, seed: int = 3) -> float:
    """Relative kinetic-energy drift with all torques zero, from random rates."""
    rng = np.random.default_rng(seed)
    s = random_state(rng, model.n_dof, rate_scale=0.5)
    s = s.with_q(np.r_[s.q[:3], 0.1 * s.q[3:6], s.q[6:]])
    packed = model.packed
    q, qd = s.q, s.q_dot
    T0 = _kernels.energy_momentum(q, qd, *packed)[0]
    Q = np.zeros(model.n_dof)
    worst = 0.0
    for k in range(int(round(duration / dt))):
        q, qd, _ok = _kernels.rk4_step(q, qd, Q, dt, *packed)
        if k % 10 == 9:
            worst = max(worst, abs(_kernels.energy_momentum(q, qd, *packed)[0] - T0) / T0)
    return worst


def suite_momentum(model: SystemModel, duration: float = 60.0) -> SuiteResult:
    r = conservation_run(model, duration)
    r["energy_relative"] = passive_energy_drift(model)
    com_limit = COM_TOL * duration / 60.0
    ok = (r["linear_relative"] < MOMENTUM_TOL and r["angular_relative"] < MOMENTUM_TOL
          and r["com_displacement"] < com_limit and r["energy_relative"] < ENERGY_TOL)
    detail = (f"momentum rel {r['linear_relative']:.1e}/{r['angular_relative']:.1e}, "
              f"CoM {r['com_displacement']:.1e} m over {duration:g} s, passive energy rel {r['energy_relative']:.1e}")
    return SuiteResult("momentum", ok, detail, r)


def nmpc_identity_error(model: SystemModel, state: GeneralizedState, q_d, qd_d, qdd_d, t_r: float) -> float:
    """|q_ddot - (qdd_d - A1 e - A2 e_dot)| on the joints under the NMPC torque."""
    cfg = NmpcConfig(t_r)
    forces = nmpc_torque(model, state, (q_d, qd_d, qdd_d), cfg)
    qdd = forward_dynamics(model, state, forces)
    e = state.q[6:] - q_d
    e_dot = state.q_dot[6:] - qd_d
    return float(np.abs(qdd[6:] - (qdd_d - cfg.a1 * e - cfg.a2 * e_dot)).max())


def analytic_error(t, e0, t_r: float):
    """Solution of e'' + A2 e' + A1 e = 0 with e(0) = e0, e'(0) = 0 (underdamped)."""
    cfg = NmpcConfig(t_r)
    sigma = cfg.a2 / 2.0
    wd = np.sqrt(cfg.a1 - sigma * sigma)
    t = np.asarray(t, float)[:, None]
    return np.asarray(e0)[None, :] * np.exp(-sigma * t) * (np.cos(wd * t) + sigma / wd * np.sin(wd * t))


def nmpc_closed_loop(model: SystemModel, e0, t_r: float = 1.0, dt: float = 1e-3, control_every: int = 1,
                     q_d=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regulate from error e0 for one rolling period; return (t, e_sim, e_analytic)."""
    n_j = model.n_dof - 6
    q_d = np.full(n_j, 0.3) if q_d is None else np.asarray(q_d, float)
    q = np.zeros(model.n_dof)
    q[6:] = q_d + e0
    q_, qd_ = q, np.zeros(model.n_dof)
    zeros = np.zeros(n_j)
    steps = int(round(t_r / dt))
    t = np.arange(steps + 1) * dt
    errs = np.zeros((steps + 1, n_j))
    errs[0] = e0
    Q = None
    for k in range(steps):
        if k % control_every == 0:
            Q = nmpc_torque(model, GeneralizedState(q_, qd_), (q_d, zeros, zeros), NmpcConfig(t_r)).Q
        q_, qd_, _ok = _kernels.rk4_step(q_, qd_, Q, dt, *model.packed)
        errs[k + 1] = q_[6:] - q_d
    return t, errs, analytic_error(t, e0, t_r)


def suite_nmpc(model: SystemModel, n: int = 50, seed: int = 4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    n_j = model.n_dof - 6
    worst_id = 0.0
    for _ in range(n):
        s = random_state(rng, model.n_dof)
        worst_id = max(worst_id, nmpc_identity_error(model, s, rng.uniform(-1, 1, n_j), rng.uniform(-1, 1, n_j),
                                                     rng.uniform(-1, 1, n_j), rng.choice([1.0, 2.0])))
    e0 = rng.uniform(-0.2, 0.2, n_j)
    _t, e_sim, e_ref = nmpc_closed_loop(model, e0)
    loop = float((np.abs(e_sim - e_ref).max(axis=0) / np.abs(e0)).max())
    ok = worst_id < NMPC_IDENTITY_TOL and loop < NMPC_CLOSED_LOOP_TOL
    return SuiteResult("nmpc", ok, f"identity {worst_id:.1e}, closed-loop deviation {100 * loop:.2f}% of |e0|",
                       {"identity_error": worst_id, "closed_loop_relative": loop})


def rk4_order_ratio(model: SystemModel, horizon: float = 0.5, dt: float = 0.01, seed: int = 5) -> float:
    """Fixed-horizon error ratio e(dt) / e(dt/2) against a fine-step reference."""
    rng = np.random.default_rng(seed)
    s = random_state(rng, model.n_dof)
    s = s.with_q(np.r_[s.q[:3], 0.1 * s.q[3:6], s.q[6:]])
    Q = np.r_[np.zeros(6), rng.uniform(-1, 1, model.n_dof - 6)]

    def run(h):
        q, qd = s.q, s.q_dot
        for _ in range(int(round(horizon / h))):
            q, qd, _ok = _kernels.rk4_step(q, qd, Q, h, *model.packed)
        return np.r_[q, qd]

    ref = run(dt / 64)
    return float(np.linalg.norm(run(dt) - ref) / np.linalg.norm(run(dt / 2) - ref))


def suite_integrator(model: SystemModel) -> SuiteResult:
    ratio = rk4_order_ratio(model)
    lo, hi = RK4_RATIO_RANGE
    return SuiteResult("integrator", lo <= ratio <= hi, f"step-halving error ratio {ratio:.2f}", {"ratio": ratio})


#: Suite names in execution order ("validation" always runs first).
SUITES = ("validation", "jacobian", "inertia", "oracle", "momentum", "nmpc", "integrator")


def run_suites(model_path=None, suites=None, report=print) -> list[SuiteResult]:
    """Run the named suites (all by default); print one line per suite via ``report``."""
    wanted = list(SUITES) if not suites else [s for s in SUITES if s in set(suites)]
    unknown = set(suites or ()) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(sorted(unknown))}")
    results = []
    t0 = time.perf_counter()
    val, model = suite_validation(model_path)
    val.seconds = time.perf_counter() - t0
    if "validation" in wanted or model is None:
        results.append(val)
    runners = {
        "jacobian": lambda: suite_jacobian(model),
        "inertia": lambda: suite_inertia(model),
        "oracle": suite_oracle,
        "momentum": lambda: suite_momentum(model),
        "nmpc": lambda: suite_nmpc(model),
        "integrator": lambda: suite_integrator(model),
    }
    if report:
        for r in results:
            report(f"{r.status:4}  {r.name:<11} {r.detail}")
    for name in wanted:
        if name == "validation":
            continue
        if model is None:
            r = SuiteResult(name, None, "skipped: model failed validation")
        else:
            t0 = time.perf_counter()
            r = runners[name]()
            r.seconds = time.perf_counter() - t0
        results.append(r)
        if report:
            report(f"{r.status:4}  {r.name:<11} {r.detail}")
    return results
