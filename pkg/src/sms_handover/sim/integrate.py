"""Time stepping of the coupled (q, q_dot) system."""
from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .. import _kernels
from ..dynamics import GeneralizedForces
from ..kinematics import GeneralizedState
from ..model import SystemModel


class IntegrationError(RuntimeError):
    """State became non-finite or the inertia matrix lost definiteness."""


def _force_vector(forces) -> np.ndarray:
    return forces.Q if isinstance(forces, GeneralizedForces) else np.asarray(forces, dtype=float)


def step(model: SystemModel, state: GeneralizedState, forces, dt: float) -> GeneralizedState:
    """One fixed-step RK4 step with the generalized forces held constant over ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    q, qd, ok = _kernels.rk4_step(state.q, state.q_dot, _force_vector(forces), float(dt), *model.packed)
    if not ok or not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
        raise IntegrationError(f"integration blew up (finite={np.all(np.isfinite(q))}, definite={ok})")
    return GeneralizedState(q, qd)


def advance(model: SystemModel, state: GeneralizedState, forces, duration: float, dt: float,
            method: str = "rk4", rtol: float = 1e-4, atol: float = 1e-4) -> GeneralizedState:
    """Integrate over ``duration`` with zero-order-hold forces.

    ``rk4`` takes round(duration / dt) fixed steps; ``rk45`` uses an adaptive
    embedded Runge-Kutta pair with the given tolerances.
    """
    Q = _force_vector(forces)
    if method == "rk4":
        n = max(1, int(round(duration / dt)))
        h = duration / n
        q, qd = state.q, state.q_dot
        for _ in range(n):
            q, qd, ok = _kernels.rk4_step(q, qd, Q, h, *model.packed)
            if not ok:
                raise IntegrationError("inertia matrix lost positive definiteness")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qd))):
            raise IntegrationError("integration produced non-finite state")
        return GeneralizedState(q, qd)
    if method == "rk45":
        n = state.q.size
        packed = model.packed

        def rhs(_t, y):
            qdd, ok = _kernels.accel(y[:n], y[n:], Q, *packed)
            if not ok:
                raise IntegrationError("inertia matrix lost positive definiteness")
            return np.concatenate([y[n:], qdd])

        sol = solve_ivp(rhs, (0.0, duration), np.concatenate([state.q, state.q_dot]),
                        method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(sol.message)
        y = sol.y[:, -1]
        return GeneralizedState(y[:n], y[n:])
    raise ValueError(f"unknown integrator {method!r}")
