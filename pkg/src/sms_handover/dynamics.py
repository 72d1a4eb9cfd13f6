"""Inertia matrix, velocity-product forces, forward dynamics, energy and momenta.

H(q) qdd + C(q, qd) qd = Q. Only the product C(q, qd) qd is ever formed
(``bias_forces``); the Coriolis matrix itself is not needed anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kinematics import GeneralizedState, _check_euler
from .model import SystemModel


class DynamicsError(RuntimeError):
    """Inertia matrix is not positive definite for the given state."""


@dataclass(frozen=True)
class InertiaMatrix:
    H: np.ndarray
    n_a: int

    @property
    def base(self) -> np.ndarray:
        return self.H[:6, :6]

    def arm(self, which: str) -> np.ndarray:
        sl = self._slice(which)
        return self.H[sl, sl]

    def coupling(self, which: str) -> np.ndarray:
        """6 x n base/arm coupling block."""
        return self.H[:6, self._slice(which)]

    @property
    def cross_arm(self) -> np.ndarray:
        return self.H[self._slice("A"), self._slice("B")]

    def _slice(self, which: str) -> slice:
        return slice(6, 6 + self.n_a) if which.upper() == "A" else slice(6 + self.n_a, self.H.shape[0])


@dataclass(frozen=True)
class GeneralizedForces:
    Q: np.ndarray

    @classmethod
    def from_torques(cls, tau_a, tau_b) -> "GeneralizedForces":
        return cls(np.concatenate([np.zeros(6), np.asarray(tau_a, float), np.asarray(tau_b, float)]))

    @property
    def base(self) -> np.ndarray:
        return self.Q[:6]

    @property
    def joint_torques(self) -> np.ndarray:
        return self.Q[6:]

    @property
    def is_free_floating(self) -> bool:
        return bool(np.all(self.Q[:6] == 0.0))


def _mass_and_bias(model: SystemModel, state: GeneralizedState):
    state.check(model)
    _check_euler(state.q)
    return _kernels.mass_and_bias(state.q, state.q_dot, *model.packed)


def inertia_matrix(model: SystemModel, state: GeneralizedState) -> InertiaMatrix:
    H, _ = _mass_and_bias(model, state)
    return InertiaMatrix(H, len(model.arm_a.links))


def bias_forces(model: SystemModel, state: GeneralizedState) -> np.ndarray:
    """C(q, qd) qd, i.e. the generalized force required at zero acceleration."""
    return _mass_and_bias(model, state)[1]


def mass_and_bias(model: SystemModel, state: GeneralizedState) -> tuple[np.ndarray, np.ndarray]:
    return _mass_and_bias(model, state)


def forward_dynamics(model: SystemModel, state: GeneralizedState, forces) -> np.ndarray:
    Q = forces.Q if isinstance(forces, GeneralizedForces) else np.asarray(forces, dtype=float)
    H, b = _mass_and_bias(model, state)
    qdd, ok = _kernels.cholesky_solve(H, Q - b)
    if not ok:
        raise DynamicsError("inertia matrix is not positive definite")
    return qdd


def kinetic_energy(model: SystemModel, state: GeneralizedState) -> float:
    """Sum over base and links of 1/2 (w^T I w + m v^T v)."""
    state.check(model)
    return float(_kernels.energy_momentum(state.q, state.q_dot, *model.packed)[0])


def momenta(model: SystemModel, state: GeneralizedState) -> tuple[np.ndarray, np.ndarray]:
    """Linear momentum and angular momentum about the system CoM, inertial frame."""
    state.check(model)
    _, P, L, _ = _kernels.energy_momentum(state.q, state.q_dot, *model.packed)
    return P, L
