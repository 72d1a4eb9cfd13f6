"""System description: base spacecraft, two revolute arm chains, and the model file format.

Model files are TOML with SI units throughout (kg, m, rad). Layout::

    name = "..."
    [base]
    mass = 240.0
    inertia = [[...], [...], [...]]        # kg m^2 about CoM, body frame

    [arms.A]
    mount_position = [x, y, z]             # base CoM -> first joint, base frame
    mount_rpy = [r, p, y]                  # fixed mount rotation (intrinsic XYZ)
    tool_offset = [0, 0, 0]                # optional, last-link frame

    [[arms.A.links]]
    name = "shoulder"
    mass = 1.5
    inertia = [[...], [...], [...]]
    joint_to_com = [x, y, z]               # link frame
    com_to_next_joint = [x, y, z]          # link frame; for the last link this is the end-effector offset
    axis = [0, 0, 1]                       # joint axis in the parent frame
    limits = [-6.283, 6.283]
    armature = 0.0                         # optional reflected rotor inertia, kg m^2
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .rotations import euler_xyz_to_dcm

ARM_NAMES = ("A", "B")
LINKS_PER_ARM = 7

Vec3 = tuple[float, float, float]
Mat3 = tuple[Vec3, Vec3, Vec3]


class ModelError(Exception):
    """Model file could not be read or parsed."""


class ModelValidationError(ModelError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid system model:\n  " + "\n  ".join(self.violations))


def _vec(x) -> Vec3:
    a = np.asarray(x, dtype=float).reshape(3)
    return (float(a[0]), float(a[1]), float(a[2]))


def _mat(x) -> Mat3:
    a = np.asarray(x, dtype=float).reshape(3, 3)
    return (_vec(a[0]), _vec(a[1]), _vec(a[2]))


@dataclass(frozen=True)
class RigidBodyParams:
    mass: float
    inertia_tensor: Mat3
    com_to_next_joint: Vec3 = (0.0, 0.0, 0.0)
    joint_to_com: Vec3 = (0.0, 0.0, 0.0)

    def violations(self, label: str) -> list[str]:
        out = []
        if not np.isfinite(self.mass) or self.mass <= 0.0:
            out.append(f"{label}: mass must be > 0 (got {self.mass})")
        inertia = np.array(self.inertia_tensor)
        if not np.all(np.isfinite(inertia)):
            out.append(f"{label}: inertia tensor has non-finite entries")
            return out
        scale = max(np.abs(inertia).max(), 1e-300)
        if np.abs(inertia - inertia.T).max() > 1e-12 * scale:
            out.append(f"{label}: inertia tensor is not symmetric")
            return out
        moments = np.linalg.eigvalsh(inertia)
        if moments.min() <= 0.0:
            out.append(f"{label}: inertia tensor is not positive definite")
        a, b, c = moments
        slack = 1e-12 * scale
        if a + b < c - slack or a + c < b - slack or b + c < a - slack:
            out.append(f"{label}: principal moments violate the triangle inequality")
        for name in ("com_to_next_joint", "joint_to_com"):
            if not np.all(np.isfinite(getattr(self, name))):
                out.append(f"{label}: {name} has non-finite entries")
        return out


@dataclass(frozen=True)
class JointParams:
    axis: Vec3
    limits: tuple[float, float] = (-2 * np.pi, 2 * np.pi)
    type: str = "revolute"
    armature: float = 0.0  # reflected actuator rotor inertia about the axis, kg m^2

    def violations(self, label: str) -> list[str]:
        out = []
        norm = float(np.linalg.norm(self.axis))
        if abs(norm - 1.0) > 1e-12:
            out.append(f"{label}: joint axis must be a unit vector (norm {norm:.15g})")
        lo, hi = self.limits
        if not lo < hi:
            out.append(f"{label}: joint limits require min < max (got {lo}, {hi})")
        if not np.isfinite(self.armature) or self.armature < 0.0:
            out.append(f"{label}: armature must be finite and >= 0 (got {self.armature})")
        if self.type != "revolute":
            out.append(f"{label}: unsupported joint type {self.type!r}")
        return out


@dataclass(frozen=True)
class Link:
    name: str
    body: RigidBodyParams
    joint: JointParams


@dataclass(frozen=True)
class ArmParams:
    links: tuple[Link, ...]
    mount_position: Vec3
    mount_rpy: Vec3 = (0.0, 0.0, 0.0)
    tool_offset: Vec3 = (0.0, 0.0, 0.0)

    @property
    def mass(self) -> float:
        return sum(link.body.mass for link in self.links)

    @property
    def end_effector_offset(self) -> Vec3:
        """Last link CoM to end-effector joint (the chain's final b vector)."""
        return self.links[-1].body.com_to_next_joint


@dataclass(frozen=True)
class SystemModel:
    name: str
    base: RigidBodyParams
    arm_a: ArmParams
    arm_b: ArmParams

    @property
    def arms(self) -> tuple[ArmParams, ArmParams]:
        return (self.arm_a, self.arm_b)

    def arm(self, which: str) -> ArmParams:
        return self.arms[arm_index(which)]

    @property
    def n_dof(self) -> int:
        return 6 + len(self.arm_a.links) + len(self.arm_b.links)

    def arm_slice(self, which: str) -> slice:
        """Slice of the generalized coordinates holding this arm's joints."""
        n_a = len(self.arm_a.links)
        if arm_index(which) == 0:
            return slice(6, 6 + n_a)
        return slice(6 + n_a, self.n_dof)

    @property
    def total_mass(self) -> float:
        return self.base.mass + self.arm_a.mass + self.arm_b.mass

    def joint_limits(self) -> np.ndarray:
        """(n_joints, 2) array of limits, arm A then arm B."""
        return np.array([link.joint.limits for arm in self.arms for link in arm.links], dtype=float)

    @functools.cached_property
    def packed(self) -> tuple:
        """Flat arrays consumed by the compiled kernels."""
        links = [link for arm in self.arms for link in arm.links]
        arm_start = np.array([0, len(self.arm_a.links), len(links)], dtype=np.int64)

        def stack(values, shape):
            arr = np.array(values, dtype=float)
            return arr.reshape(shape) if arr.size else np.zeros(shape)

        n = len(links)
        return (
            float(self.base.mass),
            np.array(self.base.inertia_tensor, dtype=float),
            np.array([arm.mount_position for arm in self.arms], dtype=float),
            np.array([euler_xyz_to_dcm(arm.mount_rpy) for arm in self.arms], dtype=float),
            np.array([arm.tool_offset for arm in self.arms], dtype=float),
            arm_start,
            stack([link.joint.axis for link in links], (n, 3)),
            stack([link.body.joint_to_com for link in links], (n, 3)),
            stack([link.body.com_to_next_joint for link in links], (n, 3)),
            stack([link.body.mass for link in links], (n,)),
            stack([link.body.inertia_tensor for link in links], (n, 3, 3)),
            stack([link.joint.armature for link in links], (n,)),
        )


def arm_index(which: str) -> int:
    try:
        return ARM_NAMES.index(str(which).upper())
    except ValueError:
        raise ValueError(f"arm must be 'A' or 'B', got {which!r}") from None


def validate_model(model: SystemModel, links_per_arm: int | None = LINKS_PER_ARM) -> list[str]:
    """Return every violated invariant; empty when the model is valid."""
    out = model.base.violations("base")
    for name, arm in zip(ARM_NAMES, model.arms):
        if links_per_arm is not None and len(arm.links) != links_per_arm:
            out.append(f"arm {name}: expected {links_per_arm} links, found {len(arm.links)}")
        for label, vec in (("mount_position", arm.mount_position), ("mount_rpy", arm.mount_rpy),
                           ("tool_offset", arm.tool_offset)):
            if not np.all(np.isfinite(vec)):
                out.append(f"arm {name}: {label} has non-finite entries")
        for i, link in enumerate(arm.links, start=1):
            label = f"arm {name} link {i} ({link.name})"
            out += link.body.violations(label)
            out += link.joint.violations(label)
    return out


def mass_ratio(model: SystemModel) -> float:
    """Combined arm mass over base mass."""
    return (model.arm_a.mass + model.arm_b.mass) / model.base.mass


# -- file format ----------------------------------------------------------------

def _link_from_dict(d: dict, index: int) -> Link:
    body = RigidBodyParams(
        mass=float(d["mass"]),
        inertia_tensor=_mat(d["inertia"]),
        com_to_next_joint=_vec(d.get("com_to_next_joint", (0, 0, 0))),
        joint_to_com=_vec(d.get("joint_to_com", (0, 0, 0))),
    )
    limits = d.get("limits", (-2 * np.pi, 2 * np.pi))
    joint = JointParams(
        axis=_vec(d["axis"]),
        limits=(float(limits[0]), float(limits[1])),
        type=str(d.get("type", "revolute")),
        armature=float(d.get("armature", 0.0)),
    )
    return Link(name=str(d.get("name", f"link{index}")), body=body, joint=joint)


def model_from_dict(data: dict) -> SystemModel:
    try:
        base = data["base"]
        arms = []
        for name in ARM_NAMES:
            a = data["arms"][name]
            arms.append(ArmParams(
                links=tuple(_link_from_dict(d, i) for i, d in enumerate(a["links"], start=1)),
                mount_position=_vec(a["mount_position"]),
                mount_rpy=_vec(a.get("mount_rpy", (0, 0, 0))),
                tool_offset=_vec(a.get("tool_offset", (0, 0, 0))),
            ))
        return SystemModel(
            name=str(data.get("name", "unnamed")),
            base=RigidBodyParams(mass=float(base["mass"]), inertia_tensor=_mat(base["inertia"])),
            arm_a=arms[0],
            arm_b=arms[1],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model description: {exc!r}") from exc


def model_to_dict(model: SystemModel) -> dict:
    def link_dict(link: Link) -> dict:
        return {
            "name": link.name,
            "mass": link.body.mass,
            "inertia": [list(r) for r in link.body.inertia_tensor],
            "joint_to_com": list(link.body.joint_to_com),
            "com_to_next_joint": list(link.body.com_to_next_joint),
            "axis": list(link.joint.axis),
            "limits": list(link.joint.limits),
            "type": link.joint.type,
            "armature": link.joint.armature,
        }

    return {
        "name": model.name,
        "base": {"mass": model.base.mass, "inertia": [list(r) for r in model.base.inertia_tensor]},
        "arms": {
            name: {
                "mount_position": list(arm.mount_position),
                "mount_rpy": list(arm.mount_rpy),
                "tool_offset": list(arm.tool_offset),
                "links": [link_dict(link) for link in arm.links],
            }
            for name, arm in zip(ARM_NAMES, model.arms)
        },
    }


def dumps_model(model: SystemModel) -> str:
    return tomli_w.dumps(model_to_dict(model))


def save_system_model(model: SystemModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def loads_model(text: str, links_per_arm: int | None = LINKS_PER_ARM) -> SystemModel:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ModelError(f"model file is not valid TOML: {exc}") from exc
    model = model_from_dict(data)
    problems = validate_model(model, links_per_arm)
    if problems:
        raise ModelValidationError(problems)
    return model


def load_system_model(path=None, links_per_arm: int | None = LINKS_PER_ARM) -> SystemModel:
    """Load and validate a model file; ``None`` loads the bundled default model."""
    path = default_model_path() if path is None else Path(path)
    if not path.is_file():
        raise ModelError(f"model file not found: {path}")
    return loads_model(path.read_text(), links_per_arm)


def default_model_path() -> Path:
    return Path(__file__).parent / "data" / "default_model.toml"
