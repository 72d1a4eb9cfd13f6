"""Scenario configuration file (TOML)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli

from ..control import DEFAULT_ROLLING_SCHEDULE, INTEGRAL_CLAMP, PidGains
from ..kinematics import SpatialPose
from ..model import SystemModel, default_model_path, load_system_model
from .schedule import TaskSchedule, schedule_from_dict

CONTROLLERS = ("pid", "nmpc")
INTEGRATORS = ("rk4", "rk45")
#: IK initial guess for arm joints: the measured state, or the previous IK solution.
IK_SEEDS = ("state", "desired")


class ConfigError(Exception):
    pass


def _pose(d: dict) -> SpatialPose:
    return SpatialPose(d["position"], d.get("quaternion", (0.0, 0.0, 0.0, 1.0)))


def _gain(value, n=14) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return np.full(n, float(arr)) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class ScenarioConfig:
    model_path: Path
    schedule: TaskSchedule
    initial_q: np.ndarray
    deputy_pose: SpatialPose
    grasp_offsets: dict[str, SpatialPose]
    controller: str = "nmpc"
    pid_gains: PidGains = field(default_factory=PidGains.uniform)
    integral_clamp: float = INTEGRAL_CLAMP
    rolling_periods: dict = field(default_factory=lambda: dict(DEFAULT_ROLLING_SCHEDULE))
    duration: float = 60.0
    dt: float = 1e-3
    control_every: int = 10
    integrator: str = "rk4"
    rtol: float = 1e-4
    atol: float = 1e-4
    ik_period: float = 0.1
    ik_seed: str = "state"
    ik_position_weight: float = 1.0
    ik_orientation_weight: float = 0.5
    ik_max_iterations: int = 100
    ik_damping: float = 1e-3
    grasp_position_tolerance: float = 0.01
    grasp_orientation_tolerance: float = 0.05
    torque_limit: float | None = None
    output_dir: Path = Path("out")
    seed: int = 0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("invalid scenario config: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if self.controller not in CONTROLLERS:
            out.append(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.integrator not in INTEGRATORS:
            out.append(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        for name in ("duration", "dt", "rtol", "atol", "ik_period", "integral_clamp",
                     "grasp_position_tolerance", "grasp_orientation_tolerance"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0")
        if self.ik_seed not in IK_SEEDS:
            out.append(f"ik seed must be one of {IK_SEEDS}, got {self.ik_seed!r}")
        if self.control_every < 1:
            out.append("control_every must be >= 1")
        if any(not float(v) > 0 for v in self.rolling_periods.values()):
            out.append("rolling periods must be > 0")
        if self.torque_limit is not None and not self.torque_limit > 0:
            out.append("torque_limit must be > 0")
        if self.duration > self.schedule.duration + 1e-9:
            out.append(f"duration {self.duration} exceeds the schedule span {self.schedule.duration}")
        return out

    @property
    def control_dt(self) -> float:
        return self.dt * self.control_every

    def with_overrides(self, **changes) -> "ScenarioConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def load_model(self) -> SystemModel:
        return load_system_model(self.model_path)


def config_from_dict(data: dict, base_dir: Path | None = None) -> ScenarioConfig:
    base_dir = Path(".") if base_dir is None else base_dir
    try:
        model_entry = data.get("model")
        if model_entry in (None, "default"):
            model_path = default_model_path()
        else:
            model_path = Path(model_entry)
            if not model_path.is_absolute():
                model_path = base_dir / model_path
        integ = data.get("integrator", {})
        ik = data.get("ik", {})
        pid = data.get("pid", {})
        nmpc = data.get("nmpc", {})
        grasp = data.get("grasp", {})
        init = data["initial"]
        dep = data["deputy"]
        out = data.get("output", {})
        initial_q = np.concatenate([
            np.asarray(init.get("base_position", (0, 0, 0)), float),
            np.asarray(init.get("base_euler", (0, 0, 0)), float),
            np.asarray(init["arm_a"], float),
            np.asarray(init["arm_b"], float),
        ])
        return ScenarioConfig(
            model_path=model_path,
            schedule=schedule_from_dict(data["schedule"]),
            initial_q=initial_q,
            deputy_pose=_pose(dep),
            grasp_offsets={"A": _pose(dep["grasp_offset_a"]), "B": _pose(dep["grasp_offset_b"])},
            controller=data.get("controller", "nmpc"),
            pid_gains=PidGains(_gain(pid.get("kp", 2.0)), _gain(pid.get("ki", 1.0)), _gain(pid.get("kd", 1.5))),
            integral_clamp=float(pid.get("integral_clamp", INTEGRAL_CLAMP)),
            rolling_periods={k: float(v) for k, v in nmpc.get("rolling_period", DEFAULT_ROLLING_SCHEDULE).items()},
            duration=float(data.get("duration", 60.0)),
            dt=float(integ.get("dt", 1e-3)),
            control_every=int(integ.get("control_every", 10)),
            integrator=integ.get("method", "rk4"),
            rtol=float(integ.get("rtol", 1e-4)),
            atol=float(integ.get("atol", 1e-4)),
            ik_period=float(ik.get("period", 0.1)),
            ik_seed=str(ik.get("guess", "state")),
            ik_position_weight=float(ik.get("position_weight", 1.0)),
            ik_orientation_weight=float(ik.get("orientation_weight", 0.5)),
            ik_max_iterations=int(ik.get("max_iterations", 100)),
            ik_damping=float(ik.get("damping", 1e-3)),
            grasp_position_tolerance=float(grasp.get("position_tolerance", 0.01)),
            grasp_orientation_tolerance=float(grasp.get("orientation_tolerance", 0.05)),
            torque_limit=data.get("torque_limit"),
            output_dir=Path(out.get("directory", "out")),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario config: {exc!r}") from exc


def load_scenario_config(path=None) -> ScenarioConfig:
    """Read a scenario file; ``None`` loads the bundled default handover scenario."""
    path = default_config_path() if path is None else Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    try:
        data = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(data, path.parent)


def default_config_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "default_scenario.toml"
