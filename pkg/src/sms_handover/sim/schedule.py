"""Handover task schedule: timed phases, per-arm goals, and grasp/release events."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kinematics import SpatialPose

GOAL_KINDS = ("hold", "joints", "end_effector", "deputy")


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ArmGoal:
    """What one arm tracks during a phase.

    hold          keep the arm's initial joint configuration
    joints        explicit joint configuration
    end_effector  end-effector pose in the inertial frame
    deputy        put the deputy at ``pose`` (or, when ``pose`` is None, meet the
                  deputy where it currently is) using this arm's grasp offset
    """

    kind: str
    pose: SpatialPose | None = None
    joints: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in GOAL_KINDS:
            raise ScheduleError(f"unknown goal kind {self.kind!r}")
        if self.kind == "joints" and self.joints is None:
            raise ScheduleError("joints goal needs joint angles")
        if self.kind == "end_effector" and self.pose is None:
            raise ScheduleError("end_effector goal needs a pose")


@dataclass(frozen=True)
class Event:
    time: float
    action: str  # "grasp" | "release"
    arm: str

    def __post_init__(self):
        if self.action not in ("grasp", "release"):
            raise ScheduleError(f"unknown event action {self.action!r}")
        if self.arm not in ("A", "B"):
            raise ScheduleError(f"unknown arm {self.arm!r}")


@dataclass(frozen=True)
class Phase:
    name: str
    start: float
    end: float
    goals: dict[str, ArmGoal]
    post_grasp: bool = False
    rolling_period: float | None = None

    def goal(self, arm: str) -> ArmGoal:
        return self.goals[arm]


@dataclass(frozen=True)
class TaskSchedule:
    phases: tuple[Phase, ...]
    events: tuple[Event, ...] = field(default_factory=tuple)

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ScheduleError("; ".join(problems))

    @property
    def duration(self) -> float:
        return self.phases[-1].end

    def violations(self) -> list[str]:
        out = []
        if not self.phases:
            return ["schedule has no phases"]
        for prev, nxt in zip(self.phases, self.phases[1:]):
            if abs(prev.end - nxt.start) > 1e-9:
                out.append(f"phase {nxt.name!r} does not start where {prev.name!r} ends")
        for p in self.phases:
            if not p.end > p.start:
                out.append(f"phase {p.name!r} has non-positive duration")
        times = [e.time for e in self.events]
        if times != sorted(times):
            out.append("events are not time ordered")
        # replay attachments: never two arms on the deputy at once
        holder = None
        for e in self.events:
            if e.action == "grasp":
                if holder is not None:
                    out.append(f"grasp by arm {e.arm} at t={e.time} while arm {holder} holds the deputy")
                holder = e.arm
            else:
                if holder != e.arm:
                    out.append(f"release by arm {e.arm} at t={e.time} but it does not hold the deputy")
                holder = None
        return out

    def phase_at(self, t: float) -> Phase:
        for p in self.phases:
            if t < p.end - 1e-12:
                return p
        return self.phases[-1]

    def phase_index(self, t: float) -> int:
        return self.phases.index(self.phase_at(t))

    def holder_timeline(self) -> list[tuple[float, str | None]]:
        """Attachment state after each event, in order."""
        holder, out = None, []
        for e in self.events:
            holder = e.arm if e.action == "grasp" else None
            out.append((e.time, holder))
        return out


def _pose(d: dict) -> SpatialPose:
    return SpatialPose(d["position"], d.get("quaternion", (0.0, 0.0, 0.0, 1.0)))


def goal_from_dict(d: dict) -> ArmGoal:
    kind = d["kind"]
    pose = _pose(d) if "position" in d else None
    joints = tuple(float(x) for x in d["joints"]) if "joints" in d else None
    return ArmGoal(kind, pose, joints)


def goal_to_dict(g: ArmGoal) -> dict:
    out = {"kind": g.kind}
    if g.pose is not None:
        out["position"] = [float(x) for x in g.pose.position]
        out["quaternion"] = [float(x) for x in g.pose.quaternion]
    if g.joints is not None:
        out["joints"] = list(g.joints)
    return out


def schedule_from_dict(d: dict) -> TaskSchedule:
    phases = []
    for p in d["phases"]:
        phases.append(Phase(
            name=p["name"], start=float(p["start"]), end=float(p["end"]),
            goals={arm: goal_from_dict(p["goals"][arm]) for arm in ("A", "B")},
            post_grasp=bool(p.get("post_grasp", False)),
            rolling_period=p.get("rolling_period"),
        ))
    events = tuple(Event(float(e["time"]), e["action"], e["arm"]) for e in d.get("events", []))
    return TaskSchedule(tuple(phases), events)


def schedule_to_dict(s: TaskSchedule) -> dict:
    phases = []
    for p in s.phases:
        pd = {"name": p.name, "start": p.start, "end": p.end, "post_grasp": p.post_grasp,
              "goals": {arm: goal_to_dict(g) for arm, g in p.goals.items()}}
        if p.rolling_period is not None:
            pd["rolling_period"] = p.rolling_period
        phases.append(pd)
    return {"phases": phases,
            "events": [{"time": e.time, "action": e.action, "arm": e.arm} for e in s.events]}
