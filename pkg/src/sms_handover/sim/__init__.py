"""Scenario layer: schedule, configuration, integration, runner, metrics, export."""
from .config import ConfigError, ScenarioConfig, default_config_path, load_scenario_config
from .integrate import IntegrationError, advance, step
from .metrics import MetricsReport, compute_metrics
from .scenario import DeputyState, SimulationError, TrajectoryLog, run_scenario
from .schedule import ArmGoal, Event, Phase, ScheduleError, TaskSchedule


def default_handover_schedule() -> TaskSchedule:
    """The bundled 60 s capture / handover / demonstration schedule."""
    return load_scenario_config().schedule


__all__ = [
    "ArmGoal", "ConfigError", "DeputyState", "Event", "IntegrationError", "MetricsReport", "Phase",
    "ScenarioConfig", "ScheduleError", "SimulationError", "TaskSchedule", "TrajectoryLog", "advance",
    "compute_metrics", "default_config_path", "default_handover_schedule", "load_scenario_config",
    "run_scenario", "step",
]
