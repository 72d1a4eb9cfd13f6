"""Free-floating dual-arm space manipulator simulation: dynamics, IK, control, handover scenario."""

__version__ = "0.1.0"
