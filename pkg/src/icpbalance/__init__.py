"""Capture-point balance control with step, timing and cross-over adaptation."""

__version__ = "0.1.0"

from .geom import ConvexPolygon
from .lip import RobotParams, LipState, icp_evolve, solve_reference
from .capture import ReachabilityParams, build_base_reachability, one_step_region, n_step_regions
from .qpfb import FeedbackGains, solve_feedback
from .timing import PhaseClock, swing_time_adjust
from .sim import MECHANISM_SETS, MechanismConfig, Disturbance, SimScenario, step_simulation, sweep_recoverable

__all__ = [
    "ConvexPolygon",
    "RobotParams",
    "LipState",
    "icp_evolve",
    "solve_reference",
    "ReachabilityParams",
    "build_base_reachability",
    "one_step_region",
    "n_step_regions",
    "FeedbackGains",
    "solve_feedback",
    "PhaseClock",
    "swing_time_adjust",
    "MECHANISM_SETS",
    "MechanismConfig",
    "Disturbance",
    "SimScenario",
    "step_simulation",
    "sweep_recoverable",
]
