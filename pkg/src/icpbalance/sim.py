"""Closed-loop walk-in-place simulator with push disturbances.

The plant is an ideal pendulum: the commanded eCMP is tracked exactly and
the state is advanced with the closed-form exponential update every tick.
The controller stacks reference generation, phase-time adaptation,
capture-region step adjustment and the QP feedback.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .capture import (
    ReachabilityParams,
    ReachabilitySet,
    build_base_reachability,
    capture_regions,
    adjust_step,
    select_reachability,
)
from .geom import ConvexPolygon, project_point
from .lip import (
    Footstep,
    FootstepPlan,
    LipState,
    RobotParams,
    advance_state,
    other_side,
    solve_reference,
)
from .qpfb import FeedbackGains, FeedbackSolver, momentum_rate
from .timing import PhaseClock, swing_time_adjust, transfer_time_adjust
from .lip import icp_evolve

RECOVERY_TOL = 1e-3
CONTAINS_TOL = 1e-7


@dataclass(frozen=True)
class MechanismConfig:
    icp_control: bool = True
    step_adjust: bool = False
    swing_time_adjust: bool = False
    transfer_time_adjust: bool = False
    crossover: bool = False

    def __post_init__(self):
        if self.step_adjust and not self.icp_control:
            raise ValueError("step_adjust requires icp_control")
        if self.crossover and not self.step_adjust:
            raise ValueError("crossover requires step_adjust")


MECHANISM_SETS: Dict[str, MechanismConfig] = {
    "icp_only": MechanismConfig(True, False, False, False, False),
    "step": MechanismConfig(True, True, False, False, False),
    "step_swing": MechanismConfig(True, True, True, False, False),
    "step_swing_transfer": MechanismConfig(True, True, True, True, False),
    "all": MechanismConfig(True, True, True, True, True),
}


@dataclass(frozen=True)
class Disturbance:
    direction: float  # radians, counter-clockwise from forward
    delta_v: float
    phase: float = 0.25
    swing_side: str = "right"
    occurrence: int = 2  # which swing of ``swing_side`` gets the push

    def __post_init__(self):
        if not self.delta_v >= 0:
            raise ValueError("delta_v must be nonnegative")
        if not 0.0 <= self.phase <= 1.0:
            raise ValueError("disturbance phase must lie in [0, 1]")
        if self.swing_side not in ("left", "right"):
            raise ValueError("swing_side must be 'left' or 'right'")
        if self.occurrence < 1:
            raise ValueError("occurrence counts from 1")

    @property
    def vector(self) -> np.ndarray:
        return self.delta_v * np.array([math.cos(self.direction), math.sin(self.direction)])


@dataclass(frozen=True)
class GaitParams:
    swing_duration: float = 0.7
    transfer_duration: float = 0.3
    min_swing_duration: float = 0.35
    foot_length: float = 0.22
    foot_width: float = 0.11
    control_rate: float = 500.0
    recovery_steps: int = 10
    preview_steps: int = 4
    capture_steps: int = 3
    region_interval: int = 5  # ticks between capture-region rebuilds

    def __post_init__(self):
        for name in ("swing_duration", "transfer_duration", "foot_length", "foot_width", "control_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.min_swing_duration <= self.swing_duration:
            raise ValueError("min_swing_duration must lie in [0, swing_duration]")
        for name in ("recovery_steps", "preview_steps", "capture_steps", "region_interval"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate


@dataclass(frozen=True)
class SimScenario:
    robot: RobotParams = field(default_factory=RobotParams)
    gait: GaitParams = field(default_factory=GaitParams)
    reach: ReachabilityParams = field(default_factory=ReachabilityParams)
    gains: FeedbackGains = field(default_factory=FeedbackGains)


@dataclass
class SimResult:
    recovered: bool
    steps_to_recover: int
    fell: bool
    footholds: List[dict]
    log: Optional[List[dict]]
    violations: List[str]
    rule3_activations: int = 0
    crossover_steps: int = 0
    duration: float = 0.0


def _lateral(side: str, width: float) -> np.ndarray:
    return np.array([0.0, width if side == "left" else -width])


class Walker:
    """Mutable controller + plant state for one simulation."""

    def __init__(self, scenario: SimScenario, mechanisms: MechanismConfig, record: bool = False, first_swing: str = "right"):
        self.sc = scenario
        self.mech = mechanisms
        self.record = record
        self.omega = scenario.robot.omega
        self.dt = scenario.gait.dt
        g = scenario.gait
        w = scenario.reach.w_nom
        self.feet = {"left": np.array([0.0, w / 2]), "right": np.array([0.0, -w / 2])}
        self.soles = {s: self._sole(p) for s, p in self.feet.items()}
        self.com = np.zeros(2)
        self.icp = np.zeros(2)
        self.time = 0.0
        self.swing_side = first_swing
        self.swing_counts = {"left": 0, "right": 0}
        self.solver = FeedbackSolver(scenario.gains)
        self.reach_sets = {s: build_base_reachability(scenario.reach, s) for s in ("left", "right")}
        self.log: List[dict] = []
        self.footholds: List[dict] = []
        self.violations: List[str] = []
        self.rule3 = 0
        self.crossovers = 0
        self.disturbed = False
        self.steps_since = 0
        self.recovered = False
        self.fell = False
        self.support_violation = 0.0
        self._start_phase("transfer")

    # -- helpers -----------------------------------------------------------
    def _sole(self, p) -> ConvexPolygon:
        g = self.sc.gait
        return ConvexPolygon.rectangle(p, g.foot_length, g.foot_width)

    def _nominal_target(self) -> np.ndarray:
        stance = other_side(self.swing_side)
        return self.feet[stance] + _lateral(self.swing_side, self.sc.reach.w_nom)

    def _plan(self, in_swing: bool) -> None:
        g = self.sc.gait
        steps = []
        side = self.swing_side
        pos = self.target
        for _ in range(g.preview_steps):
            steps.append(Footstep(side, self._sole(pos), g.swing_duration, g.transfer_duration))
            side = other_side(side)
            pos = pos + _lateral(side, self.sc.reach.w_nom)
        plan = FootstepPlan(tuple(steps), self.soles["left"], self.soles["right"], g.transfer_duration, in_swing)
        state = LipState(self.phase_com, np.zeros(2), self.omega)
        self.ref = solve_reference(plan, state, self.sc.robot)
        self.ref_segment = self.ref.segments[0]

    def _start_phase(self, kind: str) -> None:
        g = self.sc.gait
        forward = kind == "swing" or self.disturbed
        duration = g.swing_duration if kind == "swing" else g.transfer_duration
        self.phase = kind
        self.clock = PhaseClock.for_phase(kind, duration, forward_only=forward)
        self.phase_com = self.com.copy()
        stance = other_side(self.swing_side)
        if kind == "swing":
            self.support = self.soles[stance]
            self.swing_counts[self.swing_side] += 1
        else:
            self.target = self._nominal_target()
            self.support = ConvexPolygon(np.vstack((self.soles["left"].vertices, self.soles["right"].vertices)))
        self.mode = "base"
        self.rule = 1
        self._rule3_swing = False
        self.regions = None
        self.phase_tick = 0
        self._plan(kind == "swing")

    def _sample(self, t: float):
        x, xd, xdd = self.ref_segment.evaluate(min(max(t, 0.0), self.ref_segment.duration))
        w = self.omega
        return x + xd / w, x - xdd / (w * w)

    def _update_step(self) -> None:
        g = self.sc.gait
        stance = other_side(self.swing_side)
        t_min = max(g.swing_duration - self.clock.t_star, g.min_swing_duration - self.clock.t, 0.0)
        reach = self.reach_sets[stance]
        sides = [self.swing_side if k % 2 == 0 else stance for k in range(g.capture_steps)]
        regions = capture_regions(
            self.icp, self.support, t_min, reach, self.sc.reach, g.swing_duration, self.omega, g.capture_steps, sides
        )
        world = reach.translate(self.feet[stance])
        chosen, mode, hit = select_reachability(regions, world, self.mech.crossover)
        if not hit or not regions.feasible:
            self.rule = 3
            # counted once per swing, when the fallback is first needed
            if self.disturbed and not self._rule3_swing:
                self._rule3_swing = True
                self.rule3 += 1
        elif mode == "base":
            self.rule = 1
        else:
            self.rule = 2
        target = adjust_step(self._nominal_target(), regions, chosen)
        self.regions = regions
        self.mode = mode
        self.chosen = chosen
        if float(np.hypot(*(target - self.target))) > 1e-9:
            self.target = target
            self._plan(True)

    # -- main loop ---------------------------------------------------------
    def tick(self, disturbance: Optional[Disturbance] = None) -> None:
        g = self.sc.gait
        w = self.omega
        mech = self.mech
        clock = self.clock
        t_star = clock.advance(self.dt)
        if self.phase == "swing":
            if mech.step_adjust and (self.phase_tick % g.region_interval == 0 or self.regions is None):
                self._update_step()
            # only speed up a swing that is heading for a capturing step
            if mech.swing_time_adjust and self.rule != 3:
                icp_ref, ecmp_ref = self._sample(t_star)
                icp_end, _ = self._sample(clock.nominal_duration)
                shift = swing_time_adjust(self.icp, icp_ref, icp_end, ecmp_ref, w, t_star, clock.nominal_duration)
                t_star = clock.apply(shift)
        elif mech.transfer_time_adjust:
            t_star = transfer_time_adjust(clock, self.icp, self._sample, w)
        icp_ref, ecmp_ref = self._sample(t_star)
        kappa_ref = self.ref.kappa_r
        cop_ref = ecmp_ref - kappa_ref
        if mech.icp_control:
            cmd = self.solver.solve(self.icp - icp_ref, cop_ref, kappa_ref, self.support)
            cop, ecmp = cmd.cop_desired, cmd.ecmp_desired
        else:
            cop = project_point(self.support, cop_ref)
            ecmp = cop + kappa_ref
        A, b = self.support.halfspaces()
        if np.max(A @ cop - b) > CONTAINS_TOL:
            d = float(self.support.distance_points(cop[None, :])[0])
            self.violations.append(f"t={self.time:.3f}: CoP outside support by {d:.2e} m")
        if self.record:
            self.log.append(
                {
                    "t": round(self.time, 6),
                    "phase": self.phase,
                    "t_star": t_star,
                    "com": self.com.tolist(),
                    "com_velocity": (w * (self.icp - self.com)).tolist(),
                    "icp": self.icp.tolist(),
                    "icp_ref": icp_ref.tolist(),
                    "cop": cop.tolist(),
                    "ecmp": ecmp.tolist(),
                    "momentum_rate": momentum_rate(self.com, ecmp, self.sc.robot).tolist(),
                    "mode": self.mode,
                    "rule": self.rule,
                }
            )
        self.com, self.icp = advance_state(self.com, self.icp, ecmp, w, self.dt)
        self.time += self.dt
        self.phase_tick += 1
        if self.phase == "swing" and clock.done and clock.t >= g.min_swing_duration - 1e-12:
            self._land()
        elif self.phase == "transfer" and clock.done:
            self._start_phase("swing")

    def _land(self) -> None:
        side = self.swing_side
        stance = other_side(side)
        entry = {"t": round(self.time, 6), "side": side, "position": self.target.tolist(), "mode": self.mode, "rule": self.rule}
        if self.mech.step_adjust and self.regions is not None:
            rs = self.reach_sets[stance].translate(self.feet[stance])
            poly = rs.regions()[self.mode]
            gap = float(poly.distance_points(self.target[None, :])[0])
            if gap > CONTAINS_TOL:
                self.violations.append(f"t={self.time:.3f}: foothold outside {self.mode} reachability by {gap:.2e} m")
            if self.record:
                entry["capture_regions"] = [r.vertices.tolist() for r in self.regions.regions]
                entry["reachability"] = poly.vertices.tolist()
        if self.mode != "base":
            self.crossovers += 1
        self.footholds.append(entry)
        self.feet[side] = self.target.copy()
        self.soles[side] = self._sole(self.target)
        if self.disturbed:
            self.steps_since += 1
        self.swing_side = stance
        self._start_phase("transfer")

    def push(self, disturbance: Disturbance) -> None:
        self.icp = self.icp + disturbance.vector / self.omega
        self.disturbed = True
        self.clock.forward_only = True


def _due(w: Walker, dist: Disturbance) -> bool:
    return (
        w.phase == "swing"
        and w.swing_side == dist.swing_side
        and w.swing_counts[dist.swing_side] == dist.occurrence
        and w.clock.t >= dist.phase * w.sc.gait.swing_duration - 1e-12
    )


def walk_until_push(scenario: SimScenario, mechanisms: MechanismConfig, disturbance: Disturbance, record: bool = False) -> Walker:
    """Simulate nominal walking up to the instant the push is due."""
    w = Walker(scenario, mechanisms, record=record)
    while not _due(w, disturbance):
        w.tick()
        if w.time > 120.0:
            raise RuntimeError("disturbance instant never reached")
    return w


def _finish(w: Walker, max_time: float) -> SimResult:
    g = w.sc.gait
    l_max = w.sc.reach.l_max
    swing_seen = False
    while w.time < max_time:
        was = w.phase
        w.tick()
        if w.phase == "swing" and was != "swing":
            swing_seen = True
            icp_ref, _ = w._sample(0.0)
            err = float(np.hypot(*(w.icp - icp_ref)))
            if err < RECOVERY_TOL and w.support.contains(w.icp):
                w.recovered = True
                break
        A, b = w.support.halfspaces()
        # the largest half-plane slack bounds the distance from below
        slack = float(np.max(A @ w.icp - b))
        if slack > 0.5 * l_max and float(w.support.distance_points(w.icp[None, :])[0]) > l_max:
            w.fell = True
            break
        if w.steps_since >= g.recovery_steps:
            break
    return SimResult(
        w.recovered,
        w.steps_since,
        w.fell,
        w.footholds,
        w.log if w.record else None,
        w.violations,
        w.rule3,
        w.crossovers,
        w.time,
    )


def step_simulation(
    scenario: SimScenario,
    mechanisms: MechanismConfig,
    disturbance: Disturbance,
    record: bool = False,
    snapshot: Optional[Walker] = None,
) -> SimResult:
    """Walk in place, apply the push and report whether the robot recovers.

    ``snapshot`` is an optional :func:`walk_until_push` result to resume
    from; it is copied, never mutated.
    """
    if snapshot is None:
        w = walk_until_push(scenario, mechanisms, disturbance, record)
    else:
        w = copy.deepcopy(snapshot)
        w.record = record
    w.push(disturbance)
    horizon = w.time + (scenario.gait.recovery_steps + 1) * (scenario.gait.swing_duration + scenario.gait.transfer_duration) * 2
    return _finish(w, horizon)


def walk_nominal(scenario: SimScenario, mechanisms: MechanismConfig, duration: float, record: bool = False) -> Walker:
    """Undisturbed walking in place for ``duration`` seconds."""
    w = Walker(scenario, mechanisms, record=record)
    n = int(round(duration / w.dt))
    for _ in range(n):
        w.tick()
    return w


def max_recoverable(
    scenario: SimScenario,
    mechanisms: MechanismConfig,
    direction: float,
    phase: float = 0.25,
    lo: float = 0.0,
    hi: float = 3.0,
    resolution: float = 0.01,
    snapshot: Optional[Walker] = None,
) -> float:
    """Largest push magnitude recovered, by bisection on a ``resolution`` grid."""
    if snapshot is None:
        snapshot = walk_until_push(scenario, mechanisms, Disturbance(direction, 0.0, phase))

    def ok(k: int) -> bool:
        d = Disturbance(direction, k * resolution, phase)
        return step_simulation(scenario, mechanisms, d, snapshot=snapshot).recovered

    a = int(round(lo / resolution))
    b = int(round(hi / resolution))
    if ok(b):
        return b * resolution
    if not ok(a):
        return a * resolution
    while b - a > 1:
        m = (a + b) // 2
        if ok(m):
            a = m
        else:
            b = m
    return round(a * resolution, 10)


def sweep_recoverable(
    scenario: SimScenario,
    mechanisms: MechanismConfig,
    directions: Sequence[float],
    phase: float = 0.25,
    lo: float = 0.0,
    hi: float = 3.0,
    resolution: float = 0.01,
) -> List[Tuple[float, float]]:
    """``[(direction, max delta_v), ...]`` in input order."""
    if len(directions) == 0:
        raise ValueError("need at least one direction")
    snap = walk_until_push(scenario, mechanisms, Disturbance(0.0, 0.0, phase))
    return [(float(d), max_recoverable(scenario, mechanisms, d, phase, lo, hi, resolution, snap)) for d in directions]
