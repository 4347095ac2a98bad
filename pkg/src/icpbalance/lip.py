"""Linear inverted pendulum dynamics and ICP reference generation.

The reference CoM trajectory on every segment is

    x(t) = c0 e^(w t) + c1 e^(-w t) + c2 t^3 + c3 t^2 + c4 t + c5

which is the exact pendulum response to a cubic eCMP.  All segment
coefficients are found together from one square linear system.  Row layout
per segment (six unknown coefficient pairs):

* 4 rows pinning the eCMP position and velocity at both segment ends;
* 2 coupling rows: the first segment carries the initial CoM position and
  its knot rows, each knot carries CoM position and velocity continuity,
  and the last segment carries the terminal condition ICP == eCMP.

That is 4N + 1 + 2(N - 1) + 1 = 6N rows for N segments.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .geom import ConvexPolygon, as_point

SIDES = ("left", "right")


def other_side(side: str) -> str:
    return "right" if side == "left" else "left"


@dataclass(frozen=True)
class RobotParams:
    mass: float = 40.0
    gravity: float = 9.81
    com_height: float = 0.9

    def __post_init__(self):
        for name in ("mass", "gravity", "com_height"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")

    @property
    def omega(self) -> float:
        """Natural frequency of the pendulum, sqrt(g / height)."""
        return math.sqrt(self.gravity / self.com_height)


@dataclass(frozen=True)
class LipState:
    com: np.ndarray
    com_velocity: np.ndarray
    omega: float

    def __post_init__(self):
        object.__setattr__(self, "com", as_point(self.com))
        object.__setattr__(self, "com_velocity", as_point(self.com_velocity))
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def icp(self) -> np.ndarray:
        return self.com + self.com_velocity / self.omega

    @classmethod
    def from_icp(cls, com, icp, omega: float) -> "LipState":
        com = as_point(com)
        return cls(com, omega * (as_point(icp) - com), omega)


def icp_evolve(icp0, r_ecmp, omega: float, t: float) -> np.ndarray:
    """ICP after ``t`` seconds with the eCMP held at ``r_ecmp``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    r = np.asarray(r_ecmp, dtype=float)
    return math.exp(omega * t) * (np.asarray(icp0, dtype=float) - r) + r


def advance_state(com, icp, r_ecmp, omega: float, dt: float):
    """Exact LIP update over ``dt`` with a constant eCMP.

    Returns the new ``(com, icp)``.  The CoM obeys xdot = w (icp - x).
    """
    r = np.asarray(r_ecmp, dtype=float)
    e = math.exp(omega * dt)
    d = icp - r
    new_icp = r + e * d
    new_com = r + 0.5 * e * d + (com - r - 0.5 * d) / e
    return new_com, new_icp


@dataclass(frozen=True)
class Footstep:
    side: str
    sole: ConvexPolygon
    swing_duration: float
    transfer_duration: float

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"foot side must be 'left' or 'right', got {self.side!r}")
        if not (self.swing_duration > 0 and self.transfer_duration > 0):
            raise ValueError("step durations must be positive")


@dataclass(frozen=True)
class FootstepPlan:
    """Upcoming steps plus the soles currently on the ground.

    With ``start_in_swing`` the transfer of the first step is already over,
    so the plan begins with that step's swing phase.
    """

    steps: Tuple[Footstep, ...]
    left: ConvexPolygon
    right: ConvexPolygon
    final_transfer_duration: float = 0.3
    start_in_swing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("footstep plan is empty")
        for a, b in zip(self.steps, self.steps[1:]):
            if a.side == b.side:
                raise ValueError("footstep sides must alternate")
        if not self.final_transfer_duration > 0:
            raise ValueError("final transfer duration must be positive")


@dataclass(frozen=True)
class EcmpSpline:
    kind: str
    duration: float
    start: np.ndarray
    end: np.ndarray
    start_velocity: np.ndarray
    end_velocity: np.ndarray


def ecmp_splines(plan: FootstepPlan) -> List[EcmpSpline]:
    """Reference eCMP waypoints for a footstep plan.

    Transfers move the eCMP from the centroid of the foot about to swing to
    the centroid of the stance foot with zero end velocities; swings hold it
    at the stance centroid.  The plan ends with a transfer to the midpoint
    of the last two feet.
    """
    feet = {"left": plan.left.centroid.copy(), "right": plan.right.centroid.copy()}
    zero = np.zeros(2)
    out = []
    for i, step in enumerate(plan.steps):
        stance = other_side(step.side)
        if not (i == 0 and plan.start_in_swing):
            out.append(EcmpSpline("transfer", step.transfer_duration, feet[step.side], feet[stance], zero, zero))
        out.append(EcmpSpline("swing", step.swing_duration, feet[stance], feet[stance], zero, zero))
        feet[step.side] = step.sole.centroid.copy()
    last = plan.steps[-1]
    mid = 0.5 * (feet["left"] + feet["right"])
    out.append(EcmpSpline("transfer", plan.final_transfer_duration, feet[other_side(last.side)], mid, zero, zero))
    return out


@dataclass
class TrajectorySegment:
    coefficients: np.ndarray  # rows c0..c5, columns x/y
    duration: float
    kind: str
    omega: float

    def _basis(self, t: float):
        w = self.omega
        ep, em = math.exp(w * t), math.exp(-w * t)
        pos = np.array([ep, em, t ** 3, t ** 2, t, 1.0])
        vel = np.array([w * ep, -w * em, 3 * t * t, 2 * t, 1.0, 0.0])
        acc = np.array([w * w * ep, w * w * em, 6 * t, 2.0, 0.0, 0.0])
        return pos, vel, acc

    def com(self, t: float) -> np.ndarray:
        return self._basis(t)[0] @ self.coefficients

    def com_velocity(self, t: float) -> np.ndarray:
        return self._basis(t)[1] @ self.coefficients

    def evaluate(self, t: float):
        """``(com, com_velocity, com_acceleration)`` at local time ``t``."""
        p, v, a = self._basis(t)
        C = self.coefficients
        return p @ C, v @ C, a @ C


class ReferenceSample(NamedTuple):
    icp: np.ndarray
    ecmp: np.ndarray
    cop: np.ndarray
    com_velocity: np.ndarray
    com: np.ndarray


class ReferenceSingularError(ValueError):
    def __init__(self, segment: int):
        super().__init__(f"reference linear system is singular at segment {segment}")
        self.segment = segment


def _ecmp_rows(T: float, w: float) -> np.ndarray:
    iw2 = 1.0 / (w * w)
    return np.array(
        [
            [0.0, 0.0, 0.0, -2 * iw2, 0.0, 1.0],  # r(0)
            [0.0, 0.0, -6 * iw2, 0.0, 1.0, 0.0],  # r'(0)
            [0.0, 0.0, T ** 3 - 6 * T * iw2, T * T - 2 * iw2, T, 1.0],  # r(T)
            [0.0, 0.0, 3 * T * T - 6 * iw2, 2 * T, 1.0, 0.0],  # r'(T)
        ]
    )


def assemble_reference_system(splines: Sequence[EcmpSpline], com0, omega: float):
    """Square system ``A c = B`` for the stacked coefficients of every segment.

    ``c`` has 6 rows per segment (c0..c5) and two columns (x, y).
    """
    n = len(splines)
    w = omega
    A = np.zeros((6 * n, 6 * n))
    B = np.zeros((6 * n, 2))
    row = 0
    for k, sp in enumerate(splines):
        col = 6 * k
        T = sp.duration
        A[row : row + 4, col : col + 6] = _ecmp_rows(T, w)
        B[row] = sp.start
        B[row + 1] = sp.start_velocity
        B[row + 2] = sp.end
        B[row + 3] = sp.end_velocity
        row += 4
        if k == 0:
            A[row, col : col + 6] = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0]
            B[row] = as_point(com0)
            row += 1
        if k + 1 < n:
            ep, em = math.exp(w * T), math.exp(-w * T)
            A[row, col : col + 6] = [ep, em, T ** 3, T * T, T, 1.0]
            A[row, col + 6 : col + 12] = [-1.0, -1.0, 0.0, 0.0, 0.0, -1.0]
            A[row + 1, col : col + 6] = [w * ep, -w * em, 3 * T * T, 2 * T, 1.0, 0.0]
            A[row + 1, col + 6 : col + 12] = [-w, w, 0.0, 0.0, -1.0, 0.0]
            row += 2
        else:
            ep = math.exp(w * T)
            # icp = x + xdot / w, the c1 terms cancel
            A[row, col : col + 6] = [2 * ep, 0.0, T ** 3 + 3 * T * T / w, T * T + 2 * T / w, T + 1.0 / w, 1.0]
            B[row] = sp.end
            row += 1
    return A, B


def _singular_segment(A: np.ndarray, n: int) -> int:
    for k in range(1, n + 1):
        cols = 6 * k
        sub = A[:, :cols]
        rows = np.any(sub != 0.0, axis=1) & ~np.any(A[:, cols:] != 0.0, axis=1)
        if np.linalg.matrix_rank(sub[rows]) < min(cols, int(rows.sum())):
            return k - 1
    return n - 1


@dataclass
class ReferencePlan:
    segments: List[TrajectorySegment]
    omega: float
    kappa_r: np.ndarray = field(default_factory=lambda: np.zeros(2))
    system: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    splines: Optional[List[EcmpSpline]] = None

    def __post_init__(self):
        self.start_times = [0.0]
        for s in self.segments:
            self.start_times.append(self.start_times[-1] + s.duration)

    @property
    def horizon(self) -> float:
        return self.start_times[-1]

    def segment_index(self, t: float) -> int:
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise ValueError(f"time {t} outside reference horizon [0, {self.horizon}]")
        k = bisect.bisect_right(self.start_times, t) - 1
        return min(max(k, 0), len(self.segments) - 1)

    def sample(self, t: float) -> ReferenceSample:
        k = self.segment_index(t)
        seg = self.segments[k]
        tl = min(max(t - self.start_times[k], 0.0), seg.duration)
        x, xd, xdd = seg.evaluate(tl)
        w = self.omega
        icp = x + xd / w
        ecmp = x - xdd / (w * w)
        return ReferenceSample(icp, ecmp, ecmp - self.kappa_r, xd, x)

    def residuals(self) -> np.ndarray:
        """Per-row absolute residual of the assembled linear system."""
        A, B, C = self.system
        return np.abs(A @ C - B)


def solve_reference(plan: FootstepPlan, initial: LipState, params: RobotParams, kappa_r=None) -> ReferencePlan:
    """Solve all CoM segment coefficients of ``plan`` in one linear system."""
    if not np.all(np.isfinite(initial.com)) or not np.all(np.isfinite(initial.com_velocity)):
        raise ValueError("initial state must be finite")
    return solve_splines(ecmp_splines(plan), initial.com, params.omega, kappa_r)


def solve_splines(splines: Sequence[EcmpSpline], com0, omega: float, kappa_r=None) -> ReferencePlan:
    A, B = assemble_reference_system(splines, com0, omega)
    try:
        C = np.linalg.solve(A, B)
    except np.linalg.LinAlgError:
        raise ReferenceSingularError(_singular_segment(A, len(splines))) from None
    if not np.all(np.isfinite(C)):
        raise ReferenceSingularError(_singular_segment(A, len(splines)))
    segs = [
        TrajectorySegment(C[6 * k : 6 * k + 6].copy(), sp.duration, sp.kind, omega) for k, sp in enumerate(splines)
    ]
    kr = np.zeros(2) if kappa_r is None else as_point(kappa_r)
    return ReferencePlan(segs, omega, kr, (A, B, C), list(splines))


def sample_reference(ref: ReferencePlan, t: float) -> ReferenceSample:
    return ref.sample(t)
