"""Phase-time adaptation along the ICP divergence ray."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geom import as_point
from .lip import icp_evolve

REST_EPS = 1e-9

SWING_DISCOUNT = 1.0
TRANSFER_DISCOUNT = 0.2


def swing_time_adjust(icp, icp_ref, icp_end, ecmp_ref, omega: float, t: Optional[float] = None, cap: Optional[float] = None) -> float:
    """Time shift that moves the reference ICP to the measured one.

    The measured ICP is projected onto the line from ``icp_ref`` to
    ``icp_end``; the shift is the log of the signed ratio of its distance
    from the eCMP to that of ``icp_ref``, divided by ``omega``.  With ``t``
    given the result is clamped so ``t + dt >= 0``; with ``cap`` also given,
    so ``t + dt <= cap``.  A non-positive ratio gives ``-inf`` before
    clamping.
    """
    icp, icp_ref, icp_end, r = as_point(icp), as_point(icp_ref), as_point(icp_end), as_point(ecmp_ref)
    d = icp_ref - r
    dd = float(d @ d)
    if dd < REST_EPS * REST_EPS:
        return 0.0
    u = icp_end - icp_ref
    uu = float(u @ u)
    if uu < 1e-24:
        u, uu = d, dd
    proj = icp_ref + (float((icp - icp_ref) @ u) / uu) * u
    ratio = float((proj - r) @ d) / dd
    dt = math.log(ratio) / omega if ratio > 0.0 else -math.inf
    if t is not None:
        dt = max(dt, -t)
        if cap is not None:
            dt = min(dt, cap - t)
    return dt


@dataclass
class PhaseClock:
    """Nominal and adapted time within one gait phase.

    ``t`` is wall time since phase start; ``t_star`` is the adapted time
    used to index the reference.  Each tick the adapted time advances by
    ``dt`` and then moves by ``gamma`` times the measured time shift.
    """

    kind: str
    nominal_duration: float
    gamma: float = 1.0
    forward_only: bool = False
    t: float = 0.0
    t_star: float = 0.0

    def __post_init__(self):
        if self.kind not in ("swing", "transfer"):
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if not self.nominal_duration > 0:
            raise ValueError("phase duration must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("discount must lie in (0, 1]")

    @classmethod
    def for_phase(cls, kind: str, duration: float, forward_only: bool = False) -> "PhaseClock":
        gamma = SWING_DISCOUNT if kind == "swing" else TRANSFER_DISCOUNT
        return cls(kind, duration, gamma, forward_only)

    @property
    def remaining(self) -> float:
        return max(self.nominal_duration - self.t_star, 0.0)

    @property
    def done(self) -> bool:
        return self.t_star >= self.nominal_duration - 1e-12

    def advance(self, dt: float) -> float:
        """Move both clocks forward by ``dt``; returns the tentative adapted time."""
        self._last = self.t_star
        self.t += dt
        self.t_star = min(self.t_star + dt, self.nominal_duration)
        return self.t_star

    def apply(self, shift: float) -> float:
        """Apply a measured time shift with the discount and clamps.

        The adapted time never falls behind wall time nor below its value
        at the previous tick.  Forward-only clocks also ignore negative shifts.
        """
        target = self.t_star + self.gamma * shift
        lower = self.t_star if self.forward_only else max(self.t, getattr(self, "_last", 0.0))
        self.t_star = float(min(max(target, lower, 0.0), self.nominal_duration))
        return self.t_star


def transfer_time_adjust(clock: PhaseClock, icp, reference: Callable[[float], tuple], omega: float) -> float:
    """One discounted adaptation of the transfer clock.

    ``reference(t)`` returns ``(icp_ref, ecmp_ref)`` at local phase time
    ``t``.  The eCMP is frozen at its current value to build the
    divergence ray used by :func:`swing_time_adjust`.
    """
    icp_ref, ecmp_ref = reference(clock.t_star)
    icp_end = icp_evolve(icp_ref, ecmp_ref, omega, clock.remaining)
    shift = swing_time_adjust(icp, icp_ref, icp_end, ecmp_ref, omega, clock.t_star, clock.nominal_duration)
    return clock.apply(shift)
