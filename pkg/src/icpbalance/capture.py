"""Capture regions, reachability sets and step adjustment.

Reachability polygons are stored in the stance-foot frame: x forward,
origin at the stance foothold.  They are built for a right stance foot
(swing side +y) and mirrored for a left stance foot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geom import (
    ConvexPolygon,
    as_point,
    closest_points,
    intersect,
    polygon_distance,
    polygon_from_halfplanes,
    project_point,
    scale_about,
    sweep_expand,
    visible_vertices,
)
from .lip import SIDES, other_side

DISC_VERTICES = 16


@dataclass(frozen=True)
class ReachabilityParams:
    l_max: float = 1.0
    l_min: float = 1.0
    w_min: float = 0.125
    w_max: float = 0.8
    w_nom: float = 0.25
    w_fwd: float = 0.1
    w_bwd: float = -0.05
    theta_fwd: float = 20.0  # degrees
    theta_bwd: float = 30.0  # degrees
    ellipse_vertex_count: int = 16

    def __post_init__(self):
        if not (self.l_max > 0 and self.l_min > 0):
            raise ValueError("l_max and l_min must be positive")
        if not (self.w_min < self.w_nom < self.w_max):
            raise ValueError("need w_min < w_nom < w_max")
        if not (0.0 < self.theta_fwd < 90.0 and 0.0 < self.theta_bwd < 90.0):
            raise ValueError("cross-over angles must lie in (0, 90) degrees")
        if int(self.ellipse_vertex_count) != self.ellipse_vertex_count or self.ellipse_vertex_count < 8:
            raise ValueError("ellipse_vertex_count must be an integer >= 8")


@dataclass(frozen=True)
class ReachabilitySet:
    """Base region plus the two cross-over regions, in the stance-foot frame."""

    base: ConvexPolygon
    forward_crossover: ConvexPolygon
    backward_crossover: ConvexPolygon
    stance_side: str

    def for_stance(self, side: str) -> "ReachabilitySet":
        if side == self.stance_side:
            return self
        if side not in SIDES:
            raise ValueError(f"unknown side {side!r}")
        cached = self.__dict__.get("_mirror")
        if cached is None:
            cached = ReachabilitySet(
                self.base.mirror_y(), self.forward_crossover.mirror_y(), self.backward_crossover.mirror_y(), side
            )
            object.__setattr__(self, "_mirror", cached)
            object.__setattr__(cached, "_mirror", self)
        return cached

    def translate(self, anchor) -> "ReachabilitySet":
        a = as_point(anchor)
        return ReachabilitySet(
            self.base.translate(a), self.forward_crossover.translate(a), self.backward_crossover.translate(a), self.stance_side
        )

    def regions(self):
        return {"base": self.base, "forward": self.forward_crossover, "backward": self.backward_crossover}

    @classmethod
    def simple(cls, l_max: float, stance_side: str = "right", n: int = DISC_VERTICES) -> "ReachabilitySet":
        """Disc reachability of radius ``l_max`` used for every region."""
        disc = ConvexPolygon.regular((0.0, 0.0), l_max, n)
        return cls(disc, disc, disc, stance_side)


def _ellipse_polygon(p: ReachabilityParams) -> ConvexPolygon:
    n = int(p.ellipse_vertex_count)
    # always include the four axis extremes
    n = 4 * math.ceil(n / 4)
    ang = 2.0 * np.pi * np.arange(n) / n
    c, s = np.cos(ang), np.sin(ang)
    c[np.abs(c) < 1e-15] = 0.0
    x = np.where(c >= 0.0, p.l_max, p.l_min) * c
    y = p.w_nom + (p.w_max - p.w_nom) * s
    return ConvexPolygon(np.column_stack((x, y)))


def ellipse_value(p: ReachabilityParams, pts) -> np.ndarray:
    """Left-hand side of the reach ellipse inequality (<= 1 inside), stance frame."""
    pts = np.atleast_2d(pts)
    a = np.where(pts[:, 0] >= 0.0, p.l_max, p.l_min)
    b = p.w_max - p.w_nom
    return (pts[:, 0] / a) ** 2 + ((pts[:, 1] - p.w_nom) / b) ** 2


def build_base_reachability(p: ReachabilityParams, stance_side: str) -> ReachabilitySet:
    """Base and cross-over reachability for the given stance foot.

    The reach ellipse is centred ``w_nom`` toward the swing side with
    forward/backward semi-axes ``l_max``/``l_min`` and lateral semi-axis
    ``w_max - w_nom``.  With ``u`` the lateral coordinate toward the swing
    side:

    * base: ellipse with ``u >= w_min``;
    * forward: ellipse, ``x >= 0``, ``u >= -w_fwd`` and in front of the ray
      leaving the stance origin at ``theta_fwd`` from the forward axis
      toward the stance side;
    * backward: mirror construction behind the foot with ``w_bwd`` and
      ``theta_bwd``.  A negative ``w_bwd`` keeps that region on the swing
      side of the stance line.
    """
    if stance_side not in SIDES:
        raise ValueError(f"unknown stance side {stance_side!r}")
    E = _ellipse_polygon(p)
    tf, tb = math.radians(p.theta_fwd), math.radians(p.theta_bwd)
    base = polygon_from_halfplanes(E, [(0.0, -1.0)], [-p.w_min])
    fwd = polygon_from_halfplanes(
        E,
        [(-1.0, 0.0), (0.0, -1.0), (-math.sin(tf), -math.cos(tf))],
        [0.0, p.w_fwd, 0.0],
    )
    bwd = polygon_from_halfplanes(
        E,
        [(1.0, 0.0), (0.0, -1.0), (math.sin(tb), -math.cos(tb))],
        [0.0, p.w_bwd, 0.0],
    )
    if base is None or fwd is None or bwd is None:
        raise ValueError("reachability parameters produce an empty region")
    rs = ReachabilitySet(base, fwd, bwd, "right")
    return rs.for_stance(stance_side)


@dataclass
class CaptureRegionSet:
    regions: List[ConvexPolygon]
    step_duration: float
    omega: float
    t_min: float
    feasible: bool = True

    @property
    def last(self) -> ConvexPolygon:
        return self.regions[-1]

    def __len__(self) -> int:
        return len(self.regions)

    def nesting_gap(self) -> float:
        """Largest distance from a vertex of C_(k-1) to C_k over all k."""
        gap = 0.0
        for a, b in zip(self.regions, self.regions[1:]):
            gap = max(gap, float(b.distance_points(a.vertices).max()))
        return gap


def one_step_region(
    icp, support: ConvexPolygon, t_min: float, l_max: float, omega: float, n_vertices: int = DISC_VERTICES
) -> Optional[ConvexPolygon]:
    """Footholds that capture the ICP with one step of at most ``l_max``.

    When the ICP is already inside ``support`` the state is captured and the
    whole ``l_max`` disc about the ICP is returned.  Otherwise each visible
    support vertex ``q`` is pushed forward to ``q + e^(w t_min) (icp - q)``;
    those points and the divergence rays through them bound the region,
    which is then capped by the ``l_max`` disc about the support centroid.
    Returns ``None`` when the cap removes everything.
    """
    icp = as_point(icp)
    if support.contains(icp):
        return ConvexPolygon.regular(icp, l_max, n_vertices)
    c = support.centroid
    cap = ConvexPolygon.regular(c, l_max, n_vertices)
    q = visible_vertices(support, icp)
    s0 = math.exp(omega * max(t_min, 0.0))
    near = q + s0 * (icp - q)
    d_first, d_last = icp - q[0], icp - q[-1]
    a0 = math.atan2(d_first[1], d_first[0])
    a1 = math.atan2(d_last[1], d_last[0])
    span = (a1 - a0 + math.pi) % (2.0 * math.pi) - math.pi
    max_dist = float(np.max(np.hypot(*(icp - support.vertices).T)))
    reach = l_max + float(np.hypot(*(icp - c))) + 1.0
    rho = (s0 - 1.0) * max_dist + 2.0 * reach
    k = 1 if abs(span) < 1e-12 else 33
    ang = a0 + span * np.linspace(0.0, 1.0, k)
    far = icp + rho * np.column_stack((np.cos(ang), np.sin(ang)))
    cone = ConvexPolygon(np.vstack((near, far)))
    return intersect(cone, cap)


def n_step_regions(
    one_step: ConvexPolygon,
    reach: ReachabilitySet,
    step_duration: float,
    omega: float,
    n: int,
    upcoming_sides: Sequence[str],
    t_min: float = 0.0,
) -> CaptureRegionSet:
    """Nested capture regions C_1..C_n.

    ``upcoming_sides[k]`` is the swing foot of step k + 1.  Region k sweeps
    the base reachability of that step's stance foot, shrunk by
    ``exp(-omega * step_duration * (k - 1))``, around region k - 1.
    """
    if n < 1:
        raise ValueError("need at least one step")
    if len(upcoming_sides) < n:
        raise ValueError("need a swing side for every step")
    regions = [one_step]
    origin = np.zeros(2)
    for k in range(2, n + 1):
        stance = other_side(upcoming_sides[k - 1])
        R = reach.for_stance(stance).base
        stamp = scale_about(R, origin, math.exp(-omega * step_duration * (k - 1)))
        regions.append(sweep_expand(regions[-1], stamp))
    return CaptureRegionSet(regions, step_duration, omega, t_min)


def capture_regions(
    icp,
    support: ConvexPolygon,
    t_min: float,
    reach: ReachabilitySet,
    params: ReachabilityParams,
    step_duration: float,
    omega: float,
    n: int,
    upcoming_sides: Sequence[str],
) -> CaptureRegionSet:
    """C_1..C_n for the current stance, with an explicit infeasible fallback.

    If no foothold within ``l_max`` captures the state, C_1 is replaced by
    the earliest reachable ICP positions and the set is flagged infeasible,
    so step selection can still aim for the closest recovery.
    """
    icp = as_point(icp)
    c1 = one_step_region(icp, support, t_min, params.l_max, omega)
    feasible = c1 is not None
    if c1 is None:
        q = visible_vertices(support, icp)
        c1 = ConvexPolygon(q + math.exp(omega * t_min) * (icp - q))
    out = n_step_regions(c1, reach, step_duration, omega, n, upcoming_sides, t_min)
    out.feasible = feasible
    return out


def select_reachability(
    regions: CaptureRegionSet, reach: ReachabilitySet, allow_crossover: bool = True
) -> Tuple[ConvexPolygon, str, bool]:
    """Pick the reachability region for the next step.

    1. base, if it touches C_N;
    2. otherwise the cross-over region with the larger overlap area;
    3. otherwise the region closest to C_N (``intersects`` is False).
    """
    cn = regions.last
    base_hit = intersect(reach.base, cn)
    if base_hit is not None:
        return reach.base, "base", True
    if not allow_crossover:
        return reach.base, "base", False
    fwd_hit = intersect(reach.forward_crossover, cn)
    bwd_hit = intersect(reach.backward_crossover, cn)
    if fwd_hit is not None or bwd_hit is not None:
        fa = -1.0 if fwd_hit is None else fwd_hit.area
        ba = -1.0 if bwd_hit is None else bwd_hit.area
        if fa >= ba:
            return reach.forward_crossover, "forward", True
        return reach.backward_crossover, "backward", True
    cands = [("base", reach.base), ("forward", reach.forward_crossover), ("backward", reach.backward_crossover)]
    best = min(cands, key=lambda kv: polygon_distance(kv[1], cn))
    return best[1], best[0], False


def adjust_step(nominal, regions: CaptureRegionSet, chosen: ConvexPolygon) -> np.ndarray:
    """Closest foothold to ``nominal`` inside ``chosen`` and C_N.

    When the two do not meet, return the point of ``chosen`` nearest to
    C_N (ties broken toward the nominal step).
    """
    nominal = as_point(nominal)
    cn = regions.last
    both = intersect(chosen, cn)
    if both is not None:
        return project_point(both, nominal)
    pa, pb = closest_points(chosen, cn)
    gap = float(np.hypot(*(pa - pb)))
    # every point of chosen at the minimum gap lies on one face; project onto it
    face = _nearest_face(chosen, cn, gap)
    return project_point(face, project_point(chosen, nominal)) if face is not None else pa


def _nearest_face(chosen: ConvexPolygon, cn: ConvexPolygon, gap: float) -> Optional[ConvexPolygon]:
    v = chosen.vertices
    d = cn.distance_points(v)
    near = v[d <= gap + 1e-9]
    if len(near) == 0:
        return None
    return ConvexPolygon(near)
