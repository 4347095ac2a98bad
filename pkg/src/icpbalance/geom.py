"""Planar convex polygon kernel.

Every support polygon, reachability region and capture region in the
package is a :class:`ConvexPolygon`.  Points and vectors are plain
``numpy`` arrays of shape ``(2,)``.  Degenerate polygons (a single point or
a segment) are legal and handled by every operation.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

#: Tolerance for orientation predicates and vertex merging (meters).
TOL = 1e-9
#: Tolerance used when asserting membership or comparing areas (meters).
MEMBERSHIP_TOL = 1e-7


def as_point(p) -> np.ndarray:
    if type(p) is np.ndarray and p.shape == (2,) and p.dtype == np.float64:
        a = p
    else:
        a = np.asarray(p, dtype=float).reshape(2)
    if not (math.isfinite(a[0]) and math.isfinite(a[1])):
        raise ValueError(f"non-finite point {a!r}")
    return a


def _roll(a: np.ndarray, shift: int) -> np.ndarray:
    """``np.roll`` along the first axis without its generic overhead."""
    n = len(a)
    if n == 0:
        return a.copy()
    k = (-shift) % n
    if k == 0:
        return a.copy()
    return np.concatenate((a[k:], a[:k]))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points, tol: float = TOL) -> np.ndarray:
    """Counterclockwise hull of ``points`` without collinear or duplicate vertices.

    Uses Andrew's monotone chain.  A middle vertex is dropped when it lies
    within ``tol`` of the chord joining its neighbours.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("convex hull of an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("polygon vertices must be finite")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    # merge near-duplicates after sorting
    keep = [0]
    for i in range(1, len(pts)):
        if abs(pts[i, 0] - pts[keep[-1], 0]) > tol or abs(pts[i, 1] - pts[keep[-1], 1]) > tol:
            keep.append(i)
    pts = pts[keep]
    n = len(pts)
    if n <= 2:
        if n == 2 and math.hypot(*(pts[1] - pts[0])) <= tol:
            return pts[:1].copy()
        return pts.copy()
    P = pts.tolist()

    def chain(seq):
        h = []
        for p in seq:
            while len(h) >= 2:
                o, a = h[-2], h[-1]
                cr = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
                if cr <= 0.0:
                    h.pop()
                else:
                    break
            h.append(p)
        return h

    lower = chain(P)
    upper = chain(reversed(P))
    out = _merge_close(np.array(lower[:-1] + upper[:-1], dtype=float), tol)
    if len(out) >= 3:
        # the exact chains keep nearly collinear vertices; drop them within tol
        out = _clean_ccw(out, tol)
    if out is not None and len(out) >= 3:
        twice_area = float(np.dot(out[:, 0], _roll(out[:, 1], -1)) - np.dot(_roll(out[:, 0], -1), out[:, 1]))
        if twice_area > tol * float(np.ptp(out, axis=0).max()):
            return out
    # every point (nearly) collinear: keep the two extremes along the line
    a = pts[int(np.argmax(np.hypot(*(pts - pts[0]).T)))]
    b = pts[int(np.argmax(np.hypot(*(pts - a).T)))]
    if math.hypot(*(a - b)) <= tol:
        return a[None, :].copy()
    return np.array([a, b]) if (a[0], a[1]) < (b[0], b[1]) else np.array([b, a])


def _clean_ccw(v: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """Drop duplicate and collinear vertices from a CCW convex cycle.

    Returns ``None`` when the cycle turns out not to be strictly convex, so
    the caller can fall back to a full hull.
    """
    for _ in range(len(v)):
        if len(v) < 3:
            return None
        nxt = _roll(v, -1)
        prv = _roll(v, 1)
        e1 = v - prv
        e2 = nxt - v
        cr = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        chord = np.hypot(nxt[:, 0] - prv[:, 0], nxt[:, 1] - prv[:, 1])
        short = np.hypot(e2[:, 0], e2[:, 1]) <= tol
        bad = (cr <= tol * chord) | short
        if not bad.any():
            return v
        if (cr < -tol * chord).any():
            return None
        # remove one vertex per run so neighbours are re-evaluated
        drop = bad & ~_roll(bad, 1)
        if not drop.any():
            drop = bad.copy()
            drop[1:] = False
        v = v[~drop]
    return None


def _hull_convex_position(pts: np.ndarray, tol: float) -> np.ndarray:
    """Hull of points known to lie on the boundary of a convex set."""
    if len(pts) >= 3:
        c = pts.mean(axis=0)
        d = pts - c
        order = np.argsort(np.arctan2(d[:, 1], d[:, 0]), kind="stable")
        out = _clean_ccw(pts[order], tol)
        if out is not None:
            return out
    return convex_hull(pts, tol)


def _merge_close(v: np.ndarray, tol: float) -> np.ndarray:
    if len(v) <= 1:
        return v
    keep = [0]
    for i in range(1, len(v)):
        if np.hypot(*(v[i] - v[keep[-1]])) > tol:
            keep.append(i)
    if len(keep) > 1 and np.hypot(*(v[keep[-1]] - v[keep[0]])) <= tol:
        keep.pop()
    return v[keep]


def _point_segment_dist2(P: np.ndarray, A: np.ndarray, B: np.ndarray):
    """Squared distances and closest points from points ``P`` (k,2) to segments A-B (m,2).

    Returns arrays of shape (k, m) and (k, m, 2).
    """
    AB = B - A
    L2 = np.einsum("ij,ij->i", AB, AB)
    AP = P[:, None, :] - A[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.einsum("kmj,mj->km", AP, AB) / L2[None, :]
    t = np.where(L2[None, :] > 0.0, np.clip(t, 0.0, 1.0), 0.0)
    C = A[None, :, :] + t[..., None] * AB[None, :, :]
    D = P[:, None, :] - C
    return np.einsum("kmj,kmj->km", D, D), C


class ConvexPolygon:
    """Immutable convex polygon with counterclockwise vertices.

    Construct directly from vertices already in convex CCW order, or use
    :meth:`from_points` to take the hull of an arbitrary point cloud.
    """

    __slots__ = ("vertices", "tolerance", "_area", "_centroid", "_halfspaces")

    def __init__(self, vertices, tolerance: float = TOL):
        v = convex_hull(vertices, tolerance)
        v.setflags(write=False)
        self.vertices = v
        self.tolerance = tolerance
        self._area = None
        self._centroid = None
        self._halfspaces = None

    @classmethod
    def from_points(cls, points, tolerance: float = TOL) -> "ConvexPolygon":
        return cls(points, tolerance)

    @classmethod
    def _trusted(cls, vertices: np.ndarray, tolerance: float = TOL) -> "ConvexPolygon":
        # vertices already CCW, convex and cleaned
        obj = cls.__new__(cls)
        vertices = np.asarray(vertices, dtype=float)
        if len(vertices) > 1:
            # canonical start: lowest x, then lowest y (same as convex_hull)
            start = int(np.lexsort((vertices[:, 1], vertices[:, 0]))[0])
            vertices = _roll(vertices, -start)
        vertices = np.ascontiguousarray(vertices)
        vertices.setflags(write=False)
        obj.vertices = vertices
        obj.tolerance = tolerance
        obj._area = None
        obj._centroid = None
        obj._halfspaces = None
        return obj

    @classmethod
    def rectangle(cls, center, length: float, width: float) -> "ConvexPolygon":
        """Axis-aligned rectangle; ``length`` along x, ``width`` along y."""
        c = as_point(center)
        hl, hw = 0.5 * length, 0.5 * width
        return cls(c + np.array([[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]]))

    @classmethod
    def regular(cls, center, radius: float, n: int = 16, phase: float = 0.0) -> "ConvexPolygon":
        """Regular ``n``-gon inscribed in the circle of ``radius`` about ``center``."""
        if radius <= 0.0:
            return cls([as_point(center)])
        ang = phase + 2.0 * np.pi * np.arange(n) / n
        pts = as_point(center) + radius * np.column_stack((np.cos(ang), np.sin(ang)))
        return cls(pts)

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"ConvexPolygon({self.vertices.tolist()!r})"

    @property
    def area(self) -> float:
        if self._area is None:
            v = self.vertices
            if len(v) < 3:
                self._area = 0.0
            else:
                x, y = v[:, 0], v[:, 1]
                self._area = 0.5 * float(np.dot(x, _roll(y, -1)) - np.dot(_roll(x, -1), y))
        return self._area

    @property
    def centroid(self) -> np.ndarray:
        if self._centroid is None:
            v = self.vertices
            if len(v) < 3 or self.area <= 0.0:
                c = v.mean(axis=0)
            else:
                x, y = v[:, 0], v[:, 1]
                xn, yn = _roll(x, -1), _roll(y, -1)
                cr = x * yn - xn * y
                c = np.array([np.dot(x + xn, cr), np.dot(y + yn, cr)]) / (6.0 * self.area)
            c.setflags(write=False)
            self._centroid = c
        return self._centroid

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    def edges(self):
        """Edge start points and end points, each shape (m, 2).

        A segment polygon has the single edge v0 -> v1; a point has none.
        """
        v = self.vertices
        if len(v) == 1:
            return v[:0], v[:0]
        if len(v) == 2:
            return v[:1], v[1:]
        return v, _roll(v, -1)

    def halfspaces(self):
        """``(A, b)`` with unit-norm rows such that the polygon is ``A x <= b``.

        Only defined for polygons with positive area.
        """
        if self._halfspaces is None:
            if self.is_degenerate:
                raise ValueError("half-space form needs a polygon with positive area")
            a, b = self.edges()
            e = b - a
            n = np.column_stack((e[:, 1], -e[:, 0]))
            n /= np.linalg.norm(n, axis=1)[:, None]
            h = (n, np.einsum("ij,ij->i", n, a))
            self._halfspaces = h
        return self._halfspaces

    # -- predicates -------------------------------------------------------

    def contains_points(self, P, tol: Optional[float] = None) -> np.ndarray:
        """Vectorized membership for an array of points (k, 2)."""
        tol = self.tolerance if tol is None else tol
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        if self.is_degenerate:
            return self.distance_points(P) <= tol
        A, b = self.halfspaces()
        return np.all(P @ A.T - b[None, :] <= tol, axis=1)

    def contains(self, p, tol: Optional[float] = None) -> bool:
        return bool(self.contains_points(as_point(p)[None, :], tol)[0])

    def distance_points(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float).reshape(-1, 2)
        v = self.vertices
        if len(v) == 1:
            return np.hypot(P[:, 0] - v[0, 0], P[:, 1] - v[0, 1])
        a, b = self.edges()
        d2, _ = _point_segment_dist2(P, a, b)
        d = np.sqrt(d2.min(axis=1))
        if not self.is_degenerate:
            A, bb = self.halfspaces()
            inside = np.all(P @ A.T - bb[None, :] <= 0.0, axis=1)
            d[inside] = 0.0
        return d

    # -- transforms -------------------------------------------------------

    def translate(self, offset) -> "ConvexPolygon":
        return ConvexPolygon._trusted(self.vertices + as_point(offset), self.tolerance)

    def reflect(self) -> "ConvexPolygon":
        """Point reflection through the origin (a 180 degree rotation keeps CCW order)."""
        return ConvexPolygon._trusted(-self.vertices, self.tolerance)

    def mirror_y(self) -> "ConvexPolygon":
        """Mirror across the x axis (y -> -y)."""
        v = self.vertices * np.array([1.0, -1.0])
        return ConvexPolygon(v, self.tolerance)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConvexPolygon):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.array_equal(self.vertices, other.vertices)
        )

    __hash__ = None


Point2 = np.ndarray
Vector2 = np.ndarray


def project_point(poly: ConvexPolygon, p) -> np.ndarray:
    """Closest point of ``poly`` to ``p``; ``p`` itself when it is inside."""
    p = as_point(p)
    v = poly.vertices
    if len(v) == 1:
        return v[0].copy()
    if not poly.is_degenerate:
        A, b = poly.halfspaces()
        if np.all(A @ p - b <= 0.0):
            return p
    a, bb = poly.edges()
    d2, C = _point_segment_dist2(p[None, :], a, bb)
    return C[0, int(np.argmin(d2[0]))].copy()


def distance_vector(poly: ConvexPolygon, p) -> np.ndarray:
    """``p - project_point(poly, p)``: the zero vector exactly when ``p`` is inside."""
    p = as_point(p)
    return p - project_point(poly, p)


def scale_about(poly: ConvexPolygon, center, factor: float) -> ConvexPolygon:
    if not factor > 0.0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    c = as_point(center)
    return ConvexPolygon._trusted(c + factor * (poly.vertices - c), poly.tolerance)


def _bottom_index(v: np.ndarray) -> int:
    return int(np.lexsort((v[:, 0], v[:, 1]))[0])


def minkowski_sum(a: ConvexPolygon, b: ConvexPolygon) -> ConvexPolygon:
    va, vb = a.vertices, b.vertices
    tol = min(a.tolerance, b.tolerance)
    if len(va) < 3 or len(vb) < 3:
        pts = (va[:, None, :] + vb[None, :, :]).reshape(-1, 2)
        return ConvexPolygon(pts, tol)
    ia, ib = _bottom_index(va), _bottom_index(vb)
    va = _roll(va, -ia)
    vb = _roll(vb, -ib)
    ea = _roll(va, -1) - va
    eb = _roll(vb, -1) - vb
    na, nb = len(va), len(vb)
    out = np.empty((na + nb, 2))
    out[0] = va[0] + vb[0]
    i = j = 0
    k = 1
    EA, EB = ea.tolist(), eb.tolist()
    while i < na or j < nb:
        if i == na:
            step = EB[j]
            j += 1
        elif j == nb:
            step = EA[i]
            i += 1
        else:
            ca, cb = EA[i], EB[j]
            cr = ca[0] * cb[1] - ca[1] * cb[0]
            if cr > 0.0:
                step = ca
                i += 1
            elif cr < 0.0:
                step = cb
                j += 1
            else:
                step = (ca[0] + cb[0], ca[1] + cb[1])
                i += 1
                j += 1
        if k < len(out):
            out[k] = out[k - 1] + step
        k += 1
    out = out[: min(k - 1, len(out))]
    clean = _clean_ccw(out, tol)
    if clean is None:
        return ConvexPolygon(out, tol)
    return ConvexPolygon._trusted(clean, tol)


def sweep_expand(base: ConvexPolygon, stamp: ConvexPolygon) -> ConvexPolygon:
    """Placements ``r`` for which ``stamp + r`` touches ``base``.

    ``stamp`` is expressed about its own origin, so the result is the
    Minkowski sum of ``base`` with the point reflection of ``stamp``.
    """
    return minkowski_sum(base, stamp.reflect())


def _segment_intersections(a0, a1, b0, b1, tol: float) -> np.ndarray:
    """All proper crossing points between segment sets a (n) and b (m)."""
    if len(a0) == 0 or len(b0) == 0:
        return np.empty((0, 2))
    r = a1 - a0
    s = b1 - b0
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    qp = b0[None, :, :] - a0[:, None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]) / denom
        u = (qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]) / denom
    eps = 1e-12
    ok = (np.abs(denom) > tol * tol) & (t >= -eps) & (t <= 1 + eps) & (u >= -eps) & (u <= 1 + eps)
    if not ok.any():
        return np.empty((0, 2))
    ii, jj = np.nonzero(ok)
    return a0[ii] + t[ii, jj][:, None] * r[ii]


def intersect(a: ConvexPolygon, b: ConvexPolygon) -> Optional[ConvexPolygon]:
    """Intersection of two convex polygons, or ``None`` when they are disjoint."""
    tol = min(a.tolerance, b.tolerance)
    cand = [a.vertices[b.contains_points(a.vertices, tol)], b.vertices[a.contains_points(b.vertices, tol)]]
    a0, a1 = a.edges()
    b0, b1 = b.edges()
    cand.append(_segment_intersections(a0, a1, b0, b1, tol))
    pts = np.concatenate(cand)
    if len(pts) == 0:
        return None
    return ConvexPolygon._trusted(_hull_convex_position(pts, tol), tol)


def polygon_distance(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Minimum Euclidean distance between two convex polygons (0 when they meet)."""
    if intersect(a, b) is not None:
        return 0.0
    return float(min(b.distance_points(a.vertices).min(), a.distance_points(b.vertices).min()))


def closest_points(a: ConvexPolygon, b: ConvexPolygon):
    """Closest pair ``(pa, pb)`` between disjoint polygons, ``pa`` in ``a``."""
    best = (math.inf, None, None)
    for src, dst, flip in ((a, b, False), (b, a, True)):
        P = src.vertices
        if len(dst.vertices) == 1:
            C = np.broadcast_to(dst.vertices[0], P.shape)
            d2 = np.einsum("ij,ij->i", P - C, P - C)
        else:
            e0, e1 = dst.edges()
            D2, CC = _point_segment_dist2(P, e0, e1)
            j = D2.argmin(axis=1)
            d2 = D2[np.arange(len(P)), j]
            C = CC[np.arange(len(P)), j]
        i = int(np.argmin(d2))
        if d2[i] < best[0]:
            pa, pb = (C[i], P[i]) if flip else (P[i], C[i])
            best = (float(d2[i]), np.array(pa), np.array(pb))
    return best[1], best[2]


def visible_vertices(poly: ConvexPolygon, viewpoint) -> np.ndarray:
    """Vertices of ``poly`` seen from an outside ``viewpoint``, in CCW order.

    The first and last rows are the silhouette extremes.  An edge whose
    supporting line passes through the viewpoint counts as facing it, so
    both its endpoints are included.
    """
    p = as_point(viewpoint)
    v = poly.vertices
    n = len(v)
    if n <= 2:
        if poly.distance_points(p[None])[0] <= poly.tolerance:
            raise ValueError("viewpoint lies on the degenerate polygon")
        return v.copy()
    e = _roll(v, -1) - v
    w = p - v
    cr = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    facing = cr <= poly.tolerance * np.hypot(e[:, 0], e[:, 1])
    if not facing.any():
        raise ValueError("viewpoint lies inside the polygon")
    if facing.all():
        start = 0
    else:
        # first facing edge whose predecessor is not facing
        idx = np.nonzero(facing & ~_roll(facing, 1))[0]
        start = int(idx[0])
    run = []
    i = start
    while facing[i]:
        run.append(i)
        i = (i + 1) % n
        if i == start:
            break
    ids = run + [(run[-1] + 1) % n]
    if len(ids) > n:
        ids = ids[:n]
    return v[ids].copy()


def polygon_from_halfplanes(poly: ConvexPolygon, normals: Sequence, offsets: Sequence) -> Optional[ConvexPolygon]:
    """Clip ``poly`` by the half-planes ``n . x <= c``; ``None`` if nothing remains."""
    v = poly.vertices
    tol = poly.tolerance
    for n, c in zip(normals, offsets):
        n = np.asarray(n, dtype=float)
        s = v @ n - c
        if np.all(s <= tol):
            continue
        if np.all(s > tol):
            return None
        out = []
        m = len(v)
        for i in range(m):
            j = (i + 1) % m
            si, sj = s[i], s[j]
            if si <= tol:
                out.append(v[i])
            if (si <= tol) != (sj <= tol) and m > 1:
                t = si / (si - sj)
                out.append(v[i] + t * (v[j] - v[i]))
        v = convex_hull(np.array(out), tol)
    return ConvexPolygon(v, tol)


def boundary_samples(poly: ConvexPolygon, n: int) -> np.ndarray:
    """``n`` points spread evenly (by arc length) along the boundary."""
    v = poly.vertices
    if len(v) == 1:
        return np.repeat(v, n, axis=0)
    closed = np.vstack([v, v[:1]]) if len(v) > 2 else np.vstack([v, v[:1]])
    seg = np.diff(closed, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    s = np.linspace(0.0, cum[-1], n, endpoint=False)
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    t = (s - cum[k]) / np.where(lens[k] > 0, lens[k], 1.0)
    return closed[k] + t[:, None] * seg[k]


def hausdorff_distance(a_points: Iterable, poly: ConvexPolygon) -> float:
    """One-sided Hausdorff distance from a point cloud to ``poly``."""
    return float(poly.distance_points(np.asarray(a_points, dtype=float)).max())
