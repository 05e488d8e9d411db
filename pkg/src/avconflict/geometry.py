"""Planar polyline primitives: arc length, projection, intersection, proximity."""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

Point = Tuple[float, float]


def dedupe_polyline(points: Sequence[Point], eps: float = 1e-9) -> List[Point]:
    """Drop consecutive duplicate vertices so every segment has positive length."""
    out: List[Point] = []
    for p in points:
        if not out or math.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > eps:
            out.append((float(p[0]), float(p[1])))
    return out


def cumulative_arc_length(points: Sequence[Point]) -> List[float]:
    """Cumulative chord length at each vertex, starting at 0."""
    s = [0.0]
    for i in range(1, len(points)):
        s.append(s[-1] + math.hypot(points[i][0] - points[i - 1][0],
                                     points[i][1] - points[i - 1][1]))
    return s


def point_at_arc_length(points: Sequence[Point], arc: Sequence[float], s: float) -> Point:
    """Interpolate the point at arc length s (clamped to the polyline extent)."""
    if s <= 0:
        return points[0]
    if s >= arc[-1]:
        return points[-1]
    lo, hi = 0, len(arc) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if arc[mid] <= s:
            lo = mid
        else:
            hi = mid
    seg = arc[hi] - arc[lo]
    f = (s - arc[lo]) / seg if seg > 0 else 0.0
    return (points[lo][0] + f * (points[hi][0] - points[lo][0]),
            points[lo][1] + f * (points[hi][1] - points[lo][1]))


def project_point_to_segment(p: Point, a: Point, b: Point) -> Tuple[float, Point]:
    """Distance from p to segment ab and the closest point on the segment."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 <= 0:
        return math.hypot(p[0] - ax, p[1] - ay), a
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg2
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(p[0] - cx, p[1] - cy), (cx, cy)


def project_point_to_polyline(p: Point, points: Sequence[Point],
                              arc: Optional[Sequence[float]] = None
                              ) -> Tuple[float, float, Point]:
    """Return (distance, arc position, closest point) of p against a polyline."""
    if arc is None:
        arc = cumulative_arc_length(points)
    best = (math.inf, 0.0, points[0])
    for i in range(len(points) - 1):
        d, c = project_point_to_segment(p, points[i], points[i + 1])
        if d < best[0]:
            seg = arc[i + 1] - arc[i]
            if seg > 0:
                f = math.hypot(c[0] - points[i][0], c[1] - points[i][1]) / seg
            else:
                f = 0.0
            best = (d, arc[i] + f * seg, c)
    return best


def segment_intersection(p1: Point, p2: Point, q1: Point, q2: Point,
                         eps: float = 1e-12) -> Optional[Tuple[float, float, Point]]:
    """Proper intersection of segments p1p2 and q1q2.

    Returns (t, u, point) with t, u in [0, 1] along each segment, or None for
    parallel/non-crossing segments.
    """
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    denom = rx * sy - ry * sx
    if abs(denom) < eps:
        return None
    qpx, qpy = q1[0] - p1[0], q1[1] - p1[1]
    t = (qpx * sy - qpy * sx) / denom
    u = (qpx * ry - qpy * rx) / denom
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        t = min(1.0, max(0.0, t))
        u = min(1.0, max(0.0, u))
        return t, u, (p1[0] + t * rx, p1[1] + t * ry)
    return None


def _aabb_far(a0: Point, a1: Point, b0: Point, b1: Point, margin: float) -> bool:
    """True when the segment bounding boxes are separated by more than margin."""
    return (min(a0[0], a1[0]) > max(b0[0], b1[0]) + margin
            or min(b0[0], b1[0]) > max(a0[0], a1[0]) + margin
            or min(a0[1], a1[1]) > max(b0[1], b1[1]) + margin
            or min(b0[1], b1[1]) > max(a0[1], a1[1]) + margin)


def first_polyline_intersection(path_a: Sequence[Point], path_b: Sequence[Point]
                                ) -> Optional[Tuple[float, float, Point]]:
    """First crossing of two polylines in path_a arc-length order.

    Returns (s_a, s_b, point) or None. Ties along path_a resolve to the
    smallest arc position on path_b.
    """
    arc_a = cumulative_arc_length(path_a)
    arc_b = cumulative_arc_length(path_b)
    best: Optional[Tuple[float, float, Point]] = None
    for i in range(len(path_a) - 1):
        seg_hit: Optional[Tuple[float, float, Point]] = None
        for j in range(len(path_b) - 1):
            if _aabb_far(path_a[i], path_a[i + 1], path_b[j], path_b[j + 1], 0.0):
                continue
            hit = segment_intersection(path_a[i], path_a[i + 1], path_b[j], path_b[j + 1])
            if hit is None:
                continue
            t, u, pt = hit
            s_a = arc_a[i] + t * (arc_a[i + 1] - arc_a[i])
            s_b = arc_b[j] + u * (arc_b[j + 1] - arc_b[j])
            if seg_hit is None or (s_a, s_b) < (seg_hit[0], seg_hit[1]):
                seg_hit = (s_a, s_b, pt)
        if seg_hit is not None:
            best = seg_hit
            break
    return best


def _interval_within_distance(a0: Point, a1: Point, b0: Point, b1: Point,
                              dist: float) -> Optional[Tuple[float, float]]:
    """Parameter interval [t0, t1] of segment a0a1 lying within dist of segment b0b1.

    The set of points within dist of a segment is a capsule (convex), so the
    intersection with a segment is a single interval. Found by bisection on the
    smooth distance function after bracketing with a coarse scan.
    """
    def d(t: float) -> float:
        p = (a0[0] + t * (a1[0] - a0[0]), a0[1] + t * (a1[1] - a0[1]))
        return project_point_to_segment(p, b0, b1)[0]

    n = 16
    ts = [i / n for i in range(n + 1)]
    ds = [d(t) for t in ts]
    inside = [dv <= dist for dv in ds]
    if not any(inside):
        # the capsule may still clip the segment between scan points near the
        # minimum of d; refine around the coarse minimum
        i_min = min(range(len(ds)), key=lambda i: ds[i])
        lo = ts[max(0, i_min - 1)]
        hi = ts[min(n, i_min + 1)]
        for _ in range(60):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            if d(m1) <= d(m2):
                hi = m2
            else:
                lo = m1
        t_min = 0.5 * (lo + hi)
        if d(t_min) > dist:
            return None
        ts = sorted(set(ts + [t_min]))
        ds = [d(t) for t in ts]
        inside = [dv <= dist for dv in ds]

    first_in = inside.index(True)
    last_in = len(inside) - 1 - inside[::-1].index(True)

    t_enter = ts[first_in]
    if first_in > 0:
        lo, hi = ts[first_in - 1], ts[first_in]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if d(mid) <= dist:
                hi = mid
            else:
                lo = mid
        t_enter = hi
    t_exit = ts[last_in]
    if last_in < len(ts) - 1:
        lo, hi = ts[last_in], ts[last_in + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if d(mid) <= dist:
                lo = mid
            else:
                hi = mid
        t_exit = lo
    return t_enter, t_exit


def first_polyline_proximity(path_a: Sequence[Point], path_b: Sequence[Point],
                             dist: float) -> Optional[Tuple[float, float, Point]]:
    """Earliest point along path_a whose distance to path_b is <= dist.

    Returns (s_a, s_b, midpoint) where midpoint is halfway between the path_a
    point and its closest point on path_b, or None when the paths never come
    within dist.
    """
    arc_a = cumulative_arc_length(path_a)
    arc_b = cumulative_arc_length(path_b)
    for i in range(len(path_a) - 1):
        a0, a1 = path_a[i], path_a[i + 1]
        t_first: Optional[float] = None
        for j in range(len(path_b) - 1):
            if _aabb_far(a0, a1, path_b[j], path_b[j + 1], dist):
                continue
            iv = _interval_within_distance(a0, a1, path_b[j], path_b[j + 1], dist)
            if iv is not None and (t_first is None or iv[0] < t_first):
                t_first = iv[0]
        if t_first is None:
            continue
        p = (a0[0] + t_first * (a1[0] - a0[0]), a0[1] + t_first * (a1[1] - a0[1]))
        d_b, s_b, closest = project_point_to_polyline(p, path_b, arc_b)
        s_a = arc_a[i] + t_first * (arc_a[i + 1] - arc_a[i])
        mid = (0.5 * (p[0] + closest[0]), 0.5 * (p[1] + closest[1]))
        return s_a, s_b, mid
    return None
