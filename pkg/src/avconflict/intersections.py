"""All-way-stop intersection discovery from stop-sign and lane map data.

Stop signs are grouped by single-linkage connected components under a
Euclidean distance threshold. A cluster qualifies as an all-way-stop
intersection when it has enough signs and every approach leg is controlled
by one of them; legs are approach lanes bucketed by travel bearing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .geometry import dedupe_polyline
from .io import MapBundle
from .model import LanePolyline, StopSign

log = logging.getLogger(__name__)

LEG_BIN_DEGREES = 30.0
MIN_LEGS = 3


class ValidationError(ValueError):
    """Raised when an intersection cannot be certified from the given data."""


@dataclass(frozen=True)
class ClusterSpec:
    link_distance: float = 45.0
    min_signs: int = 3
    radius_buffer: float = 5.0

    def __post_init__(self):
        if not self.link_distance > 0:
            raise ValueError("link_distance must be positive")
        if self.min_signs < 3:
            raise ValueError("min_signs must be at least 3")
        if self.radius_buffer < 0:
            raise ValueError("radius_buffer must be non-negative")


@dataclass(frozen=True)
class Intersection:
    intersection_id: str
    center: Tuple[float, float]
    radius: float
    sign_ids: Tuple[str, ...]
    approach_lanes: Tuple[str, ...]
    exit_lanes: Tuple[str, ...]
    approach_geoms: Tuple[LanePolyline, ...]
    exit_geoms: Tuple[LanePolyline, ...]
    n_legs: int


def cluster_stop_signs(signs: Sequence[StopSign], spec: ClusterSpec = ClusterSpec()
                       ) -> List[List[StopSign]]:
    """Single-linkage connected components under dist <= link_distance.

    Returns a full partition of the input (small clusters are not removed
    here); clusters and members keep input order.
    """
    n = len(signs)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    limit2 = spec.link_distance * spec.link_distance
    for i in range(n):
        for j in range(i + 1, n):
            dx = signs[i].x - signs[j].x
            dy = signs[i].y - signs[j].y
            if dx * dx + dy * dy <= limit2:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    by_root: Dict[int, List[StopSign]] = {}
    order: List[int] = []
    for i, sign in enumerate(signs):
        root = find(i)
        if root not in by_root:
            by_root[root] = []
            order.append(root)
        by_root[root].append(sign)
    return [by_root[r] for r in order]


def eligible_clusters(clusters: Sequence[Sequence[StopSign]],
                      spec: ClusterSpec = ClusterSpec()) -> List[List[StopSign]]:
    """Keep clusters with at least min_signs members."""
    return [list(c) for c in clusters if len(c) >= spec.min_signs]


def _cluster_geometry(cluster: Sequence[StopSign], spec: ClusterSpec
                      ) -> Tuple[Tuple[float, float], float]:
    cx = sum(s.x for s in cluster) / len(cluster)
    cy = sum(s.y for s in cluster) / len(cluster)
    max_dist = max(math.hypot(s.x - cx, s.y - cy) for s in cluster)
    return (cx, cy), max_dist + spec.radius_buffer


def _lane_ends(lane: LanePolyline) -> Optional[Tuple[Tuple[float, float], Tuple[float, float],
                                                     Tuple[float, float], Tuple[float, float]]]:
    pts = dedupe_polyline(lane.centerline)
    if len(pts) < 2:
        return None
    start, after_start = pts[0], pts[1]
    end, before_end = pts[-1], pts[-2]
    return start, after_start, before_end, end


def _unit(dx: float, dy: float) -> Tuple[float, float]:
    norm = math.hypot(dx, dy)
    return (dx / norm, dy / norm) if norm > 0 else (0.0, 0.0)


def _split_lanes(lanes: Sequence[LanePolyline], center: Tuple[float, float],
                 radius: float) -> Tuple[List[LanePolyline], List[LanePolyline]]:
    """Approach lanes end inside the disk heading inward; exit lanes start
    inside heading outward."""
    approaches: List[LanePolyline] = []
    exits: List[LanePolyline] = []
    for lane in lanes:
        ends = _lane_ends(lane)
        if ends is None:
            continue
        start, after_start, before_end, end = ends
        # approach test at the lane's end
        if math.hypot(end[0] - center[0], end[1] - center[1]) <= radius:
            u = _unit(end[0] - before_end[0], end[1] - before_end[1])
            w = (center[0] - end[0], center[1] - end[1])
            if math.hypot(*w) <= 1e-9 or u[0] * w[0] + u[1] * w[1] > 0:
                approaches.append(lane)
        # exit test at the lane's start
        if math.hypot(start[0] - center[0], start[1] - center[1]) <= radius:
            u = _unit(after_start[0] - start[0], after_start[1] - start[1])
            w = (center[0] - start[0], center[1] - start[1])
            if math.hypot(*w) <= 1e-9 or u[0] * w[0] + u[1] * w[1] < 0:
                exits.append(lane)
    return approaches, exits


def _approach_bearing_bin(lane: LanePolyline) -> int:
    ends = _lane_ends(lane)
    start, after_start, before_end, end = ends
    u = _unit(end[0] - before_end[0], end[1] - before_end[1])
    bearing = math.degrees(math.atan2(u[1], u[0]))  # direction of travel into the disk
    return int(math.floor(((bearing + 180.0) % 360.0) / LEG_BIN_DEGREES)) % 12


def _legs(approaches: Sequence[LanePolyline]) -> Dict[int, List[str]]:
    legs: Dict[int, List[str]] = {}
    for lane in approaches:
        legs.setdefault(_approach_bearing_bin(lane), []).append(lane.lane_id)
    return legs


def validate_all_way(cluster: Sequence[StopSign], lanes: Sequence[LanePolyline],
                     spec: ClusterSpec = ClusterSpec()) -> bool:
    """True when every approach leg near the cluster is controlled by a member sign.

    T-intersections (3 legs) pass; intersections with an uncontrolled leg
    (priority intersections) fail. Raises ValidationError when no lane data is
    available to certify against.
    """
    if not cluster:
        raise ValidationError("empty cluster")
    if not lanes:
        raise ValidationError("lane data absent; cannot certify all-way control")
    center, radius = _cluster_geometry(cluster, spec)
    approaches, _ = _split_lanes(lanes, center, radius)
    legs = _legs(approaches)
    if len(legs) < MIN_LEGS:
        return False
    controlled_lanes = {s.lane_id for s in cluster}
    return all(any(lane_id in controlled_lanes for lane_id in leg)
               for leg in legs.values())


def build_intersection(cluster: Sequence[StopSign], lanes: Sequence[LanePolyline],
                       spec: ClusterSpec = ClusterSpec(),
                       intersection_id: str = "ix") -> Intersection:
    """Estimate center, radius and lane roles for a validated cluster."""
    center, radius = _cluster_geometry(cluster, spec)
    approaches, exits = _split_lanes(lanes, center, radius)
    legs = _legs(approaches)
    return Intersection(
        intersection_id=intersection_id,
        center=center,
        radius=radius,
        sign_ids=tuple(s.sign_id for s in cluster),
        approach_lanes=tuple(l.lane_id for l in approaches),
        exit_lanes=tuple(l.lane_id for l in exits),
        approach_geoms=tuple(approaches),
        exit_geoms=tuple(exits),
        n_legs=len(legs),
    )


def detect_intersections(bundle: MapBundle, spec: ClusterSpec = ClusterSpec()
                         ) -> List[Intersection]:
    """Full discovery pass over a map: cluster, filter, validate, build."""
    out: List[Intersection] = []
    clusters = eligible_clusters(cluster_stop_signs(bundle.stop_signs, spec), spec)
    index = 0
    for cluster in clusters:
        try:
            ok = validate_all_way(cluster, bundle.lanes, spec)
        except ValidationError as exc:
            log.warning("map %s: cluster %s skipped: %s", bundle.map_id,
                        [s.sign_id for s in cluster], exc)
            continue
        if not ok:
            continue
        out.append(build_intersection(cluster, bundle.lanes, spec,
                                      intersection_id=f"{bundle.map_id}:ix{index}"))
        index += 1
    return out
