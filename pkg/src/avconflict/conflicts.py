"""Conflict detection inside validated intersections.

For every vehicle pair crossing an intersection the pipeline classifies the
interaction (merging when the entry lanes differ but the exit lane is shared,
crossing when both differ), locates the conflict point, assigns leader and
follower by order of arrival, and keeps the pair when the post-encroachment
time is below the threshold and at least one vehicle changed speed enough
over the interaction window.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .geometry import (
    cumulative_arc_length,
    dedupe_polyline,
    first_polyline_intersection,
    first_polyline_proximity,
    project_point_to_polyline,
)
from .intersections import Intersection
from .model import (
    AgentClass,
    InteractionClass,
    Scenario,
    TrajectoryTrack,
    UnsupportedPairError,
    interaction_class,
)

log = logging.getLogger(__name__)

APPROACH_MARGIN = 15.0  # m beyond the intersection radius for window start
MIN_DISPLACEMENT = 0.5  # m; tracks moving less are treated as parked
LANE_ASSIGN_DIST = 2.0  # m; max distance from a track point to its lane
DEFAULT_CLEARANCE = 2.5  # m; leader half-length allowance past the point


class ConflictKind(Enum):
    MERGING = "MERGING"
    CROSSING = "CROSSING"


class UnassignedLaneError(ValueError):
    """A track cannot be matched to an approach or exit lane."""


@dataclass(frozen=True)
class ConflictSpec:
    pet_max: float = 10.0
    speed_change_min: float = 3.0
    merge_buffer: float = 1.0

    def __post_init__(self):
        if not self.pet_max > 0:
            raise ValueError("pet_max must be positive")
        if not self.speed_change_min > 0:
            raise ValueError("speed_change_min must be positive")
        if not self.merge_buffer > 0:
            raise ValueError("merge_buffer must be positive")


@dataclass(frozen=True)
class ConflictPoint:
    point: Tuple[float, float]
    s_a: float
    s_b: float
    kind: ConflictKind


@dataclass(frozen=True)
class Conflict:
    conflict_id: str
    scenario_id: str
    source: str
    intersection_id: str
    leader_track_id: str
    follower_track_id: str
    kind: ConflictKind
    klass: InteractionClass
    conflict_point: Tuple[float, float]
    t_window_start: float
    t_leader_arrive: float
    t_leader_exit: float
    t_follower_arrive: float

    @property
    def pet(self) -> float:
        return self.t_follower_arrive - self.t_leader_exit


class TrackGeometry:
    """Arc-length parameterization of a track by cumulative chord length."""

    def __init__(self, track: TrajectoryTrack):
        self.track = track
        self.times = [p.t for p in track.points]
        self.xy = [(p.x, p.y) for p in track.points]
        self.speeds = [p.v for p in track.points]
        self.arc = cumulative_arc_length(self.xy)
        self.path = dedupe_polyline(self.xy)

    @property
    def total_length(self) -> float:
        return self.arc[-1]

    def _bracket(self, t: float) -> Tuple[int, int, float]:
        if t <= self.times[0]:
            return 0, 0, 0.0
        if t >= self.times[-1]:
            n = len(self.times) - 1
            return n, n, 0.0
        hi = bisect.bisect_right(self.times, t)
        lo = hi - 1
        span = self.times[hi] - self.times[lo]
        return lo, hi, (t - self.times[lo]) / span

    def position_at(self, t: float) -> Tuple[float, float]:
        lo, hi, f = self._bracket(t)
        (x0, y0), (x1, y1) = self.xy[lo], self.xy[hi]
        return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    def arc_at(self, t: float) -> float:
        lo, hi, f = self._bracket(t)
        return self.arc[lo] + f * (self.arc[hi] - self.arc[lo])

    def speed_at(self, t: float) -> float:
        lo, hi, f = self._bracket(t)
        return self.speeds[lo] + f * (self.speeds[hi] - self.speeds[lo])

    def time_at_arc(self, s: float) -> Optional[float]:
        """First time the cumulative arc length reaches s; None if never."""
        if s <= self.arc[0]:
            return self.times[0]
        if s > self.arc[-1] + 1e-12:
            return None
        i = bisect.bisect_left(self.arc, s)
        i = min(i, len(self.arc) - 1)
        if self.arc[i] == self.arc[i - 1]:
            return self.times[i]
        f = (s - self.arc[i - 1]) / (self.arc[i] - self.arc[i - 1])
        return self.times[i - 1] + f * (self.times[i] - self.times[i - 1])

    def arc_of_point(self, point: Tuple[float, float]) -> float:
        """Arc position of the closest point on the path to `point`."""
        _, s, _ = project_point_to_polyline(point, self.path)
        return s

    def arc_to_reach(self, point: Tuple[float, float]) -> float:
        """Arc position at which the track reaches `point`.

        When the point lies beyond the recorded path (the vehicle stopped
        short of it), the remaining straight-line distance extends the arc
        past the path end.
        """
        d, s, _ = project_point_to_polyline(point, self.path)
        total = self.arc[-1]
        if s >= total - 1e-9:
            return total + d
        return s


def find_conflict_point(path_a: Sequence[Tuple[float, float]],
                        path_b: Sequence[Tuple[float, float]],
                        spec: ConflictSpec = ConflictSpec(),
                        kind: Optional[ConflictKind] = None) -> Optional[ConflictPoint]:
    """Locate the shared conflict point of two paths.

    Crossing: the first exact polyline intersection in path_a arc order.
    Merging: the first point of path_a within 2 * merge_buffer of path_b,
    reported as the midpoint of the closest-point pair. With kind=None the
    crossing rule is tried first.
    """
    path_a = dedupe_polyline(path_a)
    path_b = dedupe_polyline(path_b)
    if len(path_a) < 2 or len(path_b) < 2:
        return None
    if kind in (None, ConflictKind.CROSSING):
        hit = first_polyline_intersection(path_a, path_b)
        if hit is not None:
            s_a, s_b, pt = hit
            return ConflictPoint(pt, s_a, s_b, ConflictKind.CROSSING)
        if kind is ConflictKind.CROSSING:
            return None
    prox = first_polyline_proximity(path_a, path_b, 2.0 * spec.merge_buffer)
    if prox is not None:
        s_a, s_b, mid = prox
        return ConflictPoint(mid, s_a, s_b, ConflictKind.MERGING)
    return None


def disk_passage(geom: TrackGeometry, center: Tuple[float, float], radius: float
                 ) -> Optional[Tuple[int, int]]:
    """Indexes of the first and last samples inside the disk, provided the
    track also has samples outside on both sides."""
    inside = [math.hypot(x - center[0], y - center[1]) <= radius for x, y in geom.xy]
    if not any(inside):
        return None
    first = inside.index(True)
    last = len(inside) - 1 - inside[::-1].index(True)
    if first == 0 or last == len(inside) - 1:
        return None
    return first, last


def _nearest_lane(point: Tuple[float, float], lanes, max_dist: float) -> Optional[str]:
    best_id, best_d = None, math.inf
    for lane in lanes:
        d, _, _ = project_point_to_polyline(point, dedupe_polyline(lane.centerline))
        if d < best_d:
            best_id, best_d = lane.lane_id, d
    if best_id is None or best_d > max_dist:
        return None
    return best_id


def _entry_exit_lanes(geom: TrackGeometry, ix: Intersection) -> Tuple[str, str]:
    passage = disk_passage(geom, ix.center, ix.radius)
    if passage is None:
        raise UnassignedLaneError(
            f"track {geom.track.track_id!r} does not pass through "
            f"{ix.intersection_id!r}")
    first_inside, last_inside = passage
    entry_point = geom.xy[first_inside - 1]
    exit_point = geom.xy[last_inside + 1]
    entry = _nearest_lane(entry_point, ix.approach_geoms, LANE_ASSIGN_DIST)
    if entry is None:
        raise UnassignedLaneError(
            f"track {geom.track.track_id!r}: no approach lane within "
            f"{LANE_ASSIGN_DIST} m of its entry point")
    exit_ = _nearest_lane(exit_point, ix.exit_geoms, LANE_ASSIGN_DIST)
    if exit_ is None:
        raise UnassignedLaneError(
            f"track {geom.track.track_id!r}: no exit lane within "
            f"{LANE_ASSIGN_DIST} m of its exit point")
    return entry, exit_


def classify_kind(track_a: TrajectoryTrack, track_b: TrajectoryTrack,
                  ix: Intersection) -> Optional[ConflictKind]:
    """Merging/crossing label from entry and exit lane assignments.

    Same entry lane means car following, which is out of scope (None).
    Raises UnassignedLaneError when a track cannot be snapped to lanes.
    """
    entry_a, exit_a = _entry_exit_lanes(TrackGeometry(track_a), ix)
    entry_b, exit_b = _entry_exit_lanes(TrackGeometry(track_b), ix)
    if entry_a == entry_b:
        return None
    return ConflictKind.MERGING if exit_a == exit_b else ConflictKind.CROSSING


def _interaction_window_start(geom_a: TrackGeometry, geom_b: TrackGeometry,
                              s_cp_a: float, s_cp_b: float, ix: Intersection,
                              t_end: float) -> Optional[float]:
    """First instant both vehicles are near the intersection and upstream of
    their conflict-point arc positions."""
    reach = ix.radius + APPROACH_MARGIN
    t_min = max(geom_a.times[0], geom_b.times[0])
    grid = sorted(set(geom_a.times) | set(geom_b.times) | {t_min, t_end})
    for t in grid:
        if t < t_min or t > t_end:
            continue
        pa = geom_a.position_at(t)
        pb = geom_b.position_at(t)
        if (math.hypot(pa[0] - ix.center[0], pa[1] - ix.center[1]) <= reach
                and math.hypot(pb[0] - ix.center[0], pb[1] - ix.center[1]) <= reach
                and geom_a.arc_at(t) < s_cp_a - 1e-9
                and geom_b.arc_at(t) < s_cp_b - 1e-9):
            return t
    return None


def _speed_range(geom: TrackGeometry, t0: float, t1: float) -> float:
    speeds = [geom.speed_at(t0), geom.speed_at(t1)]
    speeds += [v for t, v in zip(geom.times, geom.speeds) if t0 <= t <= t1]
    return max(speeds) - min(speeds)


def detect_conflicts(scenario: Scenario, ix: Intersection,
                     spec: ConflictSpec = ConflictSpec(),
                     clearance: float = DEFAULT_CLEARANCE,
                     _geometries: Optional[Dict[str, TrackGeometry]] = None
                     ) -> List[Conflict]:
    """Detect merging and crossing conflicts at one intersection.

    Expects smoothed tracks. Emits conflicts with leader/follower roles
    assigned so the post-encroachment time is non-negative.
    """
    geoms = _geometries if _geometries is not None else {}
    candidates: List[TrajectoryTrack] = []
    for track in scenario.tracks:
        if track.agent_class not in (AgentClass.AV, AgentClass.HV):
            continue
        geom = geoms.get(track.track_id)
        if geom is None:
            geom = TrackGeometry(track)
            geoms[track.track_id] = geom
        if geom.total_length < MIN_DISPLACEMENT:
            continue
        if disk_passage(geom, ix.center, ix.radius) is None:
            continue
        candidates.append(track)

    candidates.sort(key=lambda t: t.track_id)
    conflicts: List[Conflict] = []
    for track_a, track_b in combinations(candidates, 2):
        geom_a, geom_b = geoms[track_a.track_id], geoms[track_b.track_id]
        try:
            kind = classify_kind(track_a, track_b, ix)
        except UnassignedLaneError as exc:
            log.info("scenario %s: pair (%s, %s) skipped: %s", scenario.scenario_id,
                     track_a.track_id, track_b.track_id, exc)
            continue
        if kind is None:
            continue
        cp = find_conflict_point(geom_a.path, geom_b.path, spec, kind)
        if cp is None:
            continue
        t_arr_a = geom_a.time_at_arc(cp.s_a)
        t_arr_b = geom_b.time_at_arc(cp.s_b)
        if t_arr_a is None or t_arr_b is None:
            log.info("scenario %s: pair (%s, %s) discarded: a vehicle never "
                     "reaches the conflict point", scenario.scenario_id,
                     track_a.track_id, track_b.track_id)
            continue
        if t_arr_a <= t_arr_b:
            leader, follower = track_a, track_b
            geom_l, geom_f = geom_a, geom_b
            s_cp_l, s_cp_f = cp.s_a, cp.s_b
            t_leader_arrive, t_follower_arrive = t_arr_a, t_arr_b
        else:
            leader, follower = track_b, track_a
            geom_l, geom_f = geom_b, geom_a
            s_cp_l, s_cp_f = cp.s_b, cp.s_a
            t_leader_arrive, t_follower_arrive = t_arr_b, t_arr_a

        t_leader_exit = geom_l.time_at_arc(s_cp_l + clearance)
        if t_leader_exit is None:
            log.info("scenario %s: pair (%s, %s) discarded: leader never clears "
                     "the conflict point", scenario.scenario_id,
                     leader.track_id, follower.track_id)
            continue
        pet_value = t_follower_arrive - t_leader_exit
        if pet_value < 0:
            log.info("scenario %s: pair (%s, %s) discarded: follower arrives "
                     "before the leader clears", scenario.scenario_id,
                     leader.track_id, follower.track_id)
            continue
        if pet_value >= spec.pet_max:
            continue

        s_cp_a = cp.s_a if leader is track_a else cp.s_b
        t_start = _interaction_window_start(geom_l, geom_f, s_cp_l, s_cp_f, ix,
                                            t_follower_arrive)
        if t_start is None:
            continue
        dv_l = _speed_range(geom_l, t_start, t_follower_arrive)
        dv_f = _speed_range(geom_f, t_start, t_follower_arrive)
        if max(dv_l, dv_f) <= spec.speed_change_min:
            continue
        try:
            klass = interaction_class(leader, follower)
        except UnsupportedPairError as exc:
            log.info("scenario %s: pair (%s, %s) skipped: %s", scenario.scenario_id,
                     leader.track_id, follower.track_id, exc)
            continue

        conflicts.append(Conflict(
            conflict_id=(f"{scenario.scenario_id}:{ix.intersection_id}:"
                         f"{leader.track_id}:{follower.track_id}"),
            scenario_id=scenario.scenario_id,
            source=scenario.source.name,
            intersection_id=ix.intersection_id,
            leader_track_id=leader.track_id,
            follower_track_id=follower.track_id,
            kind=cp.kind,
            klass=klass,
            conflict_point=cp.point,
            t_window_start=t_start,
            t_leader_arrive=t_leader_arrive,
            t_leader_exit=t_leader_exit,
            t_follower_arrive=t_follower_arrive,
        ))
    return conflicts


def detect_scenario_conflicts(scenario: Scenario, intersections: Sequence[Intersection],
                              spec: ConflictSpec = ConflictSpec(),
                              clearance: float = DEFAULT_CLEARANCE) -> List[Conflict]:
    """Run detection over every intersection, deduplicating vehicle pairs.

    A pair interacting at several detected intersections is attributed to the
    first intersection (by identifier order) only.
    """
    geoms: Dict[str, TrackGeometry] = {}
    seen_pairs = set()
    out: List[Conflict] = []
    for ix in sorted(intersections, key=lambda i: i.intersection_id):
        for conflict in detect_conflicts(scenario, ix, spec, clearance, geoms):
            pair = frozenset((conflict.leader_track_id, conflict.follower_track_id))
            if pair in seen_pairs:
                continue
            seen_pairs.add(pair)
            out.append(conflict)
    return out


def conflict_to_row(conflict: Conflict) -> dict:
    return {
        "conflict_id": conflict.conflict_id,
        "scenario_id": conflict.scenario_id,
        "source": conflict.source,
        "intersection_id": conflict.intersection_id,
        "kind": conflict.kind.value,
        "klass": conflict.klass.value,
        "leader_track_id": conflict.leader_track_id,
        "follower_track_id": conflict.follower_track_id,
        "cp_x": conflict.conflict_point[0],
        "cp_y": conflict.conflict_point[1],
        "t_window_start": conflict.t_window_start,
        "t_leader_arrive": conflict.t_leader_arrive,
        "t_leader_exit": conflict.t_leader_exit,
        "t_follower_arrive": conflict.t_follower_arrive,
    }


CONFLICT_HEADER = list(conflict_to_row(Conflict(
    "", "", "", "", "", "", ConflictKind.CROSSING, InteractionClass.HV_HV,
    (0.0, 0.0), 0.0, 0.0, 0.0, 0.0)).keys())


def conflict_from_row(row: Dict[str, str]) -> Conflict:
    return Conflict(
        conflict_id=row["conflict_id"],
        scenario_id=row["scenario_id"],
        source=row["source"],
        intersection_id=row["intersection_id"],
        kind=ConflictKind(row["kind"]),
        klass=InteractionClass(row["klass"]),
        leader_track_id=row["leader_track_id"],
        follower_track_id=row["follower_track_id"],
        conflict_point=(float(row["cp_x"]), float(row["cp_y"])),
        t_window_start=float(row["t_window_start"]),
        t_leader_arrive=float(row["t_leader_arrive"]),
        t_leader_exit=float(row["t_leader_exit"]),
        t_follower_arrive=float(row["t_follower_arrive"]),
    )
