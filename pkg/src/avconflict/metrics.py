"""Per-conflict surrogate safety and behavior metrics.

Conventions shared by the per-frame metrics (TTC, required deceleration,
time advantage): frames are the follower's samples inside the interaction
window, distances are remaining arc length to the conflict point, speeds are
the smoothed series, and the window runs from the first mutual approach to
the leader's arrival at the conflict point (after which no collision course
exists). PET uses the leader's exit time, which includes the vehicle
half-length clearance applied during detection.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .conflicts import Conflict, ConflictKind, TrackGeometry
from .io import STANDSTILL_SPEED
from .model import Scenario, TrajectoryTrack

log = logging.getLogger(__name__)

MRD_MIN_DISTANCE = 0.5  # m; guard against the 1/d singularity at the point
PROFILE_MAX_DURATION = 8.0  # s
STANDSTILL_MIN_DURATION = 0.5  # s


class MetricUndefinedError(ValueError):
    """Raised when a metric has no defined value for the given conflict."""


class ProfileRole(Enum):
    LEADER = "leader"
    FOLLOWER = "follower"


@dataclass(frozen=True)
class ProfileSegment:
    conflict_id: str
    role: ProfileRole
    samples: Tuple[Tuple[float, float, float], ...]  # (t_rel, v, a)

    @property
    def avg_speed(self) -> float:
        return sum(s[1] for s in self.samples) / len(self.samples)

    @property
    def avg_accel(self) -> float:
        return sum(s[2] for s in self.samples) / len(self.samples)


@dataclass(frozen=True)
class MetricBundle:
    conflict_id: str
    pet: float
    min_ttc: Optional[float]
    mrd: float
    ta_series: Tuple[Tuple[float, Optional[float]], ...]
    follower_speed_at_cp: float
    avg_speed: Optional[float]
    avg_accel: Optional[float]
    profile: Optional[ProfileSegment]


Tracks = Union[Scenario, Dict[str, TrajectoryTrack]]


def _resolve_track(tracks: Tracks, track_id: str) -> TrajectoryTrack:
    if isinstance(tracks, Scenario):
        return tracks.track(track_id)
    return tracks[track_id]


def ttc_crossing(d_f: float, v_f: float) -> Optional[float]:
    """Time for the follower to cover d_f at its current speed."""
    if d_f < 0:
        raise ValueError("distance to the conflict point must be non-negative")
    if v_f <= STANDSTILL_SPEED:
        return None
    return d_f / v_f


def ttc_merging(d_f: float, v_f: float, v_l: float) -> Optional[float]:
    """Closing-time variant for near-parallel paths; None when not closing."""
    if d_f < 0:
        raise ValueError("distance to the conflict point must be non-negative")
    if v_f <= v_l:
        return None
    return d_f / (v_f - v_l)


@dataclass(frozen=True)
class _ConflictFrames:
    """Shared per-frame quantities over the interaction window."""

    times: Tuple[float, ...]
    d_f: Tuple[float, ...]
    v_f: Tuple[float, ...]
    d_l: Tuple[float, ...]
    v_l: Tuple[float, ...]


def _conflict_frames(conflict: Conflict, tracks: Tracks,
                     t_end: Optional[float] = None) -> _ConflictFrames:
    leader = TrackGeometry(_resolve_track(tracks, conflict.leader_track_id))
    follower = TrackGeometry(_resolve_track(tracks, conflict.follower_track_id))
    s_cp_l = leader.arc_to_reach(conflict.conflict_point)
    s_cp_f = follower.arc_to_reach(conflict.conflict_point)
    if t_end is None:
        t_end = conflict.t_leader_arrive
    times = [t for t in follower.times
             if conflict.t_window_start <= t <= t_end + 1e-12]
    return _ConflictFrames(
        times=tuple(times),
        d_f=tuple(max(0.0, s_cp_f - follower.arc_at(t)) for t in times),
        v_f=tuple(follower.speed_at(t) for t in times),
        d_l=tuple(max(0.0, s_cp_l - leader.arc_at(t)) for t in times),
        v_l=tuple(leader.speed_at(t) for t in times),
    )


def min_ttc(conflict: Conflict, tracks: Tracks) -> Optional[float]:
    """Minimum per-frame TTC over the interaction window; None when TTC is
    undefined at every frame."""
    frames = _conflict_frames(conflict, tracks)
    best: Optional[float] = None
    for d_f, v_f, v_l in zip(frames.d_f, frames.v_f, frames.v_l):
        if conflict.kind is ConflictKind.CROSSING:
            value = ttc_crossing(d_f, v_f)
        else:
            value = ttc_merging(d_f, v_f, v_l)
        if value is not None and (best is None or value < best):
            best = value
    return best


def pet(conflict: Conflict) -> float:
    """Gap between the leader clearing the conflict point and the follower
    arriving at it."""
    return conflict.t_follower_arrive - conflict.t_leader_exit


def required_decelerations(d_f: Sequence[float], v_f: Sequence[float]) -> List[float]:
    """Per-frame deceleration needed to stop before the conflict point.

    Frames closer than MRD_MIN_DISTANCE are excluded (the expression is
    singular as d approaches zero).
    """
    out = []
    for d, v in zip(d_f, v_f):
        if d < MRD_MIN_DISTANCE:
            continue
        out.append(v * v / (2.0 * d))
    return out


def mrd(conflict: Conflict, tracks: Tracks) -> float:
    """Maximum required deceleration of the follower over the window.

    Zero when the follower is stationary throughout (or every frame sits
    inside the singularity guard).
    """
    frames = _conflict_frames(conflict, tracks)
    if not frames.times:
        raise MetricUndefinedError(
            f"conflict {conflict.conflict_id!r} has an empty interaction window")
    if max(frames.v_f) <= STANDSTILL_SPEED:
        return 0.0
    values = required_decelerations(frames.d_f, frames.v_f)
    return max(values) if values else 0.0


def ta_series(conflict: Conflict, tracks: Tracks
              ) -> Tuple[Tuple[float, Optional[float]], ...]:
    """Per-frame time advantage d_f/v_f - d_l/v_l until the leader passes.

    Frames where either vehicle is at standstill are emitted with value None
    and excluded from downstream distributions.
    """
    frames = _conflict_frames(conflict, tracks)
    out: List[Tuple[float, Optional[float]]] = []
    for t, d_f, v_f, d_l, v_l in zip(frames.times, frames.d_f, frames.v_f,
                                     frames.d_l, frames.v_l):
        if v_f <= STANDSTILL_SPEED or v_l <= STANDSTILL_SPEED:
            out.append((t, None))
        else:
            out.append((t, d_f / v_f - d_l / v_l))
    return tuple(out)


def follower_speed_at_cp(conflict: Conflict, tracks: Tracks) -> float:
    """Smoothed follower speed interpolated at its conflict-point arrival."""
    follower = TrackGeometry(_resolve_track(tracks, conflict.follower_track_id))
    return follower.speed_at(conflict.t_follower_arrive)


def _median_dt(times: Sequence[float]) -> float:
    diffs = sorted(b - a for a, b in zip(times, times[1:]))
    return diffs[len(diffs) // 2] if diffs else 0.1


def standstill_profiles(conflict: Conflict, tracks: Tracks) -> Optional[ProfileSegment]:
    """Speed/acceleration profile of the follower pulling away from a stop.

    Requires a standstill episode (speed below the floor for at least
    STANDSTILL_MIN_DURATION) inside the interaction window followed by
    sustained motion. The segment is anchored at the last standstill frame
    and truncated at PROFILE_MAX_DURATION or the conflict-point arrival,
    whichever comes first. Accelerations are central differences of the
    smoothed speed. Returns None when the follower never stops.
    """
    follower = TrackGeometry(_resolve_track(tracks, conflict.follower_track_id))
    times = follower.times
    speeds = follower.speeds
    dt = _median_dt(times)
    n = len(times)
    accels = []
    for i in range(n):
        lo, hi = max(0, i - 1), min(n - 1, i + 1)
        span = times[hi] - times[lo]
        accels.append((speeds[hi] - speeds[lo]) / span if span > 0 else 0.0)

    in_window = [i for i, t in enumerate(times)
                 if conflict.t_window_start <= t <= conflict.t_follower_arrive + 1e-12]
    if not in_window:
        return None

    i = in_window[0]
    last = in_window[-1]
    anchor: Optional[int] = None
    while i <= last:
        if speeds[i] >= STANDSTILL_SPEED:
            i += 1
            continue
        j = i
        while j + 1 <= last and speeds[j + 1] < STANDSTILL_SPEED:
            j += 1
        episode_duration = times[j] - times[i] + dt
        onset = j + 1
        if (episode_duration >= STANDSTILL_MIN_DURATION - 1e-9 and onset <= last):
            # require sustained motion after the episode
            sustained = True
            t_check_end = times[onset] + STANDSTILL_MIN_DURATION
            for k in range(onset, n):
                if times[k] > t_check_end or times[k] > conflict.t_follower_arrive:
                    break
                if speeds[k] < STANDSTILL_SPEED:
                    sustained = False
                    break
            if sustained:
                anchor = j
                break
        i = j + 1
    if anchor is None:
        return None

    t_anchor = times[anchor]
    t_stop = min(t_anchor + PROFILE_MAX_DURATION, conflict.t_follower_arrive)
    samples = tuple(
        (times[k] - t_anchor, speeds[k], accels[k])
        for k in range(anchor, n)
        if times[k] <= t_stop + 1e-12
    )
    if len(samples) < 2:
        return None
    return ProfileSegment(conflict_id=conflict.conflict_id,
                          role=ProfileRole.FOLLOWER, samples=samples)


def compute_metrics(conflict: Conflict, tracks: Tracks) -> MetricBundle:
    """Evaluate every metric for one conflict."""
    profile = standstill_profiles(conflict, tracks)
    return MetricBundle(
        conflict_id=conflict.conflict_id,
        pet=pet(conflict),
        min_ttc=min_ttc(conflict, tracks),
        mrd=mrd(conflict, tracks),
        ta_series=ta_series(conflict, tracks),
        follower_speed_at_cp=follower_speed_at_cp(conflict, tracks),
        avg_speed=profile.avg_speed if profile else None,
        avg_accel=profile.avg_accel if profile else None,
        profile=profile,
    )


def metrics_to_row(conflict: Conflict, bundle: MetricBundle) -> dict:
    defined_ta = sum(1 for _, v in bundle.ta_series if v is not None)
    return {
        "conflict_id": bundle.conflict_id,
        "scenario_id": conflict.scenario_id,
        "source": conflict.source,
        "kind": conflict.kind.value,
        "klass": conflict.klass.value,
        "pet": bundle.pet,
        "min_ttc": bundle.min_ttc,
        "mrd": bundle.mrd,
        "follower_speed_at_cp": bundle.follower_speed_at_cp,
        "avg_speed": bundle.avg_speed,
        "avg_accel": bundle.avg_accel,
        "n_ta_frames": defined_ta,
    }


METRICS_HEADER = ["conflict_id", "scenario_id", "source", "kind", "klass", "pet",
                  "min_ttc", "mrd", "follower_speed_at_cp", "avg_speed",
                  "avg_accel", "n_ta_frames"]
