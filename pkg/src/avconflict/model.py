"""Core domain types shared by every stage of the pipeline.

Unit conventions: lengths in meters, times in seconds, speeds in m/s,
accelerations in m/s^2, headings in radians within [-pi, pi]. All types
are immutable value data and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple


class AgentClass(Enum):
    AV = "AV"
    HV = "HV"
    OTHER = "OTHER"


class InteractionClass(Enum):
    """Pairing of leader/follower agent classes. AV_HV means the AV leads."""

    HV_HV = "HV-HV"
    AV_HV = "AV-HV"
    HV_AV = "HV-AV"


class ScenarioSource(Enum):
    WAYMO = "WAYMO"
    LYFT = "LYFT"
    SYNTHETIC = "SYNTHETIC"


class LaneRole(Enum):
    APPROACH = "APPROACH"
    EXIT = "EXIT"
    INTERNAL = "INTERNAL"
    UNKNOWN = "UNKNOWN"


class ModelError(ValueError):
    """Raised when a domain invariant is violated."""


class UnsupportedPairError(ModelError):
    """Raised for vehicle pairings outside the supported taxonomy."""


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    x: float
    y: float
    v: float
    a: float
    heading: float
    valid: bool = True


@dataclass(frozen=True)
class TrajectoryTrack:
    track_id: str
    agent_class: AgentClass
    points: Tuple[TrajectoryPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(p.t for p in self.points)

    def valid_points(self) -> Tuple[TrajectoryPoint, ...]:
        return tuple(p for p in self.points if p.valid)


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    source: ScenarioSource
    duration: float
    tracks: Tuple[TrajectoryTrack, ...]
    map_ref: str

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))

    def track(self, track_id: str) -> TrajectoryTrack:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        raise KeyError(track_id)


@dataclass(frozen=True)
class StopSign:
    sign_id: str
    x: float
    y: float
    lane_id: str


@dataclass(frozen=True)
class LanePolyline:
    lane_id: str
    centerline: Tuple[Tuple[float, float], ...]
    role: LaneRole = LaneRole.UNKNOWN

    def __post_init__(self):
        object.__setattr__(
            self, "centerline", tuple((float(x), float(y)) for x, y in self.centerline)
        )


def interaction_class(leader: TrajectoryTrack, follower: TrajectoryTrack) -> InteractionClass:
    """Classify a leader/follower pair. The leader passes the conflict point first."""
    for track in (leader, follower):
        if track.agent_class not in (AgentClass.AV, AgentClass.HV):
            raise UnsupportedPairError(
                f"track {track.track_id!r} has class {track.agent_class.value}; "
                "only AV/HV pairs are supported"
            )
    if leader.agent_class is AgentClass.AV and follower.agent_class is AgentClass.AV:
        raise UnsupportedPairError("AV-AV pairs are unsupported (datasets contain one ego AV)")
    if leader.agent_class is AgentClass.AV:
        return InteractionClass.AV_HV
    if follower.agent_class is AgentClass.AV:
        return InteractionClass.HV_AV
    return InteractionClass.HV_HV


def validate_track(track: TrajectoryTrack, context: str = "") -> None:
    """Check the per-track invariants; raise ModelError naming the offending field."""
    where = f"{context}track {track.track_id!r}"
    valid = track.valid_points()
    if len(valid) < 2:
        raise ModelError(f"{where}: fewer than 2 valid points")
    last_t = None
    for i, p in enumerate(track.points):
        if last_t is not None and p.t <= last_t:
            raise ModelError(f"{where}: field 't' not strictly increasing at index {i}")
        last_t = p.t
        if not p.valid:
            continue
        for name in ("x", "y", "v", "a", "heading"):
            if not math.isfinite(getattr(p, name)):
                raise ModelError(f"{where}: field {name!r} not finite at index {i}")
        if p.v < 0:
            raise ModelError(f"{where}: field 'v' negative at index {i}")


def validate_scenario(scenario: Scenario, context: str = "") -> None:
    where = f"{context}scenario {scenario.scenario_id!r}"
    if not scenario.duration > 0:
        raise ModelError(f"{where}: field 'duration' must be positive")
    n_av = 0
    for track in scenario.tracks:
        validate_track(track, context=f"{where}: ")
        if track.agent_class is AgentClass.AV:
            n_av += 1
        for p in track.points:
            if p.t < 0 or p.t > scenario.duration:
                raise ModelError(
                    f"{where}: track {track.track_id!r} field 't' outside [0, duration]"
                )
    if n_av > 1:
        raise ModelError(f"{where}: more than one AV track")
