"""Shared builders: a four-way all-way-stop map and synthetic scenarios."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import pytest

from avconflict.intersections import ClusterSpec, detect_intersections
from avconflict.io import MapBundle, read_map
from avconflict.model import (
    AgentClass,
    Scenario,
    ScenarioSource,
    TrajectoryPoint,
    TrajectoryTrack,
)

DT = 0.1


def four_way_map_dict(arm: float = 60.0, rim: float = 8.0, offset: float = 2.0) -> dict:
    """Four-leg stop-controlled intersection centered at the origin.

    Right-hand traffic: each direction of travel has an approach lane ending
    at the rim and an exit lane starting at it, laterally offset by `offset`.
    """
    def lane(lane_id, pts, role="UNKNOWN"):
        return {"lane_id": lane_id, "centerline": pts, "role": role}

    return {
        "map_id": "m0",
        "lanes": [
            lane("ap_e", [[-arm, -offset], [-rim, -offset]]),
            lane("ex_e", [[rim, -offset], [arm, -offset]]),
            lane("ap_w", [[arm, offset], [rim, offset]]),
            lane("ex_w", [[-rim, offset], [-arm, offset]]),
            lane("ap_n", [[offset, -arm], [offset, -rim]]),
            lane("ex_n", [[offset, rim], [offset, arm]]),
            lane("ap_s", [[-offset, arm], [-offset, rim]]),
            lane("ex_s", [[-offset, -rim], [-offset, -arm]]),
        ],
        "stop_signs": [
            {"sign_id": "s_e", "x": -rim, "y": -offset - 2.0, "lane_id": "ap_e"},
            {"sign_id": "s_w", "x": rim, "y": offset + 2.0, "lane_id": "ap_w"},
            {"sign_id": "s_n", "x": offset + 2.0, "y": -rim, "lane_id": "ap_n"},
            {"sign_id": "s_s", "x": -offset - 2.0, "y": rim, "lane_id": "ap_s"},
        ],
    }


@pytest.fixture
def four_way_bundle(tmp_path) -> MapBundle:
    path = tmp_path / "map.json"
    path.write_text(json.dumps(four_way_map_dict()), encoding="utf-8")
    return read_map(path)


@pytest.fixture
def four_way_intersection(four_way_bundle):
    intersections = detect_intersections(four_way_bundle, ClusterSpec())
    assert len(intersections) == 1
    return intersections[0]


def sample_speeds(speed_fn: Callable[[float], float], t0: float, t1: float,
                  dt: float = DT) -> Tuple[List[float], List[float]]:
    ts, vs = [], []
    n = int(round((t1 - t0) / dt))
    for i in range(n + 1):
        t = t0 + i * dt
        ts.append(round(t, 6))
        vs.append(max(0.0, speed_fn(t)))
    return ts, vs


def track_from_speeds(track_id: str, agent_class: AgentClass,
                      start: Tuple[float, float], direction: Tuple[float, float],
                      ts: Sequence[float], vs: Sequence[float]) -> TrajectoryTrack:
    """Straight-line track integrating the sampled speeds (trapezoid rule)."""
    norm = math.hypot(*direction)
    ux, uy = direction[0] / norm, direction[1] / norm
    heading = math.atan2(uy, ux)
    s = 0.0
    points = []
    for i, (t, v) in enumerate(zip(ts, vs)):
        if i > 0:
            s += 0.5 * (vs[i - 1] + v) * (ts[i] - ts[i - 1])
        points.append(TrajectoryPoint(t=t, x=start[0] + s * ux, y=start[1] + s * uy,
                                      v=v, a=0.0, heading=heading, valid=True))
    return TrajectoryTrack(track_id=track_id, agent_class=agent_class,
                           points=tuple(points))


def polyline_track(track_id: str, agent_class: AgentClass,
                   waypoints: Sequence[Tuple[float, float]], speed: float,
                   duration: float = 20.0, dt: float = DT) -> TrajectoryTrack:
    """Track following a waypoint path at constant speed, stopping at the end."""
    segments = []
    for a, b in zip(waypoints, waypoints[1:]):
        segments.append((a, b, math.hypot(b[0] - a[0], b[1] - a[1])))
    total = sum(d for _, _, d in segments)
    points = []
    n = int(round(duration / dt))
    for i in range(n + 1):
        t = i * dt
        s = min(speed * t, total)
        run = s
        x, y = waypoints[-1]
        for a, b, d in segments:
            if run <= d:
                f = run / d if d > 0 else 0.0
                x = a[0] + f * (b[0] - a[0])
                y = a[1] + f * (b[1] - a[1])
                break
            run -= d
        v = speed if s < total else 0.0
        points.append(TrajectoryPoint(t=round(t, 6), x=x, y=y, v=v, a=0.0,
                                      heading=0.0, valid=True))
    return TrajectoryTrack(track_id=track_id, agent_class=agent_class,
                           points=tuple(points))


def constant_speed_track(track_id: str, agent_class: AgentClass,
                         start: Tuple[float, float], direction: Tuple[float, float],
                         speed: float, duration: float = 20.0,
                         dt: float = DT) -> TrajectoryTrack:
    ts, vs = sample_speeds(lambda t: speed, 0.0, duration, dt)
    return track_from_speeds(track_id, agent_class, start, direction, ts, vs)


def crossing_pair_scenario(
        leader_speed: float = 6.0,
        follower_speed_fn: Optional[Callable[[float], float]] = None,
        leader_start_x: float = -50.0,
        follower_start_y: float = -50.0,
        leader_class: AgentClass = AgentClass.HV,
        follower_class: AgentClass = AgentClass.HV,
        duration: float = 20.0,
        scenario_id: str = "sc0") -> Scenario:
    """Leader eastbound on y=-2 (lanes ap_e/ex_e), follower northbound on x=+2
    (ap_n/ex_n). Their paths cross at (2, -2)."""
    leader = constant_speed_track("lead", leader_class, (leader_start_x, -2.0),
                                  (1.0, 0.0), leader_speed, duration)
    if follower_speed_fn is None:
        follower_speed_fn = lambda t: 6.0
    ts, vs = sample_speeds(follower_speed_fn, 0.0, duration)
    follower = track_from_speeds("foll", follower_class, (2.0, follower_start_y),
                                 (0.0, 1.0), ts, vs)
    return Scenario(scenario_id=scenario_id, source=ScenarioSource.SYNTHETIC,
                    duration=duration, tracks=(leader, follower), map_ref="m0")


def merging_pair_scenario(duration: float = 20.0,
                          scenario_id: str = "sc_m") -> Scenario:
    """Southbound right-turner and westbound through vehicle sharing the west
    exit lane: different entry lanes, same exit lane."""
    turner = polyline_track(
        "sb", AgentClass.HV,
        waypoints=[(-2.0, 50.0), (-2.0, 2.0), (-8.0, 2.0), (-55.0, 2.0)],
        speed=5.0, duration=duration)

    def through_speed(t):
        return 6.5 - 4.0 * math.exp(-((t - 7.0) ** 2) / 6.0)

    ts, vs = sample_speeds(through_speed, 0.0, duration)
    through = track_from_speeds("wb", AgentClass.HV, (55.0, 2.4), (-1.0, 0.0), ts, vs)
    return Scenario(scenario_id=scenario_id, source=ScenarioSource.SYNTHETIC,
                    duration=duration, tracks=(turner, through), map_ref="m0")


def scenario_to_json(scenario: Scenario) -> dict:
    return {
        "scenario_id": scenario.scenario_id,
        "source": scenario.source.name,
        "duration": scenario.duration,
        "map_ref": scenario.map_ref,
        "tracks": [
            {
                "track_id": tr.track_id,
                "agent_class": tr.agent_class.name,
                "points": [
                    {"t": p.t, "x": p.x, "y": p.y, "v": p.v, "a": p.a,
                     "heading": p.heading, "valid": p.valid}
                    for p in tr.points
                ],
            }
            for tr in scenario.tracks
        ],
    }


def write_inputs(tmp_path: Path, scenarios: Sequence[Scenario],
                 map_dict: Optional[dict] = None) -> Tuple[Path, Path]:
    """Write scenarios.jsonl and map.json into tmp_path; returns both paths."""
    scen_path = tmp_path / "scenarios.jsonl"
    with scen_path.open("w", encoding="utf-8") as fh:
        for sc in scenarios:
            fh.write(json.dumps(scenario_to_json(sc)) + "\n")
    map_path = tmp_path / "map.json"
    map_path.write_text(json.dumps(map_dict or four_way_map_dict()), encoding="utf-8")
    return scen_path, map_path
