"""Waymo Open Motion scenario shards to the neutral interchange format.

Reads TFRecord shards of scenario protos (motion dataset v1.2 line), emits
`scenarios.jsonl` plus a deduplicated `map.json`, and reports conversion
counts. The ego track (sdc_track_index) becomes agent class AV, other
vehicles HV, pedestrians/cyclists OTHER. Kinematics stay in the source map
frame at 10 Hz; speeds are the velocity-vector norm.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import List, Union

from .common import AdapterReport, MapAccumulator, write_map_json, write_scenarios_jsonl
from .tfrecord import TfRecordError, read_tfrecord
from .waymo_schema import (
    OBJECT_TYPE_VEHICLE,
    ScenarioProto,
    decode_scenario,
)

log = logging.getLogger(__name__)

MAP_ID = "waymo_map"


def _shards(src: Path) -> List[Path]:
    if src.is_file():
        return [src]
    shards = sorted(p for p in src.iterdir()
                    if p.is_file() and "tfrecord" in p.name)
    if not shards:
        raise FileNotFoundError(f"no tfrecord shards under {src}")
    return shards


def _agent_class(track_index: int, sdc_index: int, object_type: int) -> str:
    if track_index == sdc_index:
        return "AV"
    if object_type == OBJECT_TYPE_VEHICLE:
        return "HV"
    return "OTHER"


def _convert_scenario(proto: ScenarioProto, accumulator: MapAccumulator,
                      report: AdapterReport) -> dict:
    ts0 = proto.timestamps_seconds[0]
    times = [t - ts0 for t in proto.timestamps_seconds]
    duration = max(times[-1], 0.1)

    tracks = []
    for index, track in enumerate(proto.tracks):
        states = track.states
        if len(states) != len(times):
            report.warn(f"scenario {proto.scenario_id}: track {track.id} has "
                        f"{len(states)} states for {len(times)} timestamps; clipped")
            states = states[:len(times)]
        points = []
        n_valid = 0
        for t, state in zip(times, states):
            if state.valid:
                n_valid += 1
                points.append({
                    "t": t,
                    "x": state.center_x,
                    "y": state.center_y,
                    "v": math.hypot(state.velocity_x, state.velocity_y),
                    "heading": state.heading,
                    "valid": True,
                })
            else:
                points.append({"t": t, "valid": False})
        if n_valid < 2:
            report.tracks_dropped += 1
            continue
        tracks.append({
            "track_id": str(track.id),
            "agent_class": _agent_class(index, proto.sdc_track_index,
                                        track.object_type),
            "points": points,
        })

    lane_names = {}
    for feature in proto.map_features:
        if feature.lane is not None and len(feature.lane.polyline) >= 2:
            retained = accumulator.add_lane(
                f"{proto.scenario_id}/{feature.id}", feature.lane.polyline)
            lane_names[feature.id] = retained
    for feature in proto.map_features:
        if feature.stop_sign is None:
            continue
        x, y = feature.stop_sign.position
        linked = [lane for lane in feature.stop_sign.lane_ids if lane in lane_names]
        if not linked:
            report.warn(f"scenario {proto.scenario_id}: stop sign {feature.id} "
                        "controls no exported lane; skipped")
            continue
        for lane in linked:
            accumulator.add_stop_sign(f"{proto.scenario_id}/{feature.id}/{lane}",
                                      x, y, lane_names[lane])

    return {
        "scenario_id": proto.scenario_id,
        "source": "WAYMO",
        "duration": duration,
        "map_ref": accumulator.map_id,
        "tracks": tracks,
    }


def convert_waymo(src: Union[str, Path], dst: Union[str, Path]) -> AdapterReport:
    """Convert shard(s) at src into dst/scenarios.jsonl and dst/map.json."""
    src = Path(src)
    dst = Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    report = AdapterReport(source="WAYMO")
    accumulator = MapAccumulator(MAP_ID)
    records = []
    for shard in _shards(src):
        try:
            payloads = list(read_tfrecord(shard))
        except TfRecordError as exc:
            raise TfRecordError(f"{shard}: {exc}") from exc
        for index, payload in enumerate(payloads):
            report.scenarios_read += 1
            try:
                proto = decode_scenario(payload)
            except Exception as exc:
                report.warn(f"{shard.name} record {index}: undecodable ({exc})")
                continue
            if not proto.timestamps_seconds:
                report.warn(f"{shard.name} record {index}: no timestamps; skipped")
                continue
            records.append(_convert_scenario(proto, accumulator, report))
            report.scenarios_written += 1

    if report.scenarios_read and not report.scenarios_written:
        raise ValueError(
            "no record decoded into a scenario; the input is not a motion-dataset "
            "scenario shard (or its schema version is unsupported)")
    write_scenarios_jsonl(records, dst / "scenarios.jsonl")
    write_map_json(accumulator.to_record(), dst / "map.json")
    return report
