"""Decode/encode for the subset of the Waymo motion-dataset scenario proto.

Field numbers follow the public scenario.proto / map.proto definitions
(motion dataset v1.2 line). Only the fields the converter consumes are
modeled; unknown fields are ignored on decode. The encoder exists for tests
and sample-shard generation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from . import protowire as pw

OBJECT_TYPE_UNSET = 0
OBJECT_TYPE_VEHICLE = 1
OBJECT_TYPE_PEDESTRIAN = 2
OBJECT_TYPE_CYCLIST = 3
OBJECT_TYPE_OTHER = 4

# Scenario message
F_SCENARIO_TIMESTAMPS = 1
F_SCENARIO_TRACKS = 2
F_SCENARIO_ID = 5
F_SCENARIO_SDC_INDEX = 6
F_SCENARIO_MAP_FEATURES = 8

# Track message
F_TRACK_ID = 1
F_TRACK_OBJECT_TYPE = 2
F_TRACK_STATES = 3

# ObjectState message
F_STATE_CENTER_X = 2
F_STATE_CENTER_Y = 3
F_STATE_HEADING = 8
F_STATE_VELOCITY_X = 9
F_STATE_VELOCITY_Y = 10
F_STATE_VALID = 11

# MapFeature message
F_FEATURE_ID = 1
F_FEATURE_LANE = 3
F_FEATURE_STOP_SIGN = 7

# StopSign message
F_STOP_SIGN_LANE = 1
F_STOP_SIGN_POSITION = 2

# LaneCenter message
F_LANE_POLYLINE = 8

# MapPoint message
F_POINT_X = 1
F_POINT_Y = 2


@dataclass
class ObjectState:
    center_x: float = 0.0
    center_y: float = 0.0
    heading: float = 0.0
    velocity_x: float = 0.0
    velocity_y: float = 0.0
    valid: bool = False


@dataclass
class Track:
    id: int = 0
    object_type: int = OBJECT_TYPE_UNSET
    states: List[ObjectState] = field(default_factory=list)


@dataclass
class StopSignFeature:
    lane_ids: List[int] = field(default_factory=list)
    position: Tuple[float, float] = (0.0, 0.0)


@dataclass
class LaneFeature:
    polyline: List[Tuple[float, float]] = field(default_factory=list)


@dataclass
class MapFeature:
    id: int = 0
    stop_sign: Optional[StopSignFeature] = None
    lane: Optional[LaneFeature] = None


@dataclass
class ScenarioProto:
    scenario_id: str = ""
    timestamps_seconds: List[float] = field(default_factory=list)
    sdc_track_index: int = -1
    tracks: List[Track] = field(default_factory=list)
    map_features: List[MapFeature] = field(default_factory=list)


def _decode_point(buf: bytes) -> Tuple[float, float]:
    x = y = 0.0
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_POINT_X and wt == pw.WIRETYPE_64BIT:
            x = pw.as_double(payload)
        elif num == F_POINT_Y and wt == pw.WIRETYPE_64BIT:
            y = pw.as_double(payload)
    return x, y


def _decode_state(buf: bytes) -> ObjectState:
    state = ObjectState()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_STATE_CENTER_X and wt == pw.WIRETYPE_64BIT:
            state.center_x = pw.as_double(payload)
        elif num == F_STATE_CENTER_Y and wt == pw.WIRETYPE_64BIT:
            state.center_y = pw.as_double(payload)
        elif num == F_STATE_HEADING and wt == pw.WIRETYPE_32BIT:
            state.heading = pw.as_float(payload)
        elif num == F_STATE_VELOCITY_X and wt == pw.WIRETYPE_32BIT:
            state.velocity_x = pw.as_float(payload)
        elif num == F_STATE_VELOCITY_Y and wt == pw.WIRETYPE_32BIT:
            state.velocity_y = pw.as_float(payload)
        elif num == F_STATE_VALID and wt == pw.WIRETYPE_VARINT:
            state.valid = bool(payload)
    return state


def _decode_track(buf: bytes) -> Track:
    track = Track()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_TRACK_ID and wt == pw.WIRETYPE_VARINT:
            track.id = pw.signed(payload, 32)
        elif num == F_TRACK_OBJECT_TYPE and wt == pw.WIRETYPE_VARINT:
            track.object_type = payload
        elif num == F_TRACK_STATES and wt == pw.WIRETYPE_LENGTH:
            track.states.append(_decode_state(payload))
    return track


def _decode_stop_sign(buf: bytes) -> StopSignFeature:
    sign = StopSignFeature()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_STOP_SIGN_LANE:
            if wt == pw.WIRETYPE_LENGTH:  # packed
                pos = 0
                while pos < len(payload):
                    value, pos = pw.decode_varint(payload, pos)
                    sign.lane_ids.append(pw.signed(value))
            elif wt == pw.WIRETYPE_VARINT:
                sign.lane_ids.append(pw.signed(payload))
        elif num == F_STOP_SIGN_POSITION and wt == pw.WIRETYPE_LENGTH:
            sign.position = _decode_point(payload)
    return sign


def _decode_lane(buf: bytes) -> LaneFeature:
    lane = LaneFeature()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_LANE_POLYLINE and wt == pw.WIRETYPE_LENGTH:
            lane.polyline.append(_decode_point(payload))
    return lane


def _decode_feature(buf: bytes) -> MapFeature:
    feature = MapFeature()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_FEATURE_ID and wt == pw.WIRETYPE_VARINT:
            feature.id = pw.signed(payload)
        elif num == F_FEATURE_STOP_SIGN and wt == pw.WIRETYPE_LENGTH:
            feature.stop_sign = _decode_stop_sign(payload)
        elif num == F_FEATURE_LANE and wt == pw.WIRETYPE_LENGTH:
            feature.lane = _decode_lane(payload)
    return feature


def decode_scenario(buf: bytes) -> ScenarioProto:
    scenario = ScenarioProto()
    for num, wt, payload in pw.iter_fields(buf):
        if num == F_SCENARIO_TIMESTAMPS:
            if wt == pw.WIRETYPE_LENGTH:  # packed
                scenario.timestamps_seconds.extend(pw.unpack_doubles(payload))
            elif wt == pw.WIRETYPE_64BIT:
                scenario.timestamps_seconds.append(pw.as_double(payload))
        elif num == F_SCENARIO_TRACKS and wt == pw.WIRETYPE_LENGTH:
            scenario.tracks.append(_decode_track(payload))
        elif num == F_SCENARIO_ID and wt == pw.WIRETYPE_LENGTH:
            scenario.scenario_id = payload.decode("utf-8")
        elif num == F_SCENARIO_SDC_INDEX and wt == pw.WIRETYPE_VARINT:
            scenario.sdc_track_index = pw.signed(payload, 32)
        elif num == F_SCENARIO_MAP_FEATURES and wt == pw.WIRETYPE_LENGTH:
            scenario.map_features.append(_decode_feature(payload))
    return scenario


# --- encoding (tests and sample shards) ---

def _encode_point(point: Tuple[float, float]) -> bytes:
    return pw.field_double(F_POINT_X, point[0]) + pw.field_double(F_POINT_Y, point[1])


def _encode_state(state: ObjectState) -> bytes:
    return b"".join([
        pw.field_double(F_STATE_CENTER_X, state.center_x),
        pw.field_double(F_STATE_CENTER_Y, state.center_y),
        pw.field_float(F_STATE_HEADING, state.heading),
        pw.field_float(F_STATE_VELOCITY_X, state.velocity_x),
        pw.field_float(F_STATE_VELOCITY_Y, state.velocity_y),
        pw.field_varint(F_STATE_VALID, int(state.valid)),
    ])


def _encode_track(track: Track) -> bytes:
    out = [pw.field_varint(F_TRACK_ID, track.id & 0xFFFFFFFF),
           pw.field_varint(F_TRACK_OBJECT_TYPE, track.object_type)]
    out += [pw.field_bytes(F_TRACK_STATES, _encode_state(s)) for s in track.states]
    return b"".join(out)


def _encode_feature(feature: MapFeature) -> bytes:
    out = [pw.field_varint(F_FEATURE_ID, feature.id & (1 << 64) - 1)]
    if feature.stop_sign is not None:
        body = b"".join(pw.field_varint(F_STOP_SIGN_LANE, lane & (1 << 64) - 1)
                        for lane in feature.stop_sign.lane_ids)
        body += pw.field_bytes(F_STOP_SIGN_POSITION,
                               _encode_point(feature.stop_sign.position))
        out.append(pw.field_bytes(F_FEATURE_STOP_SIGN, body))
    if feature.lane is not None:
        body = b"".join(pw.field_bytes(F_LANE_POLYLINE, _encode_point(p))
                        for p in feature.lane.polyline)
        out.append(pw.field_bytes(F_FEATURE_LANE, body))
    return b"".join(out)


def encode_scenario(scenario: ScenarioProto) -> bytes:
    out = [pw.field_packed_doubles(F_SCENARIO_TIMESTAMPS,
                                   scenario.timestamps_seconds)]
    out += [pw.field_bytes(F_SCENARIO_TRACKS, _encode_track(t))
            for t in scenario.tracks]
    out.append(pw.field_string(F_SCENARIO_ID, scenario.scenario_id))
    out.append(pw.field_varint(F_SCENARIO_SDC_INDEX,
                               scenario.sdc_track_index & 0xFFFFFFFF))
    out += [pw.field_bytes(F_SCENARIO_MAP_FEATURES, _encode_feature(f))
            for f in scenario.map_features]
    return b"".join(out)
