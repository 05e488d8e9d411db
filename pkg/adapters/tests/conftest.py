"""Synthetic source-data builders for both adapters."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from avconflict_adapters import lyftzarr
from avconflict_adapters.tfrecord import write_tfrecord
from avconflict_adapters.waymo_schema import (
    LaneFeature,
    MapFeature,
    OBJECT_TYPE_CYCLIST,
    OBJECT_TYPE_PEDESTRIAN,
    OBJECT_TYPE_VEHICLE,
    ObjectState,
    ScenarioProto,
    StopSignFeature,
    Track,
    encode_scenario,
)

N_FRAMES = 91  # 9 s at 10 Hz


def moving_states(start, direction, speed, n=N_FRAMES, invalid=()):
    states = []
    for k in range(n):
        if k in invalid:
            states.append(ObjectState(valid=False))
            continue
        t = 0.1 * k
        states.append(ObjectState(
            center_x=start[0] + direction[0] * speed * t,
            center_y=start[1] + direction[1] * speed * t,
            heading=math.atan2(direction[1], direction[0]),
            velocity_x=direction[0] * speed,
            velocity_y=direction[1] * speed,
            valid=True,
        ))
    return states


def build_waymo_scenario(scenario_id="w0", with_signs=True):
    """Ego driving east, one crossing vehicle, a pedestrian, a parked stub."""
    tracks = [
        Track(id=100, object_type=OBJECT_TYPE_VEHICLE,
              states=moving_states((-50.0, -2.0), (1.0, 0.0), 6.0)),
        Track(id=200, object_type=OBJECT_TYPE_VEHICLE,
              states=moving_states((2.0, -45.0), (0.0, 1.0), 5.0, invalid=(30, 31))),
        Track(id=300, object_type=OBJECT_TYPE_PEDESTRIAN,
              states=moving_states((-20.0, 10.0), (1.0, 0.0), 1.2)),
        Track(id=400, object_type=OBJECT_TYPE_CYCLIST,
              states=[ObjectState(valid=False)] * (N_FRAMES - 1)
              + [ObjectState(center_x=0, center_y=0, valid=True)]),
    ]
    features = [
        MapFeature(id=1, lane=LaneFeature(polyline=[(-60.0, -2.0), (-8.0, -2.0)])),
        MapFeature(id=2, lane=LaneFeature(polyline=[(8.0, -2.0), (60.0, -2.0)])),
        MapFeature(id=3, lane=LaneFeature(polyline=[(2.0, -60.0), (2.0, -8.0)])),
        MapFeature(id=4, lane=LaneFeature(polyline=[(2.0, 8.0), (2.0, 60.0)])),
    ]
    if with_signs:
        features += [
            MapFeature(id=10, stop_sign=StopSignFeature(lane_ids=[1],
                                                        position=(-8.0, -4.0))),
            MapFeature(id=11, stop_sign=StopSignFeature(lane_ids=[3],
                                                        position=(4.0, -8.0))),
            MapFeature(id=12, stop_sign=StopSignFeature(lane_ids=[99],
                                                        position=(0.0, 20.0))),
        ]
    return ScenarioProto(
        scenario_id=scenario_id,
        timestamps_seconds=[0.1 * k for k in range(N_FRAMES)],
        sdc_track_index=0,
        tracks=tracks,
        map_features=features,
    )


@pytest.fixture
def waymo_shard(tmp_path) -> Path:
    shard = tmp_path / "training.tfrecord-00000-of-00001"
    payloads = [encode_scenario(build_waymo_scenario("w0")),
                encode_scenario(build_waymo_scenario("w1"))]
    write_tfrecord(payloads, shard)
    return shard


SCENE_DTYPE = np.dtype([
    ("frame_index_interval", "<i8", (2,)),
    ("host", "<U16"),
    ("start_time", "<i8"),
    ("end_time", "<i8"),
])
FRAME_DTYPE = np.dtype([
    ("timestamp", "<i8"),
    ("agent_index_interval", "<i8", (2,)),
    ("traffic_light_faces_index_interval", "<i8", (2,)),
    ("ego_translation", "<f8", (3,)),
    ("ego_rotation", "<f8", (3, 3)),
])
AGENT_DTYPE = np.dtype([
    ("centroid", "<f8", (2,)),
    ("extent", "<f4", (3,)),
    ("yaw", "<f4"),
    ("velocity", "<f4", (2,)),
    ("track_id", "<i8"),
    ("label_probabilities", "<f4", (17,)),
])

CAR_LABEL = 3
PEDESTRIAN_LABEL = 14


def build_lyft_store(root: Path, n_frames=60, n_scenes=2, compressor=None,
                     absent_frames=(20, 21)) -> Path:
    """Two-scene store: ego heading east plus one car and one pedestrian."""
    store = root / "scenes" / "sample.zarr"
    scenes = np.zeros(n_scenes, dtype=SCENE_DTYPE)
    frames = np.zeros(n_scenes * n_frames, dtype=FRAME_DTYPE)
    agent_rows = []
    for s in range(n_scenes):
        f0 = s * n_frames
        scenes[s]["frame_index_interval"] = (f0, f0 + n_frames)
        scenes[s]["host"] = "host-a001"
        scenes[s]["start_time"] = 10 ** 18 + f0 * 10 ** 8
        scenes[s]["end_time"] = 10 ** 18 + (f0 + n_frames) * 10 ** 8
        for k in range(n_frames):
            frame = frames[f0 + k]
            frame["timestamp"] = 10 ** 18 + (f0 + k) * 10 ** 8
            frame["ego_translation"] = (-40.0 + 7.0 * 0.1 * k, 2.0, 0.0)
            frame["ego_rotation"] = np.eye(3)
            a_start = len(agent_rows)
            if k not in absent_frames:
                car = np.zeros((), dtype=AGENT_DTYPE)
                car["centroid"] = (2.0, -40.0 + 5.0 * 0.1 * k)
                car["yaw"] = math.pi / 2
                car["velocity"] = (0.0, 5.0)
                car["track_id"] = 7
                car["label_probabilities"][CAR_LABEL] = 1.0
                agent_rows.append(car)
            walker = np.zeros((), dtype=AGENT_DTYPE)
            walker["centroid"] = (-10.0 + 0.1 * k, 12.0)
            walker["velocity"] = (1.0, 0.0)
            walker["track_id"] = 9
            walker["label_probabilities"][PEDESTRIAN_LABEL] = 1.0
            agent_rows.append(walker)
            frame["agent_index_interval"] = (a_start, len(agent_rows))
    agents = np.zeros(len(agent_rows), dtype=AGENT_DTYPE)
    for i, row in enumerate(agent_rows):
        agents[i] = row

    lyftzarr.write_group(store)
    lyftzarr.write_array(store / "scenes", scenes, chunk=max(1, n_scenes),
                         compressor=compressor)
    lyftzarr.write_array(store / "frames", frames, chunk=50, compressor=compressor)
    lyftzarr.write_array(store / "agents", agents, chunk=64, compressor=compressor)
    return root


@pytest.fixture
def lyft_root(tmp_path) -> Path:
    return build_lyft_store(tmp_path / "l5")
