"""Lyft Level 5 motion data to the neutral interchange format.

Reads the chunked zarr layout (scenes / frames / agents structured arrays),
one scenario per scene at 10 Hz. The ego pose stream becomes the AV track
("ego"); perception agents whose most likely label is a vehicle class become
HV, everything else OTHER. Frames where an agent is not observed are kept as
valid=false placeholders.

Lane centerlines and stop signs come from an optional `map_export.json`
(documented in the package README) because the semantic-map protobuf needs
the l5kit toolchain; without it the map is empty and a warning is reported.
"""
from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from .common import AdapterReport, write_map_json, write_scenarios_jsonl
from .lyftzarr import read_array

log = logging.getLogger(__name__)

MAP_ID = "lyft_map"

# l5kit perception label indices whose argmax marks a vehicle agent
VEHICLE_LABELS = frozenset({3, 4, 5, 6, 7, 8, 9})


def _zarr_roots(src: Path) -> List[Path]:
    if (src / ".zgroup").exists() or (src / "scenes").exists() and (
            src / "scenes" / ".zarray").exists():
        return [src]
    candidates = []
    scenes_dir = src / "scenes"
    if scenes_dir.exists():
        candidates = sorted(p for p in scenes_dir.iterdir()
                            if p.is_dir() and p.suffix == ".zarr")
    if not candidates and src.suffix == ".zarr":
        candidates = [src]
    if not candidates:
        raise FileNotFoundError(f"no .zarr stores under {src}")
    return candidates


def _ego_heading(rotation: np.ndarray) -> float:
    return float(math.atan2(rotation[1, 0], rotation[0, 0]))


def _convert_scene(scene, frames, agents, scenario_id: str,
                   report: AdapterReport) -> Optional[dict]:
    f0, f1 = (int(v) for v in scene["frame_index_interval"])
    scene_frames = frames[f0:f1]
    if len(scene_frames) < 2:
        report.warn(f"scenario {scenario_id}: fewer than 2 frames; skipped")
        return None
    ts0 = int(scene_frames["timestamp"][0])
    times = [(int(t) - ts0) / 1e9 for t in scene_frames["timestamp"]]
    duration = max(times[-1], 0.1)

    ego_points = []
    for t, frame in zip(times, scene_frames):
        x, y = (float(v) for v in frame["ego_translation"][:2])
        ego_points.append({
            "t": t, "x": x, "y": y,
            "heading": _ego_heading(np.asarray(frame["ego_rotation"])),
            "valid": True,
        })
    tracks = [{"track_id": "ego", "agent_class": "AV", "points": ego_points}]

    observations: Dict[int, Dict[int, tuple]] = {}
    classes: Dict[int, str] = {}
    for frame_offset, frame in enumerate(scene_frames):
        a0, a1 = (int(v) for v in frame["agent_index_interval"])
        for agent in agents[a0:a1]:
            track_id = int(agent["track_id"])
            label = int(np.argmax(agent["label_probabilities"]))
            classes[track_id] = "HV" if label in VEHICLE_LABELS else "OTHER"
            observations.setdefault(track_id, {})[frame_offset] = (
                float(agent["centroid"][0]), float(agent["centroid"][1]),
                float(np.hypot(agent["velocity"][0], agent["velocity"][1])),
                float(agent["yaw"]),
            )

    for track_id in sorted(observations):
        seen = observations[track_id]
        first, last = min(seen), max(seen)
        if len(seen) < 2:
            report.tracks_dropped += 1
            continue
        points = []
        for offset in range(first, last + 1):
            if offset in seen:
                x, y, v, yaw = seen[offset]
                points.append({"t": times[offset], "x": x, "y": y, "v": v,
                               "heading": yaw, "valid": True})
            else:
                points.append({"t": times[offset], "valid": False})
        tracks.append({"track_id": str(track_id),
                       "agent_class": classes[track_id],
                       "points": points})

    return {
        "scenario_id": scenario_id,
        "source": "LYFT",
        "duration": duration,
        "map_ref": MAP_ID,
        "tracks": tracks,
    }


def _load_map_export(src: Path, report: AdapterReport) -> dict:
    for candidate in (src / "semantic_map" / "map_export.json",
                      src / "map_export.json"):
        if candidate.exists():
            exported = json.loads(candidate.read_text(encoding="utf-8"))
            return {"map_id": MAP_ID,
                    "stop_signs": exported.get("stop_signs", []),
                    "lanes": exported.get("lanes", [])}
    report.warn("no semantic-map export found (semantic_map/map_export.json); "
                "map.json is empty, intersection detection will find nothing")
    return {"map_id": MAP_ID, "stop_signs": [], "lanes": []}


def convert_lyft(src: Union[str, Path], dst: Union[str, Path]) -> AdapterReport:
    """Convert a Level 5 dataset root (or one .zarr store) into dst/."""
    src = Path(src)
    dst = Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    report = AdapterReport(source="LYFT")
    records = []
    for root in _zarr_roots(src):
        scenes = read_array(root / "scenes")
        frames = read_array(root / "frames")
        agents = read_array(root / "agents")
        for index, scene in enumerate(scenes):
            report.scenarios_read += 1
            scenario_id = f"{root.stem}_{index}"
            record = _convert_scene(scene, frames, agents, scenario_id, report)
            if record is None:
                continue
            records.append(record)
            report.scenarios_written += 1

    write_scenarios_jsonl(records, dst / "scenarios.jsonl")
    write_map_json(_load_map_export(src, report), dst / "map.json")
    return report
