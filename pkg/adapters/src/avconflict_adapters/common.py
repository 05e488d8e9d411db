"""Shared output plumbing: the neutral interchange writers and the report."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union


@dataclass
class AdapterReport:
    source: str
    scenarios_read: int = 0
    scenarios_written: int = 0
    tracks_dropped: int = 0
    warnings: List[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    def to_json(self) -> str:
        return json.dumps({
            "source": self.source,
            "scenarios_read": self.scenarios_read,
            "scenarios_written": self.scenarios_written,
            "tracks_dropped": self.tracks_dropped,
            "warnings": self.warnings,
        }, indent=1, sort_keys=True)


def write_scenarios_jsonl(records: Sequence[dict], path: Union[str, Path]) -> None:
    """Write neutral scenario records, one compact JSON object per line."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":"), sort_keys=True))
            fh.write("\n")


def write_map_json(map_record: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(map_record, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


class MapAccumulator:
    """Collects lanes and stop signs across scenarios, deduplicating repeats.

    The motion data embeds map features per scenario, so the same physical
    lane or sign shows up in every overlapping scenario. Features are
    deduplicated by rounded geometry; the first occurrence names the feature.
    """

    def __init__(self, map_id: str):
        self.map_id = map_id
        self._lanes: Dict[tuple, str] = {}
        self._signs: Dict[tuple, str] = {}
        self.lanes: List[dict] = []
        self.stop_signs: List[dict] = []

    @staticmethod
    def _lane_key(points: Sequence[tuple]) -> tuple:
        def r(p):
            return (round(p[0], 1), round(p[1], 1))
        return (len(points), r(points[0]), r(points[-1]))

    def add_lane(self, lane_id: str, points: Sequence[tuple]) -> str:
        """Register a lane centerline; returns the retained lane identifier."""
        key = self._lane_key(points)
        if key in self._lanes:
            return self._lanes[key]
        self._lanes[key] = lane_id
        self.lanes.append({"lane_id": lane_id,
                           "centerline": [[float(x), float(y)] for x, y in points],
                           "role": "UNKNOWN"})
        return lane_id

    def add_stop_sign(self, sign_id: str, x: float, y: float, lane_id: str) -> bool:
        """Register a sign-lane control link; returns False for duplicates."""
        key = (round(x, 1), round(y, 1), lane_id)
        if key in self._signs:
            return False
        self._signs[key] = sign_id
        self.stop_signs.append({"sign_id": sign_id, "x": float(x), "y": float(y),
                                "lane_id": lane_id})
        return True

    def to_record(self) -> dict:
        return {"map_id": self.map_id, "stop_signs": self.stop_signs,
                "lanes": self.lanes}
