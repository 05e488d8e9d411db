"""Reading and validation of the neutral interchange format, plus CSV output.

Interchange files:
  scenarios.jsonl  one JSON object per line, schema below
  map.json         single JSON object with stop signs and lane centerlines

Scenario record schema:
  {"scenario_id": str, "source": "WAYMO"|"LYFT"|"SYNTHETIC", "duration": float,
   "map_ref": str, "tracks": [{"track_id": str, "agent_class": "AV"|"HV"|"OTHER",
   "points": [{"t","x","y","v","a","heading","valid"}]}]}

Missing per-point fields are derived: v from position finite differences,
a from central differences of v, heading from displacement direction.
Invalid frames are bridged by linear interpolation when the surrounding
valid frames are at most MAX_BRIDGE_GAP apart; longer gaps split the track.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .model import (
    AgentClass,
    LanePolyline,
    LaneRole,
    ModelError,
    Scenario,
    ScenarioSource,
    StopSign,
    TrajectoryPoint,
    TrajectoryTrack,
    validate_scenario,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
MAX_BRIDGE_GAP = 0.5  # seconds; longer invalid runs split the track
STANDSTILL_SPEED = 0.1  # m/s, shared standstill floor


class ParseError(ValueError):
    """Schema violation, annotated with file, record index and field."""

    def __init__(self, message: str, *, file: str = "", record: Optional[int] = None,
                 field: str = ""):
        self.file = file
        self.record = record
        self.field = field
        loc = file
        if record is not None:
            loc += f" record {record}"
        if field:
            loc += f" field {field!r}"
        super().__init__(f"{loc}: {message}" if loc else message)


class DanglingReferenceError(ParseError):
    """A record references an entity that does not exist."""


@dataclass(frozen=True)
class MapBundle:
    map_id: str
    stop_signs: Tuple[StopSign, ...]
    lanes: Tuple[LanePolyline, ...]

    def lane(self, lane_id: str) -> LanePolyline:
        for ln in self.lanes:
            if ln.lane_id == lane_id:
                return ln
        raise KeyError(lane_id)


@dataclass(frozen=True)
class DatasetManifest:
    source: str
    scenario_count: int
    schema_version: str = SCHEMA_VERSION


def _require(obj: dict, key: str, file: str, record: Optional[int]):
    if key not in obj or obj[key] is None:
        raise ParseError("missing required field", file=file, record=record, field=key)
    return obj[key]


def _as_float(value, file: str, record: Optional[int], field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number", file=file, record=record, field=field)
    return float(value)


def _derive_speeds(ts: List[float], xs: List[float], ys: List[float]) -> List[float]:
    n = len(ts)
    if n == 1:
        return [0.0]
    v = []
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        dt = ts[hi] - ts[lo]
        v.append(math.hypot(xs[hi] - xs[lo], ys[hi] - ys[lo]) / dt if dt > 0 else 0.0)
    return v


def _derive_accels(ts: List[float], vs: List[float]) -> List[float]:
    n = len(ts)
    if n == 1:
        return [0.0]
    a = []
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        dt = ts[hi] - ts[lo]
        a.append((vs[hi] - vs[lo]) / dt if dt > 0 else 0.0)
    return a


def _derive_headings(xs: List[float], ys: List[float]) -> List[float]:
    n = len(xs)
    headings: List[float] = []
    last = 0.0
    for i in range(n):
        j = min(i + 1, n - 1)
        k = i if j > i else max(0, i - 1)
        dx, dy = xs[j] - xs[k], ys[j] - ys[k]
        if math.hypot(dx, dy) > 1e-9:
            last = math.atan2(dy, dx)
        headings.append(last)
    return headings


def _build_track_pieces(track_id: str, agent_class: AgentClass, raw_points: List[dict],
                        file: str, record: int) -> List[TrajectoryTrack]:
    """Bridge short invalid runs, split at long ones, derive missing kinematics."""
    # separate valid frames; keep their indices  to measure gaps
    frames = []
    for idx, pt in enumerate(raw_points):
        t = _as_float(_require(pt, "t", file, record), file, record, "t")
        valid = bool(pt.get("valid", True))
        frames.append((t, pt, valid))
    for i in range(1, len(frames)):
        if frames[i][0] <= frames[i - 1][0]:
            raise ParseError("not strictly increasing", file=file, record=record, field="t")

    valid_frames = [(t, pt) for t, pt, ok in frames if ok]
    if len(valid_frames) < 2:
        return []

    # split where consecutive valid frames are too far apart
    groups: List[List[Tuple[float, dict]]] = [[valid_frames[0]]]
    for prev, cur in zip(valid_frames, valid_frames[1:]):
        if cur[0] - prev[0] > MAX_BRIDGE_GAP + 1e-9:
            groups.append([])
        groups[-1].append(cur)

    pieces: List[TrajectoryTrack] = []
    multi = len(groups) > 1
    for gi, group in enumerate(groups, start=1):
        if len(group) < 2:
            continue
        ts = [t for t, _ in group]
        xs, ys, vs_raw, as_raw, hs_raw = [], [], [], [], []
        for t, pt in group:
            xs.append(_as_float(_require(pt, "x", file, record), file, record, "x"))
            ys.append(_as_float(_require(pt, "y", file, record), file, record, "y"))
            vs_raw.append(pt.get("v"))
            as_raw.append(pt.get("a"))
            hs_raw.append(pt.get("heading"))

        # bridge interior gaps on the nominal grid by linear interpolation
        grid_t, grid_x, grid_y, grid_v, grid_h = [ts[0]], [xs[0]], [ys[0]], [vs_raw[0]], [hs_raw[0]]
        for i in range(1, len(ts)):
            gap = ts[i] - ts[i - 1]
            missing = [t for t, pt, ok in frames if not ok and ts[i - 1] < t < ts[i]]
            for tm in missing:
                f = (tm - ts[i - 1]) / gap
                grid_t.append(tm)
                grid_x.append(xs[i - 1] + f * (xs[i] - xs[i - 1]))
                grid_y.append(ys[i - 1] + f * (ys[i] - ys[i - 1]))
                if vs_raw[i - 1] is not None and vs_raw[i] is not None:
                    grid_v.append(vs_raw[i - 1] + f * (vs_raw[i] - vs_raw[i - 1]))
                else:
                    grid_v.append(None)
                grid_h.append(None)
            grid_t.append(ts[i])
            grid_x.append(xs[i])
            grid_y.append(ys[i])
            grid_v.append(vs_raw[i])
            grid_h.append(hs_raw[i])

        for i, value in enumerate(grid_v):
            if value is not None:
                v = _as_float(value, file, record, "v")
                if v < 0:
                    raise ParseError("speed must be non-negative",
                                     file=file, record=record, field="v")
                grid_v[i] = v
        derived_v = _derive_speeds(grid_t, grid_x, grid_y)
        speeds = [dv if gv is None else gv for gv, dv in zip(grid_v, derived_v)]
        accels = _derive_accels(grid_t, speeds)
        derived_h = _derive_headings(grid_x, grid_y)
        headings = [dh if gh is None else _as_float(gh, file, record, "heading")
                    for gh, dh in zip(grid_h, derived_h)]
        # stored accelerations override the derived ones frame-by-frame
        stored_a = {t: a for (t, pt) in group for a in [pt.get("a")] if a is not None}
        final_a = [stored_a.get(t, acc) for t, acc in zip(grid_t, accels)]
        final_a = [_as_float(a, file, record, "a") for a in final_a]

        points = tuple(
            TrajectoryPoint(t=t, x=x, y=y, v=v, a=a, heading=h, valid=True)
            for t, x, y, v, a, h in zip(grid_t, grid_x, grid_y, speeds, final_a, headings)
        )
        piece_id = f"{track_id}#{gi}" if multi else track_id
        pieces.append(TrajectoryTrack(track_id=piece_id, agent_class=agent_class,
                                      points=points))
    return pieces


def _parse_scenario(obj: dict, file: str, record: int) -> Scenario:
    scenario_id = str(_require(obj, "scenario_id", file, record))
    source_name = str(_require(obj, "source", file, record))
    try:
        source = ScenarioSource[source_name]
    except KeyError:
        raise ParseError(f"unknown source {source_name!r}", file=file, record=record,
                         field="source") from None
    duration = _as_float(_require(obj, "duration", file, record), file, record, "duration")
    if "map_ref" not in obj or obj["map_ref"] is None:
        raise DanglingReferenceError("missing map_ref", file=file, record=record,
                                     field="map_ref")
    map_ref = str(obj["map_ref"])

    tracks: List[TrajectoryTrack] = []
    for raw in _require(obj, "tracks", file, record):
        track_id = str(_require(raw, "track_id", file, record))
        class_name = str(_require(raw, "agent_class", file, record))
        try:
            agent_class = AgentClass[class_name]
        except KeyError:
            raise ParseError(f"unknown agent_class {class_name!r}", file=file,
                             record=record, field="agent_class") from None
        raw_points = _require(raw, "points", file, record)
        pieces = _build_track_pieces(track_id, agent_class, raw_points, file, record)
        if not pieces:
            log.warning("%s record %d: track %r dropped (fewer than 2 valid points)",
                        file, record, track_id)
            continue
        tracks.extend(pieces)

    scenario = Scenario(scenario_id=scenario_id, source=source, duration=duration,
                        tracks=tuple(tracks), map_ref=map_ref)
    try:
        validate_scenario(scenario)
    except ModelError as exc:
        raise ParseError(str(exc), file=file, record=record) from exc
    return scenario


def read_scenarios(path: Union[str, Path]) -> List[Scenario]:
    """Read and validate scenarios.jsonl; every returned scenario satisfies the
    core invariants."""
    path = Path(path)
    scenarios = []
    with path.open("r", encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", file=str(path),
                                 record=index) from exc
            scenarios.append(_parse_scenario(obj, str(path), index))
    return scenarios


def write_scenarios(scenarios: Sequence[Scenario], path: Union[str, Path]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for sc in scenarios:
            obj = {
                "scenario_id": sc.scenario_id,
                "source": sc.source.name,
                "duration": sc.duration,
                "map_ref": sc.map_ref,
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
                    for tr in sc.tracks
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":"), sort_keys=True))
            fh.write("\n")


def read_map(path: Union[str, Path]) -> MapBundle:
    """Read map.json and verify referential integrity of stop-sign lane links."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", file=str(path)) from exc

    map_id = str(_require(obj, "map_id", str(path), None))
    lanes = []
    for i, raw in enumerate(obj.get("lanes", [])):
        lane_id = str(_require(raw, "lane_id", str(path), i))
        centerline = _require(raw, "centerline", str(path), i)
        if len(centerline) < 2:
            raise ParseError("centerline needs at least 2 points", file=str(path),
                             record=i, field="centerline")
        pts = []
        for xy in centerline:
            x = _as_float(xy[0], str(path), i, "centerline")
            y = _as_float(xy[1], str(path), i, "centerline")
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError("non-finite centerline point", file=str(path),
                                 record=i, field="centerline")
            if pts and math.hypot(x - pts[-1][0], y - pts[-1][1]) <= 1e-12:
                raise ParseError("consecutive identical centerline points",
                                 file=str(path), record=i, field="centerline")
            pts.append((x, y))
        role = LaneRole[raw.get("role", "UNKNOWN")]
        lanes.append(LanePolyline(lane_id=lane_id, centerline=tuple(pts), role=role))

    lane_ids = {ln.lane_id for ln in lanes}
    signs = []
    for i, raw in enumerate(obj.get("stop_signs", [])):
        sign_id = str(_require(raw, "sign_id", str(path), i))
        x = _as_float(_require(raw, "x", str(path), i), str(path), i, "x")
        y = _as_float(_require(raw, "y", str(path), i), str(path), i, "y")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError("non-finite coordinate", file=str(path), record=i, field="x")
        lane_id = str(_require(raw, "lane_id", str(path), i))
        if lane_id not in lane_ids:
            raise DanglingReferenceError(
                f"stop sign {sign_id!r} references unknown lane {lane_id!r}",
                file=str(path), record=i, field="lane_id")
        signs.append(StopSign(sign_id=sign_id, x=x, y=y, lane_id=lane_id))

    return MapBundle(map_id=map_id, stop_signs=tuple(signs), lanes=tuple(lanes))


def write_map(bundle: MapBundle, path: Union[str, Path]) -> None:
    obj = {
        "map_id": bundle.map_id,
        "stop_signs": [
            {"sign_id": s.sign_id, "x": s.x, "y": s.y, "lane_id": s.lane_id}
            for s in bundle.stop_signs
        ],
        "lanes": [
            {"lane_id": ln.lane_id, "centerline": [[x, y] for x, y in ln.centerline],
             "role": ln.role.name}
            for ln in bundle.lanes
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def format_value(value) -> str:
    """Render one CSV cell: floats at 6 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value or value in (math.inf, -math.inf):
            raise ValueError(f"non-finite value {value!r} in table output")
        if value == 0:
            value = 0.0  # normalize -0.0
        return f"{value:#.6g}"
    text = str(value)
    if "\x00" in text:
        raise ValueError("NUL character is not representable in CSV output")
    return text


def write_table(rows: Sequence[dict], path: Union[str, Path],
                header: Optional[Sequence[str]] = None) -> None:
    """Write flat records as UTF-8 CSV with a header row and RFC 4180 quoting."""
    rows = list(rows)
    if header is None:
        if not rows:
            raise ValueError("cannot infer a header from zero rows")
        header = list(rows[0].keys())
    field_set = set(header)
    for i, row in enumerate(rows):
        if set(row.keys()) != field_set:
            raise ValueError(f"row {i} fields {sorted(row)} do not match header "
                             f"{sorted(field_set)}")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row[k]) for k in header])


def read_table(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Read a CSV written by write_table; values come back as strings."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [dict(row) for row in reader]
