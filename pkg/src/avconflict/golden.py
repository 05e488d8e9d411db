"""Loader for the published processed conflict dataset.

The published per-conflict tables are CSV files with one row per conflict.
Column names differ across releases, so the loader resolves each logical
field through a list of aliases; a `columns.json` next to the data can
override the mapping. Expected layout::

    <root>/waymo_conflicts.csv
    <root>/lyft_conflicts.csv

with columns (any alias): dataset/source, conflict_type/kind/type,
interaction/class/klass, pet, min_ttc/mttc/ttc_min, mrd, follower_speed/
conflict_speed/follower_speed_at_cp, avg_speed/mean_speed, avg_accel/
mean_accel. Values are SI units. Rows whose interaction label is not one of
HV-HV / AV-HV / HV-AV are rejected.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

from .io import ParseError, read_table

log = logging.getLogger(__name__)

FIELD_ALIASES: Dict[str, List[str]] = {
    "source": ["source", "dataset", "data"],
    "kind": ["kind", "conflict_type", "type", "scenario_type"],
    "klass": ["klass", "interaction", "interaction_type", "class", "group"],
    "pet": ["pet", "pet_s"],
    "min_ttc": ["min_ttc", "mttc", "ttc_min", "minttc"],
    "mrd": ["mrd", "max_required_decel"],
    "follower_speed_at_cp": ["follower_speed_at_cp", "follower_speed",
                             "conflict_speed", "speed_at_cp"],
    "avg_speed": ["avg_speed", "mean_speed", "average_speed"],
    "avg_accel": ["avg_accel", "mean_accel", "average_acceleration",
                  "average_accel"],
}

KIND_LABELS = {"crossing": "CROSSING", "merging": "MERGING"}
CLASS_LABELS = {"hv-hv": "HV-HV", "av-hv": "AV-HV", "hv-av": "HV-AV",
                "hv_hv": "HV-HV", "av_hv": "AV-HV", "hv_av": "HV-AV"}


def _resolve_columns(header, overrides: Optional[dict]) -> Dict[str, Optional[str]]:
    lower = {name.lower().strip(): name for name in header}
    mapping: Dict[str, Optional[str]] = {}
    for field, aliases in FIELD_ALIASES.items():
        if overrides and field in overrides:
            mapping[field] = overrides[field]
            continue
        mapping[field] = next((lower[a] for a in aliases if a in lower), None)
    return mapping


def load_published_metric_rows(root: Union[str, Path]) -> List[dict]:
    """Read every *_conflicts.csv under root into stats-ready metric rows."""
    root = Path(root)
    files = sorted(root.glob("*_conflicts.csv"))
    if not files:
        raise FileNotFoundError(f"no *_conflicts.csv files under {root}")
    overrides = None
    mapping_path = root / "columns.json"
    if mapping_path.exists():
        overrides = json.loads(mapping_path.read_text(encoding="utf-8"))

    rows: List[dict] = []
    for path in files:
        raw_rows = read_table(path)
        if not raw_rows:
            continue
        mapping = _resolve_columns(raw_rows[0].keys(), overrides)
        for required in ("kind", "klass", "pet"):
            if mapping[required] is None:
                raise ParseError(f"cannot locate a column for {required!r}",
                                 file=str(path), field=required)
        default_source = path.stem.split("_")[0].upper()
        for index, raw in enumerate(raw_rows):
            source = (raw[mapping["source"]].upper() if mapping["source"]
                      else default_source)
            kind_label = raw[mapping["kind"]].strip().lower()
            klass_label = raw[mapping["klass"]].strip().lower()
            if kind_label not in KIND_LABELS:
                raise ParseError(f"unknown conflict type {kind_label!r}",
                                 file=str(path), record=index,
                                 field=mapping["kind"])
            if klass_label not in CLASS_LABELS:
                raise ParseError(f"unknown interaction class {klass_label!r}",
                                 file=str(path), record=index,
                                 field=mapping["klass"])
            row = {"source": source, "kind": KIND_LABELS[kind_label],
                   "klass": CLASS_LABELS[klass_label]}
            for field in ("pet", "min_ttc", "mrd", "follower_speed_at_cp",
                          "avg_speed", "avg_accel"):
                column = mapping[field]
                value = raw.get(column, "") if column else ""
                row[field] = float(value) if value not in ("", None) else None
            rows.append(row)
    return rows
