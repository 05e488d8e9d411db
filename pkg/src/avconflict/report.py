"""Pipeline orchestration and plot-ready artifact emission.

Stages communicate through files in the output directory so that running
subcommands individually produces byte-identical artifacts to a full `run`.
All outputs are deterministic for identical inputs and configuration.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .conflicts import (
    CONFLICT_HEADER,
    ConflictSpec,
    DEFAULT_CLEARANCE,
    conflict_from_row,
    conflict_to_row,
    detect_scenario_conflicts,
)
from .intersections import ClusterSpec, detect_intersections
from .io import (
    DatasetManifest,
    read_map,
    read_scenarios,
    read_table,
    write_scenarios,
    write_table,
)
from .metrics import METRICS_HEADER, compute_metrics, metrics_to_row
from .smoothing import FilterSpec, OutlierSpec, smooth_scenario
from .stats import build_comparison_tables

SMOOTHED_NAME = "scenarios_smoothed.jsonl"
PROFILE_BIN = 0.1  # s
TA_BIN = 0.5  # s
CI_Z = 1.96  # two-sided 95% normal quantile


@dataclass(frozen=True)
class PipelineConfig:
    input_path: Path
    map_path: Path
    out_dir: Path
    filter_spec: FilterSpec = FilterSpec()
    outlier_spec: OutlierSpec = OutlierSpec()
    cluster_spec: ClusterSpec = ClusterSpec()
    conflict_spec: ConflictSpec = ConflictSpec()
    clearance: float = DEFAULT_CLEARANCE
    seed: int = 0
    threads: int = 1

    def echo(self) -> dict:
        return {
            "input": str(self.input_path),
            "map": str(self.map_path),
            "out_dir": str(self.out_dir),
            "filter": {"cutoff_hz": self.filter_spec.cutoff_hz,
                       "sample_hz": self.filter_spec.sample_hz,
                       "order": self.filter_spec.order},
            "outliers": {"max_accel": self.outlier_spec.max_accel,
                         "min_accel": self.outlier_spec.min_accel,
                         "neighbor_window": self.outlier_spec.neighbor_window},
            "cluster": {"link_distance": self.cluster_spec.link_distance,
                        "min_signs": self.cluster_spec.min_signs,
                        "radius_buffer": self.cluster_spec.radius_buffer},
            "conflict": {"pet_max": self.conflict_spec.pet_max,
                         "speed_change_min": self.conflict_spec.speed_change_min,
                         "merge_buffer": self.conflict_spec.merge_buffer},
            "clearance": self.clearance,
            "seed": self.seed,
            "threads": self.threads,
        }


def _map_ordered(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def stage_smooth(config: PipelineConfig) -> int:
    scenarios = read_scenarios(config.input_path)
    smoothed = _map_ordered(
        lambda sc: smooth_scenario(sc, config.filter_spec, config.outlier_spec),
        scenarios, config.threads)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_scenarios(smoothed, config.out_dir / SMOOTHED_NAME)
    return len(smoothed)


def stage_intersections(config: PipelineConfig) -> int:
    bundle = read_map(config.map_path)
    intersections = detect_intersections(bundle, config.cluster_spec)
    rows = [
        {"id": ix.intersection_id, "center_x": ix.center[0], "center_y": ix.center[1],
         "radius": ix.radius, "n_signs": len(ix.sign_ids), "n_legs": ix.n_legs}
        for ix in intersections
    ]
    config.out_dir.mkdir(parents=True, exist_ok=True)
    write_table(rows, config.out_dir / "intersections.csv",
                header=["id", "center_x", "center_y", "radius", "n_signs", "n_legs"])
    return len(intersections)


def stage_conflicts(config: PipelineConfig) -> int:
    smoothed_path = config.out_dir / SMOOTHED_NAME
    if not smoothed_path.exists():
        raise FileNotFoundError(f"{smoothed_path} missing; run the smooth stage first")
    scenarios = sorted(read_scenarios(smoothed_path), key=lambda s: s.scenario_id)
    bundle = read_map(config.map_path)
    intersections = detect_intersections(bundle, config.cluster_spec)
    per_scenario = _map_ordered(
        lambda sc: detect_scenario_conflicts(sc, intersections, config.conflict_spec,
                                             config.clearance),
        scenarios, config.threads)
    rows = [conflict_to_row(c) for found in per_scenario for c in found]
    write_table(rows, config.out_dir / "conflicts.csv", header=CONFLICT_HEADER)
    return len(rows)


def stage_metrics(config: PipelineConfig) -> Dict[str, int]:
    smoothed_path = config.out_dir / SMOOTHED_NAME
    conflicts_path = config.out_dir / "conflicts.csv"
    for path in (smoothed_path, conflicts_path):
        if not path.exists():
            raise FileNotFoundError(f"{path} missing; run earlier stages first")
    scenarios = {sc.scenario_id: sc for sc in read_scenarios(smoothed_path)}
    conflicts = [conflict_from_row(r) for r in read_table(conflicts_path)]

    metric_rows: List[dict] = []
    ta_rows: List[dict] = []
    profile_rows: List[dict] = []
    for conflict in conflicts:
        scenario = scenarios.get(conflict.scenario_id)
        if scenario is None:
            raise KeyError(f"conflict {conflict.conflict_id!r} references unknown "
                           f"scenario {conflict.scenario_id!r}")
        bundle = compute_metrics(conflict, scenario)
        metric_rows.append(metrics_to_row(conflict, bundle))
        for t, value in bundle.ta_series:
            if value is not None:
                ta_rows.append({"conflict_id": conflict.conflict_id,
                                "source": conflict.source,
                                "kind": conflict.kind.value,
                                "klass": conflict.klass.value,
                                "t": t, "ta": value})
        if bundle.profile is not None:
            for t_rel, v, a in bundle.profile.samples:
                profile_rows.append({"conflict_id": conflict.conflict_id,
                                     "role": bundle.profile.role.value,
                                     "t_rel": t_rel, "v": v, "a": a})

    write_table(metric_rows, config.out_dir / "metrics.csv", header=METRICS_HEADER)
    write_table(ta_rows, config.out_dir / "ta_values.csv",
                header=["conflict_id", "source", "kind", "klass", "t", "ta"])
    write_table(profile_rows, config.out_dir / "profiles.csv",
                header=["conflict_id", "role", "t_rel", "v", "a"])
    return {"metrics": len(metric_rows), "ta_values": len(ta_rows),
            "profile_samples": len(profile_rows)}


def _float_or_none(text: str) -> Optional[float]:
    return float(text) if text not in ("", None) else None


def load_metric_rows(path: Path) -> List[dict]:
    rows = []
    for raw in read_table(path):
        row = dict(raw)
        for key in ("pet", "min_ttc", "mrd", "follower_speed_at_cp",
                    "avg_speed", "avg_accel"):
            row[key] = _float_or_none(raw[key])
        rows.append(row)
    return rows


def load_ta_samples(path: Path) -> Dict[Tuple[str, str, str], List[float]]:
    samples: Dict[Tuple[str, str, str], List[float]] = {}
    for raw in read_table(path):
        key = (raw["source"], raw["kind"], raw["klass"])
        samples.setdefault(key, []).append(float(raw["ta"]))
    return samples


def stage_stats(config: PipelineConfig) -> int:
    metrics_path = config.out_dir / "metrics.csv"
    ta_path = config.out_dir / "ta_values.csv"
    for path in (metrics_path, ta_path):
        if not path.exists():
            raise FileNotFoundError(f"{path} missing; run the metrics stage first")
    report = build_comparison_tables(load_metric_rows(metrics_path),
                                     load_ta_samples(ta_path))

    rows_by_key: Dict[Tuple[str, str, str], List] = {}
    for row in report.rows:
        rows_by_key.setdefault((row.source, row.kind, row.metric), []).append(row)

    stat_rows: List[dict] = []
    for s in report.summaries:
        if s.group[2] != "HV-HV":
            continue
        source, kind, _ = s.group
        stat_rows.append({"source": source, "kind": kind, "metric": s.metric,
                          "klass": "HV-HV", "benchmark": "", "n": s.n,
                          "mean": s.mean, "std": s.std, "t_stat": None,
                          "t_p": None, "u_stat": None, "u_p": None})
        for row in rows_by_key.get((source, kind, s.metric), []):
            stat_rows.append({"source": row.source, "kind": row.kind,
                              "metric": row.metric, "klass": row.klass,
                              "benchmark": row.benchmark, "n": row.n,
                              "mean": row.mean, "std": row.std, "t_stat": row.t_stat,
                              "t_p": row.t_p, "u_stat": row.u_stat, "u_p": row.u_p})
    write_table(stat_rows, config.out_dir / "stats.csv",
                header=["source", "kind", "metric", "klass", "benchmark", "n",
                        "mean", "std", "t_stat", "t_p", "u_stat", "u_p"])
    ta_rows = [
        {"source": r.source, "kind": r.kind, "test": r.test, "statistic": r.statistic,
         "p_value": r.p_value, "n_hv_av": r.n_hv_av, "n_av_hv": r.n_av_hv}
        for r in report.ta_tests
    ]
    write_table(ta_rows, config.out_dir / "ta_tests.csv",
                header=["source", "kind", "test", "statistic", "p_value",
                        "n_hv_av", "n_av_hv"])
    return len(stat_rows)


def _tukey_box(values: Sequence[float]) -> dict:
    arr = np.sort(np.asarray(values, dtype=float))
    q1, q2, q3 = (float(np.percentile(arr, q)) for q in (25, 50, 75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inliers = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    return {"n": int(arr.size), "q1": q1, "median": q2, "q3": q3,
            "whisker_lo": float(inliers[0]), "whisker_hi": float(inliers[-1])}


def emit_plot_data(out_dir: Path) -> Dict[str, int]:
    """Emit plot-ready CSVs from the metrics artifacts."""
    metrics_path = out_dir / "metrics.csv"
    if not metrics_path.exists():
        raise FileNotFoundError(f"{metrics_path} missing; run the metrics stage first")
    metric_rows = load_metric_rows(metrics_path)
    ta_samples = load_ta_samples(out_dir / "ta_values.csv")
    profile_rows = read_table(out_dir / "profiles.csv")
    klass_by_conflict = {r["conflict_id"]: (r["source"], r["kind"], r["klass"])
                         for r in metric_rows}

    joint = [
        {"conflict_id": r["conflict_id"], "source": r["source"], "kind": r["kind"],
         "klass": r["klass"], "pet": r["pet"], "min_ttc": r["min_ttc"]}
        for r in metric_rows if r["min_ttc"] is not None and r["pet"] is not None
    ]
    write_table(joint, out_dir / "joint_pet_minttc.csv",
                header=["conflict_id", "source", "kind", "klass", "pet", "min_ttc"])

    box_rows = []
    groups: Dict[Tuple[str, str, str], List[float]] = {}
    for r in metric_rows:
        if r["mrd"] is not None:
            groups.setdefault((r["source"], r["kind"], r["klass"]), []).append(r["mrd"])
    for (source, kind, klass) in sorted(groups):
        row = {"source": source, "kind": kind, "klass": klass}
        row.update(_tukey_box(groups[(source, kind, klass)]))
        box_rows.append(row)
    write_table(box_rows, out_dir / "mrd_box.csv",
                header=["source", "kind", "klass", "n", "q1", "median", "q3",
                        "whisker_lo", "whisker_hi"])

    hist_rows = []
    for key in sorted(ta_samples):
        values = ta_samples[key]
        bins: Dict[int, int] = {}
        for v in values:
            bins[math.floor(v / TA_BIN)] = bins.get(math.floor(v / TA_BIN), 0) + 1
        for b in sorted(bins):
            hist_rows.append({"source": key[0], "kind": key[1], "klass": key[2],
                              "bin_left": b * TA_BIN, "bin_right": (b + 1) * TA_BIN,
                              "count": bins[b]})
    write_table(hist_rows, out_dir / "ta_hist.csv",
                header=["source", "kind", "klass", "bin_left", "bin_right", "count"],
                )

    ci_rows = []
    bucket: Dict[Tuple[Tuple[str, str, str], int], Dict[str, List[float]]] = {}
    for r in profile_rows:
        group = klass_by_conflict.get(r["conflict_id"])
        if group is None:
            continue
        t_bin = int(round(float(r["t_rel"]) / PROFILE_BIN))
        entry = bucket.setdefault((group, t_bin), {"v": [], "a": []})
        entry["v"].append(float(r["v"]))
        entry["a"].append(float(r["a"]))
    for (group, t_bin) in sorted(bucket):
        entry = bucket[(group, t_bin)]
        row = {"source": group[0], "kind": group[1], "klass": group[2],
               "t_rel": t_bin * PROFILE_BIN, "n": len(entry["v"])}
        for name in ("v", "a"):
            arr = np.asarray(entry[name], dtype=float)
            mean = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
            row[f"{name}_mean"] = mean
            row[f"{name}_lo"] = mean - CI_Z * se
            row[f"{name}_hi"] = mean + CI_Z * se
        ci_rows.append(row)
    write_table(ci_rows, out_dir / "profile_ci.csv",
                header=["source", "kind", "klass", "t_rel", "n", "v_mean", "v_lo",
                        "v_hi", "a_mean", "a_lo", "a_hi"])
    return {"joint": len(joint), "mrd_box": len(box_rows), "ta_hist": len(hist_rows),
            "profile_ci": len(ci_rows)}


STAGES = ("smooth", "detect-intersections", "detect-conflicts", "metrics", "stats",
          "report")


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage in order and write a deterministic run manifest.

    On stage failure the manifest records the failed stage and the exception
    is re-raised; artifacts from completed stages are retained.
    """
    config.out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "avconflict",
        "version": __version__,
        "config": config.echo(),
        "stages": {},
    }

    def finish(failed: Optional[str] = None):
        if failed is not None:
            manifest["failed_stage"] = failed
        (config.out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    try:
        manifest["stages"]["smooth"] = {"scenarios": stage_smooth(config)}
        manifest["stages"]["detect-intersections"] = {
            "intersections": stage_intersections(config)}
        manifest["stages"]["detect-conflicts"] = {"conflicts": stage_conflicts(config)}
        manifest["stages"]["metrics"] = stage_metrics(config)
        manifest["stages"]["stats"] = {"rows": stage_stats(config)}
        manifest["stages"]["report"] = emit_plot_data(config.out_dir)
        manifest["dataset"] = DatasetManifest(
            source="mixed", scenario_count=manifest["stages"]["smooth"]["scenarios"]
        ).__dict__
    except Exception as exc:
        running = [name for name in STAGES if name not in manifest["stages"]]
        finish(failed=running[0] if running else "unknown")
        raise
    finish()
    return manifest
