"""Command-line interface.

Global options (given before the subcommand) select the input files and the
output directory; a JSON config file can set any pipeline parameter and is
overridden by explicit flags. Exit codes: 0 success, 2 configuration error,
3 data error, 4 internal error.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .conflicts import ConflictSpec, DEFAULT_CLEARANCE
from .intersections import ClusterSpec, ValidationError
from .io import ParseError
from .model import ModelError
from .report import (
    PipelineConfig,
    emit_plot_data,
    run_pipeline,
    stage_conflicts,
    stage_intersections,
    stage_metrics,
    stage_smooth,
    stage_stats,
)
from .smoothing import FilterSpec, OutlierSpec

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class ConfigError(ValueError):
    pass


@click.group()
@click.option("--input", "input_path", type=click.Path(path_type=Path),
              help="Path to scenarios.jsonl")
@click.option("--map", "map_path", type=click.Path(path_type=Path),
              help="Path to map.json")
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("out"),
              show_default=True, help="Artifact output directory")
@click.option("--threads", type=int, default=None, help="Worker threads per stage")
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              help="JSON config mirroring the pipeline parameters")
@click.option("-v", "--verbose", is_flag=True, help="Enable info logging")
@click.pass_context
def cli(ctx, input_path, map_path, out_dir, threads, config_path, verbose):
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    file_cfg = {}
    if config_path is not None:
        try:
            file_cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {config_path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path}: {exc}") from exc
    ctx.obj = {"input": input_path, "map": map_path, "out_dir": out_dir,
               "threads": threads, "file_cfg": file_cfg}


def _spec_from(file_cfg: dict, section: str, cls, overrides: dict):
    values = dict(file_cfg.get(section, {}))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {section} parameters: {exc}") from exc


def _build_config(obj: dict, **overrides) -> PipelineConfig:
    file_cfg = obj["file_cfg"]
    input_path = obj["input"] or file_cfg.get("input")
    map_path = obj["map"] or file_cfg.get("map")
    out_dir = Path(file_cfg.get("out_dir", obj["out_dir"]))
    if obj["out_dir"] != Path("out"):
        out_dir = obj["out_dir"]
    threads = obj["threads"] if obj["threads"] is not None else file_cfg.get("threads", 1)
    if threads < 1:
        raise ConfigError("--threads must be at least 1")

    filter_spec = _spec_from(file_cfg, "filter", FilterSpec, {
        "cutoff_hz": overrides.get("cutoff_hz"),
        "sample_hz": overrides.get("sample_hz"),
        "order": overrides.get("order"),
    })
    outlier_spec = _spec_from(file_cfg, "outliers", OutlierSpec, {
        "max_accel": overrides.get("max_accel"),
        "min_accel": (-overrides["max_accel"] if overrides.get("max_accel") is not None
                      else None),
    })
    cluster_spec = _spec_from(file_cfg, "cluster", ClusterSpec, {
        "link_distance": overrides.get("link_distance"),
        "radius_buffer": overrides.get("radius_buffer"),
    })
    conflict_spec = _spec_from(file_cfg, "conflict", ConflictSpec, {
        "pet_max": overrides.get("pet_max"),
        "speed_change_min": overrides.get("speed_change_min"),
        "merge_buffer": overrides.get("merge_buffer"),
    })
    clearance = overrides.get("clearance")
    if clearance is None:
        clearance = file_cfg.get("clearance", DEFAULT_CLEARANCE)
    if clearance < 0:
        raise ConfigError("--clearance must be non-negative")

    def need(value, flag):
        if value is None:
            raise ConfigError(f"missing required {flag}")
        return Path(value)

    return PipelineConfig(
        input_path=need(input_path, "--input") if overrides.get("need_input", True)
        else Path(input_path or "unused"),
        map_path=need(map_path, "--map") if overrides.get("need_map", True)
        else Path(map_path or "unused"),
        out_dir=out_dir,
        filter_spec=filter_spec,
        outlier_spec=outlier_spec,
        cluster_spec=cluster_spec,
        conflict_spec=conflict_spec,
        clearance=clearance,
        seed=int(file_cfg.get("seed", 0)),
        threads=threads,
    )


@cli.command()
@click.option("--cutoff-hz", type=float, default=None, help="Low-pass cutoff [Hz]")
@click.option("--order", type=int, default=None, help="Filter order")
@click.option("--max-accel", type=float, default=None,
              help="Outlier acceleration bound [m/s^2]")
@click.pass_obj
def smooth(obj, cutoff_hz, order, max_accel):
    """Clamp outliers and low-pass filter every track's speed series."""
    config = _build_config(obj, cutoff_hz=cutoff_hz, order=order, max_accel=max_accel,
                           need_map=False)
    n = stage_smooth(config)
    click.echo(f"smoothed {n} scenarios -> {config.out_dir}")


@cli.command("detect-intersections")
@click.option("--link-distance", type=float, default=None,
              help="Stop-sign clustering distance [m]")
@click.option("--radius-buffer", type=float, default=None,
              help="Radius margin beyond the outermost sign [m]")
@click.pass_obj
def detect_intersections_cmd(obj, link_distance, radius_buffer):
    """Cluster stop signs into validated all-way-stop intersections."""
    config = _build_config(obj, link_distance=link_distance,
                           radius_buffer=radius_buffer, need_input=False)
    n = stage_intersections(config)
    click.echo(f"detected {n} intersections -> {config.out_dir / 'intersections.csv'}")


@cli.command("detect-conflicts")
@click.option("--pet-max", type=float, default=None, help="PET threshold [s]")
@click.option("--speed-change-min", type=float, default=None,
              help="Minimum speed change [m/s]")
@click.option("--merge-buffer", type=float, default=None,
              help="Per-side merging buffer [m]")
@click.option("--clearance", type=float, default=None,
              help="Leader clearance allowance past the conflict point [m]")
@click.pass_obj
def detect_conflicts_cmd(obj, pet_max, speed_change_min, merge_buffer, clearance):
    """Detect merging/crossing conflicts in the smoothed scenarios."""
    config = _build_config(obj, pet_max=pet_max, speed_change_min=speed_change_min,
                           merge_buffer=merge_buffer, clearance=clearance,
                           need_input=False)
    n = stage_conflicts(config)
    click.echo(f"detected {n} conflicts -> {config.out_dir / 'conflicts.csv'}")


@cli.command("metrics")
@click.pass_obj
def metrics_cmd(obj):
    """Compute per-conflict metrics, TA samples and standstill profiles."""
    config = _build_config(obj, need_input=False, need_map=False)
    counts = stage_metrics(config)
    click.echo(f"metrics for {counts['metrics']} conflicts -> {config.out_dir}")


@cli.command("stats")
@click.pass_obj
def stats_cmd(obj):
    """Grouped summaries and statistical comparisons."""
    config = _build_config(obj, need_input=False, need_map=False)
    n = stage_stats(config)
    click.echo(f"wrote {n} comparison rows -> {config.out_dir / 'stats.csv'}")


@cli.command("report")
@click.pass_obj
def report_cmd(obj):
    """Emit plot-ready CSV artifacts."""
    config = _build_config(obj, need_input=False, need_map=False)
    counts = emit_plot_data(config.out_dir)
    click.echo(f"plot data -> {config.out_dir} ({counts})")


@cli.command("run")
@click.option("--cutoff-hz", type=float, default=None)
@click.option("--order", type=int, default=None)
@click.option("--max-accel", type=float, default=None)
@click.option("--link-distance", type=float, default=None)
@click.option("--radius-buffer", type=float, default=None)
@click.option("--pet-max", type=float, default=None)
@click.option("--speed-change-min", type=float, default=None)
@click.option("--merge-buffer", type=float, default=None)
@click.option("--clearance", type=float, default=None)
@click.pass_obj
def run_cmd(obj, **overrides):
    """Run the full pipeline: smooth, intersections, conflicts, metrics,
    stats, report."""
    config = _build_config(obj, **overrides)
    manifest = run_pipeline(config)
    click.echo(json.dumps(manifest["stages"], indent=1, sort_keys=True))


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_CONFIG)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (ParseError, ModelError, ValidationError, FileNotFoundError, KeyError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except click.Abort:
        sys.exit(EXIT_INTERNAL)
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)


if __name__ == "__main__":
    main()
