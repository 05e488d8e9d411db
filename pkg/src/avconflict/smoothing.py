"""Speed-series conditioning: outlier clamping and zero-phase Butterworth filtering.

Outlier clamping runs first, then the low-pass filter (order 4, 0.5 Hz cutoff
at 10 Hz sampling by default). The filter is applied forward and backward so
event timing is preserved; the effective magnitude response is the square of
the single-pass response, so the cutoff attenuation becomes 1/2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .model import Scenario, TrajectoryPoint, TrajectoryTrack

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterSpec:
    cutoff_hz: float = 0.5
    sample_hz: float = 10.0
    order: int = 4

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise ValueError("cutoff_hz must be positive")
        if self.cutoff_hz >= self.sample_hz / 2:
            raise ValueError("cutoff_hz must be below the Nyquist frequency")
        if self.order < 1:
            raise ValueError("order must be at least 1")


@dataclass(frozen=True)
class OutlierSpec:
    max_accel: float = 10.0
    min_accel: float = -10.0
    neighbor_window: int = 5

    def __post_init__(self):
        if not (self.min_accel < 0 < self.max_accel):
            raise ValueError("acceleration bounds must straddle zero")
        if self.neighbor_window < 1:
            raise ValueError("neighbor_window must be at least 1")


def clamp_outliers(v: Sequence[float], dt: float, spec: OutlierSpec = OutlierSpec()
                   ) -> List[float]:
    """Replace speed samples implying out-of-bound accelerations.

    A sample is an outlier when the acceleration implied against the last
    non-outlier sample leaves [min_accel, max_accel]. Outliers are replaced by
    the mean of the non-outlier samples among the neighbor_window frames on
    each side (truncated at the series ends). Samples with no usable neighbors
    are left unchanged.
    """
    if len(v) < 2:
        raise ValueError("series needs at least 2 samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    v = [float(x) for x in v]
    is_outlier = [False] * len(v)
    ref = 0
    for i in range(1, len(v)):
        accel = (v[i] - v[ref]) / ((i - ref) * dt)
        if accel > spec.max_accel or accel < spec.min_accel:
            is_outlier[i] = True
        else:
            ref = i

    out = list(v)
    w = spec.neighbor_window
    for i, bad in enumerate(is_outlier):
        if not bad:
            continue
        neighbors = [v[j] for j in range(max(0, i - w), min(len(v), i + w + 1))
                     if j != i and not is_outlier[j]]
        if neighbors:
            out[i] = max(0.0, sum(neighbors) / len(neighbors))
        else:
            log.warning("outlier at index %d has no clean neighbors; left unchanged", i)
    return out


def design_butterworth(spec: FilterSpec) -> np.ndarray:
    """Digital low-pass Butterworth as cascaded second-order sections.

    Bilinear transform with frequency prewarping, so the single-pass magnitude
    at the cutoff is exactly 1/sqrt(2). Returns an (n_sections, 6) array of
    [b0 b1 b2 a0 a1 a2] rows with a0 = 1 and DC gain normalized to exactly 1.
    Section layout follows the usual nearest pole-zero pairing with the least
    damped poles last.
    """
    n = spec.order
    fs = spec.sample_hz
    k = np.arange(n)
    prototype = np.exp(1j * np.pi * (2 * k + n + 1) / (2 * n))
    warped = 2 * fs * math.tan(math.pi * spec.cutoff_hz / fs)
    analog_poles = warped * prototype
    digital_poles = (2 * fs + analog_poles) / (2 * fs - analog_poles)
    gain = (warped ** n / np.prod(2 * fs - analog_poles)).real

    poles = [complex(p) for p in digital_poles if p.imag > 1e-12]
    poles += [complex(p.real, 0.0) for p in digital_poles if abs(p.imag) <= 1e-12]
    zeros = [-1.0] * n
    if n % 2 == 1:
        # odd order: pad with an origin pole/zero pair so sections stay biquads
        poles.append(complex(0.0, 0.0))
        zeros.append(0.0)

    def worst_index(ps):
        return min(range(len(ps)), key=lambda i: abs(1 - abs(ps[i])))

    n_sections = (n + 1) // 2
    sos = np.zeros((n_sections, 6))
    for si in range(n_sections - 1, -1, -1):
        p1 = poles.pop(worst_index(poles))
        if abs(p1.imag) <= 1e-12 and not any(abs(p.imag) <= 1e-12 for p in poles):
            z1 = min(zeros, key=lambda z: abs(z - p1.real))
            zeros.remove(z1)
            sos[si] = [1.0, -z1, 0.0, 1.0, -p1.real, 0.0]
            continue
        if abs(p1.imag) <= 1e-12:
            reals = [p for p in poles if abs(p.imag) <= 1e-12]
            p2 = reals[worst_index(reals)]
            poles.remove(p2)
        else:
            p2 = p1.conjugate()
        z1 = min(zeros, key=lambda z: abs(z - p1))
        zeros.remove(z1)
        if zeros:
            z2 = min(zeros, key=lambda z: abs(z - p1))
            zeros.remove(z2)
            b = [1.0, -(z1 + z2), z1 * z2]
        else:
            b = [1.0, -z1, 0.0]
        a = [1.0, -(p1 + p2).real, (p1 * p2).real]
        sos[si] = b + a

    sos[0, :3] *= gain
    num = float(np.prod(sos[:, :3].sum(axis=1)))
    den = float(np.prod(sos[:, 3:].sum(axis=1)))
    sos[0, :3] *= den / num
    return sos


def sos_frequency_response(sos: np.ndarray, freq_hz, sample_hz: float) -> np.ndarray:
    """Complex frequency response of an SOS cascade at the given frequencies."""
    w = 2 * np.pi * np.atleast_1d(np.asarray(freq_hz, dtype=float)) / sample_hz
    z = np.exp(-1j * w)
    h = np.ones_like(z, dtype=complex)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
    return h


def _section_state_for_step(section: np.ndarray, level: float) -> np.ndarray:
    """Steady-state direct-form-II-transposed state for a constant input."""
    b0, b1, b2, _, a1, a2 = section
    g = (b0 + b1 + b2) / (1.0 + a1 + a2)
    return np.array([(g - b0) * level, (b2 - a2 * g) * level])


def _sosfilt(sos: np.ndarray, x: np.ndarray, level: float) -> np.ndarray:
    """Run the cascade over x with steady-state initial conditions at `level`."""
    y = np.asarray(x, dtype=float).copy()
    for section in sos:
        b0, b1, b2, _, a1, a2 = section
        z1, z2 = _section_state_for_step(section, level)
        for i in range(len(y)):
            xi = y[i]
            yi = b0 * xi + z1
            z1 = b1 * xi - a1 * yi + z2
            z2 = b2 * xi - a2 * yi
            y[i] = yi
        level *= (b0 + b1 + b2) / (1.0 + a1 + a2)
    return y


def smooth_speed(v: Sequence[float], spec: FilterSpec = FilterSpec()) -> List[float]:
    """Zero-phase low-pass filtering of a speed series.

    Forward pass then reversed backward pass over an odd-reflection extension
    of length 3 * order at both ends; output is clipped below at zero. Series
    shorter than 3 * order + 1 are padded by edge replication before
    filtering and trimmed afterwards.
    """
    x = np.asarray(list(v), dtype=float)
    if x.size == 0:
        raise ValueError("series is empty")
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise ValueError(f"non-finite input at index {int(bad[0])}")
    n = x.size
    sos = design_butterworth(spec)
    pad = 3 * spec.order

    required = pad + 1
    if n < required:
        x = np.concatenate([x, np.full(required - n, x[-1])])

    head = 2 * x[0] - x[pad:0:-1]
    tail = 2 * x[-1] - x[-2:-pad - 2:-1]
    ext = np.concatenate([head, x, tail])

    y = _sosfilt(sos, ext, float(ext[0]))
    y = y[::-1]
    y = _sosfilt(sos, y, float(y[0]))
    y = y[::-1]

    out = y[pad:pad + n]
    return [max(0.0, float(val)) for val in out]


def _median_dt(times: Sequence[float]) -> float:
    diffs = sorted(b - a for a, b in zip(times, times[1:]))
    return diffs[len(diffs) // 2]


def smooth_track(track: TrajectoryTrack, filter_spec: FilterSpec = FilterSpec(),
                 outlier_spec: OutlierSpec = OutlierSpec()) -> TrajectoryTrack:
    """Clamp outliers and filter a track's speed; accelerations are rederived."""
    ts = [p.t for p in track.points]
    if len(ts) < 2:
        return track
    dt = _median_dt(ts)
    v = clamp_outliers([p.v for p in track.points], dt, outlier_spec)
    v = smooth_speed(v, filter_spec)
    accel = []
    for i in range(len(v)):
        lo = max(0, i - 1)
        hi = min(len(v) - 1, i + 1)
        span = ts[hi] - ts[lo]
        accel.append((v[hi] - v[lo]) / span if span > 0 else 0.0)
    points = tuple(
        TrajectoryPoint(t=p.t, x=p.x, y=p.y, v=vi, a=ai, heading=p.heading, valid=p.valid)
        for p, vi, ai in zip(track.points, v, accel)
    )
    return TrajectoryTrack(track_id=track.track_id, agent_class=track.agent_class,
                           points=points)


def smooth_scenario(scenario: Scenario, filter_spec: FilterSpec = FilterSpec(),
                    outlier_spec: OutlierSpec = OutlierSpec()) -> Scenario:
    return Scenario(
        scenario_id=scenario.scenario_id,
        source=scenario.source,
        duration=scenario.duration,
        tracks=tuple(smooth_track(t, filter_spec, outlier_spec) for t in scenario.tracks),
        map_ref=scenario.map_ref,
    )
