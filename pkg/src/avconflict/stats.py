"""Two-sample tests and grouped comparison tables.

Implements Welch's t-test, Mann-Whitney U (midrank ties, exact enumeration for
small samples), the two-sample Kolmogorov-Smirnov test with the asymptotic
Kolmogorov distribution, and the two-sample Anderson-Darling test in the
tie-adjusted Scholz-Stephens form with p-values interpolated from the
published critical-value table (reported within [0.001, 0.25]).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import stdtr

from .model import InteractionClass

log = logging.getLogger(__name__)

AD_P_FLOOR = 0.001
AD_P_CAP = 0.25

# Scholz & Stephens (1987), Table 2: interpolation coefficients for the
# standardized k-sample Anderson-Darling statistic at significance levels
# 0.25, 0.10, 0.05, 0.025, 0.01, 0.005, 0.001.
_AD_SIG = np.array([0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001])
_AD_B0 = np.array([0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085])
_AD_B1 = np.array([-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615])
_AD_B2 = np.array([-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154])


class TestKind(Enum):
    WELCH_T = "welch_t"
    MANN_WHITNEY_U = "mann_whitney_u"
    KS_2SAMPLE = "ks_2sample"
    AD_2SAMPLE = "ad_2sample"


class DegenerateSampleError(ValueError):
    """Raised when a test statistic is undefined for the given samples."""


@dataclass(frozen=True)
class GroupSummary:
    group: Tuple[str, str, str]  # (source, kind, interaction class)
    metric: str
    n: int
    mean: Optional[float]
    std: Optional[float]


@dataclass(frozen=True)
class TestResult:
    test: TestKind
    statistic: float
    p_value: float
    group_a: str = ""
    group_b: str = ""


@dataclass(frozen=True)
class ComparisonRow:
    source: str
    kind: str
    metric: str
    klass: str
    benchmark: str  # empty for baseline rows
    n: int
    mean: Optional[float]
    std: Optional[float]
    t_stat: Optional[float] = None
    t_p: Optional[float] = None
    u_stat: Optional[float] = None
    u_p: Optional[float] = None


@dataclass(frozen=True)
class TaTestRow:
    source: str
    kind: str
    test: str
    statistic: float
    p_value: float
    n_hv_av: int
    n_av_hv: int


@dataclass(frozen=True)
class StatReport:
    summaries: Tuple[GroupSummary, ...]
    rows: Tuple[ComparisonRow, ...]
    ta_tests: Tuple[TaTestRow, ...]


def _check_sample(sample: Sequence[float], minimum: int, name: str) -> np.ndarray:
    arr = np.asarray(list(sample), dtype=float)
    if arr.size < minimum:
        raise DegenerateSampleError(f"sample {name} needs at least {minimum} values")
    if not np.all(np.isfinite(arr)):
        raise DegenerateSampleError(f"sample {name} contains non-finite values")
    return arr


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Welch's unequal-variance t-test, two-sided."""
    a = _check_sample(sample_a, 2, "a")
    b = _check_sample(sample_b, 2, "b")
    na, nb = a.size, b.size
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        if a.mean() == b.mean():
            return TestResult(TestKind.WELCH_T, 0.0, 1.0)
        raise DegenerateSampleError("zero variance in both samples with unequal means")
    se2 = va / na + vb / nb
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = 2.0 * float(stdtr(df, -abs(t)))
    return TestResult(TestKind.WELCH_T, float(t), min(1.0, p))


def _midranks(pooled: np.ndarray) -> np.ndarray:
    """Ranks (1-based) with ties assigned the midrank."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=float)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _mwu_statistic(a: np.ndarray, b: np.ndarray) -> Tuple[float, np.ndarray]:
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r_a = ranks[: a.size].sum()
    u_a = r_a - a.size * (a.size + 1) / 2.0
    return float(u_a), ranks


def _mwu_exact_p(ranks: np.ndarray, na: int, u_obs: float) -> float:
    """Exact two-sided p over all equally likely assignments of pooled ranks.

    Works on doubled ranks so midranks become integers; the distribution of
    the doubled rank sum is built by dynamic programming.
    """
    ranks2 = np.rint(2 * ranks).astype(np.int64)
    total_choose = math.comb(ranks2.size, na)
    max_sum = int(np.sort(ranks2)[-na:].sum())
    counts = np.zeros((na + 1, max_sum + 1), dtype=object)
    counts[0, 0] = 1
    for r in ranks2:
        # shift-add per item, highest k first so each item is used at most once
        for k in range(na - 1, -1, -1):
            row = counts[k]
            nz = np.nonzero(row)[0]
            for s in nz[::-1]:
                if s + r <= max_sum:
                    counts[k + 1, s + r] += row[s]
    u2 = np.arange(max_sum + 1) - na * (na + 1)  # doubled U for each doubled rank sum
    u2_obs = int(round(2 * u_obs))
    dist = counts[na]
    c_le = sum(int(dist[i]) for i in range(max_sum + 1) if u2[i] <= u2_obs)
    c_ge = sum(int(dist[i]) for i in range(max_sum + 1) if u2[i] >= u2_obs)
    return min(1.0, 2.0 * min(c_le, c_ge) / total_choose)


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Mann-Whitney U with midrank ties.

    The p-value uses the normal approximation with tie-corrected variance and
    a continuity correction when both samples have more than 8 observations;
    otherwise the exact permutation distribution is enumerated.
    """
    a = _check_sample(sample_a, 1, "a")
    b = _check_sample(sample_b, 1, "b")
    na, nb = a.size, b.size
    u_a, ranks = _mwu_statistic(a, b)

    if na > 8 and nb > 8:
        n = na + nb
        mu = na * nb / 2.0
        _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
        tie_term = float(((tie_counts ** 3) - tie_counts).sum())
        sigma2 = na * nb / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
        if sigma2 <= 0:
            raise DegenerateSampleError("all pooled values identical")
        diff = u_a - mu
        cc = 0.5 if diff > 0 else (-0.5 if diff < 0 else 0.0)
        z = (diff - cc) / math.sqrt(sigma2)
        p = math.erfc(abs(z) / math.sqrt(2.0))
    else:
        p = _mwu_exact_p(ranks, na, u_a)
    return TestResult(TestKind.MANN_WHITNEY_U, u_a, min(1.0, p))


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # dual theta-series converges fast for small arguments
        factor = math.sqrt(2 * math.pi) / lam
        total = 0.0
        k = 1
        while k < 200:
            term = math.exp(-((k * math.pi) ** 2) / (8 * lam * lam))
            total += term
            if term < 1e-17:
                break
            k += 2
        return min(1.0, max(0.0, 1.0 - factor * total))
    total = 0.0
    for k in range(1, 200):
        term = 2.0 * (-1) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-17:
            break
    return min(1.0, max(0.0, total))


def ks_2sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test, asymptotic p-value."""
    a = np.sort(_check_sample(sample_a, 1, "a"))
    b = np.sort(_check_sample(sample_b, 1, "b"))
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = a.size * b.size / (a.size + b.size)
    p = kolmogorov_sf(math.sqrt(en) * d)
    return TestResult(TestKind.KS_2SAMPLE, d, p)


def _ad_statistic_midrank(a: np.ndarray, b: np.ndarray) -> float:
    """Tie-adjusted two-sample Anderson-Darling statistic (Scholz-Stephens eq. 7)."""
    pooled = np.sort(np.concatenate([a, b]))
    distinct = np.unique(pooled)
    n_total = pooled.size
    left = np.searchsorted(pooled, distinct, side="left")
    if n_total == distinct.size:
        multiplicity = np.ones(distinct.size)
    else:
        multiplicity = np.searchsorted(pooled, distinct, side="right") - left
    b_j = left + multiplicity / 2.0
    a2 = 0.0
    for sample in (a, b):
        s = np.sort(sample)
        m_right = np.searchsorted(s, distinct, side="right").astype(float)
        f_ij = m_right - np.searchsorted(s, distinct, side="left")
        m_ij = m_right - f_ij / 2.0
        inner = (multiplicity / n_total
                 * (n_total * m_ij - b_j * sample.size) ** 2
                 / (b_j * (n_total - b_j) - n_total * multiplicity / 4.0))
        a2 += inner.sum() / sample.size
    return float(a2 * (n_total - 1.0) / n_total)


def ad_2sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Two-sample Anderson-Darling test.

    Returns the standardized statistic; the p-value is interpolated from the
    published critical-value table and reported within [0.001, 0.25].
    """
    a = _check_sample(sample_a, 2, "a")
    b = _check_sample(sample_b, 2, "b")
    n_total = a.size + b.size
    if np.unique(np.concatenate([a, b])).size < 2:
        raise DegenerateSampleError("needs more than one distinct pooled value")
    a2 = _ad_statistic_midrank(a, b)

    k = 2
    harmonic = 1.0 / a.size + 1.0 / b.size
    hs_cs = (1.0 / np.arange(n_total - 1, 1, -1)).cumsum()
    h = hs_cs[-1] + 1
    g = (hs_cs / np.arange(2, n_total)).sum()
    ca = (4 * g - 6) * (k - 1) + (10 - 6 * g) * harmonic
    cb = (2 * g - 4) * k ** 2 + 8 * h * k + (2 * g - 14 * h - 4) * harmonic - 8 * h + 4 * g - 6
    cc = (6 * h + 2 * g - 2) * k ** 2 + (4 * h - 4 * g + 6) * k + (2 * h - 6) * harmonic + 4 * h
    cd = (2 * h + 6) * k ** 2 - 4 * h * k
    sigmasq = ((ca * n_total ** 3 + cb * n_total ** 2 + cc * n_total + cd)
               / ((n_total - 1.0) * (n_total - 2.0) * (n_total - 3.0)))
    statistic = (a2 - (k - 1)) / math.sqrt(sigmasq)

    critical = _AD_B0 + _AD_B1 / math.sqrt(k - 1) + _AD_B2 / (k - 1)
    if statistic < critical.min():
        p = AD_P_CAP
    elif statistic > critical.max():
        p = AD_P_FLOOR
    else:
        fit = np.polyfit(critical, np.log(_AD_SIG), 2)
        p = float(math.exp(np.polyval(fit, statistic)))
        p = min(AD_P_CAP, max(AD_P_FLOOR, p))
    return TestResult(TestKind.AD_2SAMPLE, float(statistic), p)


METRIC_NAMES = ("pet", "min_ttc", "mrd", "follower_speed_at_cp", "avg_speed", "avg_accel")
BENCHMARK_PAIRS = (
    (InteractionClass.AV_HV, InteractionClass.HV_HV),
    (InteractionClass.HV_AV, InteractionClass.HV_HV),
    (InteractionClass.HV_AV, InteractionClass.AV_HV),
)
CLASS_ORDER = (InteractionClass.HV_HV, InteractionClass.AV_HV, InteractionClass.HV_AV)


def summarize(values: Sequence[float]) -> Tuple[int, Optional[float], Optional[float]]:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return 0, None, None
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return int(arr.size), mean, std


def build_comparison_tables(metric_rows: Sequence[dict],
                            ta_samples: Optional[Dict[Tuple[str, str, str], List[float]]] = None
                            ) -> StatReport:
    """Build the grouped summaries and pairwise tests.

    metric_rows: flat records with keys source, kind, klass and one entry per
    METRIC_NAMES (None when undefined for that conflict). ta_samples maps
    (source, kind, klass) to pooled per-frame time-advantage observations.
    """
    groups: Dict[Tuple[str, str], Dict[str, Dict[str, List[float]]]] = {}
    for row in metric_rows:
        key = (str(row["source"]), str(row["kind"]))
        by_metric = groups.setdefault(key, {m: {} for m in METRIC_NAMES})
        for metric in METRIC_NAMES:
            value = row.get(metric)
            if value is None:
                continue
            by_metric[metric].setdefault(str(row["klass"]), []).append(float(value))

    summaries: List[GroupSummary] = []
    rows: List[ComparisonRow] = []
    for (source, kind) in sorted(groups):
        by_metric = groups[(source, kind)]
        for metric in METRIC_NAMES:
            values_by_class = by_metric[metric]
            for klass in CLASS_ORDER:
                n, mean, std = summarize(values_by_class.get(klass.value, []))
                summaries.append(GroupSummary((source, kind, klass.value), metric,
                                              n, mean, std))
            for test_class, bench_class in BENCHMARK_PAIRS:
                sample = values_by_class.get(test_class.value, [])
                bench = values_by_class.get(bench_class.value, [])
                n, mean, std = summarize(sample)
                t_stat = t_p = u_stat = u_p = None
                if len(sample) >= 2 and len(bench) >= 2:
                    try:
                        t_res = welch_t(sample, bench)
                        t_stat, t_p = t_res.statistic, t_res.p_value
                    except DegenerateSampleError as exc:
                        log.warning("welch_t skipped for %s/%s/%s vs %s: %s",
                                    source, kind, test_class.value, bench_class.value, exc)
                    u_res = mann_whitney_u(sample, bench)
                    u_stat, u_p = u_res.statistic, u_res.p_value
                else:
                    log.warning("tests skipped for %s/%s metric %s (%s vs %s): "
                                "group too small", source, kind, metric,
                                test_class.value, bench_class.value)
                rows.append(ComparisonRow(source, kind, metric, test_class.value,
                                          bench_class.value, n, mean, std,
                                          t_stat, t_p, u_stat, u_p))

    ta_rows: List[TaTestRow] = []
    if ta_samples:
        pair_keys = sorted({(src, kind) for (src, kind, _) in ta_samples})
        for source, kind in pair_keys:
            hv_av = ta_samples.get((source, kind, InteractionClass.HV_AV.value), [])
            av_hv = ta_samples.get((source, kind, InteractionClass.AV_HV.value), [])
            if len(hv_av) < 2 or len(av_hv) < 2:
                log.warning("TA tests skipped for %s/%s: group too small", source, kind)
                continue
            ks = ks_2sample(hv_av, av_hv)
            ad = ad_2sample(hv_av, av_hv)
            ta_rows.append(TaTestRow(source, kind, "ks_2sample", ks.statistic,
                                     ks.p_value, len(hv_av), len(av_hv)))
            ta_rows.append(TaTestRow(source, kind, "ad_2sample", ad.statistic,
                                     ad.p_value, len(hv_av), len(av_hv)))

    return StatReport(tuple(summaries), tuple(rows), tuple(ta_rows))
