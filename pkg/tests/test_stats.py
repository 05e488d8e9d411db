import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avconflict.stats import (
    AD_P_CAP,
    AD_P_FLOOR,
    DegenerateSampleError,
    ad_2sample,
    build_comparison_tables,
    kolmogorov_sf,
    ks_2sample,
    mann_whitney_u,
    summarize,
    welch_t,
)

from oracles import exact_mwu_two_sided

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def reference():
    return json.loads((FIXTURES / "stats_reference.json").read_text())


class TestWelch:
    def test_identical_samples(self):
        r = welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.statistic == 0.0
        assert r.p_value == pytest.approx(1.0)

    def test_swap_negates_statistic(self):
        a = [1.0, 2.0, 3.5, 4.0]
        b = [2.0, 4.0, 5.0, 7.0]
        r1, r2 = welch_t(a, b), welch_t(b, a)
        assert r1.statistic == pytest.approx(-r2.statistic)
        assert r1.p_value == pytest.approx(r2.p_value)

    def test_reference_fixture(self, reference):
        for case in reference["welch"]:
            r = welch_t(case["a"], case["b"])
            assert r.statistic == pytest.approx(case["statistic"], abs=1e-6)
            assert r.p_value == pytest.approx(case["p_value"], abs=1e-4)

    def test_constant_samples_equal_means(self):
        r = welch_t([2.0, 2.0, 2.0], [2.0, 2.0])
        assert (r.statistic, r.p_value) == (0.0, 1.0)

    def test_constant_samples_unequal_means(self):
        with pytest.raises(DegenerateSampleError):
            welch_t([2.0, 2.0, 2.0], [3.0, 3.0])

    def test_minimum_size(self):
        with pytest.raises(DegenerateSampleError):
            welch_t([1.0], [1.0, 2.0])


class TestMannWhitney:
    def test_u_sum_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.normal(0, 1, int(rng.integers(1, 15))).tolist()
            b = rng.normal(0.3, 1, int(rng.integers(1, 15))).tolist()
            u_a = mann_whitney_u(a, b).statistic
            u_b = mann_whitney_u(b, a).statistic
            assert u_a + u_b == pytest.approx(len(a) * len(b))

    def test_extreme_separation(self):
        r = mann_whitney_u([1.0, 2.0, 3.0], [10.0, 11.0])
        assert r.statistic == 0.0

    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(2)
        for na in range(1, 7):
            for nb in range(1, 7):
                if na + nb > 10:
                    continue
                a = rng.normal(0, 1, na).tolist()
                b = rng.normal(0.5, 1, nb).tolist()
                got = mann_whitney_u(a, b).p_value
                want = exact_mwu_two_sided(a, b)
                assert got == want

    def test_exact_with_ties(self):
        a = [1.0, 2.0, 2.0, 3.0]
        b = [2.0, 3.0, 3.0]
        assert mann_whitney_u(a, b).p_value == exact_mwu_two_sided(a, b)

    def test_normal_approximation_close_to_exact(self):
        rng = np.random.default_rng(3)
        from avconflict.stats import _mwu_exact_p, _mwu_statistic
        for _ in range(10):
            a = rng.normal(0, 1, 12)
            b = rng.normal(0.5, 1, 12)
            approx_p = mann_whitney_u(a, b).p_value  # 12 > 8: normal path
            u, ranks = _mwu_statistic(np.asarray(a), np.asarray(b))
            exact_p = _mwu_exact_p(ranks, 12, u)
            assert abs(approx_p - exact_p) <= 0.02

    def test_p_symmetry(self):
        a = [1.0, 5.0, 3.0, 4.0]
        b = [2.0, 6.0, 7.0]
        assert mann_whitney_u(a, b).p_value == pytest.approx(
            mann_whitney_u(b, a).p_value)


class TestKs:
    def test_identical_samples(self):
        r = ks_2samp_like([1.0, 2.0, 3.0])
        assert r.statistic == 0.0
        assert r.p_value == pytest.approx(1.0)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        a = rng.normal(0, 1, 30)
        b = rng.normal(0.5, 1.2, 25)
        base = ks_2sample(a, b)
        transformed = ks_2sample(np.exp(a), np.exp(b))
        assert transformed.statistic == pytest.approx(base.statistic)
        assert transformed.p_value == pytest.approx(base.p_value)

    def test_reference_fixture(self, reference):
        for case in reference["ks"]:
            r = ks_2sample(case["a"], case["b"])
            assert r.statistic == pytest.approx(case["statistic"], abs=1e-6)
            assert r.p_value == pytest.approx(case["p_value"], abs=1e-4)

    def test_kolmogorov_sf_bounds(self):
        assert kolmogorov_sf(0.0) == 1.0
        assert kolmogorov_sf(0.2) == pytest.approx(1.0, abs=1e-9)
        assert kolmogorov_sf(10.0) < 1e-12
        # spot values of the asymptotic distribution (both series branches)
        assert kolmogorov_sf(1.0) == pytest.approx(0.2699996716773546, abs=1e-12)
        assert kolmogorov_sf(1.5) == pytest.approx(0.022217962616525127, abs=1e-12)
        # strictly decreasing across the series switch near 1.18
        grid = [1.0 + 0.01 * i for i in range(41)]
        values = [kolmogorov_sf(lam) for lam in grid]
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_p_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.normal(0, 1, 20)
        b = rng.normal(1, 1, 14)
        assert ks_2sample(a, b).p_value == pytest.approx(ks_2sample(b, a).p_value)


def ks_2samp_like(values):
    return ks_2sample(values, list(values))


class TestAd:
    def test_identical_samples_capped(self):
        values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        r = ad_2sample(values, list(values))
        assert r.p_value == AD_P_CAP
        # statistic at or below the lowest critical value
        assert r.statistic < 1.0

    def test_separated_samples_floored(self):
        rng = np.random.default_rng(6)
        a = rng.uniform(0, 1, 50)
        b = rng.uniform(10, 11, 50)
        r = ad_2sample(a, b)
        assert r.p_value == AD_P_FLOOR

    def test_reference_fixture(self, reference):
        for case in reference["ad"]:
            r = ad_2sample(case["a"], case["b"])
            assert r.statistic == pytest.approx(case["statistic"], abs=1e-6)
            assert r.p_value == pytest.approx(case["p_value"], abs=1e-4)

    def test_p_range(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(0, 1, int(rng.integers(4, 30)))
            b = rng.normal(rng.uniform(0, 2), 1, int(rng.integers(4, 30)))
            r = ad_2sample(a, b)
            assert AD_P_FLOOR <= r.p_value <= AD_P_CAP

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            ad_2sample([1.0, 1.0], [1.0, 1.0])

    def test_p_symmetry(self):
        rng = np.random.default_rng(8)
        a = rng.normal(0, 1, 20)
        b = rng.normal(0.4, 1, 30)
        assert ad_2sample(a, b).p_value == pytest.approx(ad_2sample(b, a).p_value)
        assert ad_2sample(a, b).statistic == pytest.approx(ad_2sample(b, a).statistic)


@given(st.lists(st.floats(min_value=-100, max_value=100, allow_nan=False).map(
                    lambda x: round(x, 6)),
                min_size=2, max_size=30),
       st.floats(min_value=0.1, max_value=5.0, allow_nan=False).map(
           lambda x: round(x, 3)),
       st.floats(min_value=-10, max_value=10, allow_nan=False).map(
           lambda x: round(x, 3)))
@settings(max_examples=50, deadline=None)
def test_rank_tests_invariant_under_affine_increase(sample, scale, shift):
    a = sample
    b = [x + 0.37 for x in sample[::-1]]
    t1 = mann_whitney_u(a, b)
    t2 = mann_whitney_u([scale * x + shift for x in a], [scale * x + shift for x in b])
    assert t1.statistic == pytest.approx(t2.statistic)
    assert t1.p_value == pytest.approx(t2.p_value)


class TestSummaries:
    def test_constant_group(self):
        n, mean, std = summarize([4.2, 4.2, 4.2])
        assert (n, mean, std) == (3, pytest.approx(4.2), 0.0)

    def test_empty_group(self):
        assert summarize([]) == (0, None, None)


def metric_row(source, kind, klass, **values):
    row = {"source": source, "kind": kind, "klass": klass,
           "pet": None, "min_ttc": None, "mrd": None,
           "follower_speed_at_cp": None, "avg_speed": None, "avg_accel": None}
    row.update(values)
    return row


class TestComparisonTables:
    def test_single_group_summary_only(self):
        rows = [metric_row("WAYMO", "CROSSING", "HV-HV", pet=4.0 + 0.1 * i)
                for i in range(5)]
        report = build_comparison_tables(rows, {})
        hv = [s for s in report.summaries if s.group[2] == "HV-HV" and s.metric == "pet"]
        assert hv[0].n == 5
        pet_rows = [r for r in report.rows if r.metric == "pet"]
        assert all(r.t_p is None for r in pet_rows)

    def test_identical_groups_null_pvalues(self):
        rng = np.random.default_rng(9)
        values = rng.normal(4, 1, 30)
        rows = []
        for klass in ("HV-HV", "AV-HV", "HV-AV"):
            rows += [metric_row("WAYMO", "CROSSING", klass, pet=float(v))
                     for v in values]
        ta = {("WAYMO", "CROSSING", "HV-AV"): values.tolist(),
              ("WAYMO", "CROSSING", "AV-HV"): values.tolist()}
        report = build_comparison_tables(rows, ta)
        pet_rows = [r for r in report.rows if r.metric == "pet"]
        assert all(r.t_p == pytest.approx(1.0) for r in pet_rows)
        assert all(r.u_p == pytest.approx(1.0, abs=0.05) for r in pet_rows)
        ks_row = [r for r in report.ta_tests if r.test == "ks_2sample"][0]
        ad_row = [r for r in report.ta_tests if r.test == "ad_2sample"][0]
        assert ks_row.p_value == pytest.approx(1.0)
        assert ad_row.p_value == AD_P_CAP

    def test_benchmark_pairings(self):
        rng = np.random.default_rng(10)
        rows = []
        for klass, mu in (("HV-HV", 4.0), ("AV-HV", 3.6), ("HV-AV", 5.4)):
            rows += [metric_row("LYFT", "MERGING", klass, pet=float(v))
                     for v in rng.normal(mu, 1, 25)]
        report = build_comparison_tables(rows, {})
        pairs = {(r.klass, r.benchmark) for r in report.rows if r.metric == "pet"}
        assert pairs == {("AV-HV", "HV-HV"), ("HV-AV", "HV-HV"), ("HV-AV", "AV-HV")}

    def test_missing_values_excluded(self):
        rows = [metric_row("WAYMO", "CROSSING", "HV-HV", pet=4.0, min_ttc=None)
                for _ in range(3)]
        report = build_comparison_tables(rows, {})
        minttc = [s for s in report.summaries
                  if s.metric == "min_ttc" and s.group[2] == "HV-HV"]
        assert minttc[0].n == 0
