import math

import numpy as np
import pytest

from avconflict.intersections import (
    ClusterSpec,
    ValidationError,
    build_intersection,
    cluster_stop_signs,
    detect_intersections,
    eligible_clusters,
    validate_all_way,
)
from avconflict.model import LanePolyline, StopSign

from conftest import four_way_map_dict
from oracles import brute_force_components


def sign(sign_id, x, y, lane_id="lane"):
    return StopSign(sign_id=sign_id, x=x, y=y, lane_id=lane_id)


class TestClustering:
    def test_three_close_signs_one_cluster(self):
        signs = [sign("a", 0, 0), sign("b", 10, 0), sign("c", 0, 10)]
        clusters = cluster_stop_signs(signs)
        assert len(clusters) == 1 and len(clusters[0]) == 3

    def test_two_far_triplets(self):
        signs = ([sign(f"a{i}", i * 5.0, 0) for i in range(3)]
                 + [sign(f"b{i}", 200 + i * 5.0, 0) for i in range(3)])
        clusters = cluster_stop_signs(signs)
        assert [len(c) for c in clusters] == [3, 3]

    def test_single_linkage_chaining(self):
        signs = [sign("a", 0, 0), sign("b", 40, 0), sign("c", 80, 0)]
        clusters = cluster_stop_signs(signs)
        assert len(clusters) == 1
        assert {s.sign_id for s in clusters[0]} == {"a", "b", "c"}

    def test_partition_property(self):
        rng = np.random.default_rng(1)
        signs = [sign(f"s{i}", *rng.uniform(0, 300, 2)) for i in range(40)]
        clusters = cluster_stop_signs(signs)
        flattened = [s.sign_id for c in clusters for s in c]
        assert sorted(flattened) == sorted(s.sign_id for s in signs)
        assert len(flattened) == len(set(flattened))

    def test_monotonicity_in_link_distance(self):
        rng = np.random.default_rng(2)
        signs = [sign(f"s{i}", *rng.uniform(0, 400, 2)) for i in range(60)]
        counts = [len(cluster_stop_signs(signs, ClusterSpec(link_distance=d)))
                  for d in (10, 20, 45, 90, 200)]
        assert counts == sorted(counts, reverse=True)

    def test_agreement_with_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(0, 25))
            pts = rng.uniform(0, 250, (n, 2))
            signs = [sign(f"s{i}", x, y) for i, (x, y) in enumerate(pts)]
            clusters = cluster_stop_signs(signs, ClusterSpec(link_distance=45.0))
            got = {frozenset(int(s.sign_id[1:]) for s in c) for c in clusters}
            want = brute_force_components([tuple(p) for p in pts], 45.0)
            assert got == want

    def test_empty_input(self):
        assert cluster_stop_signs([]) == []

    def test_eligibility_filter(self):
        signs = [sign("a", 0, 0), sign("b", 10, 0)]
        clusters = cluster_stop_signs(signs)
        assert eligible_clusters(clusters) == []


def approach_lane(lane_id, end_x, end_y, length=40.0):
    # straight lane pointing at the origin, ending at (end_x, end_y)
    norm = math.hypot(end_x, end_y) or 1.0
    ux, uy = end_x / norm, end_y / norm
    start = (end_x + ux * length, end_y + uy * length)
    return LanePolyline(lane_id=lane_id, centerline=(start, (end_x, end_y)))


class TestValidateAllWay:
    def make_four_legs(self):
        lanes = [
            approach_lane("n", 0.0, 8.0),
            approach_lane("s", 0.0, -8.0),
            approach_lane("e", 8.0, 0.0),
            approach_lane("w", -8.0, 0.0),
        ]
        signs = [
            sign("sn", 2.0, 8.0, "n"), sign("ss", -2.0, -8.0, "s"),
            sign("se", 8.0, -2.0, "e"), sign("sw", -8.0, 2.0, "w"),
        ]
        return lanes, signs

    def test_four_legs_four_signs(self):
        lanes, signs = self.make_four_legs()
        assert validate_all_way(signs, lanes) is True

    def test_four_legs_three_signs_prioritized(self):
        lanes, signs = self.make_four_legs()
        assert validate_all_way(signs[:3], lanes) is False

    def test_t_intersection_passes(self):
        lanes, signs = self.make_four_legs()
        assert validate_all_way(signs[:3], lanes[:3]) is True

    def test_missing_lane_data_raises(self):
        _, signs = self.make_four_legs()
        with pytest.raises(ValidationError):
            validate_all_way(signs, [])

    def test_empty_cluster_raises(self):
        lanes, _ = self.make_four_legs()
        with pytest.raises(ValidationError):
            validate_all_way([], lanes)


class TestBuildIntersection:
    def test_square_corner_signs_closed_form(self):
        # signs at the corners of a 20 m square centered at (5, 5)
        signs = [sign("a", -5, -5, "n"), sign("b", 15, -5, "n"),
                 sign("c", 15, 15, "n"), sign("d", -5, 15, "n")]
        lanes = [approach_lane("n", 0.0, 8.0)]
        ix = build_intersection(signs, lanes, ClusterSpec())
        assert ix.center == pytest.approx((5.0, 5.0))
        assert ix.radius == pytest.approx(10 * math.sqrt(2) + 5.0)

    def test_displaced_sign_grows_radius(self):
        base = [sign("a", -5, 0, "n"), sign("b", 5, 0, "n"), sign("c", 0, 5, "n")]
        far = base + [sign("d", 40, 0, "n")]
        lanes = [approach_lane("n", 0.0, 8.0)]
        r_base = build_intersection(base, lanes).radius
        r_far = build_intersection(far, lanes).radius
        assert r_far > r_base
        cx = (0 - 5 + 5 + 40) / 4
        assert r_far == pytest.approx(math.hypot(40 - cx, 0 - (5 / 4)) + 5.0)

    def test_degenerate_coincident_signs(self):
        signs = [sign(s, 1.0, 1.0, "n") for s in "abc"]
        ix = build_intersection(signs, [approach_lane("n", 1.0, 1.0)], ClusterSpec())
        assert ix.radius == pytest.approx(5.0)

    def test_four_way_fixture_roles(self, four_way_bundle):
        intersections = detect_intersections(four_way_bundle)
        assert len(intersections) == 1
        ix = intersections[0]
        assert ix.center == pytest.approx((0.0, 0.0))
        assert ix.n_legs == 4
        assert set(ix.approach_lanes) == {"ap_e", "ap_w", "ap_n", "ap_s"}
        assert set(ix.exit_lanes) == {"ex_e", "ex_w", "ex_n", "ex_s"}

    def test_prioritized_fixture_rejected(self, tmp_path):
        import json

        from avconflict.io import read_map
        m = four_way_map_dict()
        m["stop_signs"] = m["stop_signs"][:3]  # one leg uncontrolled
        path = tmp_path / "map.json"
        path.write_text(json.dumps(m), encoding="utf-8")
        assert detect_intersections(read_map(path)) == []
