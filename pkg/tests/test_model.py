import math

import pytest

from avconflict.model import (
    AgentClass,
    InteractionClass,
    ModelError,
    Scenario,
    ScenarioSource,
    TrajectoryPoint,
    TrajectoryTrack,
    UnsupportedPairError,
    interaction_class,
    validate_scenario,
    validate_track,
)


def make_track(track_id="t", agent_class=AgentClass.HV, n=5, v=5.0):
    points = tuple(
        TrajectoryPoint(t=0.1 * i, x=1.0 * i, y=0.0, v=v, a=0.0, heading=0.0)
        for i in range(n)
    )
    return TrajectoryTrack(track_id=track_id, agent_class=agent_class, points=points)


class TestInteractionClass:
    def test_av_leader_hv_follower(self):
        av = make_track("av", AgentClass.AV)
        hv = make_track("hv", AgentClass.HV)
        assert interaction_class(av, hv) is InteractionClass.AV_HV

    def test_hv_hv(self):
        assert interaction_class(make_track("a"), make_track("b")) is InteractionClass.HV_HV

    def test_hv_leader_av_follower(self):
        hv = make_track("hv", AgentClass.HV)
        av = make_track("av", AgentClass.AV)
        assert interaction_class(hv, av) is InteractionClass.HV_AV

    def test_both_av_rejected(self):
        av1 = make_track("av1", AgentClass.AV)
        av2 = make_track("av2", AgentClass.AV)
        with pytest.raises(UnsupportedPairError):
            interaction_class(av1, av2)

    def test_other_rejected(self):
        ped = make_track("p", AgentClass.OTHER)
        with pytest.raises(UnsupportedPairError):
            interaction_class(ped, make_track("hv"))

    def test_deterministic(self):
        av = make_track("av", AgentClass.AV)
        hv = make_track("hv", AgentClass.HV)
        assert all(interaction_class(av, hv) is InteractionClass.AV_HV
                   for _ in range(3))


class TestValidation:
    def test_valid_track_passes(self):
        validate_track(make_track())

    def test_non_monotone_time(self):
        pts = (TrajectoryPoint(0.0, 0, 0, 1, 0, 0), TrajectoryPoint(0.0, 1, 0, 1, 0, 0))
        with pytest.raises(ModelError, match="'t'"):
            validate_track(TrajectoryTrack("t", AgentClass.HV, pts))

    def test_negative_speed(self):
        pts = (TrajectoryPoint(0.0, 0, 0, 1, 0, 0), TrajectoryPoint(0.1, 1, 0, -1, 0, 0))
        with pytest.raises(ModelError, match="'v'"):
            validate_track(TrajectoryTrack("t", AgentClass.HV, pts))

    def test_non_finite_coordinate(self):
        pts = (TrajectoryPoint(0.0, 0, 0, 1, 0, 0),
               TrajectoryPoint(0.1, math.nan, 0, 1, 0, 0))
        with pytest.raises(ModelError, match="'x'"):
            validate_track(TrajectoryTrack("t", AgentClass.HV, pts))

    def test_single_av_per_scenario(self):
        sc = Scenario("s", ScenarioSource.SYNTHETIC, 10.0,
                      (make_track("a", AgentClass.AV), make_track("b", AgentClass.AV)),
                      "m")
        with pytest.raises(ModelError, match="AV"):
            validate_scenario(sc)

    def test_duration_bounds(self):
        sc = Scenario("s", ScenarioSource.SYNTHETIC, 0.0, (make_track(),), "m")
        with pytest.raises(ModelError, match="duration"):
            validate_scenario(sc)

    def test_timestamps_within_duration(self):
        sc = Scenario("s", ScenarioSource.SYNTHETIC, 0.2, (make_track(n=5),), "m")
        with pytest.raises(ModelError, match="duration"):
            validate_scenario(sc)
