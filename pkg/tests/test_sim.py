import json
import math

import numpy as np
import pytest

from morphplan.geometry import Bounds
from morphplan.replanner import Path
from morphplan.scenario import preset, with_overrides
from morphplan.sim import (
    COLLISION,
    NONE,
    Obstacle,
    RobotState,
    TrialResult,
    collision_check,
    obstacle_step,
    robot_step,
    run_trial,
)
from morphplan.tree import TreeStateError

B2 = Bounds((0, 0), (32, 32))
B3 = Bounds((0, 0, 0), (32, 32, 32))


def test_obstacle_straight_advance():
    ob = Obstacle(0, (10.0, 10.0), 0.5, 4.0, heading=0.0, remaining=10.0)
    obstacle_step(ob, 0.1, B2, np.random.default_rng(0))
    assert ob.center == pytest.approx((10.4, 10.0), abs=1e-12)
    assert ob.remaining == pytest.approx(9.6, abs=1e-12)


def test_obstacle_leftover_motion():
    ob = Obstacle(0, (10.0, 10.0), 0.5, 4.0, heading=0.0, remaining=0.2)
    rng = np.random.default_rng(5)
    twin = np.random.default_rng(5)
    theta = twin.uniform(0.0, 2 * math.pi)
    dist = twin.uniform(0.0, 10.0)
    assert dist > 0.2  # fixture: one redraw covers the leftover
    obstacle_step(ob, 0.1, B2, rng)
    expected = (10.2 + 0.2 * math.cos(theta), 10.0 + 0.2 * math.sin(theta))
    assert ob.center == pytest.approx(expected, abs=1e-12)
    assert ob.heading == theta
    assert ob.remaining == pytest.approx(dist - 0.2, abs=1e-12)


def test_obstacle_stays_in_bounds_and_moves_at_speed():
    rng = np.random.default_rng(1)
    obs = [Obstacle(i, tuple(rng.uniform(0, 32, 2)), 0.5, 4.0) for i in range(20)]
    obs += [Obstacle(100 + i, tuple(rng.uniform(0, 32, 3)), 0.5, 4.0) for i in range(20)]
    for _ in range(500):
        for ob in obs:
            before = ob.center
            obstacle_step(ob, 0.1, B2 if len(before) == 2 else B3, rng)
            assert math.dist(before, ob.center) <= 0.4 + 1e-9
            assert (B2 if len(before) == 2 else B3).contains(ob.center)


def test_3d_waypoint_redrawn_on_arrival():
    ob = Obstacle(0, (5.0, 5.0, 5.0), 0.5, 4.0, waypoint=(5.0, 5.0, 5.0))
    obstacle_step(ob, 0.1, B3, np.random.default_rng(2))
    assert ob.waypoint != (5.0, 5.0, 5.0)
    assert B3.contains(ob.waypoint)
    assert math.dist(ob.center, (5, 5, 5)) == pytest.approx(0.4)


def test_obstacle_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        obstacle_step(Obstacle(0, (1.0, 1.0), 0.5, 1.0), 0.0, B2, np.random.default_rng(0))


def test_robot_step_straight():
    r = RobotState((0.0, 0.0, 0.0), 4.0, 0.5)
    robot_step(r, Path([(0, 0, 0), (10, 0, 0)], [None, 0]), 0.1)
    assert r.position == pytest.approx((0.4, 0, 0))


def test_robot_step_corner():
    r = RobotState((0.9, 0.0), 4.0, 0.5)
    path = Path([(0.9, 0.0), (1.0, 0.0), (1.0, 5.0)], [None, 1, 0])
    robot_step(r, path, 0.1)
    assert r.position == pytest.approx((1.0, 0.3), abs=1e-12)
    assert r.path_cursor == 2


def test_robot_step_snaps_to_goal():
    r = RobotState((0.0, 0.0), 4.0, 0.5)
    robot_step(r, Path([(0.0, 0.0), (0.35, 0.0)], [None, 0]), 0.1)
    assert r.position == (0.35, 0.0)


def test_robot_step_exhausted_path():
    r = RobotState((0.0, 0.0), 4.0, 0.5, path_cursor=2)
    with pytest.raises(TreeStateError):
        robot_step(r, Path([(5.0, 0.0), (6.0, 0.0)], [None, 0]), 0.1)


@pytest.mark.parametrize("d,hit", [(0.9, True), (1.0, False), (5.0, False)])
def test_collision_check(d, hit):
    r = RobotState((0.0, 0.0), 4.0, 0.5)
    assert collision_check(r, [Obstacle(0, (d, 0.0), 0.5, 1.0)]) is hit
    assert collision_check(r, []) is False


def test_zero_obstacle_trial():
    res = run_trial(preset(2, 0, 1), 0)
    assert res.success and res.failure_reason == NONE
    assert 9.9 <= res.travel_time <= 11.5
    assert res.travel_time == res.ticks * 0.1
    assert res.num_replans == 0


def _point_on_route(seed, tick):
    free = run_trial(preset(2, 0, 4), seed, log_trajectory=True)
    return tuple(json.loads(free.trajectory[tick])["robot"])


def test_scripted_collision_without_replanning():
    sc = preset(2, 1, 4)
    # a stationary obstacle parked on the route the robot takes without obstacles
    ob = Obstacle(0, _point_on_route(0, 40), 0.5, 0.0, heading=0.0, remaining=1e9)
    res = run_trial(sc, 0, obstacles=[ob], replanning=False)
    assert not res.success and res.failure_reason == COLLISION


def test_replanning_avoids_scripted_obstacle():
    sc = preset(2, 1, 4)
    ob = Obstacle(0, _point_on_route(0, 40), 0.5, 0.0, heading=0.0, remaining=1e9)
    res = run_trial(sc, 0, obstacles=[ob], enforce_budget=False)
    assert res.success and res.num_replans >= 1


def test_determinism_and_trajectory_log():
    sc = preset(2, 15, 4)
    a = run_trial(sc, 3, enforce_budget=False, log_trajectory=True)
    b = run_trial(sc, 3, enforce_budget=False, log_trajectory=True)
    assert a == b
    assert a.trajectory == b.trajectory
    assert len(a.trajectory) == a.ticks + 1
    recs = [json.loads(line) for line in a.trajectory]
    assert recs[0]["robot"] == [2.0, 2.0]
    assert len(recs[-1]["obstacles"]) == 15
    # per-tick displacement bounded by speed * dt
    for p, q in zip(recs, recs[1:]):
        assert math.dist(p["robot"], q["robot"]) <= 0.4 + 1e-9
        for o1, o2 in zip(p["obstacles"], q["obstacles"]):
            assert math.dist(o1, o2) <= 0.4 + 1e-9
            assert B2.contains(o2)


def test_tick_budget_cap():
    sc = with_overrides(preset(2, 0, 1), max_ticks=5)
    res = run_trial(sc, 0)
    assert res.failure_reason == "tick_budget_config" and res.ticks == 5
    assert res.travel_time == pytest.approx(0.5)


def test_trial_result_invariants():
    for seed in range(5):
        res = run_trial(preset(2, 15, 3), seed, enforce_budget=False)
        assert isinstance(res, TrialResult)
        assert res.success == (res.failure_reason == NONE)
        assert res.travel_time == res.ticks * 0.1
