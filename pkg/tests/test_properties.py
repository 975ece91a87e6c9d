"""Invariant checks threaded through real replanning trials."""

import pytest

from morphplan.geometry import Bounds, Sphere
from morphplan.scenario import Scenario, default_params, preset, with_overrides
from props import Counters, instrumented


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_invariants_2d(seed):
    counters = Counters()
    sc = preset(2, 15, 4)
    with instrumented(counters) as run:
        run(sc, seed, enforce_budget=False)
    assert counters.get("prune", 0) == counters.get("restore", 0)


def test_invariants_2d_static_obstacles():
    counters = Counters()
    sc = with_overrides(preset(2, 20, 3), static_obstacles=(Sphere((16, 16), 3.0), Sphere((10, 22), 2.0)))
    with instrumented(counters) as run:
        for seed in range(3):
            run(sc, seed, enforce_budget=False)
    assert counters.get("repair", 0) > 0


def test_invariants_3d():
    counters = Counters()
    # a 16 m cube keeps the tree small enough for per-step oracle checks
    sc = Scenario(dimension=3, bounds=Bounds((0, 0, 0), (16, 16, 16)), start=(2, 2, 2), goal=(14, 14, 14),
                  num_obstacles=25, obstacle_speed=4.0, params=default_params(3, init_iterations=5000))
    with instrumented(counters) as run:
        for seed in range(2):
            run(sc, seed, enforce_budget=False)
    assert counters.get("prune", 0) > 0
