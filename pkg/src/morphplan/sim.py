"""Discrete-time world: obstacle motion, path following, collisions and the trial loop."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import Bounds, Point, Sphere, as_point, sample_uniform
from .replanner import (
    GoalBlocked,
    Path,
    ReplanFailure,
    SubtreePartition,
    compute_cpr,
    compute_lrz,
    compute_ohz,
    find_entry,
    path_search,
    prune,
    repair,
    restore,
    validate_path,
)
from .scenario import Scenario
from .tree import ConfigurationError, StaticWorld, TreeStateError, build_initial_tree, rewire_cascade

NONE = "none"
COLLISION = "collision"
REPLAN_TIMEOUT = "replan_timeout"
TICK_BUDGET = "tick_budget_config"

MAX_SEGMENT_DISTANCE = 10.0  # 2D obstacles travel a uniform [0, 10] m per heading
HEADING_RETRIES = 32
# deterministic stand-in for the wall-clock budget when it is not enforced
MAX_FALLBACK_SAMPLES = 2000


@dataclass
class Obstacle:
    id: int
    center: Point
    radius: float
    speed: float
    heading: float = 0.0
    remaining: float = 0.0
    waypoint: Optional[Point] = None


@dataclass
class RobotState:
    position: Point
    speed: float
    radius: float
    path_cursor: int = 1


@dataclass(frozen=True)
class ReplanEvent:
    tick_time: float
    duration_ms: float = field(compare=False)
    cpr_spheres: int = 0
    pruned: int = 0
    subtrees: int = 1
    passes: int = 0
    reconnections: int = 0
    samples: int = 0
    blocked: bool = False

    def to_record(self) -> dict:
        return {
            "t": self.tick_time,
            "cpr_spheres": self.cpr_spheres,
            "pruned": self.pruned,
            "subtrees": self.subtrees,
            "passes": self.passes,
            "reconnections": self.reconnections,
            "samples": self.samples,
            "goal_blocked": self.blocked,
            "elapsed_ms": self.duration_ms,
        }


@dataclass
class TrialResult:
    success: bool
    failure_reason: str
    travel_time: float
    replan_events: list
    seed: int
    ticks: int = 0
    trajectory: list = field(default_factory=list, repr=False)

    @property
    def num_replans(self) -> int:
        return len(self.replan_events)

    @property
    def replan_ms(self) -> list:
        return [e.duration_ms for e in self.replan_events]


def _heading_vector(theta: float, dim: int) -> tuple:
    return (math.cos(theta), math.sin(theta)) if dim == 2 else (math.cos(theta), math.sin(theta), 0.0)


def obstacle_step(obstacle: Obstacle, dt: float, bounds: Bounds, rng: np.random.Generator) -> Obstacle:
    """Advance ``obstacle`` by one tick in place (and return it).

    2D obstacles follow a heading for a sampled distance, then draw a new
    heading in [0, 2*pi) and distance in [0, 10] m; a step that would leave the
    workspace redraws the heading. 3D obstacles fly toward a waypoint and draw
    a new one uniformly in the workspace on arrival. Leftover motion carries over.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    step = obstacle.speed * dt
    if len(obstacle.center) == 2:
        _step_planar(obstacle, step, bounds, rng)
    else:
        _step_waypoint(obstacle, step, bounds, rng)
    return obstacle


def _step_planar(ob: Obstacle, step: float, bounds: Bounds, rng):
    while step > 1e-12:
        if ob.remaining <= 0.0:
            ob.heading = float(rng.uniform(0.0, 2.0 * math.pi))
            ob.remaining = float(rng.uniform(0.0, MAX_SEGMENT_DISTANCE))
            continue
        move = min(step, ob.remaining)
        cx, cy = ob.center
        nxt = (cx + move * math.cos(ob.heading), cy + move * math.sin(ob.heading))
        tries = 0
        while not bounds.contains(nxt) and tries < HEADING_RETRIES:
            ob.heading = float(rng.uniform(0.0, 2.0 * math.pi))
            nxt = (cx + move * math.cos(ob.heading), cy + move * math.sin(ob.heading))
            tries += 1
        ob.center = bounds.clamp(nxt)
        ob.remaining -= move
        step -= move


def _step_waypoint(ob: Obstacle, step: float, bounds: Bounds, rng):
    if ob.waypoint is None:
        ob.waypoint = sample_uniform(bounds, rng)
    while step > 1e-12:
        d = math.dist(ob.center, ob.waypoint)
        if d <= step:
            ob.center = ob.waypoint
            step -= d
            ob.waypoint = sample_uniform(bounds, rng)
        else:
            k = step / d
            ob.center = tuple(c + k * (w - c) for c, w in zip(ob.center, ob.waypoint))
            step = 0.0


def robot_step(robot: RobotState, path: Path, dt: float) -> RobotState:
    """Move the robot ``speed * dt`` along ``path`` in place; snaps to the goal when within reach."""
    step = robot.speed * dt
    wps = path.waypoints
    goal = wps[-1]
    if math.dist(robot.position, goal) <= step:
        robot.position = goal
        robot.path_cursor = len(wps)
        return robot
    pos = robot.position
    while step > 0.0:
        if robot.path_cursor >= len(wps):
            raise TreeStateError("path exhausted before reaching the goal")
        target = wps[robot.path_cursor]
        d = math.dist(pos, target)
        if d <= step:
            pos = target
            step -= d
            robot.path_cursor += 1
        else:
            k = step / d
            pos = tuple(p + k * (t - p) for p, t in zip(pos, target))
            step = 0.0
    robot.position = pos
    return robot


def collision_check(robot: RobotState, obstacles: Sequence[Obstacle]) -> bool:
    x = robot.position
    for ob in obstacles:
        if math.dist(x, ob.center) < ob.radius + robot.radius:
            return True
    return False


def initial_obstacles(scenario: Scenario, rng: np.random.Generator) -> list:
    """Random initial obstacle states kept clear of the robot's initial hazard check."""
    params = scenario.params
    clearance = (scenario.robot_speed * params.reaction_horizon
                 + scenario.obstacle_speed * params.risk_horizon + scenario.obstacle_radius + scenario.robot_radius)
    out = []
    while len(out) < scenario.num_obstacles:
        c = sample_uniform(scenario.bounds, rng)
        if math.dist(c, scenario.start) <= clearance:
            continue
        ob = Obstacle(id=len(out), center=c, radius=scenario.obstacle_radius, speed=scenario.obstacle_speed)
        if scenario.dimension == 2:
            ob.heading = float(rng.uniform(0.0, 2.0 * math.pi))
            ob.remaining = float(rng.uniform(0.0, MAX_SEGMENT_DISTANCE))
        else:
            ob.waypoint = sample_uniform(scenario.bounds, rng)
        out.append(ob)
    return out


def planning_world(scenario: Scenario) -> StaticWorld:
    # static obstacles are inflated by the robot radius so the robot plans as a point
    inflated = [Sphere(s.center, s.radius + scenario.robot_radius) for s in scenario.static_obstacles]
    return StaticWorld(scenario.bounds, inflated)


def trial_streams(seed: int) -> tuple:
    """Independent (tree, obstacle, planner) generators derived from one trial seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(s) for s in children)


def _log_line(t: float, robot: RobotState, obstacles) -> str:
    return json.dumps({"t": t, "robot": list(robot.position), "obstacles": [list(o.center) for o in obstacles]})


def run_trial(scenario: Scenario, seed: int, enforce_budget: bool = True, log_trajectory: bool = False,
              obstacles: Optional[list] = None, replanning: bool = True, tree=None,
              hold_on_replan: bool = False) -> TrialResult:
    """Simulate one navigation trial.

    Each tick moves the obstacles, computes the CPR and either advances the
    robot along its path or, if the path is blocked, replans and advances along
    the new path (``hold_on_replan`` keeps the robot still on that tick
    instead). The replanning time covers prune, repair, rewiring and path
    search. With ``enforce_budget`` an event slower than one tick fails
    the trial; without it the run is a pure function of ``seed``.

    ``obstacles`` replaces the random initial obstacle states and ``tree`` a
    prebuilt initial tree (both mainly for tests).
    """
    params = scenario.params
    dt = scenario.tick
    world = planning_world(scenario)
    tree_rng, obstacle_rng, plan_rng = trial_streams(seed)
    if tree is None:
        tree = build_initial_tree(world, scenario.goal, params.init_iterations, params.steer_range,
                                  params.neighbor_radius, tree_rng)
    partition = SubtreePartition.single(tree)
    robot = RobotState(position=scenario.start, speed=scenario.robot_speed, radius=scenario.robot_radius)
    entry = find_entry(tree, robot.position, [], world, params)
    if entry is None:
        raise ConfigurationError(f"start {scenario.start} cannot be connected to the planning tree")
    path = path_search(tree, robot, entry)
    if obstacles is None:
        obstacles = initial_obstacles(scenario, obstacle_rng)

    events = []
    trajectory = [_log_line(0.0, robot, obstacles)] if log_trajectory else []
    ticks = 0
    reason = TICK_BUDGET
    while ticks < scenario.max_ticks:
        ticks += 1
        t = ticks * dt
        for ob in obstacles:
            obstacle_step(ob, dt, scenario.bounds, obstacle_rng)
        cpr = compute_cpr(robot, obstacles, params)
        if not replanning or validate_path(path, robot, cpr, params):
            robot_step(robot, path, dt)
        else:
            try:
                new_path, event = _replan(tree, partition, robot, path, cpr, world, scenario, plan_rng, t,
                                      enforce_budget)
            except ReplanFailure:
                reason = REPLAN_TIMEOUT
                break
            events.append(event)
            if enforce_budget and event.duration_ms > dt * 1000.0:
                reason = REPLAN_TIMEOUT
                break
            if new_path is not None:
                path = new_path
                if not hold_on_replan:
                    robot_step(robot, path, dt)
        if log_trajectory:
            trajectory.append(_log_line(t, robot, obstacles))
        if collision_check(robot, obstacles):
            reason = COLLISION
            break
        if robot.position == scenario.goal:
            reason = NONE
            break
    return TrialResult(
        success=reason == NONE,
        failure_reason=reason,
        travel_time=ticks * dt,
        replan_events=events,
        seed=seed,
        ticks=ticks,
        trajectory=trajectory,
    )


def _replan(tree, partition, robot, path, cpr, world, scenario, rng, t, enforce_budget):
    params = scenario.params
    t0 = time.perf_counter()
    remaining = path.node_ids[robot.path_cursor - 1:] if robot.path_cursor > 0 else path.node_ids
    pruned_on_path = prune(tree, partition, cpr, remaining)
    n_pruned = len(tree.pruned)
    k = partition.K
    lsr_center = None
    if pruned_on_path:
        lsr_center = tree.pos[min(pruned_on_path, key=lambda n: (math.dist(tree.pos[n], robot.position), n))]
    try:
        res = repair(
            tree, partition, robot, cpr, world, params, rng, scenario.goal,
            lsr_center=lsr_center,
            deadline=t0 + scenario.tick if enforce_budget else None,
            max_samples=None if enforce_budget else MAX_FALLBACK_SAMPLES,
        )
    except GoalBlocked:
        # nothing to repair toward: keep the stale path, hold, and retry next tick
        elapsed = (time.perf_counter() - t0) * 1000.0
        restore(tree, partition, world, params)
        event = ReplanEvent(tick_time=t, duration_ms=elapsed, cpr_spheres=len(cpr), pruned=n_pruned,
                            subtrees=k, blocked=True)
        return None, event
    seeds = sorted({s for s in res.seeds if tree.active[s] and tree.subtree[s] == 0})
    if seeds:
        rewire_cascade(tree, seeds, params.neighbor_radius, forbidden=cpr, obstacles=world.static_obstacles)
    entry = find_entry(tree, robot.position, cpr, world, params)
    new_path = path_search(tree, robot, entry)
    elapsed = (time.perf_counter() - t0) * 1000.0
    restore(tree, partition, world, params)
    robot.path_cursor = 1
    event = ReplanEvent(
        tick_time=t,
        duration_ms=elapsed,
        cpr_spheres=len(cpr),
        pruned=n_pruned,
        subtrees=k,
        passes=res.passes,
        reconnections=res.reconnections,
        samples=res.samples,
    )
    return new_path, event
