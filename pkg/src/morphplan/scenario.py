"""Scenario definition, YAML configuration parsing and the four case-study presets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import yaml

from .geometry import Bounds, Sphere, as_point
from .replanner import Params
from .tree import ConfigurationError

ITERATIONS_BY_DIM = {2: 2500, 3: 20000}


@dataclass(frozen=True)
class Scenario:
    dimension: int
    bounds: Bounds
    start: tuple
    goal: tuple
    static_obstacles: tuple = ()
    num_obstacles: int = 15
    obstacle_speed: float = 1.0
    obstacle_radius: float = 0.5
    robot_speed: float = 4.0
    robot_radius: float = 0.5
    params: Params = field(default_factory=Params)
    tick: float = 0.1
    # safety net for trials that neither succeed nor fail (300 s of simulated time)
    max_ticks: int = 3000

    def __post_init__(self):
        object.__setattr__(self, "start", as_point(self.start))
        object.__setattr__(self, "goal", as_point(self.goal))
        object.__setattr__(self, "static_obstacles", tuple(self.static_obstacles))
        validate_scenario(self)

    @property
    def label(self) -> str:
        return f"{self.dimension}d_n{self.num_obstacles}_v{self.obstacle_speed:g}"


def validate_scenario(sc: Scenario):
    if sc.dimension not in (2, 3):
        raise ConfigurationError(f"dimension must be 2 or 3, got {sc.dimension}")
    for name, p in (("start", sc.start), ("goal", sc.goal), ("bounds.min", sc.bounds.low)):
        if len(p) != sc.dimension:
            raise ConfigurationError(f"{name} has {len(p)} coordinates, expected {sc.dimension}")
    for name, p in (("start", sc.start), ("goal", sc.goal)):
        if not sc.bounds.contains(p):
            raise ConfigurationError(f"{name} {p} lies outside the workspace bounds")
        for s in sc.static_obstacles:
            if len(s.center) != sc.dimension:
                raise ConfigurationError(f"static obstacle {s} has the wrong dimension")
            if math.dist(p, s.center) <= s.radius + sc.robot_radius:
                raise ConfigurationError(f"{name} {p} lies inside static obstacle {s}")
    if sc.num_obstacles < 0:
        raise ConfigurationError("num_obstacles must be >= 0")
    for name in ("obstacle_speed", "obstacle_radius", "robot_speed", "robot_radius"):
        if getattr(sc, name) < 0:
            raise ConfigurationError(f"{name} must be >= 0")
    if not sc.tick > 0 or sc.max_ticks < 1:
        raise ConfigurationError("tick and max_ticks must be positive")


def default_params(dimension: int, **overrides) -> Params:
    base = {"init_iterations": ITERATIONS_BY_DIM.get(dimension, 2500)}
    base.update(overrides)
    return Params(**base)


def preset(dimension: int, num_obstacles: int, obstacle_speed: float) -> Scenario:
    """The 32 m workspace used by all case studies."""
    lo, hi = 2.0, 30.0
    return Scenario(
        dimension=dimension,
        bounds=Bounds((0.0,) * dimension, (32.0,) * dimension),
        start=(lo,) * dimension,
        goal=(hi,) * dimension,
        num_obstacles=num_obstacles,
        obstacle_speed=float(obstacle_speed),
        params=default_params(dimension),
    )


CASE_STUDIES = {
    "2d-1": [(2, 15, v) for v in (1, 2, 3, 4)],
    "2d-2": [(2, n, 4) for n in (5, 10, 15, 20)],
    "3d-1": [(3, 100, v) for v in (1, 2, 3, 4)],
    "3d-2": [(3, n, 4) for n in (25, 50, 75, 100)],
}


def case_scenarios(case: str) -> list:
    key = case.lower()
    if key not in CASE_STUDIES:
        raise ConfigurationError(f"unknown case study {case!r}; choose from {sorted(CASE_STUDIES)}")
    return [preset(*args) for args in CASE_STUDIES[key]]


_TOP_KEYS = {"dimension", "bounds", "start", "goal", "static_obstacles", "obstacles", "robot", "params",
             "tick", "max_ticks"}
_OBSTACLE_KEYS = {"count", "speed", "radius"}
_ROBOT_KEYS = {"speed", "radius"}
_PARAM_KEYS = set(Params.__dataclass_fields__)


def _check_keys(section: str, data: dict, allowed: set):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{section} must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {section}: {sorted(unknown)}")


def parse_config(source: str) -> Scenario:
    """Build a Scenario from YAML text.

    Example::

        dimension: 2
        bounds: {min: [0, 0], max: [32, 32]}
        start: [2, 2]
        goal: [30, 30]
        static_obstacles: [{center: [16, 16], radius: 2}]
        obstacles: {count: 15, speed: 4, radius: 0.5}
        robot: {speed: 4, radius: 0.5}
        params: {risk_horizon: 0.4, lsr_expansion: 1.5}
        tick: 0.1

    Omitted parameters take the reference values for the chosen dimension.
    """
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from exc
    _check_keys("config", data, _TOP_KEYS)
    for key in ("dimension", "bounds", "start", "goal"):
        if key not in data:
            raise ConfigurationError(f"missing required key {key!r}")
    dim = data["dimension"]
    if dim not in (2, 3):
        raise ConfigurationError(f"dimension must be 2 or 3, got {dim}")
    b = data["bounds"]
    _check_keys("bounds", b, {"min", "max"})
    try:
        bounds = Bounds(b["min"], b["max"])
        statics = []
        for item in data.get("static_obstacles") or []:
            _check_keys("static_obstacles[]", item, {"center", "radius"})
            statics.append(Sphere(item["center"], float(item["radius"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid geometry in configuration: {exc}") from exc
    obs = data.get("obstacles") or {}
    _check_keys("obstacles", obs, _OBSTACLE_KEYS)
    robot = data.get("robot") or {}
    _check_keys("robot", robot, _ROBOT_KEYS)
    params = data.get("params") or {}
    _check_keys("params", params, _PARAM_KEYS)
    try:
        prm = default_params(dim, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid params: {exc}") from exc
    return Scenario(
        dimension=dim,
        bounds=bounds,
        start=data["start"],
        goal=data["goal"],
        static_obstacles=tuple(statics),
        num_obstacles=int(obs.get("count", 15)),
        obstacle_speed=float(obs.get("speed", 1.0)),
        obstacle_radius=float(obs.get("radius", 0.5)),
        robot_speed=float(robot.get("speed", 4.0)),
        robot_radius=float(robot.get("radius", 0.5)),
        params=prm,
        tick=float(data.get("tick", 0.1)),
        max_ticks=int(data.get("max_ticks", 3000)),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "dimension": sc.dimension,
        "bounds": {"min": list(sc.bounds.low), "max": list(sc.bounds.high)},
        "start": list(sc.start),
        "goal": list(sc.goal),
        "static_obstacles": [{"center": list(s.center), "radius": s.radius} for s in sc.static_obstacles],
        "obstacles": {"count": sc.num_obstacles, "speed": sc.obstacle_speed, "radius": sc.obstacle_radius},
        "robot": {"speed": sc.robot_speed, "radius": sc.robot_radius},
        "params": {k: getattr(sc.params, k) for k in Params.__dataclass_fields__},
        "tick": sc.tick,
        "max_ticks": sc.max_ticks,
    }


def with_overrides(sc: Scenario, **kw) -> Scenario:
    return replace(sc, **kw)
