"""
A custom world from YAML
========================

Scenarios can be written as YAML: here a 2D room with two static pillars and
20 slower obstacles. Anything left out takes the reference defaults.
"""

from morphplan import parse_config, run_batch

config = """
dimension: 2
bounds: {min: [0, 0], max: [32, 32]}
start: [2, 2]
goal: [30, 30]
static_obstacles:
  - {center: [12, 12], radius: 3}
  - {center: [20, 22], radius: 2.5}
obstacles: {count: 20, speed: 2, radius: 0.5}
params: {lsr_expansion: 1.5}
"""

sc = parse_config(config)
print(sc.label, "| static:", [(s.center, s.radius) for s in sc.static_obstacles])
print(sc.params)

s = run_batch(sc, trials=10, base_seed=0)
print("success %.2f, median travel %.1f s, median replan %.2f ms" % (
    s.success_rate, s.median_travel_time_s, s.median_replan_ms))
