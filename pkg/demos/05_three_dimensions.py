"""
Flying in 3D
============

The same planner in a 32 m cube with 100 obstacles flying between random
waypoints. The initial tree has 20000 iterations, so building it dominates.
"""

import time

from morphplan import preset, run_trial

sc = preset(3, 100, 3)
for seed in range(3):
    t0 = time.perf_counter()
    res = run_trial(sc, seed)
    ms = res.replan_ms
    print("seed %d: %-14s travel %.1f s, %3d replans, mean %.2f ms  (wall %.1f s)" % (
        seed, res.failure_reason, res.travel_time, res.num_replans,
        sum(ms) / len(ms) if ms else 0.0, time.perf_counter() - t0))
