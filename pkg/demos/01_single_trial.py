"""
One trial, start to finish
==========================

Build the 2D reference scenario, run a single trial with 15 obstacles moving at
4 m/s and look at what the replanner did along the way.
"""

import statistics

from morphplan import preset, run_trial

sc = preset(2, 15, 4)
print(sc.label, "| start", sc.start, "goal", sc.goal, "| tree iterations", sc.params.init_iterations)

# enforce_budget=False makes the run a pure function of the seed
res = run_trial(sc, seed=8, enforce_budget=False)
print("success:", res.success, "| reason:", res.failure_reason, "| travel time: %.1f s" % res.travel_time)

# every replanning event records the tick, its cost and what the tree went through
print("%d replans, mean %.2f ms, worst %.2f ms" % (
    res.num_replans, statistics.fmean(res.replan_ms), max(res.replan_ms)))
for ev in res.replan_events[:8]:
    print("  t=%5.1f  %5.2f ms  cpr=%d pruned=%3d K=%2d passes=%d merges=%2d samples=%d%s" % (
        ev.tick_time, ev.duration_ms, ev.cpr_spheres, ev.pruned, ev.subtrees, ev.passes,
        ev.reconnections, ev.samples, "  (goal blocked, holding)" if ev.blocked else ""))
