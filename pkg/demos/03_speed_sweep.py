"""
Success rate against obstacle speed
===================================

A reduced version of the first 2D case study: 20 trials per speed instead of
100. Prints the aggregate table and writes per-trial CSVs.
"""

import sys
import tempfile

from morphplan import case_scenarios, emit_report, run_batch

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
summaries = []
print("%-12s %8s %14s %16s  failures" % ("setting", "success", "replan ms (med)", "travel s (med)"))
for sc in case_scenarios("2d-1"):
    s = run_batch(sc, trials, base_seed=0)
    summaries.append(s)
    fails = {k: v for k, v in s.failure_breakdown.items() if k != "none" and v}
    print("%-12s %8.2f %14.2f %16.1f  %s" % (s.label, s.success_rate, s.median_replan_ms,
                                             s.median_travel_time_s, fails or "-"))

out = tempfile.mkdtemp(prefix="speed_sweep_")
emit_report(summaries, "csv", out)
print("reports in", out)
