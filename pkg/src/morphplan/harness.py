"""Monte Carlo batches over scenarios, metrics aggregation and report files."""

from __future__ import annotations

import csv
import json
import os
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FsPath

from .scenario import Scenario, case_scenarios, scenario_to_dict
from .sim import COLLISION, NONE, REPLAN_TIMEOUT, TICK_BUDGET, TrialResult, run_trial

FAILURE_REASONS = (NONE, COLLISION, REPLAN_TIMEOUT, TICK_BUDGET)

TRIAL_COLUMNS = ("trial_id", "seed", "success", "failure_reason", "travel_time_s", "num_replans",
                 "avg_replan_ms", "max_replan_ms")
SUMMARY_COLUMNS = ("label", "trials", "successes", "success_rate",
                   "avg_replan_ms_median", "avg_replan_ms_q1", "avg_replan_ms_q3",
                   "travel_time_s_median", "travel_time_s_q1", "travel_time_s_q3",
                   "failures_collision", "failures_replan_timeout", "failures_tick_budget_config")


def quartiles(values) -> tuple:
    """(q1, median, q3) with linear interpolation; NaNs for an empty list."""
    vals = sorted(values)
    if not vals:
        nan = float("nan")
        return nan, nan, nan
    if len(vals) == 1:
        return vals[0], vals[0], vals[0]
    q1, q2, q3 = statistics.quantiles(vals, n=4, method="inclusive")
    return q1, q2, q3


@dataclass
class MetricsSummary:
    label: str
    trials: int
    success_rate: float
    avg_replan_ms: list
    travel_time_s: list
    failure_breakdown: dict
    results: list = field(default_factory=list, repr=False)
    # trial ids aligned with ``results``
    trial_ids: list = field(default_factory=list, repr=False)

    @property
    def successes(self) -> int:
        return self.failure_breakdown.get(NONE, 0)

    @property
    def replan_quartiles(self) -> tuple:
        return quartiles(self.avg_replan_ms)

    @property
    def travel_quartiles(self) -> tuple:
        return quartiles(self.travel_time_s)

    @property
    def median_replan_ms(self) -> float:
        return self.replan_quartiles[1]

    @property
    def median_travel_time_s(self) -> float:
        return self.travel_quartiles[1]

    def to_dict(self) -> dict:
        rq1, rq2, rq3 = self.replan_quartiles
        tq1, tq2, tq3 = self.travel_quartiles
        return {
            "label": self.label,
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "avg_replan_ms": {"median": rq2, "q1": rq1, "q3": rq3, "values": list(self.avg_replan_ms)},
            "travel_time_s": {"median": tq2, "q1": tq1, "q3": tq3, "values": list(self.travel_time_s)},
            "failure_breakdown": dict(self.failure_breakdown),
        }

    def summary_row(self) -> dict:
        rq1, rq2, rq3 = self.replan_quartiles
        tq1, tq2, tq3 = self.travel_quartiles
        fb = self.failure_breakdown
        return {
            "label": self.label, "trials": self.trials, "successes": self.successes,
            "success_rate": self.success_rate,
            "avg_replan_ms_median": rq2, "avg_replan_ms_q1": rq1, "avg_replan_ms_q3": rq3,
            "travel_time_s_median": tq2, "travel_time_s_q1": tq1, "travel_time_s_q3": tq3,
            "failures_collision": fb.get(COLLISION, 0),
            "failures_replan_timeout": fb.get(REPLAN_TIMEOUT, 0),
            "failures_tick_budget_config": fb.get(TICK_BUDGET, 0),
        }


def summarize(label: str, results: list, trial_ids=None) -> MetricsSummary:
    """Aggregate trial results. Travel times cover successful trials only; the
    replanning statistic is the per-trial mean over trials that replanned."""
    ids = list(trial_ids) if trial_ids is not None else list(range(len(results)))
    breakdown = {reason: 0 for reason in FAILURE_REASONS}
    breakdown.update(Counter(r.failure_reason for r in results))
    n = len(results)
    return MetricsSummary(
        label=label,
        trials=n,
        success_rate=(breakdown[NONE] / n) if n else 0.0,
        avg_replan_ms=[statistics.fmean(r.replan_ms) for r in results if r.replan_events],
        travel_time_s=[r.travel_time for r in results if r.success],
        failure_breakdown=breakdown,
        results=list(results),
        trial_ids=ids,
    )


def _run_one(args) -> TrialResult:
    scenario, seed, enforce_budget, log_trajectory = args
    return run_trial(scenario, seed, enforce_budget=enforce_budget, log_trajectory=log_trajectory)


def run_batch(scenario: Scenario, trials: int, base_seed: int = 0, workers: int = 1,
              enforce_budget: bool = True, log_trajectories: bool = False, label=None) -> MetricsSummary:
    """Run ``trials`` trials with seeds ``base_seed .. base_seed + trials - 1``.

    Trial ``i`` always receives seed ``base_seed + i`` regardless of which
    worker runs it, so the summary does not depend on ``workers`` when the
    wall-clock budget is off.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(scenario, base_seed + i, enforce_budget, log_trajectories) for i in range(trials)]
    if workers == 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves submission order, i.e. trial index order
            results = list(pool.map(_run_one, jobs, chunksize=max(1, trials // (4 * workers))))
    return summarize(label or scenario.label, results, range(trials))


def run_case_study(case: str, trials: int, base_seed: int = 0, workers: int = 1,
                   enforce_budget: bool = True) -> list:
    """One summary per setting of the case's sweep, in sweep order."""
    return [run_batch(sc, trials, base_seed, workers, enforce_budget) for sc in case_scenarios(case)]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def trial_rows(summary: MetricsSummary) -> list:
    rows = []
    for tid, r in zip(summary.trial_ids, summary.results):
        ms = r.replan_ms
        rows.append({
            "trial_id": tid,
            "seed": r.seed,
            "success": r.success,
            "failure_reason": r.failure_reason,
            "travel_time_s": r.travel_time,
            "num_replans": r.num_replans,
            "avg_replan_ms": statistics.fmean(ms) if ms else float("nan"),
            "max_replan_ms": max(ms) if ms else float("nan"),
        })
    return rows


def _write_csv(path: FsPath, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row[k]) for k in columns})


def _emit_one(summary: MetricsSummary, fmt: str, out: FsPath, scenario=None):
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "trials.csv", TRIAL_COLUMNS, trial_rows(summary))
    if fmt == "csv":
        _write_csv(out / "summary.csv", SUMMARY_COLUMNS, [summary.summary_row()])
    else:
        doc = summary.to_dict()
        if scenario is not None:
            doc["scenario"] = scenario_to_dict(scenario)
        with open(out / "summary.json", "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    logs = [(tid, r.trajectory) for tid, r in zip(summary.trial_ids, summary.results) if r.trajectory]
    if logs:
        tdir = out / "trajectories"
        tdir.mkdir(exist_ok=True)
        for tid, lines in logs:
            with open(tdir / f"trial_{tid}.log", "w") as fh:
                fh.write("\n".join(lines))
                fh.write("\n")


def emit_report(summaries, fmt: str, destination, scenarios=None):
    """Write trials.csv and summary.{csv,json} under ``destination``.

    A single summary is written directly into ``destination``; several go into
    one subdirectory per summary label. Trajectory logs, when recorded, land in
    ``trajectories/trial_<id>.log``.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(summaries, MetricsSummary):
        summaries = [summaries]
    scenarios = list(scenarios) if scenarios is not None else [None] * len(summaries)
    dest = FsPath(destination)
    try:
        if len(summaries) == 1:
            _emit_one(summaries[0], fmt, dest, scenarios[0])
        else:
            for s, sc in zip(summaries, scenarios):
                _emit_one(s, fmt, dest / s.label, sc)
    except OSError as exc:
        where = exc.filename or os.fspath(dest)
        raise OSError(exc.errno, f"cannot write report to {where}: {exc.strerror}", where) from exc


def read_trials_csv(path) -> list:
    """Parse a trials.csv back into typed dicts."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "trial_id": int(row["trial_id"]),
                "seed": int(row["seed"]),
                "success": row["success"] == "true",
                "failure_reason": row["failure_reason"],
                "travel_time_s": float(row["travel_time_s"]),
                "num_replans": int(row["num_replans"]),
                "avg_replan_ms": float(row["avg_replan_ms"]),
                "max_replan_ms": float(row["max_replan_ms"]),
            })
    return out
