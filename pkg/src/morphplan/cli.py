"""Command-line entry point: ``morphplan run`` and ``morphplan case-study``."""

from __future__ import annotations

import argparse
import sys

from .harness import emit_report, run_batch
from .scenario import CASE_STUDIES, case_scenarios, parse_config
from .tree import ConfigurationError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morphplan", description="Dynamic-obstacle replanning trials.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of trials for one scenario")
    run.add_argument("--config", required=True, help="YAML scenario file")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, default=0, help="seed of trial 0; trial i uses seed+i")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out-dir", default="results")
    run.add_argument("--format", choices=("csv", "json"), default="csv", help="summary file format")
    run.add_argument("--log-trajectories", action="store_true",
                     help="write trajectories/trial_<id>.log with per-tick positions")
    run.add_argument("--no-time-budget", action="store_true",
                     help="do not fail trials whose replanning exceeds the tick")

    cs = sub.add_parser("case-study", help="run one of the four preset sweeps")
    cs.add_argument("--case", required=True, choices=sorted(CASE_STUDIES))
    cs.add_argument("--trials", type=int, default=100)
    cs.add_argument("--seed", type=int, default=0)
    cs.add_argument("--out-dir", default="results")
    return ap


def _print_summary(s):
    fb = ", ".join(f"{k}={v}" for k, v in s.failure_breakdown.items() if k != "none" and v)
    print(f"{s.label}: success {s.success_rate:.2f} ({s.successes}/{s.trials}), "
          f"median replan {s.median_replan_ms:.2f} ms, median travel {s.median_travel_time_s:.1f} s"
          + (f", failures: {fb}" if fb else ""))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.trials < 1:
            raise ConfigurationError("--trials must be >= 1")
        if args.command == "run":
            if args.workers < 1:
                raise ConfigurationError("--workers must be >= 1")
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigurationError(f"cannot read config {args.config}: {exc.strerror}") from exc
            scenario = parse_config(text)
            summary = run_batch(scenario, args.trials, args.seed, args.workers,
                                enforce_budget=not args.no_time_budget,
                                log_trajectories=args.log_trajectories)
            emit_report([summary], args.format, args.out_dir, [scenario])
            _print_summary(summary)
        else:
            scenarios = case_scenarios(args.case)
            summaries = []
            for sc in scenarios:
                s = run_batch(sc, args.trials, args.seed)
                _print_summary(s)
                summaries.append(s)
            emit_report(summaries, "csv", args.out_dir, scenarios)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
