import csv
import json
import subprocess
import sys

from morphplan.cli import main

CONFIG = """
dimension: 2
bounds: {min: [0, 0], max: [32, 32]}
start: [2, 2]
goal: [30, 30]
obstacles: {count: 10, speed: 2}
"""


def test_run_writes_reports(tmp_path):
    cfg = tmp_path / "sc.yaml"
    cfg.write_text(CONFIG)
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg), "--trials", "3", "--seed", "5", "--out-dir", str(out),
                 "--format", "json", "--log-trajectories", "--no-time-budget"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "trials.csv")))
    assert [r["seed"] for r in rows] == ["5", "6", "7"]
    doc = json.loads((out / "summary.json").read_text())
    assert doc["trials"] == 3 and doc["scenario"]["obstacles"]["count"] == 10
    assert sorted(p.name for p in (out / "trajectories").iterdir()) == ["trial_0.log", "trial_1.log", "trial_2.log"]


def test_run_missing_config_fails(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) != 0


def test_run_bad_config_fails(tmp_path):
    cfg = tmp_path / "sc.yaml"
    cfg.write_text(CONFIG.replace("dimension: 2", "dimension: 5"))
    assert main(["run", "--config", str(cfg), "--trials", "1", "--out-dir", str(tmp_path)]) == 2


def test_run_unwritable_out_dir(tmp_path):
    cfg = tmp_path / "sc.yaml"
    cfg.write_text(CONFIG)
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", "--config", str(cfg), "--trials", "1", "--out-dir", str(blocker / "x")]) == 3


def test_case_study_subcommand(tmp_path):
    code = main(["case-study", "--case", "2d-2", "--trials", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["2d_n10_v4", "2d_n15_v4", "2d_n20_v4", "2d_n5_v4"]


def test_module_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "morphplan", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "case-study" in out.stdout
