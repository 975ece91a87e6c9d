"""Real-time RRT* replanning among moving spherical obstacles.

The planner keeps one goal-rooted tree alive for a whole run. When obstacles
threaten the current path it prunes the risky nodes, stitches the broken
pieces back together around the robot, and restores everything once the path
is safe again.
"""

from .geometry import Bounds, Sphere, distance, sample_uniform, segment_intersects_sphere, steer
from .harness import MetricsSummary, emit_report, run_batch, run_case_study, summarize
from .replanner import (
    GoalBlocked,
    HotNodeEntry,
    Params,
    Path,
    ReplanFailure,
    SubtreePartition,
    compute_cpr,
    compute_lrz,
    compute_ohz,
    find_hot_nodes,
    path_search,
    prune,
    reconnect_step,
    repair,
    restore,
    utility,
    validate_path,
)
from .scenario import CASE_STUDIES, Scenario, case_scenarios, parse_config, preset
from .sim import Obstacle, ReplanEvent, RobotState, TrialResult, collision_check, obstacle_step, robot_step, run_trial
from .tree import (
    ConfigurationError,
    StaticWorld,
    Tree,
    TreeStateError,
    build_initial_tree,
    near,
    nearest,
    rewire_cascade,
    set_subtree_index,
)

__version__ = "0.1.0"
