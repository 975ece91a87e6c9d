"""
Anatomy of a replanning event
=============================

Walk through prune -> repair -> rewire -> path search -> restore by hand on a
2D tree, printing the state of the subtree partition after each step.
"""

import math

import numpy as np

from morphplan import (
    Bounds, Obstacle, Params, RobotState, StaticWorld, SubtreePartition, build_initial_tree, compute_cpr,
    path_search, prune, repair, restore, rewire_cascade, validate_path,
)
from morphplan.replanner import find_entry

params = Params()
world = StaticWorld(Bounds((0, 0), (32, 32)))
rng = np.random.default_rng(0)
tree = build_initial_tree(world, (30, 30), 2500, params.steer_range, params.neighbor_radius, rng)
print("tree: %d nodes, goal root %d" % (len(tree), tree.goal_root))

robot = RobotState(position=(6.0, 6.0), speed=4.0, radius=0.5)
entry = find_entry(tree, robot.position, [], world, params)
path = path_search(tree, robot, entry)
print("initial path: %d waypoints, %.2f m" % (len(path.waypoints), path.length))

# one fast obstacle on the path a few meters ahead, a second one far off to the side;
# only obstacles whose hazard zone touches the robot's reaction zone enter the CPR
ahead = path.waypoints[6]
obstacles = [Obstacle(0, ahead, 0.5, 4.0), Obstacle(1, (ahead[0] + 8.0, ahead[1] - 3.0), 0.5, 4.0)]
cpr = compute_cpr(robot, obstacles, params)
print("CPR spheres:", [(tuple(round(c, 2) for c in s.center), s.radius) for s in cpr])
print("path still valid?", validate_path(path, robot, cpr, params))

# 1. prune: nodes in the CPR go, their children become new subtree roots
partition = SubtreePartition.single(tree)
hit = prune(tree, partition, cpr, path.node_ids)
print("pruned %d nodes (%d on the path), K = %d subtrees" % (len(tree.pruned), len(hit), partition.K))

# 2. repair: search hot-nodes in a growing region around the first pruned path node
center = tree.pos[min(hit, key=lambda n: math.dist(tree.pos[n], robot.position))]
res = repair(tree, partition, robot, cpr, world, params, rng, (30, 30), lsr_center=center)
print("repair: %d passes, %d merges, LSR radius %.3f m, K = %d" % (
    res.passes, res.reconnections, res.final_radius, partition.K))

# 3. rewire around the merged nodes, then read off the new path
rewired = rewire_cascade(tree, sorted(set(res.seeds)), params.neighbor_radius, forbidden=cpr)
entry = find_entry(tree, robot.position, cpr, world, params)
new_path = path_search(tree, robot, entry)
print("cascade rewired %d nodes; new path %.2f m, valid? %s" % (
    rewired, new_path.length, validate_path(new_path, robot, cpr, params)))

# 4. restore: everything folds back into one tree for the next event
unreachable = restore(tree, partition, world, params)
print("restored: K = %d, pruned left %d, unreachable %s" % (partition.K, len(tree.pruned), unreachable))
