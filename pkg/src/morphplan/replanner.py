"""Local replanning: hazard zones, pruning into disjoint subtrees, hot-node repair.

A replanning event runs ``prune -> repair -> rewire_cascade -> path_search``
and then ``restore`` folds everything back into one goal-rooted tree.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .geometry import (
    Point,
    Sphere,
    as_point,
    clip_segment_to_sphere,
    sample_ball,
    sample_uniform,
    segment_clear,
    segment_intersects_sphere,
)
from .tree import StaticWorld, Tree, TreeStateError, set_subtree_index

if TYPE_CHECKING:
    from .sim import Obstacle, RobotState

UTILITY_FLOOR = 1e-9
# share of fallback samples drawn from the connection ball around the robot
FALLBACK_ROBOT_BIAS = 0.5


@dataclass(frozen=True)
class Params:
    """Replanner tuning. Defaults are the 2D column of the reference parameter table."""

    risk_horizon: float = 0.4  # T_OH, s
    reaction_horizon: float = 1.0  # T_RH, s
    lsr_initial_radius: float = 1.0  # m
    lsr_expansion: float = 1.5
    lsr_max_radius: float = 10.0  # m
    neighbor_radius: float = 1.7  # m
    steer_range: float = 1.0  # m
    init_iterations: int = 2500

    def __post_init__(self):
        for name in ("risk_horizon", "reaction_horizon", "lsr_initial_radius", "lsr_max_radius",
                     "neighbor_radius", "steer_range", "init_iterations"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.lsr_expansion > 1.0:
            raise ValueError("lsr_expansion must exceed 1")
        if not self.lsr_initial_radius < self.lsr_max_radius:
            raise ValueError("lsr_initial_radius must be below lsr_max_radius")


@dataclass
class SubtreePartition:
    roots: dict
    next_index: int = 1

    @classmethod
    def single(cls, tree: Tree) -> "SubtreePartition":
        return cls(roots={0: tree.goal_root}, next_index=1)

    @property
    def K(self) -> int:
        return len(self.roots)

    def new_index(self) -> int:
        i = self.next_index
        self.next_index += 1
        return i


@dataclass(frozen=True)
class HotNodeEntry:
    node: int
    best_neighbor: int
    utility: float = math.nan


@dataclass
class Path:
    waypoints: list
    node_ids: list

    @property
    def length(self) -> float:
        w = self.waypoints
        return sum(math.dist(w[i], w[i + 1]) for i in range(len(w) - 1))


@dataclass
class RepairResult:
    seeds: list
    entry_node: int
    passes: int = 0
    reconnections: int = 0
    samples: int = 0
    final_radius: float = 0.0


class ReplanFailure(RuntimeError):
    """Repair could not reconnect the robot within its time or sample budget."""


class GoalBlocked(RuntimeError):
    """The goal itself lies in the CPR, so no safe path exists at this instant."""


# --- hazard zones -------------------------------------------------------------


def compute_lrz(robot: "RobotState", params: Params) -> Sphere:
    return Sphere(robot.position, robot.speed * params.reaction_horizon)


def compute_ohz(obstacle: "Obstacle", robot_radius: float, params: Params) -> Sphere:
    return Sphere(obstacle.center, obstacle.speed * params.risk_horizon + obstacle.radius + robot_radius)


def compute_cpr(robot: "RobotState", obstacles: Sequence["Obstacle"], params: Params) -> list:
    """OHZs of the obstacles whose hazard zone touches the robot's reaction zone."""
    lrz = compute_lrz(robot, params)
    out = []
    for ob in obstacles:
        ohz = compute_ohz(ob, robot.radius, params)
        if math.dist(ohz.center, lrz.center) <= ohz.radius + lrz.radius:
            out.append(ohz)
    return out


def validate_path(path: Path, robot: "RobotState", cpr: Sequence[Sphere], params: Params) -> bool:
    """Check the part of the remaining path inside the reaction zone against the CPR."""
    if not cpr:
        return True
    x = robot.position
    if any(s.contains(x) for s in cpr):
        return False
    lrz = compute_lrz(robot, params)
    pts = [x] + list(path.waypoints[robot.path_cursor:])
    for a, b in zip(pts, pts[1:]):
        clipped = clip_segment_to_sphere(a, b, lrz)
        if clipped is None:
            continue
        if not segment_clear(clipped[0], clipped[1], cpr):
            return False
    return True


# --- pruning ------------------------------------------------------------------


def prune(tree: Tree, partition: SubtreePartition, cpr: Sequence[Sphere], path_nodes=()) -> list:
    """Prune nodes inside the CPR and edges crossing it.

    Orphaned children and the child ends of cut edges become roots of fresh
    subtrees; nodes outside the goal subtree lose their cost-to-go. Returns the
    ids from ``path_nodes`` that were pruned. The goal root is never pruned.
    """
    if not cpr:
        return []
    doomed = set()
    for s in cpr:
        doomed.update(tree.near(s.center, s.radius))
    doomed.discard(tree.goal_root)
    doomed = sorted(doomed)
    doomed_set = set(doomed)

    for n in doomed:
        tree.restore_parent[n] = tree.parent[n]
    new_roots = set()
    for n in doomed:
        tree.detach(n)
        for c in list(tree.children[n]):
            tree.detach(c)
            if c not in doomed_set:
                tree.restore_parent[c] = n
                new_roots.add(c)
        tree.deactivate(n)
        tree.cost[n] = None
        tree.subtree[n] = -1
    for idx, root in list(partition.roots.items()):
        if root in doomed_set:
            del partition.roots[idx]

    pos, parent = tree.pos, tree.parent
    for s in cpr:
        for c in tree.near(s.center, s.radius + tree.max_edge):
            p = parent[c]
            if p is not None and segment_intersects_sphere(pos[c], pos[p], s):
                tree.restore_parent[c] = p
                tree.detach(c)
                new_roots.add(c)

    for root in sorted(new_roots):
        idx = partition.new_index()
        partition.roots[idx] = root
        for n in set_subtree_index(tree, root, idx):
            tree.cost[n] = None
    return [n for n in path_nodes if n is not None and n in doomed_set]


# --- repair -------------------------------------------------------------------


class _EdgeCache:
    """Per-event memo of neighbour lists and edge feasibility.

    Both are invariant while one CPR snapshot is being repaired: the active
    node set only grows (fallback samples) and the blockers are fixed.
    """

    def __init__(self, tree: Tree, world: StaticWorld, cpr: Sequence[Sphere], radius: float):
        self.tree = tree
        self.blockers = list(world.static_obstacles) + list(cpr)
        self.radius = radius
        self._nbrs: dict = {}
        self._ok: dict = {}

    def neighbors(self, n: int) -> list:
        got = self._nbrs.get(n)
        if got is None:
            if self.radius == self.tree.near_radius:
                got = self.tree.neighbors(n)
            else:
                got = self.tree.near(self.tree.pos[n], self.radius)
            got.sort()
            self._nbrs[n] = got
        return got

    def feasible(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        ok = self._ok.get(key)
        if ok is None:
            pos = self.tree.pos
            ok = segment_clear(pos[a], pos[b], self.blockers)
            self._ok[key] = ok
        return ok

    def invalidate_neighbors(self):
        self._nbrs.clear()


def _best_eligible(tree: Tree, n: int, cache: _EdgeCache) -> Optional[int]:
    sub, pos, active = tree.subtree, tree.pos, tree.active
    sn = sub[n]
    pn = pos[n]
    best, best_d = None, math.inf
    for m in cache.neighbors(n):
        if m == n or sub[m] == sn or not active[m]:
            continue
        d = math.dist(pn, pos[m])
        if d < best_d and cache.feasible(n, m):
            best, best_d = m, d
    return best


def find_hot_nodes(tree: Tree, partition: SubtreePartition, lsr: Sphere, cpr: Sequence[Sphere],
                   world: StaticWorld, params: Params, cache: Optional[_EdgeCache] = None,
                   candidates=None) -> list:
    """Active nodes inside ``lsr`` with at least one eligible neighbour.

    A neighbour is eligible when it is active, within ``params.neighbor_radius``,
    in another subtree and reachable by a segment that avoids the static
    obstacles and every CPR sphere. Each entry records the nearest eligible
    neighbour (ties to the smaller id). ``candidates`` restricts the scan.
    """
    if not lsr.radius > 0:
        raise ValueError("LSR radius must be positive")
    if cache is None:
        cache = _EdgeCache(tree, world, cpr, params.neighbor_radius)
    nodes = sorted(tree.near(lsr.center, lsr.radius)) if candidates is None else candidates
    out = []
    for n in nodes:
        m = _best_eligible(tree, n, cache)
        if m is not None:
            out.append(HotNodeEntry(n, m))
    return out


def utility(entry: HotNodeEntry, robot: "RobotState", goal, tree: Tree) -> float:
    """Inverse of the estimated robot -> hot-node -> neighbour -> goal distance."""
    x_r = robot.position
    x_n = tree.pos[entry.node]
    m = entry.best_neighbor
    x_m = tree.pos[m]
    if tree.subtree[m] == 0:
        tail = tree.cost[m]
    else:
        tail = math.dist(x_m, goal)
    den = math.dist(x_r, x_n) + math.dist(x_n, x_m) + tail
    return 1.0 / max(den, UTILITY_FLOOR)


def _reroot(tree: Tree, n: int):
    """Make ``n`` the root of its component by reversing its parent chain."""
    chain = tree.chain_to_root(n)
    if len(chain) == 1:
        return
    tree.detach(n)
    for k in range(len(chain) - 1, 0, -1):
        tree.set_parent(chain[k], chain[k - 1])


def _absorb(tree: Tree, partition: SubtreePartition, child: int, parent: int) -> bool:
    """Hang ``child``'s whole subtree below ``parent``. True if it joined subtree 0."""
    absorbed = tree.subtree[child]
    partition.roots.pop(absorbed, None)
    _reroot(tree, child)
    tree.set_parent(child, parent)
    target = tree.subtree[parent]
    set_subtree_index(tree, child, target)
    if target == 0:
        tree.cost[child] = tree.cost[parent] + tree.edge_length(child, parent)
        tree.propagate_costs(child)
        return True
    return False


def reconnect_step(tree: Tree, partition: SubtreePartition, entry: HotNodeEntry) -> Optional[list]:
    """Join the two subtrees of a hot-node pair.

    The endpoint in the goal subtree (if any) becomes the parent and the other
    side is re-rooted at its endpoint. Between two non-goal subtrees the
    hot-node is the parent. Returns the new seed nodes for the rewiring cascade,
    or None when the entry is stale.
    """
    n, m = entry.node, entry.best_neighbor
    sub = tree.subtree
    if not (tree.active[n] and tree.active[m]) or sub[n] == sub[m]:
        return None
    if sub[m] == 0:
        parent, child = m, n
    else:
        parent, child = n, m
    joined = _absorb(tree, partition, child, parent)
    return [child] if joined else []


def _escape_clear(x, q, cpr, inside) -> bool:
    # spheres containing the robot only demand that the segment moves away from their center
    for s in cpr:
        if s in inside:
            c = s.center
            if sum((qi - xi) * (xi - ci) for qi, xi, ci in zip(q, x, c)) < 0.0:
                return False
        elif segment_intersects_sphere(x, q, s):
            return False
    return True


def find_entry(tree: Tree, position, cpr: Sequence[Sphere], world: StaticWorld, params: Params) -> Optional[int]:
    """Best goal-subtree node the robot can connect to, or None.

    Candidates lie within the neighbourhood radius (extended by the penetration
    depth when the robot already sits inside a CPR sphere) and must be joined to
    the robot by a segment clear of static obstacles and CPR. Minimises
    ``|x_R - x_n| + cost_to_go(n)``.
    """
    inside = [s for s in cpr if s.contains(position)]
    radius = params.neighbor_radius
    if inside:
        radius += max(s.radius - math.dist(position, s.center) for s in inside)
    pos, sub, cost = tree.pos, tree.subtree, tree.cost
    scored = []
    for n in tree.near(position, radius):
        if sub[n] != 0:
            continue
        scored.append((math.dist(position, pos[n]) + cost[n], n))
    scored.sort()
    for _, n in scored:
        q = pos[n]
        if world.edge_free(position, q) and _escape_clear(position, q, cpr, inside):
            return n
    return None


def _fallback_sample(tree: Tree, partition: SubtreePartition, cpr, world: StaticWorld,
                     params: Params, rng: np.random.Generator, cache: _EdgeCache, robot_pos=None) -> list:
    if robot_pos is not None and rng.uniform() < FALLBACK_ROBOT_BIAS:
        # the missing link is often right next to the robot
        x = sample_ball(robot_pos, params.neighbor_radius, rng)
        if not world.bounds.contains(x):
            return []
    else:
        x = sample_uniform(world.bounds, rng)
    if not world.point_free(x) or any(s.contains(x) for s in cpr):
        return []
    blockers = cache.blockers
    pos, sub = tree.pos, tree.subtree
    nearest_by_subtree: dict = {}
    for m in tree.near(x, params.neighbor_radius):
        d = math.dist(x, pos[m])
        k = sub[m]
        cur = nearest_by_subtree.get(k)
        if (cur is None or (d, m) < cur) and segment_clear(x, pos[m], blockers):
            nearest_by_subtree[k] = (d, m)
    if not nearest_by_subtree:
        return []
    if 0 in nearest_by_subtree:
        host = 0
    else:
        host = min(nearest_by_subtree, key=lambda k: nearest_by_subtree[k])
    d_host, m_host = nearest_by_subtree.pop(host)
    cost = tree.cost[m_host] + d_host if host == 0 else None
    n = tree.add_node(x, parent=m_host, subtree=host, cost=cost)
    cache.invalidate_neighbors()
    seeds = []
    for k in sorted(nearest_by_subtree):
        _, m = nearest_by_subtree[k]
        if _absorb(tree, partition, m, n):
            seeds.append(m)
    if host == 0:
        # local RRT*-style rewire of the new node's neighbours
        for w in tree.near(x, params.neighbor_radius):
            if sub[w] != 0 or w == n or w == tree.goal_root:
                continue
            c = tree.cost[n] + math.dist(x, pos[w])
            if c < tree.cost[w] and segment_clear(x, pos[w], blockers):
                tree.set_parent(w, n)
                tree.cost[w] = c
                tree.propagate_costs(w)
        seeds.append(n)
    return seeds


def repair(tree: Tree, partition: SubtreePartition, robot: "RobotState", cpr: Sequence[Sphere],
           world: StaticWorld, params: Params, rng: np.random.Generator, goal,
           lsr_center=None, deadline: Optional[float] = None,
           max_samples: Optional[int] = None) -> RepairResult:
    """Reconnect the robot to the goal subtree by merging disjoint subtrees.

    The local search region starts at ``lsr_initial_radius`` and is multiplied
    by ``lsr_expansion`` before every search pass. Within a pass the highest
    utility hot-node (ties to the smaller id) is reconnected and the entries are
    re-evaluated until the goal subtree is reachable or none remain. Once the
    radius reaches ``lsr_max_radius`` uniformly sampled nodes are joined to the
    surrounding subtrees instead.

    ``deadline`` (a ``time.perf_counter`` value) and ``max_samples`` bound the
    otherwise open-ended loop; exceeding either raises ReplanFailure. A goal
    inside the CPR raises GoalBlocked before any work is done.
    """
    x_r = robot.position
    if any(s.contains(goal) for s in cpr):
        raise GoalBlocked(f"goal {tuple(goal)} lies inside the critical pruning region")
    center = as_point(lsr_center) if lsr_center is not None else x_r
    cache = _EdgeCache(tree, world, cpr, params.neighbor_radius)
    result = RepairResult(seeds=[], entry_node=-1, final_radius=params.lsr_initial_radius)
    r_s = params.lsr_initial_radius
    entry = find_entry(tree, x_r, cpr, world, params)
    while entry is None:
        if deadline is not None and time.perf_counter() > deadline:
            raise ReplanFailure("replanning deadline exceeded")
        if r_s < params.lsr_max_radius:
            r_s *= params.lsr_expansion
            result.passes += 1
            hot = find_hot_nodes(tree, partition, Sphere(center, r_s), cpr, world, params, cache)
            while hot:
                ranked = [replace(h, utility=utility(h, robot, goal, tree)) for h in hot]
                best = max(ranked, key=lambda h: (h.utility, -h.node))
                seeds = reconnect_step(tree, partition, best)
                result.reconnections += 1
                result.seeds.extend(seeds)
                entry = find_entry(tree, x_r, cpr, world, params)
                if entry is not None:
                    break
                # merges only ever remove eligibility, so re-check previous hot nodes alone
                hot = find_hot_nodes(tree, partition, Sphere(center, r_s), cpr, world, params, cache,
                                     candidates=[h.node for h in hot])
        else:
            if max_samples is not None and result.samples >= max_samples:
                raise ReplanFailure(f"no connection after {result.samples} fallback samples")
            result.samples += 1
            result.seeds.extend(_fallback_sample(tree, partition, cpr, world, params, rng, cache, x_r))
            entry = find_entry(tree, x_r, cpr, world, params)
    result.final_radius = r_s
    result.entry_node = entry
    return result


# --- path and restoration -----------------------------------------------------


def path_search(tree: Tree, robot: "RobotState", entry_node: int) -> Path:
    if not tree.active[entry_node] or tree.subtree[entry_node] != 0 or tree.cost[entry_node] is None:
        raise TreeStateError(f"entry node {entry_node} is not in the goal subtree")
    chain = tree.chain_to_root(entry_node)
    if chain[-1] != tree.goal_root:
        raise TreeStateError("entry chain does not end at the goal root")
    waypoints = [as_point(robot.position)] + [tree.pos[n] for n in chain]
    return Path(waypoints=waypoints, node_ids=[None] + chain)


def _attach_nearest(tree: Tree, n: int, world: StaticWorld, radius: float, accept) -> bool:
    pos = tree.pos
    p = pos[n]
    limit = 2.0 * world.bounds.diagonal
    while True:
        cands = sorted((math.dist(p, pos[m]), m) for m in tree.near(p, radius) if m != n and accept(m))
        for _, m in cands:
            if world.edge_free(p, pos[m]):
                tree.set_parent(n, m)
                return True
        if radius > limit:
            return False
        radius *= 2.0


def restore(tree: Tree, partition: SubtreePartition, world: StaticWorld, params: Params) -> list:
    """Reactivate pruned nodes and fold every subtree back into the goal subtree.

    Pruned nodes return to their recorded parent when it is active and the edge
    clears the static obstacles, else to the nearest feasible active node.
    Leftover subtree roots go back to their pre-prune parent under the same
    conditions (and when that creates no cycle), else to the nearest
    goal-subtree node. Costs are recomputed for everything that rejoined.
    Returns ids left unreachable.
    """
    pos, sub = tree.pos, tree.subtree
    pending = sorted(
        tree.pruned,
        key=lambda n: (math.dist(pos[n], pos[tree.restore_parent[n]]) if tree.restore_parent[n] is not None
                       else math.inf, n),
    )
    touched = []
    # recorded parents may themselves be pruned, so sweep until no progress
    progress = True
    while pending and progress:
        progress = False
        rest = []
        for n in pending:
            p = tree.restore_parent[n]
            if p is not None and tree.active[p] and world.edge_free(pos[n], pos[p]):
                tree.activate(n)
                tree.set_parent(n, p)
                sub[n] = -1
                touched.append(n)
                progress = True
            else:
                rest.append(n)
        pending = rest
    unreachable = []
    for n in pending:
        if _attach_nearest(tree, n, world, params.neighbor_radius, lambda m: True):
            tree.activate(n)
            sub[n] = -1
            touched.append(n)
        else:
            unreachable.append(n)
    for idx, root in sorted(partition.roots.items()):
        if idx == 0:
            continue
        p = tree.restore_parent[root]
        if (p is not None and tree.active[p] and world.edge_free(pos[root], pos[p])
                and root not in tree.chain_to_root(p)):
            tree.set_parent(root, p)
            touched.append(root)
        elif _attach_nearest(tree, root, world, params.neighbor_radius, lambda m: sub[m] == 0):
            touched.append(root)
        else:
            unreachable.append(root)
    for n in touched:
        # climb to the top-most node that is not yet part of the goal subtree
        x = n
        while tree.parent[x] is not None and sub[tree.parent[x]] != 0:
            x = tree.parent[x]
        if sub[x] == 0 or tree.parent[x] is None:
            continue
        p = tree.parent[x]
        set_subtree_index(tree, x, 0)
        tree.cost[x] = tree.cost[p] + tree.edge_length(x, p)
        tree.propagate_costs(x)
    partition.roots = {0: tree.goal_root}
    if not unreachable:
        return []
    # anything still outside the goal subtree cannot be reached: park it as pruned
    stray = [n for n in range(len(tree)) if tree.active[n] and sub[n] != 0]
    for n in stray:
        tree.restore_parent[n] = tree.parent[n]
    for n in stray:
        tree.detach(n)
        for c in list(tree.children[n]):
            tree.detach(c)
        tree.deactivate(n)
        tree.cost[n] = None
        sub[n] = -1
    unreachable.extend(stray)
    return sorted(set(unreachable))
