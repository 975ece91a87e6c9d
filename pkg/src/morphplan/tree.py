"""Goal-rooted planning tree stored as an arena of integer-indexed nodes.

Nodes are never deallocated: pruning flips a status flag and removes the node
from the spatial index, so restoration can bring it back with the same id.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .geometry import Bounds, Point, Sphere, as_point, sample_uniform, segment_clear, steer

ACTIVE = "active"
PRUNED = "pruned"


class ConfigurationError(ValueError):
    """Raised for an unusable world, scenario or parameter set."""


class TreeStateError(RuntimeError):
    """Raised when an operation is invoked on a tree in the wrong state."""


class GridIndex:
    """Uniform-grid spatial hash supporting insert, remove, radius and nearest queries."""

    def __init__(self, cell: float, dim: int):
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.cell = float(cell)
        self.dim = dim
        self._cells: dict[tuple, list[int]] = {}
        self._size = 0
        self._lo: Optional[list[int]] = None
        self._hi: Optional[list[int]] = None

    def __len__(self):
        return self._size

    def key(self, p) -> tuple:
        c = self.cell
        return tuple(int(math.floor(x / c)) for x in p)

    def insert(self, node: int, p):
        k = self.key(p)
        self._cells.setdefault(k, []).append(node)
        self._size += 1
        if self._lo is None:
            self._lo, self._hi = list(k), list(k)
        else:
            for i, v in enumerate(k):
                if v < self._lo[i]:
                    self._lo[i] = v
                elif v > self._hi[i]:
                    self._hi[i] = v

    def remove(self, node: int, p):
        k = self.key(p)
        bucket = self._cells.get(k)
        if bucket is None or node not in bucket:
            raise KeyError(f"node {node} not indexed at {p}")
        bucket.remove(node)
        if not bucket:
            del self._cells[k]
        self._size -= 1

    def _cube(self, center_key, lo_off, hi_off):
        # yields buckets in the axis-aligned key box [center+lo_off, center+hi_off]
        cells = self._cells
        if self.dim == 2:
            cx, cy = center_key
            for i in range(cx + lo_off[0], cx + hi_off[0] + 1):
                for j in range(cy + lo_off[1], cy + hi_off[1] + 1):
                    b = cells.get((i, j))
                    if b:
                        yield b
        elif self.dim == 3:
            cx, cy, cz = center_key
            for i in range(cx + lo_off[0], cx + hi_off[0] + 1):
                for j in range(cy + lo_off[1], cy + hi_off[1] + 1):
                    for k in range(cz + lo_off[2], cz + hi_off[2] + 1):
                        b = cells.get((i, j, k))
                        if b:
                            yield b
        else:
            import itertools

            ranges = [range(c + lo, c + hi + 1) for c, lo, hi in zip(center_key, lo_off, hi_off)]
            for k in itertools.product(*ranges):
                b = cells.get(k)
                if b:
                    yield b

    def near(self, p, radius: float, positions: Sequence[Point]) -> list[int]:
        """Ids whose positions lie in the closed ball of ``radius`` around ``p``."""
        if self._size == 0:
            return []
        c = self.cell
        lo = [int(math.floor((x - radius) / c)) for x in p]
        hi = [int(math.floor((x + radius) / c)) for x in p]
        # clip to the occupied key range to keep large-radius queries cheap
        lo = [max(a, b) for a, b in zip(lo, self._lo)]
        hi = [min(a, b) for a, b in zip(hi, self._hi)]
        if any(a > b for a, b in zip(lo, hi)):
            return []
        zero = tuple(0 for _ in p)
        out = []
        r2 = radius * radius
        if self.dim == 2:
            px, py = p
            for bucket in self._cube(zero, lo, hi):
                for n in bucket:
                    q = positions[n]
                    dx, dy = q[0] - px, q[1] - py
                    if dx * dx + dy * dy <= r2:
                        out.append(n)
        else:
            dist = math.dist
            for bucket in self._cube(zero, lo, hi):
                for n in bucket:
                    if dist(positions[n], p) <= radius:
                        out.append(n)
        return out

    def nearest(self, p, positions: Sequence[Point]) -> int:
        if self._size == 0:
            raise TreeStateError("nearest query on an empty index")
        center = self.key(p)
        max_ring = max(
            max(abs(c - lo), abs(hi - c)) for c, lo, hi in zip(center, self._lo, self._hi)
        )
        best, best_d = -1, math.inf
        dist = math.dist
        ring = 0
        while ring <= max_ring:
            if (2 * ring + 1) ** self.dim > 2 * len(self._cells):
                # sparse index: scanning the occupied buckets beats walking empty shells
                return self._scan_nearest(p, positions)
            for bucket in self._shell(center, ring):
                for n in bucket:
                    d = dist(positions[n], p)
                    if d < best_d or (d == best_d and n < best):
                        best, best_d = n, d
            # every unvisited cell lies at least ring * cell away from p
            if best >= 0 and best_d <= ring * self.cell:
                break
            ring += 1
        return best

    def _shell(self, center, ring: int):
        if ring == 0:
            b = self._cells.get(tuple(center))
            if b:
                yield b
            return
        cells = self._cells
        if self.dim == 2:
            cx, cy = center
            for i in range(-ring, ring + 1):
                if i == -ring or i == ring:
                    js = range(-ring, ring + 1)
                else:
                    js = (-ring, ring)
                for j in js:
                    b = cells.get((cx + i, cy + j))
                    if b:
                        yield b
        elif self.dim == 3:
            cx, cy, cz = center
            full = range(-ring, ring + 1)
            ends = (-ring, ring)
            for i in full:
                edge_i = i == -ring or i == ring
                for j in full:
                    ks = full if edge_i or j == -ring or j == ring else ends
                    for k in ks:
                        b = cells.get((cx + i, cy + j, cz + k))
                        if b:
                            yield b
        else:
            for key, b in self._cells.items():
                off = [a - c for a, c in zip(key, center)]
                if max(abs(o) for o in off) == ring:
                    yield b

    def _scan_nearest(self, p, positions) -> int:
        best, best_d = -1, math.inf
        dist = math.dist
        for bucket in self._cells.values():
            for n in bucket:
                d = dist(positions[n], p)
                if d < best_d or (d == best_d and n < best):
                    best, best_d = n, d
        return best


@dataclass(frozen=True)
class NodeRecord:
    id: int
    position: Point
    parent: Optional[int]
    children: frozenset
    subtree_index: int
    cost_to_go: Optional[float]
    status: str
    restore_parent: Optional[int]


@dataclass
class StaticWorld:
    bounds: Bounds
    static_obstacles: list = field(default_factory=list)

    def __post_init__(self):
        for s in self.static_obstacles:
            if not self.bounds.contains(s.center):
                raise ConfigurationError(f"static obstacle {s} lies outside the workspace")

    def point_free(self, p) -> bool:
        return not any(s.contains(p) for s in self.static_obstacles)

    def edge_free(self, a, b) -> bool:
        return segment_clear(a, b, self.static_obstacles)


class Tree:
    """Arena of planning nodes with a spatial index over the active ones."""

    def __init__(self, dim: int, cell: float):
        self.dim = dim
        self.pos: list[Point] = []
        self.parent: list[Optional[int]] = []
        self.children: list[list[int]] = []
        self.subtree: list[int] = []
        self.cost: list[Optional[float]] = []
        self.active: list[bool] = []
        self.restore_parent: list[Optional[int]] = []
        self.pruned: set[int] = set()
        self.index = GridIndex(cell, dim)
        # every node ever inserted, for the neighbour cache below
        self._all = GridIndex(cell, dim)
        self._nbr_cache: dict[int, list[int]] = {}
        self.near_radius = float(cell)
        self.goal_root: int = -1
        # upper bound on any edge length ever created, used to bound edge queries
        self.max_edge = 0.0

    def __len__(self):
        return len(self.pos)

    @property
    def num_active(self) -> int:
        return len(self.index)

    def add_node(self, p, parent: Optional[int] = None, subtree: int = 0, cost=None) -> int:
        p = as_point(p)
        if len(p) != self.dim:
            raise ValueError(f"expected a {self.dim}-D point, got {p}")
        n = len(self.pos)
        self.pos.append(p)
        self.parent.append(None)
        self.children.append([])
        self.subtree.append(subtree)
        self.cost.append(cost)
        self.active.append(True)
        self.restore_parent.append(None)
        self.index.insert(n, p)
        if self._nbr_cache:
            fresh = self._all.near(p, self.near_radius, self.pos)
            for m in fresh:
                got = self._nbr_cache.get(m)
                if got is not None:
                    got.append(n)
        self._all.insert(n, p)
        if parent is not None:
            self.set_parent(n, parent)
        return n

    def node(self, n: int) -> NodeRecord:
        return NodeRecord(
            id=n,
            position=self.pos[n],
            parent=self.parent[n],
            children=frozenset(self.children[n]),
            subtree_index=self.subtree[n],
            cost_to_go=self.cost[n],
            status=ACTIVE if self.active[n] else PRUNED,
            restore_parent=self.restore_parent[n],
        )

    def edge_length(self, a: int, b: int) -> float:
        return math.dist(self.pos[a], self.pos[b])

    def detach(self, n: int):
        p = self.parent[n]
        if p is not None:
            self.children[p].remove(n)
            self.parent[n] = None

    def set_parent(self, n: int, p: int):
        if n == p:
            raise TreeStateError(f"node {n} cannot be its own parent")
        self.detach(n)
        self.parent[n] = p
        self.children[p].append(n)
        d = math.dist(self.pos[n], self.pos[p])
        if d > self.max_edge:
            self.max_edge = d

    def descendants(self, root: int) -> list[int]:
        """``root`` followed by all its descendants in depth-first order."""
        out = [root]
        stack = [root]
        children = self.children
        while stack:
            u = stack.pop()
            kids = children[u]
            if kids:
                out.extend(kids)
                stack.extend(kids)
        return out

    def root_of(self, n: int) -> int:
        steps = 0
        while self.parent[n] is not None:
            n = self.parent[n]
            steps += 1
            if steps > len(self.pos):
                raise TreeStateError("cycle detected in parent links")
        return n

    def chain_to_root(self, n: int) -> list[int]:
        chain = [n]
        while self.parent[chain[-1]] is not None:
            chain.append(self.parent[chain[-1]])
            if len(chain) > len(self.pos):
                raise TreeStateError("cycle detected in parent links")
        return chain

    def propagate_costs(self, root: int):
        """Recompute cost_to_go below ``root`` from its (already valid) cost."""
        pos, cost, children = self.pos, self.cost, self.children
        dist = math.dist
        stack = [root]
        while stack:
            u = stack.pop()
            cu = cost[u]
            pu = pos[u]
            for c in children[u]:
                cost[c] = cu + dist(pos[c], pu)
                stack.append(c)

    def deactivate(self, n: int):
        if not self.active[n]:
            return
        self.active[n] = False
        self.index.remove(n, self.pos[n])
        self.pruned.add(n)

    def activate(self, n: int):
        if self.active[n]:
            return
        self.active[n] = True
        self.index.insert(n, self.pos[n])
        self.pruned.discard(n)

    def nearest(self, p) -> int:
        return self.index.nearest(p, self.pos)

    def near(self, p, radius: float) -> list[int]:
        return self.index.near(p, radius, self.pos)

    def neighbors(self, n: int) -> list[int]:
        """Active nodes within ``near_radius`` of node ``n`` (excluding ``n``)."""
        got = self._nbr_cache.get(n)
        if got is None:
            got = [m for m in self._all.near(self.pos[n], self.near_radius, self.pos) if m != n]
            self._nbr_cache[n] = got
        active = self.active
        return [m for m in got if active[m]]

    def active_nodes(self) -> list[int]:
        return [n for n, a in enumerate(self.active) if a]

    def num_edges(self) -> int:
        return sum(1 for p in self.parent if p is not None)

    def export_snapshot(self, stream):
        """Write one JSON record per node (id, position, parent, subtree, cost, status)."""
        for n in range(len(self.pos)):
            rec = {
                "id": n,
                "position": list(self.pos[n]),
                "parent": self.parent[n],
                "subtree": self.subtree[n],
                "cost": self.cost[n],
                "status": ACTIVE if self.active[n] else PRUNED,
            }
            stream.write(json.dumps(rec) + "\n")


def nearest(tree: Tree, p) -> int:
    return tree.nearest(p)


def near(tree: Tree, p, radius: float) -> list[int]:
    return tree.near(p, radius)


def set_subtree_index(tree: Tree, root: int, index: int) -> list[int]:
    """Stamp ``index`` on ``root`` and its active descendants; returns the stamped ids."""
    stamped = []
    sub, active, children = tree.subtree, tree.active, tree.children
    stack = [root]
    while stack:
        u = stack.pop()
        if not active[u]:
            continue
        sub[u] = index
        stamped.append(u)
        stack.extend(children[u])
    return stamped


def build_initial_tree(
    world: StaticWorld,
    goal,
    iterations: int,
    steer_range: float,
    near_radius: float,
    rng: np.random.Generator,
) -> Tree:
    """Grow a goal-rooted RRT* tree over the static world.

    Fixed-radius neighbourhoods; each sample is steered from its nearest node,
    attached to the cheapest feasible near parent, and then used to rewire its
    neighbours. Rewired nodes carry their descendants' costs along.
    """
    goal = as_point(goal)
    if iterations <= 0:
        raise ConfigurationError("iterations must be positive")
    if not world.bounds.contains(goal):
        raise ConfigurationError(f"goal {goal} lies outside the workspace")
    if not world.point_free(goal):
        raise ConfigurationError(f"goal {goal} lies inside a static obstacle")

    tree = Tree(len(goal), near_radius)
    tree.goal_root = tree.add_node(goal, cost=0.0)
    pos, cost = tree.pos, tree.cost
    dist = math.dist
    obstacles = world.static_obstacles
    bounds = world.bounds
    lo, hi = np.asarray(bounds.low), np.asarray(bounds.high)
    # one vectorised draw per batch keeps sampling off the profile
    batch = rng.uniform(lo, hi, size=(iterations, len(goal))).tolist()

    for sample in batch:
        x_near = tree.nearest(sample)
        x_new = steer(pos[x_near], sample, steer_range)
        if obstacles:
            if not world.point_free(x_new) or not segment_clear(pos[x_near], x_new, obstacles):
                continue
        neighbors = tree.near(x_new, near_radius)
        best, best_cost = x_near, cost[x_near] + dist(pos[x_near], x_new)
        for w in neighbors:
            c = cost[w] + dist(pos[w], x_new)
            if c < best_cost and (not obstacles or segment_clear(pos[w], x_new, obstacles)):
                best, best_cost = w, c
        n = tree.add_node(x_new, parent=best, cost=best_cost)
        for w in neighbors:
            if w == best:
                continue
            c = best_cost + dist(pos[w], x_new)
            if c < cost[w] and (not obstacles or segment_clear(pos[w], x_new, obstacles)):
                tree.set_parent(w, n)
                cost[w] = c
                tree.propagate_costs(w)
    return tree


def rewire_cascade(
    tree: Tree,
    seeds: Iterable[int],
    near_radius: float,
    forbidden: Sequence[Sphere] = (),
    obstacles: Sequence[Sphere] = (),
) -> int:
    """Propagate cost improvements through the goal-rooted subtree.

    Works through a queue (cheapest first) started from ``seeds``. A neighbour
    ``w`` of the popped node ``u`` is re-parented to ``u`` when that strictly
    lowers its cost-to-go and the edge avoids both ``obstacles`` (static) and
    ``forbidden`` spheres; its descendants are re-costed and ``w`` is queued.
    Returns the number of re-parents.
    """
    pos, cost, sub, parent = tree.pos, tree.cost, tree.subtree, tree.parent
    dist = math.dist
    blockers = list(obstacles) + list(forbidden)
    heap = []
    for s in seeds:
        if not tree.active[s] or sub[s] != 0 or cost[s] is None:
            raise TreeStateError(f"seed {s} must be an active subtree-0 node with a cost")
        heap.append((cost[s], s))
    heapq.heapify(heap)
    queued = {s for _, s in heap}
    rewired = 0
    goal = tree.goal_root
    while heap:
        _, u = heapq.heappop(heap)
        queued.discard(u)
        c_u = cost[u]
        pu = pos[u]
        nbrs = tree.neighbors(u) if near_radius == tree.near_radius else tree.near(pu, near_radius)
        for w in nbrs:
            if w == u or w == goal or sub[w] != 0 or parent[w] == u:
                continue
            c = c_u + dist(pos[w], pu)
            if c < cost[w] and segment_clear(pu, pos[w], blockers):
                tree.set_parent(w, u)
                cost[w] = c
                tree.propagate_costs(w)
                rewired += 1
                if w not in queued:
                    queued.add(w)
                    heapq.heappush(heap, (c, w))
    return rewired
