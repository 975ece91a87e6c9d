import io
import json
import math

import numpy as np
import pytest

from morphplan.geometry import Bounds, Sphere
from morphplan.tree import (
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
from treecheck import check_all, check_costs, edge_dijkstra, linear_near

WORLD2 = StaticWorld(Bounds((0, 0), (32, 32)))


@pytest.fixture(scope="module")
def tree2():
    return build_initial_tree(WORLD2, (30, 30), 2500, 1.0, 1.7, np.random.default_rng(0))


def test_initial_tree_counts_and_root(tree2):
    assert len(tree2) == 2501
    assert tree2.num_edges() == 2500
    g = tree2.goal_root
    assert tree2.cost[g] == 0.0 and tree2.parent[g] is None
    assert all(s == 0 for s in tree2.subtree)
    assert all(tree2.active)


def test_initial_tree_costs_match_oracle(tree2):
    check_all(tree2)
    check_costs(tree2)
    oracle = edge_dijkstra(tree2)
    assert len(oracle) == len(tree2)


def test_initial_tree_edges_respect_steer_range(tree2):
    for n in range(len(tree2)):
        p = tree2.parent[n]
        if p is not None:
            assert tree2.edge_length(n, p) <= 1.7 + 1e-12


def test_initial_tree_avoids_static_obstacles():
    obs = (Sphere((16, 16), 4.0), Sphere((8, 24), 2.0))
    world = StaticWorld(Bounds((0, 0), (32, 32)), obs)
    t = build_initial_tree(world, (30, 30), 1500, 1.0, 1.7, np.random.default_rng(3))
    for n in range(len(t)):
        assert world.point_free(t.pos[n])
        p = t.parent[n]
        if p is not None:
            assert world.edge_free(t.pos[n], t.pos[p])
    check_costs(t)


def test_goal_inside_obstacle_rejected():
    world = StaticWorld(Bounds((0, 0), (32, 32)), (Sphere((30, 30), 1.0),))
    with pytest.raises(ConfigurationError):
        build_initial_tree(world, (30, 30), 10, 1.0, 1.7, np.random.default_rng(0))


def test_build_is_deterministic():
    a = build_initial_tree(WORLD2, (30, 30), 300, 1.0, 1.7, np.random.default_rng(5))
    b = build_initial_tree(WORLD2, (30, 30), 300, 1.0, 1.7, np.random.default_rng(5))
    assert a.pos == b.pos and a.parent == b.parent and a.cost == b.cost


def test_3d_tree_small():
    world = StaticWorld(Bounds((0, 0, 0), (32, 32, 32)))
    t = build_initial_tree(world, (30, 30, 30), 2000, 1.0, 1.7, np.random.default_rng(1))
    assert len(t) == 2001
    check_all(t)
    check_costs(t)


def test_nearest_examples():
    t = Tree(2, 1.7)
    a = t.add_node((1, 1))
    assert nearest(t, (20, -5)) == a
    b = t.add_node((5, 5), parent=a)
    assert nearest(t, (5, 5)) == b


def test_nearest_empty_raises():
    t = Tree(2, 1.7)
    with pytest.raises(TreeStateError):
        nearest(t, (0, 0))
    n = t.add_node((0, 0))
    t.deactivate(n)
    with pytest.raises(TreeStateError):
        nearest(t, (0, 0))


def test_nearest_and_near_match_linear_scan(tree2):
    rng = np.random.default_rng(11)
    for _ in range(300):
        p = tuple(rng.uniform(-5, 37, 2))
        got = nearest(tree2, p)
        best = min(math.dist(p, tree2.pos[n]) for n in range(len(tree2)))
        assert math.dist(p, tree2.pos[got]) == best
        r = float(rng.uniform(0.05, 6))
        assert sorted(near(tree2, p, r)) == linear_near(tree2, p, r)


def test_near_small_radius_and_closed_ball():
    t = Tree(2, 1.7)
    t.add_node((0, 0))
    t.add_node((1, 0))
    assert near(t, (0.5, 0.5), 0.1) == []
    assert near(t, (1, 0), 0.0) == [1]
    assert sorted(near(t, (0, 0), 1.0)) == [0, 1]


def test_index_tracks_deactivate_activate():
    rng = np.random.default_rng(2)
    t = Tree(3, 1.7)
    for _ in range(400):
        t.add_node(tuple(rng.uniform(0, 10, 3)))
    for step in range(600):
        n = int(rng.integers(len(t)))
        if t.active[n]:
            t.deactivate(n)
        else:
            t.activate(n)
        if step % 50 == 0:
            p = tuple(rng.uniform(0, 10, 3))
            assert sorted(near(t, p, 2.5)) == linear_near(t, p, 2.5)
            if t.num_active:
                got = nearest(t, p)
                assert math.dist(p, t.pos[got]) == min(math.dist(p, t.pos[m]) for m in t.active_nodes())
    check_all(t)


def test_neighbor_cache_sees_new_and_reactivated_nodes():
    t = Tree(2, 1.7)
    a = t.add_node((0, 0))
    b = t.add_node((1, 0))
    assert t.neighbors(a) == [b]
    c = t.add_node((0, 1))
    assert sorted(t.neighbors(a)) == [b, c]
    t.deactivate(b)
    assert t.neighbors(a) == [c]
    t.activate(b)
    assert sorted(t.neighbors(a)) == [b, c]


def _chain_tree():
    t = Tree(3, 1.7)
    g = t.add_node((0, 0, 0), cost=0.0)
    t.goal_root = g
    a = t.add_node((1, 0, 0), parent=g, cost=1.0)
    b = t.add_node((1, 1, 0), parent=a, cost=2.0)
    return t, g, a, b


def test_rewire_cascade_example():
    t, g, a, b = _chain_tree()
    rewire_cascade(t, {g}, 1.7)
    assert t.parent[b] == g
    assert t.cost[b] == pytest.approx(math.sqrt(2), abs=1e-12)
    check_all(t)
    check_costs(t)


def test_rewire_cascade_fixed_point():
    t, g, a, b = _chain_tree()
    rewire_cascade(t, {g}, 1.7)
    before = (list(t.parent), list(t.cost))
    assert rewire_cascade(t, {g, a, b}, 1.7) == 0
    assert (t.parent, t.cost) == before


def test_rewire_cascade_respects_forbidden():
    t, g, a, b = _chain_tree()
    rewire_cascade(t, {g}, 1.7, forbidden=[Sphere((0.5, 0.5, 0), 0.2)])
    assert t.parent[b] == a


def test_rewire_cascade_rejects_bad_seed():
    t, g, a, b = _chain_tree()
    t.subtree[b] = 1
    t.cost[b] = None
    with pytest.raises(TreeStateError):
        rewire_cascade(t, {b}, 1.7)


def test_rewire_cascade_never_increases_costs():
    # a deliberately poor tree: a random spanning chain over random points
    rng = np.random.default_rng(8)
    t = Tree(2, 1.7)
    g = t.add_node((5, 5), cost=0.0)
    t.goal_root = g
    prev = g
    for _ in range(300):
        p = tuple(rng.uniform(0, 10, 2))
        cands = [m for m in range(len(t)) if math.dist(p, t.pos[m]) <= 1.7]
        if not cands:
            continue
        par = cands[int(rng.integers(len(cands)))]
        prev = t.add_node(p, parent=par, cost=t.cost[par] + math.dist(p, t.pos[par]))
    before = list(t.cost)
    rewire_cascade(t, set(range(0, len(t), 7)), 1.7)
    assert all(c <= b + 1e-12 for c, b in zip(t.cost, before))
    check_all(t)
    check_costs(t)


def test_set_subtree_index():
    t = Tree(2, 1.7)
    r = t.add_node((0, 0))
    leaf = t.add_node((1, 0), parent=r)
    assert set_subtree_index(t, leaf, 3) == [leaf]
    assert t.subtree == [0, 3]
    c = t.add_node((2, 0), parent=leaf)
    assert sorted(set_subtree_index(t, r, 5)) == [r, leaf, c]
    assert t.subtree == [5, 5, 5]


def test_set_subtree_index_random_tree():
    rng = np.random.default_rng(4)
    t = Tree(2, 1.7)
    t.add_node((0, 0))
    for i in range(1, 100):
        t.add_node(tuple(rng.uniform(0, 5, 2)), parent=int(rng.integers(i)))
    root = 7
    # independent reachability oracle via parent links
    expected = {n for n in range(100) if root in t.chain_to_root(n)}
    assert set(set_subtree_index(t, root, 9)) == expected
    assert {n for n in range(100) if t.subtree[n] == 9} == expected


def test_snapshot_export():
    t, g, a, b = _chain_tree()
    t.deactivate(b)
    buf = io.StringIO()
    t.export_snapshot(buf)
    recs = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert [r["id"] for r in recs] == [0, 1, 2]
    assert recs[2]["status"] == "pruned" and recs[1]["parent"] == g
