import numpy as np
import pytest

from hypermapf.colouring import kmeans_colouring
from hypermapf.grid import GridMap
from hypermapf.hypergraphs import (
    HypergraphStrategy,
    build_disk_graph,
    colouring_to_hypergraph,
    comm_distance,
    flatten_hypergraph,
    hyperedge_features,
    shortest_distance_hypergraph,
)


def _check_structure(hg, config, r_comm, norm="euclidean"):
    for edge in hg.edges:
        assert len(edge.head) == 1
        assert edge.head[0] in edge.tail
        head_pos = config[edge.head[0]]
        for j in edge.tail:
            assert comm_distance(config[j], head_pos, norm) <= r_comm


def test_single_agent_gets_self_edge_per_colour_at_its_cell():
    grid = GridMap.empty(4, 4)
    colouring = kmeans_colouring(grid, 4, iters=6, seed=0)
    config = ((1, 1),)
    hg = colouring_to_hypergraph(colouring, config, r_comm=0.0)
    expected = len(colouring.colours_at((1, 1)))
    assert 1 <= len(hg.edges) <= expected
    assert all(e.tail == (0,) and e.head == (0,) for e in hg.edges)


def test_far_agents_with_disjoint_colours_have_singleton_tails():
    grid = GridMap.empty(12, 1)
    masks = np.zeros((2, 1, 12), dtype=bool)
    masks[0, 0, :6] = True
    masks[1, 0, 6:] = True
    from hypermapf.colouring import Colouring
    colouring = Colouring(masks)
    config = ((0, 0), (11, 0))
    hg = colouring_to_hypergraph(colouring, config, r_comm=3.0)
    assert all(e.tail == e.head for e in hg.edges)
    assert len(hg.edges) == 2


def test_colouring_hypergraph_invariants_random():
    rng = np.random.default_rng(9)
    grid = GridMap.empty(10, 10)
    colouring = kmeans_colouring(grid, 6, iters=6, seed=4)
    free = grid.free_cells()
    for _ in range(20):
        n = int(rng.integers(1, 7))
        idx = rng.choice(len(free), size=n, replace=False)
        config = tuple(free[int(i)] for i in idx)
        hg = colouring_to_hypergraph(colouring, config, r_comm=7.0)
        _check_structure(hg, config, 7.0)
        heads = {e.head[0] for e in hg.edges}
        assert heads == set(range(n))  # everyone keeps at least one edge


def test_isolated_agent_distance_strategy_self_edge():
    grid = GridMap.empty(20, 1)
    config = ((0, 0), (19, 0))
    hg = shortest_distance_hypergraph(grid, config, r_comm=3.0, seed=0)
    assert set(hg.edges) == {
        hg.edges[0].__class__((0,), (0,)),
        hg.edges[0].__class__((1,), (1,)),
    }


def test_collinear_agents_share_clique_with_zero_slack():
    grid = GridMap.empty(6, 1)
    config = ((0, 0), (1, 0), (2, 0))
    hg = shortest_distance_hypergraph(grid, config, r_comm=5.0, epsilon=0.0, seed=0)
    tails_for_head0 = [e.tail for e in hg.edges if e.head == (0,)]
    assert (0, 1, 2) in tails_for_head0
    _check_structure(hg, config, 5.0)


def test_distance_strategy_covers_all_communicating_agents():
    rng = np.random.default_rng(31)
    grid = GridMap.empty(9, 9)
    free = grid.free_cells()
    for trial in range(15):
        n = int(rng.integers(2, 8))
        idx = rng.choice(len(free), size=n, replace=False)
        config = tuple(free[int(i)] for i in idx)
        hg = shortest_distance_hypergraph(grid, config, r_comm=6.0, seed=trial)
        _check_structure(hg, config, 6.0)
        for v in range(n):
            comm = {u for u in range(n) if u != v
                    and comm_distance(config[u], config[v]) <= 6.0}
            covered = set()
            for e in hg.edges:
                if e.head == (v,):
                    covered.update(e.tail)
            assert comm <= covered


def test_identical_seeds_identical_hypergraphs():
    grid = GridMap.empty(8, 8)
    config = ((0, 0), (1, 1), (2, 3), (5, 5), (7, 2))
    a = shortest_distance_hypergraph(grid, config, 6.0, seed=11)
    b = shortest_distance_hypergraph(grid, config, 6.0, seed=11)
    assert a == b


def test_negative_epsilon_rejected():
    grid = GridMap.empty(3, 3)
    with pytest.raises(ValueError):
        shortest_distance_hypergraph(grid, ((0, 0),), 3.0, epsilon=-1.0)


def test_feature_rows():
    grid = GridMap.empty(6, 6)
    config = ((2, 2), (4, 1), (0, 2))
    hg = shortest_distance_hypergraph(grid, config, r_comm=10.0, seed=0)
    features = hyperedge_features(hg, config)
    assert features.shape[1] == 3
    row = 0
    for edge in hg.edges:
        cx, cy = config[edge.head[0]]
        for j in edge.tail:
            dx, dy = config[j][0] - cx, config[j][1] - cy
            assert features[row].tolist() == [dx, dy, abs(dx) + abs(dy)]
            if j == edge.head[0]:
                assert features[row].tolist() == [0.0, 0.0, 0.0]
            row += 1


def test_tail_member_offset_example():
    grid = GridMap.empty(8, 8)
    config = ((3, 4), (5, 3))  # offset (2, -1) relative to agent 0
    hg = shortest_distance_hypergraph(grid, config, r_comm=5.0, seed=0)
    features = hyperedge_features(hg, config)
    flat = flatten_hypergraph(hg, config)
    match = [p for p in range(len(flat.tail_node))
             if flat.tail_node[p] == 1 and hg.edges[flat.tail_edge[p]].head == (0,)]
    assert match
    assert features[match[0]].tolist() == [2.0, -1.0, 3.0]


def test_disk_graph_includes_self_loops_and_radius():
    config = ((0, 0), (3, 0), (0, 9))
    graph = build_disk_graph(config, r_comm=4.0)
    pairs = set(zip(graph.src.tolist(), graph.dst.tolist()))
    assert (0, 0) in pairs and (1, 1) in pairs and (2, 2) in pairs
    assert (1, 0) in pairs and (0, 1) in pairs
    assert (2, 0) not in pairs  # distance 9 exceeds the radius


def test_strategy_caches_colouring_per_grid():
    grid = GridMap.empty(6, 6)
    strategy = HypergraphStrategy("kmeans", seed=1, k_init=4)
    first = strategy.colouring_for(grid)
    again = strategy.colouring_for(grid)
    assert first is again
    hg = strategy.build(grid, ((0, 0), (1, 1)), r_comm=7.0)
    _check_structure(hg, ((0, 0), (1, 1)), 7.0)
