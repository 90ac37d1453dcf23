import numpy as np
import pytest

from hypermapf.errors import ParseError
from hypermapf.grid import GridMap, Instance, bfs_dist, format_instance, parse_instance

from oracles import flood_fill_distances


def test_bfs_empty_grid_is_manhattan():
    grid = GridMap.empty(3, 3)
    dist = bfs_dist(grid, (1, 1))
    assert dist[0, 0] == 2  # corner
    assert dist[1, 1] == 0  # target itself


def test_bfs_wall_split_unreachable():
    grid = GridMap.from_rows([
        "..@..",
        "..@..",
        "..@..",
        "..@..",
        "..@..",
    ])
    dist = bfs_dist(grid, (0, 2))
    oracle = flood_fill_distances(grid, (0, 2))
    assert np.isinf(dist[2, 4])
    assert (4, 2) not in oracle
    for (x, y), d in oracle.items():
        assert dist[y, x] == d


def test_bfs_matches_flood_fill_on_random_maps():
    rng = np.random.default_rng(7)
    for _ in range(25):
        w, h = rng.integers(2, 11, size=2)
        obstacles = rng.random((h, w)) < 0.3
        if obstacles.all():
            continue
        grid = GridMap(int(w), int(h), obstacles)
        free = grid.free_cells()
        target = free[int(rng.integers(len(free)))]
        dist = bfs_dist(grid, target)
        oracle = flood_fill_distances(grid, target)
        for cell in free:
            expected = oracle.get(cell, np.inf)
            assert dist[cell[1], cell[0]] == expected


def test_bfs_triangle_inequality_and_adjacent_step():
    rng = np.random.default_rng(11)
    for _ in range(10):
        w, h = rng.integers(3, 11, size=2)
        obstacles = rng.random((h, w)) < 0.25
        if obstacles.all():
            continue
        grid = GridMap(int(w), int(h), obstacles)
        free = grid.free_cells()
        g = free[int(rng.integers(len(free)))]
        dist = bfs_dist(grid, g)
        for u in free:
            du = dist[u[1], u[0]]
            for v in grid.neighbors(u):
                dv = dist[v[1], v[0]]
                if np.isfinite(du) or np.isfinite(dv):
                    assert abs(du - dv) <= 1  # inf pairs both inf on components
        # triangle inequality via a second source
        s = free[int(rng.integers(len(free)))]
        ds = bfs_dist(grid, s)
        for u in free:
            if np.isfinite(ds[u[1], u[0]]) and np.isfinite(dist[s[1], s[0]]):
                assert dist[u[1], u[0]] <= ds[u[1], u[0]] + dist[s[1], s[0]]


def test_bfs_rejects_obstacle_target():
    grid = GridMap.from_rows([".@", ".."])
    with pytest.raises(ValueError):
        bfs_dist(grid, (1, 0))


def test_gridmap_validation():
    with pytest.raises(ValueError):
        GridMap(0, 1, np.zeros((1, 0), dtype=bool))
    with pytest.raises(ValueError):
        GridMap(2, 1, np.ones((1, 2), dtype=bool))  # no free vertex


def test_instance_validation():
    grid = GridMap.empty(3, 3)
    with pytest.raises(ValueError):
        Instance(grid, ((0, 0), (0, 0)), ((1, 1), (2, 2)))  # duplicate starts
    with pytest.raises(ValueError):
        Instance(grid, ((0, 0),), ((1, 1), (2, 2)))  # count mismatch
    blocked = GridMap.from_rows(["@.", ".."])
    with pytest.raises(ValueError):
        Instance(blocked, ((0, 0),), ((1, 1),))  # start on obstacle


def test_instance_text_roundtrip():
    grid = GridMap.from_rows(["..@.", ".@..", "...."])
    inst = Instance(grid, ((0, 0), (3, 2)), ((3, 0), (0, 2)))
    text = format_instance(inst)
    assert text.splitlines()[0] == "3 4 2"
    again = parse_instance(text)
    assert again == inst
    assert format_instance(again) == text


def test_parse_instance_errors_carry_line_numbers():
    with pytest.raises(ParseError):
        parse_instance("nonsense")
    bad_row = "2 2 1\n..\n.#\n0 0 1 1"
    with pytest.raises(ParseError) as err:
        parse_instance(bad_row)
    assert err.value.line == 3
