import numpy as np
import pytest

from hypermapf.grid import GridMap
from hypermapf.moves import validate_joint_move

from oracles import joint_move_valid_oracle


def test_swap_is_edge_conflict():
    grid = GridMap.empty(3, 1)
    conflicts = validate_joint_move(grid, ((0, 0), (1, 0)), ((1, 0), (0, 0)))
    assert [c.kind for c in conflicts] == ["edge"]
    assert conflicts[0].agents == (0, 1)


def test_all_stay_is_ok():
    grid = GridMap.empty(3, 3)
    src = ((0, 0), (1, 1), (2, 2))
    assert validate_joint_move(grid, src, src) == []


def test_shared_target_is_vertex_conflict():
    grid = GridMap.empty(1, 3)
    conflicts = validate_joint_move(grid, ((0, 0), (0, 2)), ((0, 1), (0, 1)))
    kinds = {c.kind for c in conflicts}
    assert kinds == {"vertex"}
    assert conflicts[0].cell == (0, 1)


def test_obstacle_and_non_adjacent_kinds():
    grid = GridMap.from_rows([".@."])
    assert [c.kind for c in validate_joint_move(grid, ((0, 0),), ((1, 0),))] \
        == ["obstacle"]
    assert "non-adjacent" in [c.kind for c in
                              validate_joint_move(grid, ((0, 0),), ((2, 0),))]


def test_length_mismatch_rejected():
    grid = GridMap.empty(2, 2)
    with pytest.raises(ValueError):
        validate_joint_move(grid, ((0, 0),), ((0, 0), (1, 1)))


def test_agrees_with_brute_force_oracle_on_random_moves():
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 10_000:
        w, h = rng.integers(2, 7, size=2)
        obstacles = rng.random((h, w)) < 0.2
        if obstacles.all():
            continue
        grid = GridMap(int(w), int(h), obstacles)
        free = grid.free_cells()
        n = int(rng.integers(1, min(len(free), 4) + 1))
        src_idx = rng.choice(len(free), size=n, replace=False)
        src = tuple(free[int(i)] for i in src_idx)
        dst = tuple((int(c[0] + rng.integers(-1, 2)), int(c[1] + rng.integers(-1, 2)))
                    for c in src)
        ours = not validate_joint_move(grid, src, dst)
        assert ours == joint_move_valid_oracle(grid, src, dst)
        checked += 1
