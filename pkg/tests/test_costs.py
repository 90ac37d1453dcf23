import pytest

from hypermapf.costs import Trajectory, soc_metrics
from hypermapf.grid import GridMap, Instance


def _line_instance(length=5):
    grid = GridMap.empty(length, 1)
    return Instance(grid, ((0, 0),), ((length - 1, 0),))


def test_agent_already_at_goal_costs_zero():
    grid = GridMap.empty(3, 1)
    inst = Instance(grid, ((2, 0),), ((2, 0),))
    traj = Trajectory.from_configs([inst.starts])
    report = soc_metrics(traj, inst, 256)
    assert report.total == 0 and report.success


def test_cost_is_arrival_step():
    inst = _line_instance(4)
    configs = [((0, 0),), ((1, 0),), ((2, 0),), ((3, 0),), ((3, 0),), ((3, 0),)]
    report = soc_metrics(Trajectory.from_configs(configs), inst, 256)
    assert report.per_agent == (3,)
    assert report.success


def test_failed_agent_charged_episode_limit():
    inst = _line_instance(5)
    configs = [((0, 0),), ((1, 0),)]
    report = soc_metrics(Trajectory.from_configs(configs), inst, 256)
    assert report.per_agent == (256,)
    assert not report.success


def test_leave_and_return_pays_until_final_arrival():
    inst = _line_instance(3)
    # reach goal at t=2, leave at t=3, return at t=4
    configs = [((0, 0),), ((1, 0),), ((2, 0),), ((1, 0),), ((2, 0),)]
    report = soc_metrics(Trajectory.from_configs(configs), inst, 256)
    assert report.per_agent == (4,)


def test_invalid_trajectory_rejected():
    inst = _line_instance(3)
    bad = Trajectory((((0, 0),), ((2, 0),)), (((0),),))
    with pytest.raises(ValueError):
        soc_metrics(bad, inst, 16)
    wrong_start = Trajectory.from_configs([((1, 0),), ((2, 0),)])
    with pytest.raises(ValueError):
        soc_metrics(wrong_start, inst, 16)


def test_trajectory_action_reconstruction():
    configs = [((0, 0), (2, 0)), ((1, 0), (2, 0))]
    traj = Trajectory.from_configs(configs)
    assert traj.actions == ((2, 0),)  # right, stay
    assert traj.num_steps == 1 and traj.num_agents == 2
